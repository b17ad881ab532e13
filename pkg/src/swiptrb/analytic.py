"""Closed-form and quadrature evaluators for periodic switching (PS) and
threshold switching with Gaussian random beams (TS).

Conventions: ``h`` is the block channel power ``H``, ``abar`` the TS
threshold on the sub-block power ``A`` (``math.inf`` means all blocks decode
information), ``tau`` the PS decoding fraction. Harvested powers carry the
conversion efficiency ``zeta``; rates never do. A sub-block with ``A == abar``
is assigned to information decoding.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import (SystemParams, cdf_h, conditional_cdf_A, conditional_pdf_A, pdf_h,
                      unconditional_cdf_A, unconditional_pdf_A)
from .quadrature import BracketError, bisect, bracket_upward, integrate, newton_bisect
from .specfun import (DomainError, digamma, exp_integral_e1_scaled, gammainc_upper_reg,
                      log_bessel_k, meijer_g_special, meijer_g_special_scaled)

LN2 = math.log(2.0)


class PolicyKind(enum.Enum):
    TS = "ts"
    PS = "ps"


@dataclass(frozen=True)
class SwitchPolicy:
    kind: PolicyKind
    value: float

    def __post_init__(self):
        if self.kind is PolicyKind.TS:
            if not self.value >= 0:
                raise DomainError(f"TS threshold must be >= 0, got {self.value!r}")
        elif not 0 <= self.value <= 1:
            raise DomainError(f"PS tau must lie in [0, 1], got {self.value!r}")

    @classmethod
    def ts(cls, abar: float) -> "SwitchPolicy":
        return cls(PolicyKind.TS, float(abar))

    @classmethod
    def ps(cls, tau: float) -> "SwitchPolicy":
        return cls(PolicyKind.PS, float(tau))

    @property
    def abar(self) -> float:
        if self.kind is not PolicyKind.TS:
            raise AttributeError("abar is defined for TS policies only")
        return self.value

    @property
    def tau(self) -> float:
        if self.kind is not PolicyKind.PS:
            raise AttributeError("tau is defined for PS policies only")
        return self.value


class Source(enum.Enum):
    ANALYTIC = "analytic"
    MONTE_CARLO = "montecarlo"


@dataclass(frozen=True)
class REPoint:
    """A rate (bit/s/Hz) and harvested power (W), with provenance."""

    rate: float
    power: float
    source: Source = Source.ANALYTIC
    stderr_rate: float = 0.0
    stderr_power: float = 0.0


class AsymptoticValidityWarning(RuntimeWarning):
    """An asymptotic formula was evaluated outside its range of validity."""


def _check_tau(tau):
    if not 0 <= tau <= 1:
        raise DomainError(f"tau must lie in [0, 1], got {tau!r}")


def _check_h(h):
    if not (h > 0 and math.isfinite(h)):
        raise DomainError(f"h must be positive and finite, got {h!r}")


def _check_abar(abar):
    if not abar >= 0:
        raise DomainError(f"abar must be >= 0, got {abar!r}")


def _check_n(n_beams, n_t=None):
    if int(n_beams) != n_beams or n_beams < 1:
        raise DomainError(f"n_beams must be an integer >= 1, got {n_beams!r}")
    if n_t is not None and n_beams > n_t:
        raise DomainError(f"n_beams={n_beams} exceeds n_t={n_t}")


# -- PS ---------------------------------------------------------------------

def ps_power(params: SystemParams, h: float, tau: float) -> float:
    """Harvested power of one PS block: ``(1 - tau) zeta theta P h``."""
    _check_tau(tau)
    if not h >= 0:
        raise DomainError(f"h must be >= 0, got {h!r}")
    return (1.0 - tau) * params.zeta * params.rx_power * h


def ps_rate(params: SystemParams, h: float, tau: float) -> float:
    """``tau log2(1 + theta P h / sigma2)``."""
    _check_tau(tau)
    if not h >= 0:
        raise DomainError(f"h must be >= 0, got {h!r}")
    return tau * math.log1p(params.snr * h) / LN2


def ps_scalings(tau: float) -> tuple[float, float]:
    """Rate and power scaling factors of PS: ``(tau, 1 - tau)``."""
    _check_tau(tau)
    return tau, 1.0 - tau


def ps_avg_rate(params: SystemParams, tau: float) -> float:
    """Fading-averaged PS rate ``tau E_H[log2(1 + snr H)]``."""
    _check_tau(tau)
    n_t = params.n_t
    snr = params.snr
    val = integrate(lambda x: np.log1p(snr * x) * pdf_h(x, n_t), 0.0, math.inf,
                    breakpoints=(1.0 / snr, 1.0))
    return tau * val / LN2


def ps_avg_power(params: SystemParams, tau: float) -> float:
    """Fading-averaged PS power; ``E[H] = 1``."""
    _check_tau(tau)
    return (1.0 - tau) * params.zeta * params.rx_power


def ps_outage(params: SystemParams, tau: float, q_hat: float) -> float:
    """``Pr(PS block power < q_hat) = F_H(q_hat / ((1 - tau) zeta theta P))``."""
    _check_tau(tau)
    if not q_hat > 0:
        raise DomainError(f"q_hat must be positive, got {q_hat!r}")
    if tau == 1.0:
        return 1.0
    return float(cdf_h(q_hat / ((1.0 - tau) * params.zeta * params.rx_power), params.n_t))


# -- TS, block level --------------------------------------------------------

def ts_power(params: SystemParams, h: float, n_beams: int, abar: float) -> float:
    """Harvested power of one TS block given ``H = h``:
    ``zeta theta P h Gamma(N+1, N abar / h) / Gamma(N+1)``.
    """
    _check_h(h)
    _check_n(n_beams)
    _check_abar(abar)
    if math.isinf(abar):
        return 0.0
    return params.zeta * params.rx_power * h * gammainc_upper_reg(n_beams + 1, n_beams * abar / h)


def ts_rate_quadrature(params: SystemParams, h: float, n_beams: int, abar: float) -> float:
    """``int_0^abar log2(1 + snr a) f_{A|H}(a | h) da`` by adaptive quadrature."""
    _check_h(h)
    _check_n(n_beams)
    _check_abar(abar)
    if abar == 0:
        return 0.0
    snr = params.snr

    def f(a):
        return np.log1p(snr * a) * conditional_pdf_A(a, h, n_beams)

    marks = [1.0 / snr, h / n_beams, h, 4.0 * h]
    val = integrate(f, 0.0, abar, breakpoints=[m for m in marks if m < abar], abs_tol=0.0)
    return val / LN2


def ts_rate_closed_n1(params: SystemParams, h: float, abar: float) -> float:
    """Closed-form block rate for one Gaussian beam.

    ``(e^s / ln 2)(E1(s) - E1(abar/h + s)) - e^(-abar/h) log2(1 + snr abar)``
    with ``s = sigma2 / (theta P h)``, evaluated through ``e^z E1(z)``.
    """
    _check_h(h)
    _check_abar(abar)
    s = 1.0 / (params.snr * h)
    if abar == 0:
        return 0.0
    if math.isinf(abar):
        return exp_integral_e1_scaled(s) / LN2
    r = abar / h
    first = (exp_integral_e1_scaled(s) - math.exp(-r) * exp_integral_e1_scaled(r + s)) / LN2
    return first - math.exp(-r) * math.log1p(params.snr * abar) / LN2


def ts_rate_closed_n2(params: SystemParams, h: float, abar: float) -> float:
    """Closed-form block rate for two Gaussian beams.

    Integration by parts gives three pieces: the boundary term
    ``-(1 + 2 abar/h) e^(-2 abar/h) log2(1 + snr abar)``, an ``E1`` difference,
    and a difference of ``G^{3,0}_{2,3}(1,1; 0,0,2 | .)`` at ``2s`` and
    ``2(abar/h + s)``. Exponentially large prefactors are folded into scaled
    special functions.
    """
    _check_h(h)
    _check_abar(abar)
    if abar == 0:
        return 0.0
    s = 1.0 / (params.snr * h)
    y0 = 2.0 * s
    if math.isinf(abar):
        boundary = 0.0
        e1_part = -y0 * exp_integral_e1_scaled(y0) / LN2
        g_part = meijer_g_special_scaled(2, y0) / LN2
    else:
        r = 2.0 * abar / h
        y1 = r + y0
        decay = math.exp(-r)
        boundary = -(1.0 + r) * decay * math.log1p(params.snr * abar) / LN2
        e1_part = y0 * (decay * exp_integral_e1_scaled(y1) - exp_integral_e1_scaled(y0)) / LN2
        g_part = (meijer_g_special_scaled(2, y0) - decay * meijer_g_special_scaled(2, y1)) / LN2
    return boundary + e1_part + g_part


def ts_rate(params: SystemParams, h: float, n_beams: int, abar: float) -> float:
    """Block rate using the closed form where one exists, quadrature otherwise."""
    if n_beams == 1:
        return ts_rate_closed_n1(params, h, abar)
    if n_beams == 2:
        return ts_rate_closed_n2(params, h, abar)
    return ts_rate_quadrature(params, h, n_beams, abar)


def ts_rate_constant(h: float, n_beams: int, abar: float) -> float:
    """``C0 = int_0^abar log2(a) f_{A|H}(a | h) da`` in closed form.

    ``C0 = psi(N)/ln2 + log2(h/N) - Q(N, y) log2(abar) - G(y) / (Gamma(N) ln 2)``
    with ``y = N abar / h``, ``Q`` the regularised upper incomplete gamma and
    ``G`` the Meijer-G special case.
    """
    _check_h(h)
    _check_n(n_beams)
    if not abar > 0:
        raise DomainError(f"abar must be positive, got {abar!r}")
    n = n_beams
    alpha = digamma(n) / LN2 + math.log2(h / n)
    if math.isinf(abar):
        return alpha
    y = n * abar / h
    tail = gammainc_upper_reg(n, y) * math.log2(abar) + meijer_g_special(n, y) / (math.gamma(n) * LN2)
    return alpha - tail


def ts_rate_highpower_approx(params: SystemParams, h: float, n_beams: int, abar: float) -> float:
    """High-SNR lower bound ``F_{A|H}(abar | h) log2(snr) + C0``."""
    if not abar > 0:
        raise DomainError(f"abar must be positive, got {abar!r}")
    cdf = 1.0 if math.isinf(abar) else conditional_cdf_A(abar, h, n_beams)
    return cdf * math.log2(params.snr) + ts_rate_constant(h, n_beams, abar)


def ts_threshold_for_power(params: SystemParams, h: float, n_beams: int, q: float) -> float:
    """Threshold ``abar`` at which the TS block power equals ``q``.

    ``q >= zeta theta P h`` maps to 0 and ``q <= 0`` to infinity.
    """
    q_max = params.zeta * params.rx_power * h
    if q >= q_max:
        return 0.0
    if q <= 0:
        return math.inf
    target = q / q_max

    def f(a):
        return gammainc_upper_reg(n_beams + 1, n_beams * a / h) - target

    lo, hi = bracket_upward(f, 0.0, h)
    return bisect(f, lo, hi)


# -- TS, fading averaged ----------------------------------------------------

def ts_rate_scaling(n_t: int, n_beams: int, abar: float) -> float:
    """Rate scaling factor of TS, the unconditional CDF of ``A`` at ``abar``."""
    _check_n(n_beams, n_t)
    _check_abar(abar)
    if math.isinf(abar):
        return 1.0
    return float(unconditional_cdf_A(abar, n_t, n_beams))


def ts_power_scaling(n_t: int, n_beams: int, abar: float) -> float:
    """Power scaling factor of TS:
    ``(2/Gamma(N_t)) sum_{k=0}^{N} beta^(N_t+k)/k! sqrt(N abar/N_t) K_{N_t-k+1}(2 beta)``.
    """
    _check_n(n_beams, n_t)
    _check_abar(abar)
    if math.isinf(abar):
        return 0.0
    beta = math.sqrt(n_t * n_beams * abar)
    if beta <= 1e-100:
        return 1.0
    lead = math.log(2.0) - math.lgamma(n_t) + 0.5 * math.log(n_beams * abar / n_t)
    total = 0.0
    for k in range(n_beams + 1):
        total += math.exp(lead - math.lgamma(k + 1.0) + (n_t + k) * math.log(beta)
                          + log_bessel_k(n_t - k + 1, 2.0 * beta))
    return min(total, 1.0)


def ts_threshold_for_power_scaling(n_t: int, n_beams: int, pi_target: float) -> float:
    """Invert the power scaling factor for ``0 < pi_target < 1``.

    The upper end of the bracket grows geometrically until it straddles the
    target; Newton steps use ``dPi/dabar = -abar f_A(abar)``.
    """
    if not 0 < pi_target < 1:
        if pi_target == 1:
            return 0.0
        if pi_target == 0:
            return math.inf
        raise DomainError(f"power scaling target must lie in [0, 1], got {pi_target!r}")

    def f(a):
        return ts_power_scaling(n_t, n_beams, a) - pi_target

    def df(a):
        return -a * float(unconditional_pdf_A(a, n_t, n_beams))

    lo, hi = bracket_upward(f, 0.0, 1.0)
    abar = newton_bisect(f, df, lo, hi)
    if abs(f(abar)) > 1e-10:
        raise BracketError(f"power scaling inversion missed target {pi_target!r}")
    return abar


def ts_avg_rate(params: SystemParams, n_beams: int, abar: float) -> float:
    """``E_H[R(h, N, abar)] = int_0^abar log2(1 + snr a) f_A(a) da``."""
    _check_n(n_beams, params.n_t)
    _check_abar(abar)
    if abar == 0:
        return 0.0
    snr = params.snr
    n_t = params.n_t

    def f(a):
        return np.log1p(snr * a) * unconditional_pdf_A(a, n_t, n_beams)

    marks = [1.0 / snr, 0.1, 1.0, 5.0]
    val = integrate(f, 0.0, abar, breakpoints=[m for m in marks if m < abar], abs_tol=0.0)
    return val / LN2


def ts_avg_power(params: SystemParams, n_beams: int, abar: float) -> float:
    """``zeta theta P Pi(N, abar)``."""
    return params.zeta * params.rx_power * ts_power_scaling(params.n_t, n_beams, abar)


# -- outage -----------------------------------------------------------------

def ts_outage_asymptotic(params: SystemParams, n_beams: int, abar: float, q_hat: float) -> float:
    """Large-``P`` power outage of TS.

    ``abar = 0``: ``(q_hat / (zeta theta P))^N_t``. ``abar > 0``:
    ``(N abar / ln(zeta theta P))^N_t``. Results are clamped to ``[0, 1]``;
    a nonpositive logarithm raises :class:`AsymptoticValidityWarning` and
    returns 1.
    """
    _check_n(n_beams)
    _check_abar(abar)
    if not q_hat > 0:
        raise DomainError(f"q_hat must be positive, got {q_hat!r}")
    power = params.zeta * params.rx_power
    if abar == 0:
        return min((q_hat / power) ** params.n_t, 1.0)
    log_p = math.log(power)
    if log_p <= 1.0:
        warnings.warn(f"ln(zeta theta P) = {log_p:.3g} <= 1: asymptotic outage formula "
                      "is outside its range", AsymptoticValidityWarning, stacklevel=2)
        if log_p <= 0:
            return 1.0
    return min((n_beams * abar / log_p) ** params.n_t, 1.0)


def ts_block_power_threshold(params: SystemParams, n_beams: int, abar: float, q_hat: float) -> float:
    """Smallest ``h`` whose TS block power reaches ``q_hat``.

    Solves ``h Q(N+1, N abar / h) = q_hat / (zeta theta P)``. The left side is
    increasing and lies within ``[h - abar, h]``, which brackets the root.
    """
    _check_n(n_beams)
    _check_abar(abar)
    if not q_hat > 0:
        raise DomainError(f"q_hat must be positive, got {q_hat!r}")
    if math.isinf(abar):
        return math.inf
    d = q_hat / (params.zeta * params.rx_power)
    if abar == 0:
        return d

    def f(h):
        return h * gammainc_upper_reg(n_beams + 1, n_beams * abar / h) - d

    lo, hi = d, d + abar
    if f(hi) < 0:
        lo, hi = bracket_upward(f, hi, 2.0 * hi)
    return bisect(f, lo, hi)


def ts_outage_exact(params: SystemParams, n_beams: int, abar: float, q_hat: float) -> float:
    """Exact TS power outage at finite ``P``: ``F_H(h_bar)`` with ``h_bar`` from
    :func:`ts_block_power_threshold`.
    """
    h_bar = ts_block_power_threshold(params, n_beams, abar, q_hat)
    if math.isinf(h_bar):
        return 1.0
    return float(cdf_h(h_bar, params.n_t))
