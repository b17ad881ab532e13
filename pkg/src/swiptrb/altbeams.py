"""Threshold switching with constant-power random beams: isotropic unit
beams (TS-U) and random antenna selection (TS-B).

Closed forms exist only for two transmit antennas and one beam. There, given
``H = h``, the unit-beam sub-block power is uniform on ``[0, 2h]`` and the
selection sub-block power is ``|h_1|^2`` or ``|h_2|^2`` with equal odds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .analytic import ts_rate_closed_n1
from .channel import SystemParams, cdf_h
from .quadrature import bisect, bracket_upward
from .specfun import DomainError, gammainc_upper_reg


class AnalyticsUnavailable(DomainError):
    """No closed form exists for the requested antenna/beam combination."""


def require_two_by_one(n_t: int, n_beams: int = 1) -> None:
    if (n_t, n_beams) != (2, 1):
        raise AnalyticsUnavailable(
            f"closed forms cover n_t=2, N=1 only (got n_t={n_t}, N={n_beams}); "
            "use the Monte Carlo estimators instead")


@dataclass(frozen=True)
class BrbOrderStats:
    """Larger (``v``) and smaller (``w``) of ``|h_1|^2`` and ``|h_2|^2``."""

    v: float
    w: float

    def __post_init__(self):
        if not (self.v >= self.w >= 0):
            raise DomainError(f"need v >= w >= 0, got v={self.v!r}, w={self.w!r}")

    @classmethod
    def from_h(cls, h) -> "BrbOrderStats":
        g1, g2 = (abs(x) ** 2 for x in h)
        return cls(max(g1, g2), min(g1, g2))


def _check(params, abar):
    require_two_by_one(params.n_t)
    if not abar >= 0:
        raise DomainError(f"abar must be >= 0, got {abar!r}")


def urb_block_power(params: SystemParams, h: float, abar: float) -> float:
    """``zeta theta P (h - abar^2 / (4h))`` for ``abar <= 2h``, else 0."""
    _check(params, abar)
    if not h > 0:
        raise DomainError(f"h must be positive, got {h!r}")
    if abar >= 2.0 * h:
        return 0.0
    return params.zeta * params.rx_power * (h - abar * abar / (4.0 * h))


def urb_avg_power(params: SystemParams, abar: float) -> float:
    """``zeta theta P Gamma(2, abar)``; the unconditional ``A`` is Exp(1)."""
    _check(params, abar)
    if math.isinf(abar):
        return 0.0
    return params.zeta * params.rx_power * gammainc_upper_reg(2, abar)


def urb_avg_rate(params: SystemParams, abar: float) -> float:
    """``int_0^abar log2(1 + snr a) e^-a da``, the one-beam block rate at ``h = 1``."""
    _check(params, abar)
    return ts_rate_closed_n1(params, 1.0, abar)


def urb_outage(params: SystemParams, abar: float, q_hat: float) -> float:
    """``F_H((D + sqrt(D^2 + abar^2)) / 2)`` with ``D = q_hat / (zeta theta P)``.

    This is where ``h - abar^2 / (4h)`` crosses ``D``.
    """
    _check(params, abar)
    if not q_hat > 0:
        raise DomainError(f"q_hat must be positive, got {q_hat!r}")
    if math.isinf(abar):
        return 1.0
    d = q_hat / (params.zeta * params.rx_power)
    return float(cdf_h(0.5 * (d + math.hypot(d, abar)), 2))


def brb_block_power(params: SystemParams, stats: BrbOrderStats, abar: float) -> float:
    """Half the power of each antenna whose gain exceeds ``abar``."""
    _check(params, abar)
    scale = 0.5 * params.zeta * params.rx_power
    if abar < stats.w:
        return scale * (stats.v + stats.w)
    if abar < stats.v:
        return scale * stats.v
    return 0.0


def brb_outage(params: SystemParams, abar: float, q_hat: float) -> float:
    """Power outage of TS-B, with ``D = q_hat / (zeta theta P)``.

    Three disjoint events: both gains at most ``abar``; only ``v`` above
    ``abar`` but ``v < 2D``; both above ``abar`` with ``v + w < 2D``.
    Integrating the order-statistic density ``2 e^(-v-w)`` gives

    ``(1 - e^-abar)^2``
    ``+ 1(abar < 2D) 2 (1 - e^-abar)(e^-abar - e^-2D)``
    ``+ 1(abar < D) (e^(-2 abar) - e^(-2D) (1 + 2D - 2 abar))``.
    """
    _check(params, abar)
    if not q_hat > 0:
        raise DomainError(f"q_hat must be positive, got {q_hat!r}")
    if math.isinf(abar):
        return 1.0
    d = q_hat / (params.zeta * params.rx_power)
    one_minus = -math.expm1(-abar)
    total = one_minus * one_minus
    if abar < 2.0 * d:
        total += 2.0 * one_minus * (math.exp(-abar) - math.exp(-2.0 * d))
    if abar < d:
        total += math.exp(-2.0 * abar) - math.exp(-2.0 * d) * (1.0 + 2.0 * (d - abar))
    return min(max(total, 0.0), 1.0)


def brb_outage_alt_third_term(abar: float, d: float) -> float:
    """Alternative closed form of the third outage term, kept for comparison with Monte Carlo:
    ``e^(-2(abar+D))(e^abar - e^D)^2 + e^(-abar-2D)((-1 + abar - D) e^abar + e^D)``.
    """
    if not abar < d:
        return 0.0
    return (math.exp(-2.0 * (abar + d)) * (math.exp(abar) - math.exp(d)) ** 2
            + math.exp(-abar - 2.0 * d) * ((-1.0 + abar - d) * math.exp(abar) + math.exp(d)))


def brb_avg_power(params: SystemParams, abar: float) -> float:
    """Equal to the TS-U average power: the unconditional selected gain is Exp(1)."""
    return urb_avg_power(params, abar)


def brb_avg_rate(params: SystemParams, abar: float) -> float:
    return urb_avg_rate(params, abar)


def urb_threshold_for_power_scaling(pi_target: float) -> float:
    """``abar`` with ``Gamma(2, abar) = pi_target`` (shared by TS-U and TS-B)."""
    if not 0 < pi_target <= 1:
        raise DomainError(f"power scaling target must lie in (0, 1], got {pi_target!r}")
    if pi_target == 1:
        return 0.0

    def f(a):
        return gammainc_upper_reg(2, a) - pi_target

    lo, hi = bracket_upward(f, 0.0, 1.0)
    return bisect(f, lo, hi)

