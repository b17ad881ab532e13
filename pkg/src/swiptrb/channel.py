"""Rayleigh MISO channels, random beams, and the distributions of the
per-sub-block channel power ``A``.

Notation: ``H = |h|^2 / N_t`` is the normalised channel power of a block and
``A = |Phi^T h|^2 / N`` the equivalent power seen in one sub-block when
``N`` random beams are active.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .specfun import DomainError, gammainc_lower_reg, gammainc_upper_reg, log_bessel_k

# Below this beta the unconditional CDF is numerically zero and the Bessel
# integrand would overflow cosh.
_BETA_FLOOR = 1e-100


@dataclass(frozen=True)
class SystemParams:
    """Transmit power, antennas, pathloss, noise and harvesting efficiency (linear SI)."""

    p_tx: float
    n_t: int
    theta: float
    sigma2: float
    zeta: float = 1.0

    def __post_init__(self):
        if not (self.p_tx > 0 and math.isfinite(self.p_tx)):
            raise DomainError(f"p_tx must be positive, got {self.p_tx!r}")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise DomainError(f"n_t must be an integer >= 1, got {self.n_t!r}")
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta!r}")
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2!r}")
        if not 0 < self.zeta <= 1:
            raise DomainError(f"zeta must lie in (0, 1], got {self.zeta!r}")

    @property
    def snr(self) -> float:
        """Receive SNR per unit channel power, ``theta P / sigma2``."""
        return self.theta * self.p_tx / self.sigma2

    @property
    def rx_power(self) -> float:
        """Received power per unit channel power, ``theta P``."""
        return self.theta * self.p_tx

    def with_power(self, p_tx: float) -> "SystemParams":
        return SystemParams(p_tx, self.n_t, self.theta, self.sigma2, self.zeta)


class BeamKind(enum.Enum):
    GAUSSIAN = "gaussian"
    UNITARY = "unitary"
    BINARY = "binary"


@dataclass(frozen=True)
class BeamScheme:
    kind: BeamKind
    n_beams: int

    def __post_init__(self):
        if not isinstance(self.kind, BeamKind):
            object.__setattr__(self, "kind", BeamKind(self.kind))
        if int(self.n_beams) != self.n_beams or self.n_beams < 1:
            raise DomainError(f"n_beams must be an integer >= 1, got {self.n_beams!r}")

    def check(self, n_t: int) -> None:
        if self.n_beams > n_t:
            raise DomainError(f"n_beams={self.n_beams} exceeds n_t={n_t}")


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    cap_h: float

    @classmethod
    def from_h(cls, h) -> "ChannelRealization":
        h = np.asarray(h, dtype=complex)
        return cls(h, float(np.vdot(h, h).real) / h.size)


def stream_id_for(*parts) -> int:
    """Stable 64-bit stream id from arbitrary printable parts."""
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Each call to :meth:`generator` starts the stream from counter zero, so
    the same pair always yields the same sequence no matter which thread
    consumes it.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = (self.seed & (2**64 - 1)) | ((self.stream_id & (2**64 - 1)) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, *parts) -> "RngStream":
        return RngStream(self.seed, stream_id_for(self.stream_id, *parts))


def _gen(rng) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


# -- samplers ---------------------------------------------------------------

def draw_channel(params: SystemParams, rng) -> ChannelRealization:
    """One i.i.d. Rayleigh channel ``h ~ CN(0, I)``.

    ``rng`` is a :class:`RngStream` (fresh sequence) or a numpy Generator
    (continues its sequence).
    """
    g = _gen(rng)
    h = (g.standard_normal(params.n_t) + 1j * g.standard_normal(params.n_t)) / math.sqrt(2.0)
    return ChannelRealization.from_h(h)


def draw_channels(n_t: int, size: int, rng) -> np.ndarray:
    """``size`` channel vectors as rows of a complex array."""
    g = _gen(rng)
    return (g.standard_normal((size, n_t)) + 1j * g.standard_normal((size, n_t))) / math.sqrt(2.0)


def draw_cap_h(n_t: int, size: int, rng) -> np.ndarray:
    """Samples of ``H`` directly: ``|h|^2`` is Gamma(N_t, 1)."""
    return _gen(rng).gamma(n_t, 1.0, size) / n_t


def draw_beams(scheme: BeamScheme, n_t: int, rng) -> np.ndarray:
    """Beam matrix ``Phi`` (``n_t x N``) for one sub-block."""
    scheme.check(n_t)
    g = _gen(rng)
    n = scheme.n_beams
    if scheme.kind is BeamKind.GAUSSIAN:
        return (g.standard_normal((n_t, n)) + 1j * g.standard_normal((n_t, n))) / math.sqrt(2.0 * n_t)
    if scheme.kind is BeamKind.UNITARY:
        z = g.standard_normal((n_t, n)) + 1j * g.standard_normal((n_t, n))
        return z / np.linalg.norm(z, axis=0)
    phi = np.zeros((n_t, n))
    phi[g.choice(n_t, n, replace=False), np.arange(n)] = 1.0
    return phi


def subblock_power_from_beams(h, phi) -> float:
    """``A = |Phi^T h|^2 / N``."""
    a = np.asarray(phi).T @ np.asarray(h)
    return float(np.vdot(a, a).real) / phi.shape[1]


def draw_subblock_power(scheme: BeamScheme, chan: ChannelRealization, rng, size=None):
    """Draws of ``A`` given a channel, without forming beam matrices.

    Gaussian beams give ``H Gamma(N,1)/N``; independent isotropic unit beams
    give ``(N_t H / N) sum_n Beta(1, N_t - 1)``; binary beams sum ``|h_i|^2``
    over a uniformly random antenna subset.
    """
    n_t = chan.h.size
    scheme.check(n_t)
    g = _gen(rng)
    n = scheme.n_beams
    shape = () if size is None else (size,)
    if scheme.kind is BeamKind.GAUSSIAN:
        out = chan.cap_h * g.gamma(n, 1.0, shape) / n
    elif scheme.kind is BeamKind.UNITARY:
        if n_t == 1:
            out = np.full(shape, chan.cap_h)
        else:
            frac = g.beta(1.0, n_t - 1.0, shape + (n,)).sum(axis=-1)
            out = n_t * chan.cap_h * frac / n
    else:
        gains = np.abs(chan.h) ** 2
        keys = g.random(shape + (n_t,))
        picks = np.argsort(keys, axis=-1)[..., :n]
        out = gains[picks].sum(axis=-1) / n
    return float(out) if size is None else out


def draw_subblock_power_many(scheme: BeamScheme, h_rows: np.ndarray, rng, k: int) -> np.ndarray:
    """``k`` sub-block powers for each channel row; returns ``(rows, k)``."""
    n_rows, n_t = h_rows.shape
    scheme.check(n_t)
    g = _gen(rng)
    n = scheme.n_beams
    cap_h = (np.abs(h_rows) ** 2).sum(axis=1) / n_t
    if scheme.kind is BeamKind.GAUSSIAN:
        return cap_h[:, None] * g.gamma(n, 1.0, (n_rows, k)) / n
    if scheme.kind is BeamKind.UNITARY:
        if n_t == 1:
            return np.repeat(cap_h[:, None], k, axis=1)
        frac = g.beta(1.0, n_t - 1.0, (n_rows, k, n)).sum(axis=-1)
        return n_t * cap_h[:, None] * frac / n
    gains = np.abs(h_rows) ** 2
    picks = np.argsort(g.random((n_rows, k, n_t)), axis=-1)[..., :n]
    return np.take_along_axis(gains[:, None, :], picks, axis=-1).sum(axis=-1) / n


# -- distributions ----------------------------------------------------------

def _check_pos_int(v, name):
    if int(v) != v or v < 1:
        raise DomainError(f"{name} must be an integer >= 1, got {v!r}")


def cdf_h(h, n_t: int):
    """``F_H(h) = 1 - Gamma(N_t, N_t h) / Gamma(N_t)`` (regularised lower gamma)."""
    _check_pos_int(n_t, "n_t")
    arr = np.asarray(h, dtype=float)
    return gammainc_lower_reg(n_t, np.maximum(arr, 0.0) * n_t)


def pdf_h(h, n_t: int):
    _check_pos_int(n_t, "n_t")
    arr = np.asarray(h, dtype=float)
    with np.errstate(divide="ignore"):
        logf = n_t * math.log(n_t) + (n_t - 1) * np.log(arr) - n_t * arr - math.lgamma(n_t)
    out = np.where(arr > 0, np.exp(logf), 1.0 if n_t == 1 else 0.0)
    return float(out) if np.ndim(h) == 0 else out


def conditional_pdf_A(a, h: float, n_beams: int):
    """Density of ``A`` given ``H = h`` for Gaussian beams:
    ``a^(N-1) exp(-N a / h) / ((h/N)^N Gamma(N))``.
    """
    if not h > 0:
        raise DomainError(f"h must be positive, got {h!r}")
    _check_pos_int(n_beams, "n_beams")
    arr = np.asarray(a, dtype=float)
    if np.any(arr < 0):
        raise DomainError("a must be nonnegative")
    n = n_beams
    with np.errstate(divide="ignore"):
        log_a = np.log(arr)
    power = (n - 1) * log_a if n > 1 else np.zeros_like(arr)
    out = np.exp(power - n * arr / h - n * math.log(h / n) - math.lgamma(n))
    return float(out) if np.ndim(a) == 0 else out


def conditional_cdf_A(a, h: float, n_beams: int):
    """``1 - Gamma(N, N a / h) / Gamma(N)``."""
    if not h > 0:
        raise DomainError(f"h must be positive, got {h!r}")
    _check_pos_int(n_beams, "n_beams")
    arr = np.asarray(a, dtype=float)
    if np.any(arr < 0):
        raise DomainError("a must be nonnegative")
    return gammainc_lower_reg(n_beams, n_beams * arr / h)


def _beta(a, n_t, n):
    return np.sqrt(n_t * n * a)


def _check_uncond(a, n_t, n_beams):
    _check_pos_int(n_t, "n_t")
    _check_pos_int(n_beams, "n_beams")
    if n_beams > n_t:
        raise DomainError(f"n_beams={n_beams} exceeds n_t={n_t}")
    arr = np.asarray(a, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainError("a must be nonnegative")
    return arr


def unconditional_cdf_A(a, n_t: int, n_beams: int):
    """CDF of ``A`` after averaging over Rayleigh fading, Gaussian beams.

    ``1 - (2/Gamma(N_t)) sum_{k<N} beta^(N_t+k)/k! K_{N_t-k}(2 beta)`` with
    ``beta = sqrt(N_t N a)``; terms are assembled in log space.
    """
    arr = _check_uncond(a, n_t, n_beams)
    flat = np.atleast_1d(arr).ravel()
    out = np.ones_like(flat)
    b = _beta(flat, n_t, n_beams)
    mid = (b > _BETA_FLOOR) & np.isfinite(b)
    out[b <= _BETA_FLOOR] = 0.0
    if np.any(mid):
        bm = b[mid]
        tail = np.zeros_like(bm)
        for k in range(n_beams):
            tail += np.exp(math.log(2.0) - math.lgamma(n_t) - math.lgamma(k + 1.0)
                           + (n_t + k) * np.log(bm) + log_bessel_k(n_t - k, 2.0 * bm))
        out[mid] = np.clip(1.0 - tail, 0.0, 1.0)
    out = out.reshape(np.shape(arr))
    return float(out) if np.ndim(a) == 0 else out


def unconditional_pdf_A(a, n_t: int, n_beams: int):
    """Density of ``A`` after fading averaging:
    ``2 beta^(N_t+N) K_{N_t-N}(2 beta) / (Gamma(N) Gamma(N_t) a)``.
    """
    arr = _check_uncond(a, n_t, n_beams)
    flat = np.atleast_1d(arr).ravel()
    out = np.zeros_like(flat)
    b = _beta(flat, n_t, n_beams)
    pos = (b > _BETA_FLOOR) & np.isfinite(b)
    if np.any(pos):
        bm = b[pos]
        out[pos] = np.exp(math.log(2.0) - math.lgamma(n_beams) - math.lgamma(n_t)
                          + (n_t + n_beams) * np.log(bm) - np.log(flat[pos])
                          + log_bessel_k(n_t - n_beams, 2.0 * bm))
    small = b <= _BETA_FLOOR
    if np.any(small):
        # a -> 0: K_nu(z) ~ Gamma(nu)/2 (z/2)^-nu, so f ~ c a^(N-1); N=N_t gives a log pole.
        nu = n_t - n_beams
        if nu > 0:
            c = (n_t * n_beams) ** n_beams * math.gamma(nu) / (math.gamma(n_beams) * math.gamma(n_t))
            out[small] = c * flat[small] ** (n_beams - 1) if n_beams > 1 else c
        else:
            out[small] = np.inf
    out = out.reshape(np.shape(arr))
    return float(out) if np.ndim(a) == 0 else out
