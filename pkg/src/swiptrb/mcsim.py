"""Monte Carlo estimators for rate, harvested power and power outage.

Channel draws are split into fixed-size chunks. Chunk ``i`` always uses the
stream ``(base_seed, hash(tag, i))``, and per-chunk sums are reduced in
chunk order, so results do not depend on ``worker_count``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import LN2, PolicyKind, REPoint, Source, SwitchPolicy
from .channel import (BeamKind, BeamScheme, ChannelRealization, RngStream, SystemParams,
                      draw_channels, draw_subblock_power, draw_subblock_power_many,
                      stream_id_for)
from .specfun import DomainError, gammainc_upper_reg

FALLBACK_SUBBLOCKS = 1000


@dataclass(frozen=True)
class McConfig:
    """Sample sizes, seed and parallelism of a Monte Carlo run.

    ``n_subblock_draws`` is the finite number ``K`` of sub-blocks simulated per
    channel draw; ``K = 1`` already gives an unbiased estimate of the
    fading-averaged quantities.
    """

    n_channel_draws: int = 100_000
    n_subblock_draws: int = 1
    base_seed: int = 0
    worker_count: int = 1
    chunk_size: int = 1 << 16

    def __post_init__(self):
        for name in ("n_channel_draws", "n_subblock_draws", "worker_count", "chunk_size"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be an integer >= 1, got {v!r}")

    def rows_per_chunk(self) -> int:
        return max(1, self.chunk_size // self.n_subblock_draws)


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error, keeping the raw sums."""

    mean: float
    stderr: float
    n: int
    total: float
    total_sq: float

    @classmethod
    def from_sums(cls, total: float, total_sq: float, n: int) -> "Estimate":
        if n < 1:
            raise DomainError("an estimate needs at least one sample")
        mean = total / n
        if n > 1:
            var = max(total_sq - total * mean, 0.0) / (n - 1)
            stderr = math.sqrt(var / n)
        else:
            stderr = math.inf
        return cls(mean, stderr, n, total, total_sq)

    @classmethod
    def from_samples(cls, x) -> "Estimate":
        x = np.asarray(x, dtype=float)
        return cls.from_sums(float(x.sum()), float((x * x).sum()), x.size)

    def merge(self, other: "Estimate") -> "Estimate":
        return Estimate.from_sums(self.total + other.total, self.total_sq + other.total_sq,
                                  self.n + other.n)

    def zscore(self, reference: float) -> float:
        diff = abs(self.mean - reference)
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr


def _tag(name, scheme, n_t):
    return (name, scheme.kind.value, scheme.n_beams, n_t)


def _run_chunks(cfg: McConfig, tag, fn, n_metrics: int) -> list[Estimate]:
    """Evaluate ``fn(generator, rows) -> tuple of per-draw arrays`` over all chunks."""
    rows = cfg.rows_per_chunk()
    n_chunks = -(-cfg.n_channel_draws // rows)

    def work(i):
        n = min(rows, cfg.n_channel_draws - i * rows)
        gen = RngStream(cfg.base_seed, stream_id_for(*tag, i)).generator()
        vals = fn(gen, n)
        return [(float(v.sum()), float((v * v).sum())) for v in vals]

    if cfg.worker_count == 1:
        parts = [work(i) for i in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.worker_count) as pool:
            parts = list(pool.map(work, range(n_chunks)))
    out = []
    for m in range(n_metrics):
        total = 0.0
        total_sq = 0.0
        for p in parts:
            total += p[m][0]
            total_sq += p[m][1]
        out.append(Estimate.from_sums(total, total_sq, cfg.n_channel_draws))
    return out


def _re_from_subblocks(params, policy, a):
    """Per-row rate and power from a ``(rows, K)`` array of sub-block powers."""
    ident = a <= policy.abar
    rate = np.where(ident, np.log1p(params.snr * a), 0.0).mean(axis=1) / LN2
    power = params.zeta * params.rx_power * np.where(ident, 0.0, a).mean(axis=1)
    return rate, power


def estimate_block_re(params: SystemParams, scheme: BeamScheme, policy: SwitchPolicy,
                      chan: ChannelRealization, cfg: McConfig) -> REPoint:
    """Rate and power of one block with channel ``chan``, from ``K`` sub-block draws.

    PS has no randomness inside a block and is evaluated exactly.
    """
    scheme.check(chan.h.size)
    if policy.kind is PolicyKind.PS:
        tau = policy.tau
        return REPoint(tau * math.log1p(params.snr * chan.cap_h) / LN2,
                       (1.0 - tau) * params.zeta * params.rx_power * chan.cap_h,
                       Source.MONTE_CARLO, 0.0, 0.0)
    stream = RngStream(cfg.base_seed, stream_id_for("block", scheme.kind.value, scheme.n_beams))
    a = draw_subblock_power(scheme, chan, stream, size=cfg.n_subblock_draws)
    ident = a <= policy.abar
    rate = Estimate.from_samples(np.where(ident, np.log1p(params.snr * a), 0.0) / LN2)
    power = Estimate.from_samples(params.zeta * params.rx_power * np.where(ident, 0.0, a))
    return REPoint(rate.mean, power.mean, Source.MONTE_CARLO, rate.stderr, power.stderr)


def estimate_avg_re(params: SystemParams, scheme: BeamScheme, policy: SwitchPolicy,
                    cfg: McConfig) -> REPoint:
    """Fading-averaged rate and power; standard errors come from per-channel means."""
    scheme.check(params.n_t)
    k = cfg.n_subblock_draws

    def fn(gen, n):
        h = draw_channels(params.n_t, n, gen)
        if policy.kind is PolicyKind.PS:
            cap_h = (np.abs(h) ** 2).sum(axis=1) / params.n_t
            return (policy.tau * np.log1p(params.snr * cap_h) / LN2,
                    (1.0 - policy.tau) * params.zeta * params.rx_power * cap_h)
        a = draw_subblock_power_many(scheme, h, gen, k)
        return _re_from_subblocks(params, policy, a)

    rate, power = _run_chunks(cfg, _tag("avg_re", scheme, params.n_t), fn, 2)
    return REPoint(rate.mean, power.mean, Source.MONTE_CARLO, rate.stderr, power.stderr)


def block_power_given_channel(params: SystemParams, scheme: BeamScheme, policy: SwitchPolicy,
                              h: np.ndarray, gen=None, k: int = FALLBACK_SUBBLOCKS) -> np.ndarray:
    """Harvested power of each block (rows of ``h``) in the ``K -> inf`` limit.

    Uses the exact per-block expression where one exists; other beam
    combinations average ``k`` sampled sub-blocks instead.
    """
    n_t = params.n_t
    scale = params.zeta * params.rx_power
    gains = np.abs(h) ** 2
    cap_h = gains.sum(axis=1) / n_t
    if policy.kind is PolicyKind.PS:
        return (1.0 - policy.tau) * scale * cap_h
    abar = policy.abar
    if math.isinf(abar):
        return np.zeros_like(cap_h)
    n = scheme.n_beams
    if scheme.kind is BeamKind.GAUSSIAN:
        return scale * cap_h * gammainc_upper_reg(n + 1, n * abar / cap_h)
    if (n_t, n) == (2, 1):
        if scheme.kind is BeamKind.UNITARY:
            return np.where(abar < 2.0 * cap_h, scale * (cap_h - abar * abar / (4.0 * cap_h)), 0.0)
        v = gains.max(axis=1)
        w = gains.min(axis=1)
        return 0.5 * scale * (np.where(v > abar, v, 0.0) + np.where(w > abar, w, 0.0))
    if gen is None:
        raise DomainError("sampling fallback needs a generator")
    a = draw_subblock_power_many(scheme, h, gen, k)
    return scale * np.where(a <= abar, 0.0, a).mean(axis=1)


def estimate_power_outage(params: SystemParams, scheme: BeamScheme, policy: SwitchPolicy,
                          q_hat: float, cfg: McConfig) -> Estimate:
    """Fraction of channel draws whose block power falls below ``q_hat``."""
    scheme.check(params.n_t)
    if q_hat <= 0:
        return Estimate.from_sums(0.0, 0.0, cfg.n_channel_draws)
    k = max(cfg.n_subblock_draws, FALLBACK_SUBBLOCKS)

    def fn(gen, n):
        h = draw_channels(params.n_t, n, gen)
        q = block_power_given_channel(params, scheme, policy, h, gen, k)
        return ((q < q_hat).astype(float),)

    (est,) = _run_chunks(cfg, _tag("outage", scheme, params.n_t), fn, 1)
    return est


def estimate_rate_scaling(params: SystemParams, scheme: BeamScheme, policy: SwitchPolicy,
                          cfg: McConfig, p_grid) -> float:
    """Slope of the average rate against ``log2 P`` over the top decade of ``p_grid``.

    All powers share the same random draws, so the slope is much less noisy
    than the individual rates.
    """
    p = np.sort(np.asarray(p_grid, dtype=float))
    if p.size < 3 or p[0] <= 0 or math.log10(p[-1] / p[0]) < 3.0:
        raise DomainError("p_grid must hold >= 3 positive powers spanning >= 3 decades")
    top = p[p >= p[-1] / 10.0 * (1 - 1e-12)]
    if top.size < 2:
        raise DomainError("grid too small: the top decade needs at least two powers")
    rates = [estimate_avg_re(params.with_power(float(pk)), scheme, policy, cfg).rate for pk in top]
    slope, _ = np.polyfit(np.log2(top), rates, 1)
    return float(slope)


from .network import NetworkModel, NetworkResult, NetworkSpec, simulate_network  # noqa: E402,F401
