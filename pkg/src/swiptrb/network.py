"""Multicast network throughput with per-user threshold adaptation.

Each user sits at a fixed random distance; its large-scale gain is
pathloss times lognormal shadowing. For every shadowing draw the user picks
the threshold whose average rate equals the common target, or harvests
everything when even ``abar = inf`` misses the target (a rate outage).

All users share the unconditional density ``f_A`` of the sub-block power,
so it is tabulated once at Gauss-Legendre nodes on geometric panels. The
average rate and power up to any threshold are then panel sums plus a
Legendre-series antiderivative inside the last panel, and the threshold is
found by safeguarded Newton bisection on that antiderivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as leg

from .altbeams import AnalyticsUnavailable
from .channel import BeamKind, BeamScheme, RngStream, SystemParams, stream_id_for, unconditional_pdf_A
from .quadrature import BracketError
from .specfun import DomainError

LN2 = math.log(2.0)
_NODES = 16
_PANELS = 64
_A_MIN = 1e-12


@dataclass(frozen=True)
class NetworkSpec:
    """Topology, propagation and rate target of the multicast network.

    ``params.theta`` is ignored; each user's gain comes from its distance and
    shadowing. ``n_shadow_draws`` shadowing samples per user estimate the
    rate-outage probability.
    """

    n_users: int = 10
    dist_range: tuple = (3.0, 10.0)
    pathloss_ref_db: float = -20.0
    pathloss_exp: float = 3.0
    shadow_sigma_db: float = 3.72
    rate_target: float = 0.0
    beam: BeamScheme = field(default_factory=lambda: BeamScheme(BeamKind.GAUSSIAN, 1))
    params: SystemParams = field(default_factory=lambda: SystemParams(1.0, 2, 1.0, 1e-7, 0.5))
    n_shadow_draws: int = 2000

    def __post_init__(self):
        lo, hi = self.dist_range
        if not 0 < lo <= hi:
            raise DomainError(f"dist_range must satisfy 0 < min <= max, got {self.dist_range!r}")
        if not self.pathloss_exp > 0:
            raise DomainError(f"pathloss_exp must be positive, got {self.pathloss_exp!r}")
        if self.n_users < 1 or self.n_shadow_draws < 1:
            raise DomainError("n_users and n_shadow_draws must be >= 1")
        if not self.shadow_sigma_db >= 0:
            raise DomainError("shadow_sigma_db must be >= 0")
        if not self.rate_target >= 0:
            raise DomainError("rate_target must be >= 0")
        self.beam.check(self.params.n_t)


@dataclass(frozen=True)
class NetworkResult:
    rate_target: float
    throughput: float
    avg_sum_power: float
    per_user_outage: tuple


def _density(beam: BeamScheme, n_t: int):
    if beam.kind is BeamKind.GAUSSIAN:
        return lambda a: unconditional_pdf_A(a, n_t, beam.n_beams)
    if (n_t, beam.n_beams) == (2, 1):
        return lambda a: np.exp(-a)
    raise AnalyticsUnavailable(f"no unconditional density for {beam.kind.value} beams "
                               f"with n_t={n_t}, N={beam.n_beams}")


class NetworkModel:
    """One random topology; evaluate any number of rate targets against it."""

    def __init__(self, spec: NetworkSpec, base_seed: int = 0):
        self.spec = spec
        p = spec.params
        gen = RngStream(base_seed, stream_id_for("network-topology")).generator()
        lo, hi = spec.dist_range
        self.distances = gen.uniform(lo, hi, spec.n_users)
        theta_l = 10.0 ** (spec.pathloss_ref_db / 10.0) * self.distances ** (-spec.pathloss_exp)
        z = gen.standard_normal((spec.n_users, spec.n_shadow_draws))
        self.theta = theta_l[:, None] * 10.0 ** (spec.shadow_sigma_db * z / 10.0)
        self._snr = (self.theta * p.p_tx / p.sigma2).ravel()
        self._harvest_max = (p.zeta * self.theta * p.p_tx).ravel()

        n = spec.beam.n_beams
        a_max = 1600.0 / (p.n_t * n)
        self.edges = np.concatenate([[0.0], np.geomspace(_A_MIN, a_max, _PANELS)])
        t, w = leg.leggauss(_NODES)
        self._t, self._w = t, w
        self._half = 0.5 * np.diff(self.edges)
        mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        self._x = mid[:, None] + self._half[:, None] * t[None, :]
        self._f = _density(spec.beam, p.n_t)(self._x.ravel()).reshape(self._x.shape)
        # Projection onto Legendre coefficients: c_n = (2n+1)/2 sum_k w_k v_k P_n(t_k).
        vander = leg.legvander(t, _NODES - 1)
        self._proj = (vander * w[:, None]).T * (np.arange(_NODES)[:, None] + 0.5)

        # Power: Pi(abar) = 1 - int_0^abar a f(a) da.
        pw = self._x * self._f
        self._pow_cum = np.concatenate([[0.0], np.cumsum(self._half * (pw @ w))])
        self._pow_coef = leg.legint(pw @ self._proj.T, axis=1, lbnd=-1)

        # Rate: cumulative per sample and panel, built in blocks of samples.
        self._rate_cum = np.empty((self._snr.size, _PANELS))
        fw = self._f * w[None, :] * self._half[:, None]
        for s0 in range(0, self._snr.size, 1024):
            snr = self._snr[s0:s0 + 1024]
            vals = np.log1p(snr[:, None, None] * self._x[None]) * fw[None]
            self._rate_cum[s0:s0 + 1024] = np.cumsum(vals.sum(axis=2), axis=1) / LN2
        self.full_rate = self._rate_cum[:, -1]

    def max_rate(self) -> float:
        return float(self.full_rate.max())

    def _solve(self, target: float, idx: np.ndarray):
        """Threshold panel and Legendre coordinate for samples ``idx``."""
        cum = self._rate_cum[idx]
        panel = (cum < target).sum(axis=1)
        start = np.where(panel > 0, cum[np.arange(idx.size), np.maximum(panel - 1, 0)], 0.0)
        need = target - start
        snr = self._snr[idx]
        vals = np.log1p(snr[:, None] * self._x[panel]) * self._f[panel] / LN2
        dcoef = vals @ self._proj.T
        coef = leg.legint(dcoef, axis=1, lbnd=-1)
        need = need / self._half[panel]
        # Bisection safeguarded with Newton steps: the bracket [lo, hi] always
        # holds the root, Newton is taken only when it lands inside it.
        lo = np.full(idx.size, -1.0)
        hi = np.ones(idx.size)
        t = np.zeros(idx.size)
        act = np.arange(idx.size)
        for _ in range(80):
            ta = t[act]
            g = leg.legval(ta, coef[act].T, tensor=False) - need[act]
            lo[act] = np.where(g < 0, ta, lo[act])
            hi[act] = np.where(g < 0, hi[act], ta)
            slope = leg.legval(ta, dcoef[act].T, tensor=False)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = ta - g / slope
            inside = (newton > lo[act]) & (newton < hi[act]) & np.isfinite(newton)
            t_next = np.where(inside, newton, 0.5 * (lo[act] + hi[act]))
            hit = np.abs(g) <= 1e-15 * np.abs(need[act])
            t_next = np.where(hit, ta, t_next)
            t[act] = t_next
            done = hit | (np.abs(t_next - ta) <= 1e-14) | (hi[act] - lo[act] <= 1e-14)
            act = act[~done]
            if act.size == 0:
                break
        else:
            raise BracketError("threshold search did not converge")
        return panel, t

    def thresholds(self, target: float) -> np.ndarray:
        """Per-sample threshold ``abar`` (``nan`` where the user is in rate outage)."""
        out = np.full(self._snr.size, np.nan)
        ok = self.full_rate >= target
        if target <= 0:
            out[:] = 0.0
            return out
        idx = np.flatnonzero(ok)
        if idx.size:
            panel, t = self._solve(target, idx)
            mid = 0.5 * (self.edges[panel + 1] + self.edges[panel])
            out[idx] = mid + self._half[panel] * t
        return out

    def evaluate(self, target: float) -> NetworkResult:
        if not target >= 0:
            raise DomainError(f"rate target must be >= 0, got {target!r}")
        spec = self.spec
        ok = self.full_rate >= target
        frac = np.ones(self._snr.size)
        if target > 0:
            idx = np.flatnonzero(ok)
            if idx.size:
                panel, t = self._solve(target, idx)
                partial = self._half[panel] * leg.legval(t, self._pow_coef[panel].T, tensor=False)
                frac[idx] = 1.0 - (self._pow_cum[panel] + partial)
                if np.any(frac[idx] < -1e-9) or np.any(frac[idx] > 1 + 1e-9):
                    raise BracketError("threshold search produced a power fraction outside [0, 1]")
                frac = np.clip(frac, 0.0, 1.0)
        shape = (spec.n_users, spec.n_shadow_draws)
        served = ok.reshape(shape).mean(axis=1)
        power = (self._harvest_max * frac).reshape(shape).mean(axis=1).sum()
        throughput = target * served.sum() if math.isfinite(target) else 0.0
        return NetworkResult(target, float(throughput), float(power), tuple(1.0 - served))

    def sweep(self, targets) -> list[NetworkResult]:
        return [self.evaluate(float(r)) for r in targets]


def simulate_network(spec: NetworkSpec, cfg) -> NetworkResult:
    """Throughput and average sum harvested power at ``spec.rate_target``."""
    return NetworkModel(spec, cfg.base_seed).evaluate(spec.rate_target)


def max_throughput(spec: NetworkSpec, base_seed: int, n_targets: int = 200):
    """``(C*, Q*, R*)`` from a uniform sweep of the rate target."""
    model = NetworkModel(spec, base_seed)
    targets = np.linspace(0.0, model.max_rate(), n_targets + 1)[1:]
    results = model.sweep(targets)
    best = max(results, key=lambda r: r.throughput)
    return best.throughput, best.avg_sum_power, best.rate_target
