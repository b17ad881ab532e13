"""Analytic against Monte Carlo regression grid.

Each case compares average rate, average harvested power and per-block power
outage of one scheme with the Monte Carlo estimate; a check passes when the
two agree within three standard errors.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .. import altbeams, analytic
from ..analytic import SwitchPolicy
from ..channel import BeamKind, BeamScheme, SystemParams
from ..mcsim import McConfig, estimate_avg_re, estimate_power_outage

DEFAULT_SEED = 12345
DEFAULT_DRAWS = 100_000
Z_LIMIT = 3.0

# 30 dBm, -40 dB attenuation, -40 dBm noise, 50 % harvesting efficiency.
P_TX, THETA, SIGMA2, ZETA = 1.0, 1e-4, 1e-7, 0.5
Q_HAT_FRACTION = 0.3


@dataclass(frozen=True)
class Case:
    name: str
    kind: BeamKind
    n_t: int
    n_beams: int
    policy: SwitchPolicy

    @property
    def params(self) -> SystemParams:
        return SystemParams(P_TX, self.n_t, THETA, SIGMA2, ZETA)

    @property
    def q_hat(self) -> float:
        return Q_HAT_FRACTION * ZETA * THETA * P_TX


def grid() -> list[Case]:
    g = BeamKind.GAUSSIAN
    cases = [Case(f"tsg_nt{nt}_n{n}", g, nt, n, SwitchPolicy.ts(0.5 if nt == 2 else 1.0))
             for nt in (2, 4) for n in (1, 2, 4) if n <= nt]
    cases += [Case(f"ps_tau{t:g}", g, 2, 1, SwitchPolicy.ps(t)) for t in (0.2, 0.8)]
    cases += [Case("tsu_nt2_n1", BeamKind.UNITARY, 2, 1, SwitchPolicy.ts(0.5)),
              Case("tsb_nt2_n1", BeamKind.BINARY, 2, 1, SwitchPolicy.ts(0.5))]
    return cases


def analytic_values(case: Case) -> dict:
    p, q = case.params, case.q_hat
    pol = case.policy
    if pol.kind is analytic.PolicyKind.PS:
        return {"rate": analytic.ps_avg_rate(p, pol.tau), "power": analytic.ps_avg_power(p, pol.tau),
                "outage": analytic.ps_outage(p, pol.tau, q)}
    a = pol.abar
    if case.kind is BeamKind.GAUSSIAN:
        n = case.n_beams
        return {"rate": analytic.ts_avg_rate(p, n, a), "power": analytic.ts_avg_power(p, n, a),
                "outage": analytic.ts_outage_exact(p, n, a, q)}
    if case.kind is BeamKind.UNITARY:
        return {"rate": altbeams.urb_avg_rate(p, a), "power": altbeams.urb_avg_power(p, a),
                "outage": altbeams.urb_outage(p, a, q)}
    return {"rate": altbeams.brb_avg_rate(p, a), "power": altbeams.brb_avg_power(p, a),
            "outage": altbeams.brb_outage(p, a, q)}


def mc_values(case: Case, cfg: McConfig) -> dict:
    scheme = BeamScheme(case.kind, case.n_beams)
    re = estimate_avg_re(case.params, scheme, case.policy, cfg)
    out = estimate_power_outage(case.params, scheme, case.policy, case.q_hat, cfg)
    return {"rate": (re.rate, re.stderr_rate), "power": (re.power, re.stderr_power),
            "outage": (out.mean, out.stderr)}


@dataclass(frozen=True)
class Check:
    case: Case
    metric: str
    analytic: float
    mean: float
    stderr: float

    @property
    def z(self) -> float:
        diff = abs(self.mean - self.analytic)
        if self.stderr == 0:
            return 0.0 if diff == 0 else float("inf")
        return diff / self.stderr

    @property
    def ok(self) -> bool:
        return self.z <= Z_LIMIT


def run_grid(n_draws: int = DEFAULT_DRAWS, seed: int = DEFAULT_SEED, workers: int = 1) -> list[Check]:
    cfg = McConfig(n_channel_draws=n_draws, base_seed=seed, worker_count=workers)
    checks = []
    for case in grid():
        ref = analytic_values(case)
        est = mc_values(case, cfg)
        for metric in ("rate", "power", "outage"):
            checks.append(Check(case, metric, ref[metric], *est[metric]))
    return checks


def render(checks: list[Check], n_draws: int, seed: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["case", "beam", "n_t", "n_beams", "policy", "metric", "n_draws", "seed",
                "analytic", "mc_mean", "mc_stderr", "z", "within_3se"])
    for c in checks:
        pol = c.case.policy
        unit = {"rate": "bit/s/Hz", "power": "W", "outage": "1"}[c.metric]
        w.writerow([c.case.name, c.case.kind.value, c.case.n_t, c.case.n_beams,
                    f"{pol.kind.value}={pol.value:g}", f"{c.metric}[{unit}]", n_draws, seed,
                    format(c.analytic, ".17g"), format(c.mean, ".17g"), format(c.stderr, ".17g"),
                    format(c.z, ".17g"), "yes" if c.ok else "no"])
    return buf.getvalue()
