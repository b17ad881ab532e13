"""Experiment kinds: parameters, sweep axes, CSV columns and per-point evaluation.

Every kind evaluates one sweep point at a time through ``point(ctx, x)``,
where ``ctx`` is built once per engine by ``prepare``. A point returns a map
from column base name to either a float (exact or analytic value) or a
``(mean, stderr)`` pair (Monte Carlo estimate).

Column modes:

* ``est``: analytic value in analytic rows, estimate plus standard error in
  Monte Carlo rows.
* ``exact``: same deterministic value in every row, no standard error.
* ``analytic``: analytic rows only; blank in Monte Carlo rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import altbeams, analytic
from ..analytic import SwitchPolicy
from ..channel import BeamKind, BeamScheme, ChannelRealization, SystemParams, unconditional_pdf_A
from ..mcsim import estimate_avg_re, estimate_block_re, estimate_power_outage
from ..network import NetworkModel, NetworkSpec
from ..quadrature import bracket_upward, newton_bisect
from .spec import SpecError

RATE = "bit/s/Hz"


@dataclass(frozen=True)
class Param:
    type: str
    default: object = None
    required: bool = False
    doc: str = ""


@dataclass(frozen=True)
class Column:
    base: str
    unit: str
    mode: str = "est"

    @property
    def label(self) -> str:
        return f"{self.base}[{self.unit}]"

    @property
    def stderr_label(self) -> str:
        return f"{self.base}_stderr[{self.unit}]"


def _g(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:g}"


def _uw(x: float) -> str:
    return f"{x * 1e6:g}uW"


def _common(n_t_default=None, zeta=1.0):
    return {
        "p_tx": Param("positive", "30 dBm", doc="transmit power"),
        "n_t": Param("count", n_t_default, required=n_t_default is None, doc="transmit antennas"),
        "theta": Param("positive", "-40 dB", doc="large-scale power attenuation"),
        "sigma2": Param("positive", "-40 dBm", doc="noise power"),
        "zeta": Param("number", zeta, doc="harvesting efficiency"),
    }


def _params(fixed, sweep_var=None, x=None) -> SystemParams:
    p_tx = x if sweep_var == "p_tx" else fixed["p_tx"]
    return SystemParams(p_tx, fixed["n_t"], fixed["theta"], fixed["sigma2"], fixed["zeta"])


def _gauss(n):
    return BeamScheme(BeamKind.GAUSSIAN, n)


def _check_common(fixed):
    if not 0 < fixed["zeta"] <= 1:
        raise SpecError("fixed.zeta", f"must lie in (0, 1], got {fixed['zeta']!r}")
    for i, n in enumerate(fixed.get("n_beams", ())):
        if n > fixed["n_t"]:
            raise SpecError(f"fixed.n_beams[{i}]",
                            f"N={n} exceeds n_t={fixed['n_t']}")


def _est(point):
    return (point.rate, point.stderr_rate), (point.power, point.stderr_power)


@dataclass
class Context:
    spec: object
    engine: str
    cache: dict = field(default_factory=dict)

    @property
    def fixed(self):
        return self.spec.fixed

    @property
    def mc(self) -> bool:
        return self.engine == "montecarlo"


class Kind:
    name = ""
    description = ""
    params: dict = {}
    sweep_vars: dict = {}
    engines = ("analytic", "montecarlo")

    def validate(self, fixed, sweep) -> None:
        _check_common(fixed)

    def columns(self, spec) -> list[Column]:
        raise NotImplementedError

    def prepare(self, spec, engine) -> Context:
        return Context(spec, engine)

    def point(self, ctx: Context, x: float) -> dict:
        raise NotImplementedError

    def sweep_unit(self, variable: str) -> str:
        return {"p_tx": "W", "rate_target": RATE}.get(variable, "1")

    def plot_x(self, spec):
        """Column base used as the plot abscissa; ``None`` means the sweep variable."""
        return None

    def plot_y(self, spec, columns) -> list[str]:
        return [c.base for c in columns if c.mode != "exact"]


# -- block level against h or P ---------------------------------------------

class _BlockVsH(Kind):
    metric = ""
    unit = ""
    sweep_vars = {"h": "positive", "p_tx": "positive"}

    def __init__(self):
        self.params = dict(_common(2), n_beams=Param("count_list", required=True),
                           abar=Param("threshold_list", required=True),
                           h=Param("positive_list"))

    def validate(self, fixed, sweep):
        _check_common(fixed)
        if sweep.variable == "p_tx" and "h" not in fixed:
            raise SpecError("fixed.h", "required when sweeping p_tx")

    def _combos(self, spec):
        hs = spec.fixed.get("h", (None,)) if spec.sweep.variable == "p_tx" else (None,)
        return [(h, n, a) for h in hs for n in spec.fixed["n_beams"] for a in spec.fixed["abar"]]

    def _base(self, prefix, h, n, a):
        tag = f"_h{_g(h)}" if h is not None else ""
        return f"{prefix}{tag}_n{n}_abar{_g(a)}"

    def columns(self, spec):
        return [Column(self._base(self.metric, *c), self.unit) for c in self._combos(spec)]

    def point(self, ctx, x):
        spec = ctx.spec
        params = _params(spec.fixed, spec.sweep.variable, x)
        out = {}
        for h, n, a in self._combos(spec):
            hv = x if h is None else h
            base = self._base(self.metric, h, n, a)
            if ctx.mc:
                chan = ChannelRealization.from_h([math.sqrt(params.n_t * hv)] + [0.0] * (params.n_t - 1))
                rate, power = _est(estimate_block_re(params, _gauss(n), SwitchPolicy.ts(a), chan, spec.mc))
                out[base] = rate if self.metric == "rate" else power
            else:
                out[base] = self.analytic_value(params, hv, n, a)
        return out


class PowerVsH(_BlockVsH):
    name = "power_vs_h"
    description = "TS block harvested power against h or P for several N and thresholds"
    metric = "power"
    unit = "W"

    def analytic_value(self, params, h, n, a):
        return analytic.ts_power(params, h, n, a)


class RateVsH(_BlockVsH):
    name = "rate_vs_h"
    description = ("TS block rate against h or P for several N and thresholds, "
                   "optionally with the high-power approximation")
    metric = "rate"
    unit = RATE

    def __init__(self):
        super().__init__()
        self.params["approx"] = Param("bool", False)

    def validate(self, fixed, sweep):
        super().validate(fixed, sweep)
        if fixed["approx"] and any(a == 0 for a in fixed["abar"]):
            raise SpecError("fixed.abar", "the high-power approximation needs abar > 0")

    def columns(self, spec):
        cols = super().columns(spec)
        if spec.fixed["approx"]:
            cols += [Column(self._base("approx", *c), RATE, "analytic") for c in self._combos(spec)]
        return cols

    def point(self, ctx, x):
        out = super().point(ctx, x)
        if ctx.fixed["approx"] and not ctx.mc:
            params = _params(ctx.fixed, ctx.spec.sweep.variable, x)
            for h, n, a in self._combos(ctx.spec):
                hv = x if h is None else h
                out[self._base("approx", h, n, a)] = analytic.ts_rate_highpower_approx(params, hv, n, a)
        return out

    def analytic_value(self, params, h, n, a):
        return analytic.ts_rate(params, h, n, a)


# -- rate-energy trade-offs -------------------------------------------------

def _invert_avg_rate(params, n, target):
    """Threshold with ``ts_avg_rate = target``; ``inf`` marks an unreachable target."""
    if target <= 0:
        return 0.0
    if target > analytic.ts_avg_rate(params, n, math.inf):
        return math.inf

    def f(a):
        return analytic.ts_avg_rate(params, n, a) - target

    def df(a):
        return math.log1p(params.snr * a) / math.log(2.0) * float(unconditional_pdf_A(a, params.n_t, n))

    lo, hi = bracket_upward(f, 0.0, 1.0)
    return newton_bisect(f, df, lo, hi, rtol=1e-12)


class ReTradeoff(Kind):
    name = "re_tradeoff"
    description = ("rate against block power for a fixed channel (sweep q_frac), or "
                   "power non-outage against average rate (sweep rate_frac)")
    sweep_vars = {"q_frac": "fraction", "rate_frac": "fraction"}

    def __init__(self):
        self.params = dict(_common(2), n_beams=Param("count_list", required=True),
                           include_ps=Param("bool", True), h_vector=Param("number_list"),
                           q_hat=Param("positive_list"))

    def validate(self, fixed, sweep):
        _check_common(fixed)
        if sweep.variable == "q_frac":
            hv = fixed.get("h_vector")
            if hv is None:
                raise SpecError("fixed.h_vector", "required when sweeping q_frac")
            if len(hv) != fixed["n_t"]:
                raise SpecError("fixed.h_vector", f"needs n_t={fixed['n_t']} entries, got {len(hv)}")
            if not sum(v * v for v in hv) > 0:
                raise SpecError("fixed.h_vector", "must not be all zero")
        elif "q_hat" not in fixed:
            raise SpecError("fixed.q_hat", "required when sweeping rate_frac")

    def columns(self, spec):
        f = spec.fixed
        if spec.sweep.variable == "q_frac":
            cols = [Column("q", "W", "exact")]
            if f["include_ps"]:
                cols.append(Column("rate_ps", RATE))
            return cols + [Column(f"rate_ts_n{n}", RATE) for n in f["n_beams"]]
        cols = [Column("rate", RATE, "exact")]
        for q in f["q_hat"]:
            if f["include_ps"]:
                cols.append(Column(f"nonoutage_ps_q{_uw(q)}", "1"))
            cols += [Column(f"nonoutage_ts_n{n}_q{_uw(q)}", "1") for n in f["n_beams"]]
        return cols

    def plot_x(self, spec):
        return "q" if spec.sweep.variable == "q_frac" else "rate"

    def prepare(self, spec, engine):
        ctx = Context(spec, engine)
        params = _params(spec.fixed)
        if spec.sweep.variable == "rate_frac":
            ctx.cache["r_max"] = analytic.ps_avg_rate(params, 1.0)
        return ctx

    def point(self, ctx, x):
        if ctx.spec.sweep.variable == "q_frac":
            return self._block(ctx, x)
        return self._outage(ctx, x)

    def _block(self, ctx, x):
        f = ctx.fixed
        params = _params(f)
        h_vec = np.asarray(f["h_vector"], dtype=float)
        chan = ChannelRealization.from_h(h_vec)
        cap_h = chan.cap_h
        q_max = params.zeta * params.rx_power * cap_h
        q = x * q_max
        out = {"q": q}
        if f["include_ps"]:
            tau = 1.0 - x
            if ctx.mc:
                out["rate_ps"] = _est(estimate_block_re(params, _gauss(1), SwitchPolicy.ps(tau), chan,
                                                        ctx.spec.mc))[0]
            else:
                out["rate_ps"] = analytic.ps_rate(params, cap_h, tau)
        for n in f["n_beams"]:
            abar = analytic.ts_threshold_for_power(params, cap_h, n, q)
            if ctx.mc:
                out[f"rate_ts_n{n}"] = _est(estimate_block_re(params, _gauss(n), SwitchPolicy.ts(abar),
                                                              chan, ctx.spec.mc))[0]
            else:
                out[f"rate_ts_n{n}"] = analytic.ts_rate(params, cap_h, n, abar)
        return out

    def _outage(self, ctx, x):
        f = ctx.fixed
        params = _params(f)
        target = x * ctx.cache["r_max"]
        out = {"rate": target}
        policies = []
        if f["include_ps"]:
            policies.append(("ps", _gauss(1), SwitchPolicy.ps(x)))
        for n in f["n_beams"]:
            abar = _invert_avg_rate(params, n, target)
            policies.append((f"ts_n{n}", _gauss(n), None if math.isinf(abar) else SwitchPolicy.ts(abar)))
        for q in f["q_hat"]:
            for tag, scheme, policy in policies:
                key = f"nonoutage_{tag}_q{_uw(q)}"
                if policy is None:
                    out[key] = math.nan
                elif ctx.mc:
                    est = estimate_power_outage(params, scheme, policy, q, ctx.spec.mc)
                    out[key] = (1.0 - est.mean, est.stderr)
                elif tag == "ps":
                    out[key] = 1.0 - analytic.ps_outage(params, policy.tau, q)
                else:
                    out[key] = 1.0 - analytic.ts_outage_exact(params, scheme.n_beams, policy.abar, q)
        return out


# -- scaling factors --------------------------------------------------------

class ScalingTradeoff(Kind):
    name = "scaling_tradeoff"
    description = ("rate and power scaling factors against the threshold (sweep abar), "
                   "or rate scaling against power scaling (sweep pi)")
    sweep_vars = {"abar": "nonneg", "pi": "fraction"}
    engines = ("analytic",)

    def __init__(self):
        self.params = {"n_t": Param("count", required=True),
                       "n_beams": Param("count_list", required=True),
                       "include_ps": Param("bool", True)}

    def validate(self, fixed, sweep):
        for i, n in enumerate(fixed["n_beams"]):
            if n > fixed["n_t"]:
                raise SpecError(f"fixed.n_beams[{i}]", f"N={n} exceeds n_t={fixed['n_t']}")

    def columns(self, spec):
        ns = spec.fixed["n_beams"]
        if spec.sweep.variable == "abar":
            return ([Column(f"delta_n{n}", "1") for n in ns]
                    + [Column(f"pi_n{n}", "1") for n in ns])
        cols = [Column("delta_ps", "1")] if spec.fixed["include_ps"] else []
        return cols + [Column(f"delta_n{n}", "1") for n in ns]

    def point(self, ctx, x):
        n_t = ctx.fixed["n_t"]
        out = {}
        if ctx.spec.sweep.variable == "abar":
            for n in ctx.fixed["n_beams"]:
                out[f"delta_n{n}"] = analytic.ts_rate_scaling(n_t, n, x)
                out[f"pi_n{n}"] = analytic.ts_power_scaling(n_t, n, x)
            return out
        if ctx.fixed["include_ps"]:
            out["delta_ps"] = analytic.ps_scalings(1.0 - x)[0]
        for n in ctx.fixed["n_beams"]:
            abar = analytic.ts_threshold_for_power_scaling(n_t, n, x)
            out[f"delta_n{n}"] = analytic.ts_rate_scaling(n_t, n, abar)
        return out


# -- power outage -----------------------------------------------------------

class OutageVsP(Kind):
    name = "outage_vs_p"
    description = "per-block power outage of PS and TS against transmit power"
    sweep_vars = {"p_tx": "positive"}

    def __init__(self):
        self.params = dict(_common(2), q_hat=Param("positive", required=True),
                           n_beams=Param("count_list", (1,)), abar=Param("nonneg_list", (0.0,)),
                           tau=Param("fraction_list", ()), asymptotic=Param("bool", False))

    def columns(self, spec):
        f = spec.fixed
        cols = [Column(f"outage_ps_tau{_g(t)}", "1") for t in f["tau"]]
        cols += [Column(f"outage_ts_n{n}_abar{_g(a)}", "1") for n in f["n_beams"] for a in f["abar"]]
        if f["asymptotic"]:
            cols += [Column(f"asym_ts_n{n}_abar{_g(a)}", "1", "analytic")
                     for n in f["n_beams"] for a in f["abar"]]
        return cols

    def point(self, ctx, x):
        f = ctx.fixed
        params = _params(f, "p_tx", x)
        q = f["q_hat"]
        out = {}
        for t in f["tau"]:
            key = f"outage_ps_tau{_g(t)}"
            if ctx.mc:
                est = estimate_power_outage(params, _gauss(1), SwitchPolicy.ps(t), q, ctx.spec.mc)
                out[key] = (est.mean, est.stderr)
            else:
                out[key] = analytic.ps_outage(params, t, q)
        for n in f["n_beams"]:
            for a in f["abar"]:
                key = f"outage_ts_n{n}_abar{_g(a)}"
                if ctx.mc:
                    est = estimate_power_outage(params, _gauss(n), SwitchPolicy.ts(a), q, ctx.spec.mc)
                    out[key] = (est.mean, est.stderr)
                else:
                    out[key] = analytic.ts_outage_exact(params, n, a, q)
                    if f["asymptotic"]:
                        out[f"asym_ts_n{n}_abar{_g(a)}"] = analytic.ts_outage_asymptotic(params, n, a, q)
        return out


# -- average rate at matched average power ----------------------------------

class RateVsPMatchedPower(Kind):
    name = "rate_vs_p_matched_power"
    description = "average rate of PS and TS against P at equal power scaling factors"
    sweep_vars = {"p_tx": "positive"}

    def __init__(self):
        self.params = dict(_common(2), pi=Param("fraction_list", required=True),
                           n_beams=Param("count_list", (1, 2)), include_ps=Param("bool", True))

    def columns(self, spec):
        cols = []
        for p in spec.fixed["pi"]:
            cols.append(Column(f"q_avg_pi{_g(p)}", "W", "exact"))
            if spec.fixed["include_ps"]:
                cols.append(Column(f"rate_ps_pi{_g(p)}", RATE))
            cols += [Column(f"rate_ts_n{n}_pi{_g(p)}", RATE) for n in spec.fixed["n_beams"]]
        return cols

    def prepare(self, spec, engine):
        ctx = Context(spec, engine)
        n_t = spec.fixed["n_t"]
        for p in spec.fixed["pi"]:
            for n in spec.fixed["n_beams"]:
                ctx.cache[(n, p)] = analytic.ts_threshold_for_power_scaling(n_t, n, p)
        return ctx

    def point(self, ctx, x):
        f = ctx.fixed
        params = _params(f, "p_tx", x)
        out = {}
        for p in f["pi"]:
            out[f"q_avg_pi{_g(p)}"] = params.zeta * params.rx_power * p
            if f["include_ps"]:
                key = f"rate_ps_pi{_g(p)}"
                if ctx.mc:
                    out[key] = _est(estimate_avg_re(params, _gauss(1), SwitchPolicy.ps(1.0 - p),
                                                    ctx.spec.mc))[0]
                else:
                    out[key] = analytic.ps_avg_rate(params, 1.0 - p)
            for n in f["n_beams"]:
                key = f"rate_ts_n{n}_pi{_g(p)}"
                abar = ctx.cache[(n, p)]
                if ctx.mc:
                    out[key] = _est(estimate_avg_re(params, _gauss(n), SwitchPolicy.ts(abar),
                                                    ctx.spec.mc))[0]
                else:
                    out[key] = analytic.ts_avg_rate(params, n, abar)
        return out


# -- random beam designs ----------------------------------------------------

class BeamComparison(Kind):
    name = "beam_comparison"
    description = "average rate of TS with Gaussian, unit-norm and antenna-selection beams and PS"
    sweep_vars = {"p_tx": "positive"}

    def __init__(self):
        self.params = dict(_common(2), pi=Param("fraction", 0.9))

    def validate(self, fixed, sweep):
        _check_common(fixed)
        if fixed["n_t"] != 2:
            raise SpecError("fixed.n_t", "beam comparison is defined for n_t = 2 only")
        if not 0 < fixed["pi"] < 1:
            raise SpecError("fixed.pi", f"must lie in (0, 1), got {fixed['pi']!r}")

    def columns(self, spec):
        return [Column("q_avg", "W", "exact"), Column("rate_tsg", RATE), Column("rate_tsu", RATE),
                Column("rate_tsb", RATE), Column("rate_ps", RATE)]

    def prepare(self, spec, engine):
        ctx = Context(spec, engine)
        p = spec.fixed["pi"]
        ctx.cache["abar_g"] = analytic.ts_threshold_for_power_scaling(2, 1, p)
        ctx.cache["abar_u"] = altbeams.urb_threshold_for_power_scaling(p)
        return ctx

    def point(self, ctx, x):
        f = ctx.fixed
        params = _params(f, "p_tx", x)
        p = f["pi"]
        ag, au = ctx.cache["abar_g"], ctx.cache["abar_u"]
        out = {"q_avg": params.zeta * params.rx_power * p}
        if ctx.mc:
            cfg = ctx.spec.mc
            out["rate_tsg"] = _est(estimate_avg_re(params, _gauss(1), SwitchPolicy.ts(ag), cfg))[0]
            out["rate_tsu"] = _est(estimate_avg_re(params, BeamScheme(BeamKind.UNITARY, 1),
                                                   SwitchPolicy.ts(au), cfg))[0]
            out["rate_tsb"] = _est(estimate_avg_re(params, BeamScheme(BeamKind.BINARY, 1),
                                                   SwitchPolicy.ts(au), cfg))[0]
            out["rate_ps"] = _est(estimate_avg_re(params, _gauss(1), SwitchPolicy.ps(1.0 - p), cfg))[0]
        else:
            out["rate_tsg"] = analytic.ts_avg_rate(params, 1, ag)
            out["rate_tsu"] = altbeams.urb_avg_rate(params, au)
            out["rate_tsb"] = altbeams.brb_avg_rate(params, au)
            out["rate_ps"] = analytic.ps_avg_rate(params, 1.0 - p)
        return out


# -- network ----------------------------------------------------------------

class NetworkThroughput(Kind):
    name = "network_throughput"
    description = "multicast throughput and average sum harvested power against the rate target"
    sweep_vars = {"rate_target": "nonneg"}
    engines = ("montecarlo",)

    def __init__(self):
        self.params = dict(_common(2, zeta=0.5), n_beams=Param("count", 1),
                           beam=Param("str", "gaussian"), n_users=Param("count", 10),
                           dist_min=Param("positive", 3.0), dist_max=Param("positive", 10.0),
                           pathloss_ref=Param("positive", "-20 dB"),
                           pathloss_exp=Param("positive", 3.0),
                           shadow_sigma_db=Param("nonneg", 3.72),
                           n_shadow_draws=Param("count", 2000))
        del self.params["theta"]

    def validate(self, fixed, sweep):
        if not 0 < fixed["zeta"] <= 1:
            raise SpecError("fixed.zeta", f"must lie in (0, 1], got {fixed['zeta']!r}")
        if fixed["n_beams"] > fixed["n_t"]:
            raise SpecError("fixed.n_beams", f"N={fixed['n_beams']} exceeds n_t={fixed['n_t']}")
        if fixed["beam"] not in {k.value for k in BeamKind}:
            raise SpecError("fixed.beam", f"unknown beam kind {fixed['beam']!r}")
        if fixed["dist_max"] < fixed["dist_min"]:
            raise SpecError("fixed.dist_max", "must be >= dist_min")

    def columns(self, spec):
        return [Column("throughput", RATE, "exact"), Column("avg_sum_power", "W", "exact"),
                Column("mean_rate_outage", "1", "exact")]

    def plot_x(self, spec):
        return "avg_sum_power"

    def plot_y(self, spec, columns):
        return ["throughput"]

    def network_spec(self, fixed) -> NetworkSpec:
        return NetworkSpec(
            n_users=fixed["n_users"], dist_range=(fixed["dist_min"], fixed["dist_max"]),
            pathloss_ref_db=10.0 * math.log10(fixed["pathloss_ref"]),
            pathloss_exp=fixed["pathloss_exp"], shadow_sigma_db=fixed["shadow_sigma_db"],
            beam=BeamScheme(BeamKind(fixed["beam"]), fixed["n_beams"]),
            params=SystemParams(fixed["p_tx"], fixed["n_t"], 1.0, fixed["sigma2"], fixed["zeta"]),
            n_shadow_draws=fixed["n_shadow_draws"])

    def prepare(self, spec, engine):
        ctx = Context(spec, engine)
        ctx.cache["model"] = NetworkModel(self.network_spec(spec.fixed), spec.mc.base_seed)
        return ctx

    def point(self, ctx, x):
        res = ctx.cache["model"].evaluate(x)
        return {"throughput": res.throughput, "avg_sum_power": res.avg_sum_power,
                "mean_rate_outage": float(np.mean(res.per_user_outage))}


KINDS: dict[str, Kind] = {k.name: k for k in (
    ReTradeoff(), RateVsH(), PowerVsH(), ScalingTradeoff(), OutageVsP(),
    RateVsPMatchedPower(), NetworkThroughput(), BeamComparison())}


def list_kinds() -> list[str]:
    return sorted(KINDS)
