"""Experiment spec files: TOML documents with ``fixed``, ``sweep`` and ``mc`` tables.

Grammar (all keys lower case)::

    name    = "fig05"                 # required, used as CSV provenance
    kind    = "re_tradeoff"           # one of list_kinds()
    engines = ["analytic"]            # subset of {"analytic", "montecarlo"}
    output  = "fig05.csv"             # relative to the output directory

    [sweep]
    variable = "q_frac"               # allowed set depends on the kind
    start = 0.0                       # inclusive range ...
    stop  = 1.0
    points = 41
    scale = "linear"                  # or "log"
    unit  = "dBm"                     # optional, for power sweeps
    # values = [...]                  # alternative to start/stop/points

    [fixed]
    p_tx = "30 dBm"                   # quantities: number (linear) or "x unit"
    ...

    [mc]
    n_channel_draws = 100000
    n_subblock_draws = 1
    seed = 0
    workers = 1
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli

from ..mcsim import McConfig
from .units import UnitError, parse_quantity, unit_convert

ENGINES = ("analytic", "montecarlo")


class SpecError(ValueError):
    """A spec file failed validation; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class Sweep:
    variable: str
    display: tuple            # values as written (in ``unit``)
    values: tuple             # linear SI
    unit: str = ""
    scale: str = "linear"


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    kind: str
    sweep: Sweep
    fixed: dict
    engines: tuple
    mc: McConfig
    output: str
    content_hash: str = ""
    raw_fixed: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.mc.base_seed

    def with_seed(self, seed: int) -> "ExperimentSpec":
        return replace(self, mc=replace(self.mc, base_seed=int(seed)))

    def with_workers(self, workers: int) -> "ExperimentSpec":
        return replace(self, mc=replace(self.mc, worker_count=int(workers)))


def content_hash(data: bytes) -> str:
    """Git blob hash of the spec bytes."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# -- parameter types ---------------------------------------------------------

def _as_number(name, raw):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SpecError(name, f"expected a number, got {raw!r}")
    return float(raw)


def _as_int(name, raw):
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise SpecError(name, f"expected an integer, got {raw!r}")
    return raw


def _as_quantity(name, raw):
    try:
        return parse_quantity(raw)
    except UnitError as exc:
        raise SpecError(name, str(exc)) from None


def _list(name, raw, conv):
    if not isinstance(raw, list):
        raw = [raw]
    if not raw:
        raise SpecError(name, "list must not be empty")
    return tuple(conv(f"{name}[{i}]", v) for i, v in enumerate(raw))


def _as_bool(name, raw):
    if not isinstance(raw, bool):
        raise SpecError(name, f"expected true or false, got {raw!r}")
    return raw


def _as_str(name, raw):
    if not isinstance(raw, str):
        raise SpecError(name, f"expected a string, got {raw!r}")
    return raw


def _power(name, raw):
    v = _as_quantity(name, raw)
    if v < 0:
        raise SpecError(name, f"power must be nonnegative, got {raw!r}")
    return v


def _positive(name, raw):
    v = _as_quantity(name, raw)
    if not v > 0:
        raise SpecError(name, f"must be positive, got {raw!r}")
    return v


def _nonneg(name, raw):
    v = _as_quantity(name, raw)
    if not v >= 0:
        raise SpecError(name, f"must be nonnegative, got {raw!r}")
    return v


def _fraction(name, raw):
    v = _as_number(name, raw)
    if not 0 <= v <= 1:
        raise SpecError(name, f"must lie in [0, 1], got {raw!r}")
    return v


def _count(name, raw):
    v = _as_int(name, raw)
    if v < 1:
        raise SpecError(name, f"must be an integer >= 1, got {raw!r}")
    return v


def _threshold(name, raw):
    if raw == "inf":
        return math.inf
    return _nonneg(name, raw)


CONVERTERS = {
    "power": _power,
    "positive": _positive,
    "nonneg": _nonneg,
    "fraction": _fraction,
    "count": _count,
    "number": _as_number,
    "bool": _as_bool,
    "str": _as_str,
    "threshold": _threshold,
    "power_list": lambda n, r: _list(n, r, _power),
    "count_list": lambda n, r: _list(n, r, _count),
    "fraction_list": lambda n, r: _list(n, r, _fraction),
    "nonneg_list": lambda n, r: _list(n, r, _nonneg),
    "threshold_list": lambda n, r: _list(n, r, _threshold),
    "positive_list": lambda n, r: _list(n, r, _positive),
    "number_list": lambda n, r: _list(n, r, _as_number),
}


# -- parsing -----------------------------------------------------------------

def _parse_sweep(doc, allowed: dict) -> Sweep:
    sw = doc.get("sweep")
    if not isinstance(sw, dict):
        raise SpecError("sweep", "missing [sweep] table")
    var = sw.get("variable")
    if var not in allowed:
        raise SpecError("sweep.variable",
                        f"must be one of {sorted(allowed)}, got {var!r}")
    unit = sw.get("unit", "")
    if not isinstance(unit, str):
        raise SpecError("sweep.unit", f"expected a string, got {unit!r}")
    scale = sw.get("scale", "linear")
    if "values" in sw:
        display = _list("sweep.values", sw["values"], _as_number)
    else:
        for key in ("start", "stop", "points"):
            if key not in sw:
                raise SpecError(f"sweep.{key}", "required unless sweep.values is given")
        start = _as_number("sweep.start", sw["start"])
        stop = _as_number("sweep.stop", sw["stop"])
        points = _count("sweep.points", sw["points"])
        if stop < start:
            raise SpecError("sweep.stop", f"range is empty: stop {stop!r} < start {start!r}")
        if scale == "linear":
            grid = np.linspace(start, stop, points)
        elif scale == "log":
            if not start > 0:
                raise SpecError("sweep.start", "log sweeps need start > 0")
            grid = np.geomspace(start, stop, points)
        else:
            raise SpecError("sweep.scale", f"must be 'linear' or 'log', got {scale!r}")
        if points == 1:
            grid = np.array([start])
        display = tuple(float(x) for x in grid)
    try:
        values = tuple(unit_convert(x, unit) for x in display)
    except UnitError as exc:
        raise SpecError("sweep.unit", str(exc)) from None
    check = CONVERTERS[allowed[var]]
    for i, v in enumerate(values):
        check(f"sweep.values[{i}]", v)
    return Sweep(var, display, values, unit, scale)


def _parse_mc(doc) -> McConfig:
    mc = doc.get("mc", {})
    if not isinstance(mc, dict):
        raise SpecError("mc", "must be a table")
    known = {"n_channel_draws", "n_subblock_draws", "seed", "workers", "chunk_size"}
    for key in mc:
        if key not in known:
            raise SpecError(f"mc.{key}", "unknown key")
    kw = {}
    for key, target in (("n_channel_draws", "n_channel_draws"),
                        ("n_subblock_draws", "n_subblock_draws"),
                        ("workers", "worker_count"), ("chunk_size", "chunk_size")):
        if key in mc:
            kw[target] = _count(f"mc.{key}", mc[key])
    if "seed" in mc:
        seed = _as_int("mc.seed", mc["seed"])
        if seed < 0:
            raise SpecError("mc.seed", f"must be >= 0, got {seed!r}")
        kw["base_seed"] = seed
    return McConfig(**kw)


def parse_spec(data: bytes | str) -> ExperimentSpec:
    """Parse and validate spec text. Raises :class:`SpecError`."""
    from .kinds import KINDS

    if isinstance(data, str):
        data = data.encode()
    try:
        doc = tomli.loads(data.decode("utf-8"))
    except (tomli.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise SpecError("<file>", f"not valid TOML: {exc}") from None

    known_top = {"name", "kind", "engines", "output", "sweep", "fixed", "mc"}
    for key in doc:
        if key not in known_top:
            raise SpecError(key, "unknown top-level key")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise SpecError("name", "required non-empty string")
    kind_name = doc.get("kind")
    if kind_name not in KINDS:
        raise SpecError("kind", f"must be one of {sorted(KINDS)}, got {kind_name!r}")
    kind = KINDS[kind_name]

    engines = doc.get("engines", ["analytic"])
    if not isinstance(engines, list) or not engines:
        raise SpecError("engines", "must be a non-empty list")
    for e in engines:
        if e not in ENGINES:
            raise SpecError("engines", f"unknown engine {e!r}")
        if e not in kind.engines:
            raise SpecError("engines", f"kind {kind_name!r} supports only {list(kind.engines)}")
    if len(set(engines)) != len(engines):
        raise SpecError("engines", "duplicate engine")

    output = doc.get("output", f"{name}.csv")
    if not isinstance(output, str) or not output.endswith(".csv"):
        raise SpecError("output", f"must be a path ending in .csv, got {output!r}")

    sweep = _parse_sweep(doc, kind.sweep_vars)
    raw_fixed = doc.get("fixed", {})
    if not isinstance(raw_fixed, dict):
        raise SpecError("fixed", "must be a table")
    fixed = {}
    for key, raw in raw_fixed.items():
        if key not in kind.params:
            raise SpecError(f"fixed.{key}", f"not a parameter of kind {kind_name!r}")
        if key == sweep.variable:
            raise SpecError(f"fixed.{key}", "is already the sweep variable")
        fixed[key] = CONVERTERS[kind.params[key].type](f"fixed.{key}", raw)
    for key, p in kind.params.items():
        if key in fixed or key == sweep.variable:
            continue
        if p.required:
            raise SpecError(f"fixed.{key}", f"required by kind {kind_name!r}")
        if p.default is None:
            continue
        fixed[key] = CONVERTERS[p.type](f"fixed.{key}", p.default)
    kind.validate(fixed, sweep)

    spec = ExperimentSpec(name, kind_name, sweep, fixed, tuple(engines), _parse_mc(doc),
                          output, content_hash(data), dict(raw_fixed))
    return spec


def load_spec(path: str | Path) -> ExperimentSpec:
    """Read and validate a spec file. ``OSError`` propagates for I/O failures."""
    return parse_spec(Path(path).read_bytes())
