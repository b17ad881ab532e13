"""Run a validated spec: evaluate every (engine, sweep point), write the CSV
and a companion gnuplot script, and report a summary.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .kinds import KINDS, Column
from .spec import ExperimentSpec

PROVENANCE = ("spec", "engine", "seed", "spec_hash")


class PointError(RuntimeError):
    """An engine failed at one sweep point; the message names the point."""

    def __init__(self, spec_name, engine, index, x, cause):
        super().__init__(f"{spec_name}: engine {engine!r} failed at sweep point {index} "
                         f"(x={x!r}): {type(cause).__name__}: {cause}")
        self.cause = cause


@dataclass(frozen=True)
class Summary:
    name: str
    kind: str
    csv_path: Path
    plot_path: Path
    n_rows: int
    wall_time: float
    max_z: float          # over cells with stderr > 0; nan unless both engines ran

    def lines(self) -> list[str]:
        z = "n/a" if math.isnan(self.max_z) else f"{self.max_z:.3f}"
        return [f"spec      {self.name} ({self.kind})",
                f"rows      {self.n_rows}",
                f"csv       {self.csv_path}",
                f"plot      {self.plot_path}",
                f"wall time {self.wall_time:.2f} s",
                f"max |analytic - MC| / stderr  {z}"]


def fmt(v) -> str:
    if v is None:
        return ""
    return format(float(v), ".17g")


def header(spec: ExperimentSpec, columns: list[Column]) -> list[str]:
    unit = spec.sweep.unit or KINDS[spec.kind].sweep_unit(spec.sweep.variable)
    out = list(PROVENANCE) + [f"{spec.sweep.variable}[{unit}]"]
    for c in columns:
        out.append(c.label)
        if c.mode == "est":
            out.append(c.stderr_label)
    return out


def _cells(columns, values: dict, engine: str) -> list[str]:
    out = []
    for c in columns:
        v = values.get(c.base)
        if c.mode == "analytic" and engine != "analytic":
            v = None
        if isinstance(v, tuple):
            out += [fmt(v[0]), fmt(v[1])]
            continue
        out.append(fmt(v))
        if c.mode == "est":
            out.append("")
    return out


def evaluate(spec: ExperimentSpec) -> dict:
    """``{(engine, point index): values}`` for the whole sweep."""
    kind = KINDS[spec.kind]
    contexts = {e: kind.prepare(spec, e) for e in spec.engines}
    tasks = [(e, i) for e in spec.engines for i in range(len(spec.sweep.values))]

    def work(task):
        e, i = task
        x = spec.sweep.values[i]
        try:
            return kind.point(contexts[e], x)
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            raise PointError(spec.name, e, i, spec.sweep.display[i], exc) from exc

    workers = spec.mc.worker_count
    if workers == 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, tasks))
    return dict(zip(tasks, results))


def max_zscore(spec: ExperimentSpec, columns, results) -> float:
    if set(spec.engines) != {"analytic", "montecarlo"}:
        return math.nan
    worst = 0.0
    for i in range(len(spec.sweep.values)):
        a = results[("analytic", i)]
        m = results[("montecarlo", i)]
        for c in columns:
            if c.mode != "est" or not isinstance(m.get(c.base), tuple):
                continue
            ref = a.get(c.base)
            mean, se = m[c.base]
            if ref is None or not (math.isfinite(ref) and math.isfinite(mean)):
                continue
            # Zero sample variance (every draw identical) carries no error scale.
            if se > 0:
                worst = max(worst, abs(mean - ref) / se)
    return worst


def render_csv(spec: ExperimentSpec, columns, results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(spec, columns))
    for e in spec.engines:
        for i, shown in enumerate(spec.sweep.display):
            row = [spec.name, e, str(spec.seed), spec.content_hash, fmt(shown)]
            w.writerow(row + _cells(columns, results[(e, i)], e))
    return buf.getvalue()


def render_plot(spec: ExperimentSpec, columns, csv_name: str) -> str:
    """Gnuplot script drawing analytic curves as lines and MC estimates with error bars."""
    kind = KINDS[spec.kind]
    head = header(spec, columns)
    pos = {name: k + 1 for k, name in enumerate(head)}
    x_base = kind.plot_x(spec)
    if x_base is None:
        x_label = head[len(PROVENANCE)]
    else:
        x_label = next(c.label for c in columns if c.base == x_base)
    x_col = pos[x_label]
    ys = [c for c in columns if c.base in set(kind.plot_y(spec, columns))]
    units = sorted({c.unit for c in ys})
    stem = Path(csv_name).stem
    lines = [f"# Plot for {csv_name} (spec {spec.name}, kind {spec.kind}).",
             f"# Run from the CSV directory: gnuplot {stem}.gp",
             'set datafile separator ","',
             "set terminal pngcairo size 1000,650",
             f'set output "{stem}.png"',
             "set key outside right",
             "set grid",
             f'set xlabel "{x_label}"',
             f'set ylabel "{", ".join(units)}"']
    if x_base is None and spec.sweep.scale == "log":
        lines.append("set logscale x")
    if spec.kind == "outage_vs_p":
        lines.append("set logscale y")
    terms = []
    for c in ys:
        y = pos[c.label]
        if "analytic" in spec.engines or c.mode != "est":
            engine = "analytic" if "analytic" in spec.engines else spec.engines[0]
            terms.append(f'"{csv_name}" skip 1 using {x_col}:(strcol(2) eq "{engine}" ? '
                         f'column({y}) : NaN) with lines title "{c.base}"')
        if "montecarlo" in spec.engines and c.mode == "est":
            se = pos[c.stderr_label]
            terms.append(f'"{csv_name}" skip 1 using {x_col}:(strcol(2) eq "montecarlo" ? '
                         f'column({y}) : NaN):{se} with yerrorbars title "{c.base} (MC)"')
    lines.append("plot \\\n    " + ", \\\n    ".join(terms))
    return "\n".join(lines) + "\n"


def run_experiment(spec: ExperimentSpec, out_dir: str | Path) -> Summary:
    """Evaluate ``spec`` and write ``<output>`` plus ``<stem>.gp`` under ``out_dir``."""
    t0 = time.perf_counter()
    columns = KINDS[spec.kind].columns(spec)
    results = evaluate(spec)
    csv_path = Path(out_dir) / spec.output
    plot_path = csv_path.with_suffix(".gp")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.write_text(render_csv(spec, columns, results))
    plot_path.write_text(render_plot(spec, columns, csv_path.name))
    n_rows = len(spec.engines) * len(spec.sweep.values)
    return Summary(spec.name, spec.kind, csv_path, plot_path, n_rows,
                   time.perf_counter() - t0, max_zscore(spec, columns, results))
