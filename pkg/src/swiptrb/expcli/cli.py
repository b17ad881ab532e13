"""Command line entry point.

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..specfun import DomainError
from . import selftest
from .kinds import KINDS, list_kinds
from .runner import PointError, run_experiment
from .spec import SpecError, load_spec
from .units import UnitError

OUTPUT_DIR_ENV = "SWIPTRB_OUTPUT_DIR"
EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _out_dir(arg) -> Path:
    if arg:
        return Path(arg)
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def _count(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swiptrb", description="Run SWIPT switching experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate a spec file and write CSV plus plot script")
    run.add_argument("spec")
    run.add_argument("--out-dir", help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
    run.add_argument("--seed", type=_seed, help="override the spec seed")
    run.add_argument("--workers", type=_count, help="override the worker count")

    val = sub.add_parser("validate", help="check a spec file without running it")
    val.add_argument("spec")

    sub.add_parser("list-kinds", help="list experiment kinds and their parameters")

    st = sub.add_parser("selftest", help="analytic against Monte Carlo regression grid")
    st.add_argument("--out-dir")
    st.add_argument("--draws", type=_count, default=selftest.DEFAULT_DRAWS)
    st.add_argument("--seed", type=_seed, default=selftest.DEFAULT_SEED)
    st.add_argument("--workers", type=_count, default=1)
    return ap


def _cmd_run(args) -> int:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    if args.workers is not None:
        spec = spec.with_workers(args.workers)
    summary = run_experiment(spec, _out_dir(args.out_dir))
    print("\n".join(summary.lines()))
    return EXIT_OK


def _cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    print(f"{args.spec}: ok ({spec.kind}, {len(spec.sweep.values)} points, "
          f"engines {', '.join(spec.engines)})")
    return EXIT_OK


def _cmd_list_kinds(args) -> int:
    for name in list_kinds():
        kind = KINDS[name]
        print(f"{name}: {kind.description}")
        print(f"    sweep: {', '.join(sorted(kind.sweep_vars))}; engines: {', '.join(kind.engines)}")
        req = [k for k, p in kind.params.items() if p.required]
        opt = [k for k, p in kind.params.items() if not p.required]
        print(f"    required: {', '.join(req) or '-'}; optional: {', '.join(opt)}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    checks = selftest.run_grid(args.draws, args.seed, args.workers)
    out = _out_dir(args.out_dir) / "selftest.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(selftest.render(checks, args.draws, args.seed))
    bad = [c for c in checks if not c.ok]
    worst = max(c.z for c in checks)
    print(f"selftest: {len(checks) - len(bad)}/{len(checks)} checks within "
          f"{selftest.Z_LIMIT:g} standard errors (max z {worst:.3f}); wrote {out}")
    for c in bad:
        print(f"  FAIL {c.case.name} {c.metric}: analytic {c.analytic:.6g}, "
              f"MC {c.mean:.6g} +- {c.stderr:.3g} (z {c.z:.2f})")
    return EXIT_NUMERIC if bad else EXIT_OK


COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "list-kinds": _cmd_list_kinds,
            "selftest": _cmd_selftest}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SpecError, UnitError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PointError, DomainError, ArithmeticError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
