"""Declarative experiment runner: spec files in, CSV and plot scripts out."""

from .kinds import KINDS, list_kinds
from .runner import PointError, Summary, run_experiment
from .spec import ExperimentSpec, SpecError, load_spec, parse_spec
from .units import UnitError, parse_quantity, unit_convert

__all__ = ["KINDS", "ExperimentSpec", "PointError", "SpecError", "Summary", "UnitError",
           "list_kinds", "load_spec", "parse_quantity", "parse_spec", "run_experiment",
           "unit_convert"]
