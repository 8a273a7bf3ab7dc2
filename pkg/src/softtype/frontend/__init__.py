"""Toy-language frontend: parsing, annotation stripping, and constraint generation."""
from .checker import TypeCheckError, check_program, is_well_typed
from .constraints import DEFAULT_UNIVERSE, ConstraintBundle, generate_constraints
from .rewrite import annotate_source, format_program, strip_source
from .syntax import FUN, PAR, VAR, Program, Slot, gold_annotations, parse_program, strip_annotations

__all__ = [
    "DEFAULT_UNIVERSE",
    "FUN",
    "PAR",
    "VAR",
    "ConstraintBundle",
    "Program",
    "Slot",
    "TypeCheckError",
    "annotate_source",
    "check_program",
    "format_program",
    "generate_constraints",
    "gold_annotations",
    "is_well_typed",
    "parse_program",
    "strip_annotations",
    "strip_source",
]
