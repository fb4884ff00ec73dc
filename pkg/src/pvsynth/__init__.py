"""Verification and parameter synthesis for parametric transition systems
and hybrid automata by hierarchical reasoning in local theory extensions."""

from .engine import Options
from .specfile import Problem, ProblemError, load_problem, parse_problem, pretty_print
from .sysver import bmc, check_invariant, synthesize_constraint

__all__ = [
    "Options",
    "Problem",
    "ProblemError",
    "bmc",
    "check_invariant",
    "load_problem",
    "parse_problem",
    "pretty_print",
    "synthesize_constraint",
]
__version__ = "0.1.0"
