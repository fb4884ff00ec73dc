"""Small parsing shortcuts shared by the test modules."""

from pvsynth import logic as L
from pvsynth import parse_problem

DECLS = "x, y, z, p, q : real; i, j, n : int; f, g : real -> real; a : int -> real;"


def formula(text: str, decls: str = DECLS) -> L.Formula:
    """Parse ``text`` as a closed formula over ``decls``."""
    return parse_problem(f"functions {{ {decls} }}\ninvariant {text};\n").invariant


def c(name: str, sort=L.REAL) -> L.App:
    return L.App(name, (), sort)
