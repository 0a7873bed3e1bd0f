"""Tiny closed-form expression grammar for boundary data and level sets.

Supported: +, -, *, /, ^ (power), parentheses, numeric constants, and the
variables handed in by the caller (x, y, nu1, nu2). Parsed with sympy so
that level sets can also be differentiated exactly.
"""

from __future__ import annotations

from typing import Callable, Sequence

import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ValidationError

_TRANSFORMS = standard_transformations + (convert_xor,)


def parse(text: str, variables: Sequence[str]) -> sympy.Expr:
    symbols = {name: sympy.Symbol(name) for name in variables}
    try:
        expr = parse_expr(str(text), local_dict=symbols, transformations=_TRANSFORMS)
    except Exception as exc:
        raise ValidationError(f"cannot parse expression {text!r}: {exc}") from exc
    extra = expr.free_symbols - set(symbols.values())
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise ValidationError(f"unknown variables in {text!r}: {names}")
    return expr


def compile_expression(
    text: str, variables: Sequence[str], diff: str | None = None
) -> Callable:
    """Compile an expression string into a vectorized callable.

    With ``diff`` set, the expression is differentiated with respect to that
    variable before compilation.
    """
    expr = parse(text, variables)
    if diff is not None:
        expr = sympy.diff(expr, sympy.Symbol(diff))
    syms = [sympy.Symbol(name) for name in variables]
    return sympy.lambdify(syms, expr, modules="numpy")
