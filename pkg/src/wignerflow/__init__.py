"""Wigner phase-space currents: exact star-product algebra and gridded evolution."""

from .divergence import (
    CurrentSymbol,
    Decomposition,
    decompose,
    is_divergence,
    j_lindblad,
    named_generator,
    residual,
)
from .dsl import compile_expr, elaborate, format_expr, format_poly, parse, parse_symbol
from .star import BoppSide, bopp, moyal_bracket, poisson_bracket, sandwich, star_poly
from .symbolic import CRat, DiffOpExpr, OpMonomial, PolySymbol, adjoint, compose, scale_and_add

__version__ = "0.1.0"
