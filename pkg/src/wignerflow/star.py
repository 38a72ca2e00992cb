"""Groenewold star products, Moyal and Poisson brackets for polynomial symbols.

Products are available in two forms.  :func:`star_poly` expands the exponential
bidifferential kernel directly and returns a polynomial.  :func:`bopp` turns a symbol
into the differential operator ``W -> f * W`` (left) or ``W -> W * f`` (right), which is
how generators acting on an abstract Wigner function are built.

The Bopp operator is the Taylor expansion of the symbol in the shifted arguments,

    f * W = sum_{m,n} (d_x^m d_p^n f)(x, p) / (m! n!) (i hbar/2)^m (-i hbar/2)^n d_p^m d_x^n W,

with the coefficient functions of ``f`` *not* differentiated by the shifts.  That is
the unique ordering that reproduces the star product (a naive substitution of
``x + i hbar/2 d_p`` into ``f`` would depend on operator order because the shifted
coordinates do not commute).
"""

from __future__ import annotations

import enum
from fractions import Fraction
from math import comb, factorial

from .symbolic import (
    CRat,
    DiffOpExpr,
    PolySymbol,
    as_rational,
    compose,
)

__all__ = [
    "BoppSide",
    "LADDER_A",
    "LADDER_A_DAG",
    "X",
    "P",
    "bidifferential",
    "star_poly",
    "bopp",
    "sandwich",
    "moyal_bracket",
    "poisson_bracket",
    "oscillator_hamiltonian",
]


class BoppSide(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


X = PolySymbol.x()
P = PolySymbol.p()
# (x + ip)/sqrt(2) and (x - ip)/sqrt(2); the 1/sqrt(2) lives in the root-2 grade.
LADDER_A = PolySymbol({(1, 0): 1, (0, 1): CRat(0, 1)}, root2=1)
LADDER_A_DAG = PolySymbol({(1, 0): 1, (0, 1): CRat(0, -1)}, root2=1)


def oscillator_hamiltonian() -> PolySymbol:
    """(x^2 + p^2)/2."""
    return PolySymbol({(2, 0): Fraction(1, 2), (0, 2): Fraction(1, 2)})


def bidifferential(f: PolySymbol, g: PolySymbol, n: int) -> PolySymbol:
    """``f (d_x<- d_p-> - d_p<- d_x->)^n g``."""
    out = PolySymbol()
    for k in range(n + 1):
        left = f.diff(n - k, k)
        if left.is_zero():
            continue
        right = g.diff(k, n - k)
        if right.is_zero():
            continue
        sign = -1 if k % 2 else 1
        out = out + left * right * (sign * comb(n, k))
    return out


def star_poly(f: PolySymbol, g: PolySymbol, hbar=1) -> PolySymbol:
    """Star product of two polynomial symbols; the series terminates at the smaller
    degree."""
    hbar = as_rational(hbar)
    half = CRat(0, hbar / 2)
    out = f * g
    if hbar == 0:
        return out
    term_coeff = CRat(1)
    for n in range(1, min(f.degree(), g.degree()) + 1):
        term_coeff = term_coeff * half / n
        out = out + bidifferential(f, g, n) * term_coeff
    return out


def _ipow(z: CRat, n: int) -> CRat:
    out = CRat(1)
    for _ in range(n):
        out = out * z
    return out


def bopp(f: PolySymbol, side: BoppSide, hbar=1) -> DiffOpExpr:
    """Differential operator for ``f * (.)`` (LEFT) or ``(.) * f`` (RIGHT)."""
    hbar = as_rational(hbar)
    side = BoppSide(side)
    # LEFT: x -> x + (i hbar/2) d_p, p -> p - (i hbar/2) d_x; RIGHT flips both signs
    s = CRat(0, hbar / 2) if side is BoppSide.LEFT else CRat(0, -hbar / 2)
    deg = max(f.degree(), 0)
    terms: dict = {}
    for m in range(deg + 1):
        for n in range(deg + 1 - m):
            coef_poly = f.diff(m, n)
            if coef_poly.is_zero():
                continue
            scale = _ipow(s, m) * _ipow(-s, n) / (factorial(m) * factorial(n))
            if not scale:
                continue
            for (a, b), c in coef_poly.items():
                key = (a, b, n, m)
                terms[key] = terms.get(key, CRat(0)) + c * scale
    return DiffOpExpr(terms, hbar, f.root2)


def sandwich(f: PolySymbol, g: PolySymbol, hbar=1) -> DiffOpExpr:
    """The generator ``W -> f * W * g``."""
    return compose(bopp(f, BoppSide.LEFT, hbar), bopp(g, BoppSide.RIGHT, hbar))


def moyal_bracket(h: PolySymbol, hbar=1) -> DiffOpExpr:
    """Generator ``W -> (h * W - W * h)/(i hbar)``."""
    hbar = as_rational(hbar)
    if hbar == 0:
        raise ValueError("the Moyal bracket needs hbar != 0; use poisson_bracket")
    diff = bopp(h, BoppSide.LEFT, hbar) - bopp(h, BoppSide.RIGHT, hbar)
    return diff * (CRat(1) / CRat(0, hbar))


def poisson_bracket(h: PolySymbol, hbar=1) -> DiffOpExpr:
    """Generator ``W -> (d_x h)(d_p W) - (d_p h)(d_x W)``.

    ``hbar`` only tags the result so it can be combined with other operators."""
    return DiffOpExpr.multiply(h.diff(1, 0), hbar) @ DiffOpExpr.dp(1, hbar) - (
        DiffOpExpr.multiply(h.diff(0, 1), hbar) @ DiffOpExpr.dx(1, hbar)
    )
