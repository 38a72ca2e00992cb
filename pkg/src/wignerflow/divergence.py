"""Divergence-form reduction of phase-space generators.

A generator ``E`` acting on ``W`` is split exactly as

    E = d_x o jx + d_p o jp + residual * id

The residual is the obstruction to writing ``E[W]`` as a total divergence; it is
computed independently as the formal transpose of ``E`` applied to the constant 1,
because ``integral E[W] = integral residual * W`` for every decaying ``W``.

Sign conventions: :class:`Decomposition.current` satisfies ``E = div(current)``.
The Wigner current ``J`` of ``dW/dt = E[W] = -div J`` is its negative, available
as :attr:`Decomposition.wigner_current`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .star import (
    LADDER_A,
    LADDER_A_DAG,
    BoppSide,
    bopp,
    sandwich,
)
from .symbolic import (
    CRat,
    DiffOpExpr,
    OpMonomial,
    PolySymbol,
    adjoint,
    as_rational,
    compose,
)

__all__ = [
    "CurrentSymbol",
    "Decomposition",
    "GeneratorName",
    "LindbladSign",
    "residual",
    "decompose",
    "is_divergence",
    "named_generator",
    "j_lindblad",
    "divergence_of",
]


@dataclass(frozen=True)
class CurrentSymbol:
    jx: DiffOpExpr
    jp: DiffOpExpr

    @property
    def hbar(self) -> Fraction:
        return self.jx.hbar

    def divergence(self) -> DiffOpExpr:
        """``d_x o jx + d_p o jp``."""
        return compose(DiffOpExpr.dx(1, self.jx.hbar), self.jx) + compose(
            DiffOpExpr.dp(1, self.jp.hbar), self.jp
        )

    def __neg__(self) -> "CurrentSymbol":
        return CurrentSymbol(-self.jx, -self.jp)

    def __add__(self, other: "CurrentSymbol") -> "CurrentSymbol":
        return CurrentSymbol(self.jx + other.jx, self.jp + other.jp)

    def __sub__(self, other: "CurrentSymbol") -> "CurrentSymbol":
        return CurrentSymbol(self.jx - other.jx, self.jp - other.jp)


def divergence_of(current: CurrentSymbol) -> DiffOpExpr:
    return current.divergence()


@dataclass(frozen=True)
class Decomposition:
    current: CurrentSymbol
    residual: PolySymbol

    @property
    def wigner_current(self) -> CurrentSymbol:
        """J with ``E[W] = -div J + residual * W``."""
        return -self.current

    def reassemble(self) -> DiffOpExpr:
        hbar = self.current.hbar
        return self.current.divergence() + DiffOpExpr.multiply(self.residual, hbar)


def residual(expr: DiffOpExpr) -> PolySymbol:
    """Obstruction polynomial: transpose of ``expr`` applied to 1."""
    return adjoint(expr).apply_poly(PolySymbol.const(1))


def decompose(expr: DiffOpExpr) -> Decomposition:
    """Peel every monomial through d_x (if it has an x-derivative) or else d_p.

    ``x^a p^b d_x^c d_p^d = d_x o (x^a p^b d_x^(c-1) d_p^d) - a x^(a-1) p^b d_x^(c-1) d_p^d``
    and the remainder is peeled again until no derivative is left.
    """
    jx: dict = {}
    jp: dict = {}
    res: dict = {}

    def add(store, key, c):
        store[key] = store.get(key, CRat(0)) + c

    for mono, coeff in expr.items():
        a, b, c, d = mono
        k = coeff
        while k:
            if c >= 1:
                add(jx, OpMonomial(a, b, c - 1, d), k)
                k = k * (-a)
                a, c = a - 1, c - 1
            elif d >= 1:
                add(jp, OpMonomial(a, b, c, d - 1), k)
                k = k * (-b)
                b, d = b - 1, d - 1
            else:
                add(res, (a, b), k)
                break
    current = CurrentSymbol(
        DiffOpExpr(jx, expr.hbar, expr.root2), DiffOpExpr(jp, expr.hbar, expr.root2)
    )
    return Decomposition(current, PolySymbol(res, expr.root2))


def is_divergence(expr: DiffOpExpr) -> bool:
    return residual(expr).is_zero()


class GeneratorName(str, enum.Enum):
    PHOTON_ADD = "photon_add"
    PHOTON_REMOVE = "photon_remove"
    NUMBER_COMMUTATOR = "number_commutator"
    NUMBER_ANTICOMMUTATOR = "number_anticommutator"
    ANTINUMBER_ANTICOMMUTATOR = "antinumber_anticommutator"
    LINDBLAD_UP = "lindblad_up"
    LINDBLAD_DOWN = "lindblad_down"


def _left(f, hbar):
    return bopp(f, BoppSide.LEFT, hbar)


def _right(f, hbar):
    return bopp(f, BoppSide.RIGHT, hbar)


def named_generator(name, hbar=1) -> DiffOpExpr:
    """Generators built from star primitives:

    photon_add                 a* W a
    photon_remove              a W a*
    number_commutator          a* a W - W a* a
    number_anticommutator      a* a W + W a* a
    antinumber_anticommutator  a a* W + W a a*
    lindblad_up                2 a* W a - (a a* W + W a a*)
    lindblad_down              2 a W a* - (a* a W + W a* a)
    """
    try:
        name = GeneratorName(name)
    except ValueError:
        known = ", ".join(g.value for g in GeneratorName)
        raise ValueError(f"unknown generator {name!r}; expected one of: {known}") from None
    hbar = as_rational(hbar)
    a, ad = LADDER_A, LADDER_A_DAG
    if name is GeneratorName.PHOTON_ADD:
        return sandwich(ad, a, hbar)
    if name is GeneratorName.PHOTON_REMOVE:
        return sandwich(a, ad, hbar)
    # left multiplication composes in order, right multiplication in reverse
    n_left = compose(_left(ad, hbar), _left(a, hbar))  # a* a W
    n_right = compose(_right(a, hbar), _right(ad, hbar))  # W a* a
    nd_left = compose(_left(a, hbar), _left(ad, hbar))  # a a* W
    nd_right = compose(_right(ad, hbar), _right(a, hbar))  # W a a*
    if name is GeneratorName.NUMBER_COMMUTATOR:
        return n_left - n_right
    if name is GeneratorName.NUMBER_ANTICOMMUTATOR:
        return n_left + n_right
    if name is GeneratorName.ANTINUMBER_ANTICOMMUTATOR:
        return nd_left + nd_right
    if name is GeneratorName.LINDBLAD_UP:
        return sandwich(ad, a, hbar) * 2 - (nd_left + nd_right)
    return sandwich(a, ad, hbar) * 2 - (n_left + n_right)


class LindbladSign(str, enum.Enum):
    MINUS = "minus"
    PLUS = "plus"


def j_lindblad(sign, hbar=1) -> CurrentSymbol:
    """``J_-/+ = -(-/+ x + 1/2 d_x, -/+ p + 1/2 d_p) W``.

    ``-div J_minus`` is the lindblad_up generator, ``-div J_plus`` lindblad_down.
    """
    sign = LindbladSign(sign)
    s = 1 if sign is LindbladSign.MINUS else -1
    half = Fraction(1, 2)
    jx = DiffOpExpr({(1, 0, 0, 0): s, (0, 0, 1, 0): -half}, hbar)
    jp = DiffOpExpr({(0, 1, 0, 0): s, (0, 0, 0, 1): -half}, hbar)
    return CurrentSymbol(jx, jp)
