"""Exact arithmetic for phase-space polynomials and normal-ordered differential operators.

Everything here is exact: coefficients are Gaussian rationals (:class:`CRat`) built on
:class:`fractions.Fraction`.  Ladder symbols ``a = (x + ip)/sqrt(2)`` carry an
irrational prefactor; instead of an extension field each polynomial and operator
keeps a *root-2 grade* ``g`` in ``{0, 1}`` meaning the stored terms are multiplied by
``2**(-g/2)``.  Products add grades and fold every pair of ``1/sqrt(2)`` into a
rational ``1/2``, so even combinations such as ``a* W a`` stay rational.

An operator monomial ``(a, b, c, d)`` acts on a function ``W`` as
``x**a p**b d_x**c d_p**d W``: derivatives first, multiplication second.
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from numbers import Rational as _RationalABC
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

__all__ = [
    "Rational",
    "CRat",
    "PolySymbol",
    "OpMonomial",
    "DiffOpExpr",
    "IrrationalFactorError",
    "UnitConventionError",
    "compose",
    "adjoint",
    "scale_and_add",
    "as_rational",
]

Rational = Fraction


class IrrationalFactorError(ValueError):
    """Raised when quantities with an odd number of ``1/sqrt(2)`` factors must be
    added to rational ones (a lone ``a`` or ``a~`` that was never paired)."""


class UnitConventionError(ValueError):
    """Raised when operators built with different values of hbar are combined."""


def as_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, _RationalABC)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


class CRat:
    """Exact complex rational ``re + i*im``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", as_rational(re))
        object.__setattr__(self, "im", as_rational(im))

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "CRat":
        # trusted constructor for values that are already Fractions
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("CRat is immutable")

    @classmethod
    def coerce(cls, value) -> "CRat":
        if isinstance(value, CRat):
            return value
        if isinstance(value, complex):
            raise TypeError("floating point complex numbers are not exact; use CRat")
        return cls(value, 0)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, CRat):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"CRat({self.re}, {self.im})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            return f"{self.im}i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{abs(self.im)}i)"

    def __add__(self, other):
        other = _maybe_crat(other)
        if other is None:
            return NotImplemented
        return CRat._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = _maybe_crat(other)
        if other is None:
            return NotImplemented
        return CRat._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        other = _maybe_crat(other)
        if other is None:
            return NotImplemented
        return other - self

    def __neg__(self):
        return CRat._raw(-self.re, -self.im)

    def __mul__(self, other):
        other = _maybe_crat(other)
        if other is None:
            return NotImplemented
        if not self.im and not other.im:
            return CRat._raw(self.re * other.re, _FZERO)
        return CRat._raw(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _maybe_crat(other)
        if other is None:
            return NotImplemented
        norm = other.re * other.re + other.im * other.im
        if norm == 0:
            raise ZeroDivisionError("division by zero CRat")
        num = self * other.conjugate()
        return CRat(num.re / norm, num.im / norm)

    def conjugate(self) -> "CRat":
        return CRat(self.re, -self.im)

    def is_real(self) -> bool:
        return self.im == 0

    def __complex__(self):
        return complex(float(self.re), float(self.im))


_FZERO = Fraction(0)


def _maybe_crat(value):
    if isinstance(value, CRat):
        return value
    if isinstance(value, (int, Fraction)):
        return CRat(value)
    return None


ZERO = CRat(0)
ONE = CRat(1)
I = CRat(0, 1)
HALF = Fraction(1, 2)


def _fold_grade(coeffs: Mapping, grade: int) -> tuple[dict, int]:
    """Reduce a grade >= 2 by folding pairs of 1/sqrt(2) into 1/2."""
    if grade < 2:
        return dict(coeffs), grade
    factor = Fraction(1, 2 ** (grade // 2))
    return {k: v * factor for k, v in coeffs.items()}, grade % 2


def _clean(terms: Mapping) -> dict:
    return {k: v for k, v in terms.items() if v}


def _combined_grade(g1: int, empty1: bool, g2: int, empty2: bool) -> int:
    if empty1:
        return g2
    if empty2:
        return g1
    if g1 != g2:
        raise IrrationalFactorError(
            "cannot add terms with and without a 1/sqrt(2) factor; "
            "pair every a with an a~ (or another a) so the prefactor is rational"
        )
    return g1


def _falling(n: int, k: int) -> int:
    """n (n-1) ... (n-k+1); zero when k > n."""
    if k > n:
        return 0
    return factorial(n) // factorial(n - k)


class PolySymbol:
    """Polynomial in ``x`` and ``p`` with exact complex-rational coefficients.

    ``terms`` maps ``(a, b)`` to the coefficient of ``x**a p**b``.  ``root2`` is the
    grade described in the module docstring.
    """

    __slots__ = ("_terms", "root2", "_hash")

    def __init__(self, terms: Mapping | None = None, root2: int = 0):
        raw = {}
        for key, coeff in (terms or {}).items():
            a, b = key
            if a < 0 or b < 0:
                raise ValueError(f"negative exponent in {key}")
            raw[(int(a), int(b))] = CRat.coerce(coeff)
        raw, root2 = _fold_grade(raw, int(root2))
        raw = _clean(raw)
        object.__setattr__(self, "_terms", raw)
        object.__setattr__(self, "root2", root2 if raw else 0)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("PolySymbol is immutable")

    # constructors
    @classmethod
    def const(cls, c) -> "PolySymbol":
        return cls({(0, 0): CRat.coerce(c)})

    @classmethod
    def x(cls) -> "PolySymbol":
        return cls({(1, 0): ONE})

    @classmethod
    def p(cls) -> "PolySymbol":
        return cls({(0, 1): ONE})

    @classmethod
    def monomial(cls, a: int, b: int, coeff=1) -> "PolySymbol":
        return cls({(a, b): CRat.coerce(coeff)})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self) -> Iterator:
        return iter(self._terms.items())

    def coeff(self, a: int, b: int) -> CRat:
        return self._terms.get((a, b), ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        return max((a + b for a, b in self._terms), default=-1)

    def is_real(self) -> bool:
        return all(c.is_real() for c in self._terms.values())

    def __eq__(self, other):
        if isinstance(other, PolySymbol):
            return self.root2 == other.root2 and self._terms == other._terms
        if isinstance(other, (int, Fraction, CRat)):
            return self == PolySymbol.const(other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(
                self, "_hash", hash((self.root2, frozenset(self._terms.items())))
            )
        return self._hash

    def __repr__(self):
        body = " + ".join(f"{c}*x^{a}p^{b}" for (a, b), c in sorted(self._terms.items()))
        scale = "/sqrt2" if self.root2 else ""
        return f"PolySymbol({body or '0'}){scale}"

    def __add__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        grade = _combined_grade(self.root2, self.is_zero(), other.root2, other.is_zero())
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, ZERO) + v
        return PolySymbol(out, grade)

    __radd__ = __add__

    def __neg__(self):
        return PolySymbol({k: -v for k, v in self._terms.items()}, self.root2)

    def __sub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, CRat)):
            c = CRat.coerce(other)
            return PolySymbol({k: v * c for k, v in self._terms.items()}, self.root2)
        other = _as_poly(other)
        if other is None:
            return NotImplemented
        out: dict = {}
        for (a1, b1), c1 in self._terms.items():
            for (a2, b2), c2 in other._terms.items():
                key = (a1 + a2, b1 + b2)
                out[key] = out.get(key, ZERO) + c1 * c2
        return PolySymbol(out, self.root2 + other.root2)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = PolySymbol.const(1)
        for _ in range(n):
            out = out * self
        return out

    def conj(self) -> "PolySymbol":
        return PolySymbol({k: v.conjugate() for k, v in self._terms.items()}, self.root2)

    def diff(self, nx: int = 0, np_: int = 0) -> "PolySymbol":
        """Partial derivative d_x**nx d_p**np_."""
        out = {}
        for (a, b), c in self._terms.items():
            f = _falling(a, nx) * _falling(b, np_)
            if f:
                out[(a - nx, b - np_)] = c * f
        return PolySymbol(out, self.root2)

    def evaluate(self, x, p):
        """Numerical evaluation (numpy broadcasting); the root-2 grade is applied."""
        total = 0
        for (a, b), c in self._terms.items():
            total = total + complex(c) * (x**a) * (p**b)
        if self.root2:
            total = total * 2**-0.5
        return total


def _as_poly(value):
    if isinstance(value, PolySymbol):
        return value
    if isinstance(value, (int, Fraction, CRat)):
        return PolySymbol.const(value)
    return None


class OpMonomial(NamedTuple):
    """``x**a p**b d_x**c d_p**d`` in normal order (derivatives act first)."""

    a: int
    b: int
    c: int
    d: int

    @property
    def order(self) -> int:
        return self.c + self.d


def _monomial_product(m1: OpMonomial, m2: OpMonomial) -> Iterator[tuple[OpMonomial, int]]:
    """Normal form of m1 o m2 via d^c x^a = sum_k C(c,k) a!/(a-k)! x^(a-k) d^(c-k)."""
    for k in range(min(m1.c, m2.a) + 1):
        fx = comb(m1.c, k) * _falling(m2.a, k)
        for l in range(min(m1.d, m2.b) + 1):
            fp = comb(m1.d, l) * _falling(m2.b, l)
            yield OpMonomial(
                m1.a + m2.a - k, m1.b + m2.b - l, m1.c + m2.c - k, m1.d + m2.d - l
            ), fx * fp


class DiffOpExpr:
    """Linear combination of normal-ordered monomial operators acting on W.

    ``hbar`` records the rational value substituted for hbar when the operator was
    built; operators built with different values refuse to combine.
    """

    __slots__ = ("_terms", "hbar", "root2", "_hash")

    def __init__(self, terms: Mapping | None = None, hbar=1, root2: int = 0):
        raw = {}
        for key, coeff in (terms or {}).items():
            mono = OpMonomial(*key)
            if min(mono) < 0:
                raise ValueError(f"negative exponent in {mono}")
            raw[mono] = CRat.coerce(coeff)
        raw, root2 = _fold_grade(raw, int(root2))
        raw = _clean(raw)
        object.__setattr__(self, "_terms", raw)
        object.__setattr__(self, "hbar", as_rational(hbar))
        object.__setattr__(self, "root2", root2 if raw else 0)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("DiffOpExpr is immutable")

    # constructors
    @classmethod
    def zero(cls, hbar=1) -> "DiffOpExpr":
        return cls({}, hbar)

    @classmethod
    def identity(cls, hbar=1) -> "DiffOpExpr":
        return cls({(0, 0, 0, 0): ONE}, hbar)

    @classmethod
    def dx(cls, order: int = 1, hbar=1) -> "DiffOpExpr":
        return cls({(0, 0, order, 0): ONE}, hbar)

    @classmethod
    def dp(cls, order: int = 1, hbar=1) -> "DiffOpExpr":
        return cls({(0, 0, 0, order): ONE}, hbar)

    @classmethod
    def laplacian(cls, hbar=1) -> "DiffOpExpr":
        return cls({(0, 0, 2, 0): ONE, (0, 0, 0, 2): ONE}, hbar)

    @classmethod
    def multiply(cls, poly: PolySymbol, hbar=1) -> "DiffOpExpr":
        """The multiplication operator ``W -> poly * W``."""
        return cls({(a, b, 0, 0): c for (a, b), c in poly.items()}, hbar, poly.root2)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self) -> Iterator:
        return iter(self._terms.items())

    def coeff(self, a: int, b: int, c: int, d: int) -> CRat:
        return self._terms.get(OpMonomial(a, b, c, d), ZERO)

    def is_zero(self) -> bool:
        return not self._terms

    def is_real(self) -> bool:
        return all(c.is_real() for c in self._terms.values())

    def derivative_free_part(self) -> PolySymbol:
        return PolySymbol(
            {(m.a, m.b): c for m, c in self._terms.items() if m.c == m.d == 0}, self.root2
        )

    def __eq__(self, other):
        if not isinstance(other, DiffOpExpr):
            return NotImplemented
        return (
            self.hbar == other.hbar
            and self.root2 == other.root2
            and self._terms == other._terms
        )

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(
                self,
                "_hash",
                hash((self.hbar, self.root2, frozenset(self._terms.items()))),
            )
        return self._hash

    def __repr__(self):
        body = " + ".join(
            f"{c}*x^{m.a}p^{m.b}Dx^{m.c}Dp^{m.d}" for m, c in sorted(self._terms.items())
        )
        scale = "/sqrt2" if self.root2 else ""
        return f"DiffOpExpr({body or '0'}){scale}[hbar={self.hbar}]"

    def _check_hbar(self, other: "DiffOpExpr"):
        if self.hbar != other.hbar:
            raise UnitConventionError(
                f"operators built with hbar={self.hbar} and hbar={other.hbar} cannot be combined"
            )

    def __add__(self, other):
        if not isinstance(other, DiffOpExpr):
            return NotImplemented
        return scale_and_add(ONE, self, ONE, other)

    def __sub__(self, other):
        if not isinstance(other, DiffOpExpr):
            return NotImplemented
        return scale_and_add(ONE, self, -ONE, other)

    def __neg__(self):
        return self * -1

    def __mul__(self, scalar):
        if isinstance(scalar, PolySymbol):
            return DiffOpExpr.multiply(scalar, self.hbar) @ self
        c = _maybe_crat(scalar)
        if c is None:
            return NotImplemented
        return DiffOpExpr({m: v * c for m, v in self._terms.items()}, self.hbar, self.root2)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, DiffOpExpr):
            return NotImplemented
        return compose(self, other)

    def apply_poly(self, f: PolySymbol) -> PolySymbol:
        """Act on a polynomial stand-in for W, exactly."""
        out = PolySymbol()
        for m, c in self._terms.items():
            df = f.diff(m.c, m.d)
            if df.is_zero():
                continue
            out = out + PolySymbol.monomial(m.a, m.b, c) * df
        if self.root2 and not out.is_zero():
            out = out * PolySymbol({(0, 0): ONE}, 1)
        return out


def compose(e1: DiffOpExpr, e2: DiffOpExpr) -> DiffOpExpr:
    """Normal form of ``e1 o e2`` (apply ``e2`` first)."""
    e1._check_hbar(e2)
    out: dict = {}
    for m1, c1 in e1._terms.items():
        for m2, c2 in e2._terms.items():
            c12 = c1 * c2
            for mono, factor in _monomial_product(m1, m2):
                out[mono] = out.get(mono, ZERO) + c12 * factor
    return DiffOpExpr(out, e1.hbar, e1.root2 + e2.root2)


def adjoint(e: DiffOpExpr) -> DiffOpExpr:
    """Formal transpose under the integral over the plane: x and p are symmetric,
    derivatives flip sign and the order of composition reverses.  Coefficients are
    not conjugated, so the map is linear."""
    out = DiffOpExpr.zero(e.hbar)
    for m, c in e._terms.items():
        sign = -1 if m.order % 2 else 1
        deriv = DiffOpExpr({(0, 0, m.c, m.d): c * sign}, e.hbar)
        mult = DiffOpExpr({(m.a, m.b, 0, 0): ONE}, e.hbar)
        out = out + compose(deriv, mult)
    return DiffOpExpr(out.terms, e.hbar, e.root2)


def scale_and_add(c1, e1: DiffOpExpr, c2, e2: DiffOpExpr) -> DiffOpExpr:
    """Exact ``c1*e1 + c2*e2``."""
    e1._check_hbar(e2)
    c1, c2 = CRat.coerce(c1), CRat.coerce(c2)
    out: dict = {}
    if c1:
        if c1 == ONE:
            out.update(e1._terms)
        else:
            for m, v in e1._terms.items():
                out[m] = v * c1
    if c2:
        neg = c2 == -ONE
        for m, v in e2._terms.items():
            if c2 == ONE:
                out[m] = out[m] + v if m in out else v
            elif neg:
                out[m] = out[m] - v if m in out else -v
            else:
                out[m] = out.get(m, ZERO) + v * c2
    grade = _combined_grade(
        e1.root2, not (c1 and e1._terms), e2.root2, not (c2 and e2._terms)
    )
    return DiffOpExpr(out, e1.hbar, grade)


def sum_exprs(exprs: Iterable[DiffOpExpr], hbar=1) -> DiffOpExpr:
    total = DiffOpExpr.zero(hbar)
    for e in exprs:
        total = total + e
    return total
