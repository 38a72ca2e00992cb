"""Exact identity suite for photon addition/removal generators.

Each generator is built from star-product primitives; each closed-form right-hand side
is transcribed independently in the expression language.  All comparisons are
exact and run at hbar = 1 except the classical-limit check.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .divergence import (
    CurrentSymbol,
    decompose,
    is_divergence,
    j_lindblad,
    named_generator,
    residual,
)
from .dsl import compile_expr, format_expr, format_poly
from .star import moyal_bracket, oscillator_hamiltonian, poisson_bracket
from .symbolic import CRat, DiffOpExpr, PolySymbol

__all__ = [
    "IdentityCheck",
    "CLOSED_FORM",
    "run_suite",
    "format_current",
    "bath_generator",
    "bath_current_symbol",
    "classical_limit_ratios",
]

# hand-derived closed forms, in DSL syntax
CLOSED_FORM = {
    "photon_add": "1/2 (p^2 + x^2 + 1) W - 1/2 (Dx(x W) + Dp(p W)) + 1/8 Lap(W)",
    "photon_remove": "1/2 (p^2 + x^2 - 1) W + 1/2 (Dx(x W) + Dp(p W)) + 1/8 Lap(W)",
    "number_commutator": "Dx(p W) + Dp(-x W)",
    "number_anticommutator": "(p^2 + x^2 - 1) W - 1/4 Lap(W)",
    "antinumber_anticommutator": "(p^2 + x^2 + 1) W - 1/4 Lap(W)",
    "lindblad_up": "-(Dx(x W) + Dp(p W)) + 1/2 Lap(W)",
    "lindblad_down": "(Dx(x W) + Dp(p W)) + 1/2 Lap(W)",
}

STAR_SPELLING = {
    "photon_add": "a~ * W * a",
    "photon_remove": "a * W * a~",
    "number_commutator": "a~ * a * W - W * a~ * a",
    "number_anticommutator": "a~ * a * W + W * a~ * a",
    "antinumber_anticommutator": "a * a~ * W + W * a * a~",
    "lindblad_up": "2 * a~ * W * a - a * a~ * W - W * a * a~",
    "lindblad_down": "2 * a * W * a~ - a~ * a * W - W * a~ * a",
}


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def format_current(current: CurrentSymbol) -> str:
    return f"({format_expr(current.jx)}, {format_expr(current.jp)})"


def _equal_check(name: str, lhs: DiffOpExpr, rhs: DiffOpExpr, what: str) -> IdentityCheck:
    if lhs == rhs:
        return IdentityCheck(name, True, f"{what} holds exactly")
    return IdentityCheck(name, False, f"{what} fails; difference = {format_expr(lhs - rhs)}")


def bath_current_symbol(gamma, nbar, hbar=1, omega0=1) -> CurrentSymbol:
    """Symbolic bath current ``-(g/2) W (x, p) - (g/2)(hbar/omega0)(nbar + 1/2) grad W``."""
    g = Fraction(gamma) / 2
    diff = g * Fraction(hbar) / Fraction(omega0) * (Fraction(nbar) + Fraction(1, 2))
    jx = DiffOpExpr({(1, 0, 0, 0): -g, (0, 0, 1, 0): -diff})
    jp = DiffOpExpr({(0, 1, 0, 0): -g, (0, 0, 0, 1): -diff})
    return CurrentSymbol(jx, jp)


def bath_generator(gamma, nbar) -> DiffOpExpr:
    """Phase-space image of the damping terms of the thermal master equation."""
    g = Fraction(gamma) / 2
    nbar = Fraction(nbar)
    return named_generator("lindblad_down") * (g * (nbar + 1)) + named_generator(
        "lindblad_up"
    ) * (g * nbar)


def classical_limit_ratios(h: PolySymbol, hbars=(1, Fraction(1, 2), Fraction(1, 10))):
    """Coefficient ratios of (Moyal - Poisson) at each hbar relative to the first."""
    diffs = []
    for hb in hbars:
        hb = Fraction(hb)
        d = moyal_bracket(h, hb) - poisson_bracket(h, hb)
        diffs.append(d)
    base = diffs[0]
    ratios = []
    for d in diffs:
        if set(m for m, _ in d.items()) != set(m for m, _ in base.items()):
            return None
        rs = {d.coeff(*m) / c for m, c in base.items()}
        if len(rs) != 1:
            return None
        ratios.append(rs.pop())
    return ratios


def run_suite() -> list[IdentityCheck]:
    checks: list[IdentityCheck] = []
    gen = {name: named_generator(name) for name in STAR_SPELLING}

    for name in (
        "photon_add",
        "photon_remove",
        "number_anticommutator",
        "antinumber_anticommutator",
        "lindblad_up",
        "lindblad_down",
    ):
        checks.append(
            _equal_check(f"closed form {name}", gen[name], compile_expr(CLOSED_FORM[name]), "closed form")
        )

    for name, text in STAR_SPELLING.items():
        checks.append(
            _equal_check(f"dsl {name}", compile_expr(text), gen[name], f"'{text}' elaboration")
        )

    # The star commutator is i*hbar times the Moyal bracket; the bracket is -div J_1.
    comm = gen["number_commutator"]
    closed9 = compile_expr(CLOSED_FORM["number_commutator"])
    bracket = comm * (CRat(1) / CRat(0, 1))
    checks.append(
        _equal_check("number_commutator bracket", bracket, -closed9, "(1/i hbar)[n, W]_* = -div(pW, -xW)")
    )
    checks.append(
        _equal_check(
            "number_commutator moyal",
            bracket,
            moyal_bracket(oscillator_hamiltonian()),
            "(1/i hbar)[n, W]_* = {{H, W}}",
        )
    )
    unscaled_ok = comm != closed9 and comm == closed9 * CRat(0, -1)
    checks.append(
        IdentityCheck(
            "number_commutator unscaled",
            unscaled_ok,
            "without 1/(i hbar) the commutator differs from div(pW, -xW) by -i: "
            "a*a W - W a*a = -i div(pW, -xW)"
            if unscaled_ok
            else "unexpected relation to the closed form",
        )
    )

    for sign, name in (("minus", "lindblad_up"), ("plus", "lindblad_down")):
        j = j_lindblad(sign)
        checks.append(
            _equal_check(f"J_{sign} pairing", -j.divergence(), gen[name], f"-div J_{sign} = {name}")
        )
        canon = decompose(gen[name]).wigner_current
        ok = canon == j
        checks.append(
            IdentityCheck(
                f"J_{sign} canonical",
                ok,
                "canonical current equals the reference form"
                if ok
                else f"canonical {format_current(canon)} differs from the reference form",
            )
        )

    def obstruction(name: str, expr: DiffOpExpr, expected: PolySymbol | None):
        res = residual(expr)
        ok = not res.is_zero() and (expected is None or res == expected)
        checks.append(
            IdentityCheck(name, ok, f"NOT divergence, residual = {format_poly(res)}")
        )

    half = Fraction(1, 2)
    r2 = PolySymbol({(2, 0): half, (0, 2): half})
    obstruction("photon_add", gen["photon_add"], r2 + half)
    obstruction("photon_remove", gen["photon_remove"], r2 - half)
    obstruction("photon_add + photon_remove", gen["photon_add"] + gen["photon_remove"], None)
    obstruction("photon_add - photon_remove", gen["photon_add"] - gen["photon_remove"], None)

    for name in ("lindblad_up", "lindblad_down"):
        dec = decompose(gen[name])
        ok = dec.residual.is_zero() and dec.reassemble() == gen[name]
        checks.append(
            IdentityCheck(
                name,
                ok,
                f"divergence, J = {format_current(dec.wigner_current)}"
                if ok
                else f"unexpected residual {format_poly(dec.residual)}",
            )
        )

    h = PolySymbol({(4, 0): 1}) + oscillator_hamiltonian()
    checks.append(
        IdentityCheck(
            "moyal divergence",
            is_divergence(moyal_bracket(h)),
            "{{x^4 + (x^2 + p^2)/2, W}} is a total divergence",
        )
    )
    ratios = classical_limit_ratios(h)
    expected = [Fraction(1), Fraction(1, 4), Fraction(1, 100)]
    checks.append(
        IdentityCheck(
            "classical limit",
            ratios == expected,
            f"Moyal - Poisson scales as hbar^2: ratios {[str(r) for r in ratios] if ratios else None}",
        )
    )

    gamma, nbar = Fraction(1, 5), Fraction(1, 2)
    checks.append(
        _equal_check(
            "bath current",
            bath_generator(gamma, nbar),
            -bath_current_symbol(gamma, nbar).divergence(),
            "master-equation damping terms = -div J_env",
        )
    )
    return checks
