import random
from fractions import Fraction

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from wignerflow.symbolic import CRat, DiffOpExpr, OpMonomial, PolySymbol

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

small_rationals = st.builds(
    Fraction, st.integers(-6, 6), st.integers(1, 4)
)
crats = st.builds(CRat, small_rationals, small_rationals)
real_crats = st.builds(CRat, small_rationals)


def polys(max_deg=3, max_terms=4, coeffs=crats):
    """Polynomials of total degree <= max_deg."""
    exps = st.tuples(st.integers(0, max_deg), st.integers(0, max_deg)).filter(
        lambda e: e[0] + e[1] <= max_deg
    )
    return st.dictionaries(exps, coeffs, max_size=max_terms).map(PolySymbol)


def ops(max_exp=3, max_terms=4, coeffs=crats):
    monos = st.builds(OpMonomial, *(st.integers(0, max_exp) for _ in range(4)))
    return st.dictionaries(monos, coeffs, max_size=max_terms).map(DiffOpExpr)


def random_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(-9, 9), rng.randint(1, 5))


def random_op(rng: random.Random, max_exp=4, max_terms=6) -> DiffOpExpr:
    terms = {}
    for _ in range(rng.randint(1, max_terms)):
        mono = OpMonomial(*(rng.randint(0, max_exp) for _ in range(4)))
        terms[mono] = CRat(random_rational(rng), random_rational(rng) if rng.random() < 0.3 else 0)
    return DiffOpExpr(terms)


# --- random DSL text, one W per additive term, ladder symbols paired ---

_POLY_ATOMS = ["x", "p", "x^2", "p^2", "hbar", "i", "1/2", "3", "(x + p)", "(1 - x . p)"]


def _star_factor(rng):
    return rng.choice(["a", "a~", "x", "p"])


def random_term(rng: random.Random, depth: int = 0) -> str:
    left = [_star_factor(rng) for _ in range(rng.randint(0, 2))]
    right = [_star_factor(rng) for _ in range(rng.randint(0, 2))]
    ladders = sum(s in ("a", "a~") for s in left + right)
    if ladders % 2:
        (left if rng.random() < 0.5 else right).append(rng.choice(["a", "a~"]))
    chain = " * ".join(left + ["W"] + right)
    r = rng.random()
    if r < 0.15 and depth < 2:
        chain = f"{rng.choice(['Dx', 'Dp', 'Lap'])}({random_expr(rng, depth + 1, 2)})"
    elif r < 0.25:
        chain = f"({chain})"
    if rng.random() < 0.4:
        coeff = rng.choice(_POLY_ATOMS)
        chain = f"{coeff} . {chain}" if rng.random() < 0.5 else f"{coeff} {chain}"
    if rng.random() < 0.15:
        chain = f"-{chain}" if chain.startswith("(") or " " not in chain else f"-({chain})"
    return chain


def random_expr(rng: random.Random, depth: int = 0, max_terms: int = 4) -> str:
    out = random_term(rng, depth)
    for _ in range(rng.randint(0, max_terms - 1)):
        out += f" {rng.choice('+-')} {random_term(rng, depth)}"
    return out


# --- acceptance report: one line per criterion, shown at the end of the run ---

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
