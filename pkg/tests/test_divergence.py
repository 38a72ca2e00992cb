import random
from fractions import Fraction

import pytest
from hypothesis import given

from conftest import crats, ops, random_op
from wignerflow.divergence import (
    CurrentSymbol,
    GeneratorName,
    decompose,
    is_divergence,
    j_lindblad,
    named_generator,
    residual,
)
from wignerflow.star import LADDER_A, LADDER_A_DAG, moyal_bracket, oscillator_hamiltonian, sandwich
from wignerflow.symbolic import CRat, DiffOpExpr, PolySymbol, compose

x, p = PolySymbol.x(), PolySymbol.p()
half = Fraction(1, 2)
n_symbol = oscillator_hamiltonian()


def test_residual_of_photon_add():
    assert residual(sandwich(LADDER_A_DAG, LADDER_A)) == n_symbol + half


def test_residual_of_moyal_is_zero():
    assert residual(moyal_bracket(x**4 + n_symbol)).is_zero()


def test_residual_of_constant():
    c = CRat(Fraction(-3, 4), 2)
    assert residual(DiffOpExpr.identity() * c) == PolySymbol.const(c)


@given(ops(), ops(), crats, crats)
def test_residual_linear(e1, e2, a, b):
    assert residual(e1 * a + e2 * b) == residual(e1) * a + residual(e2) * b


@given(ops())
def test_residual_kills_left_derivatives(e):
    assert residual(compose(DiffOpExpr.dx(), e)).is_zero()
    assert residual(compose(DiffOpExpr.dp(), e)).is_zero()


@given(ops(max_exp=4, max_terms=6))
def test_decompose_matches_oracle(e):
    dec = decompose(e)
    assert dec.residual == residual(e)
    assert dec.reassemble() == e
    assert is_divergence(e) == dec.residual.is_zero()


def test_decompose_many_random():
    rng = random.Random(7)
    for _ in range(100):
        e = random_op(rng)
        dec = decompose(e)
        assert dec.residual == residual(e)
        assert dec.reassemble() == e


def test_decompose_zero():
    dec = decompose(DiffOpExpr.zero())
    assert dec.residual.is_zero()
    assert dec.current.jx.is_zero() and dec.current.jp.is_zero()


def test_decompose_polynomial_only():
    dec = decompose(DiffOpExpr.multiply(p**2))
    assert dec.residual == p**2
    assert dec.current.jx.is_zero() and dec.current.jp.is_zero()


def test_canonical_tie_break():
    # d_x d_p goes through d_x; pure d_p through d_p
    dec = decompose(DiffOpExpr({(0, 1, 1, 1): 1, (0, 0, 0, 2): 1}))
    assert dec.current.jx == DiffOpExpr({(0, 1, 0, 1): 1})
    assert dec.current.jp == DiffOpExpr({(0, 0, 0, 1): 1})


class TestMembership:
    def test_moyal(self):
        for h in (x, p**3, x**4 + n_symbol, x**2 * p**3 - x):
            assert is_divergence(moyal_bracket(h))

    def test_add_plus_remove(self):
        assert not is_divergence(named_generator("photon_add") + named_generator("photon_remove"))

    def test_identity(self):
        assert not is_divergence(DiffOpExpr.identity())


class TestNamedGenerators:
    @pytest.mark.parametrize("name", list(GeneratorName))
    def test_real(self, name):
        assert named_generator(name).is_real() or name == GeneratorName.NUMBER_COMMUTATOR

    def test_unknown(self):
        with pytest.raises(ValueError):
            named_generator("photon_teleport")

    def test_photon_add_residual(self):
        assert residual(named_generator("photon_add")) == n_symbol + half

    def test_photon_remove_residual(self):
        assert residual(named_generator("photon_remove")) == n_symbol - half

    def test_number_anticommutator(self):
        expected = DiffOpExpr.multiply(x**2 + p**2 - 1) - DiffOpExpr.laplacian() * Fraction(1, 4)
        assert named_generator("number_anticommutator") == expected

    def test_antinumber_anticommutator(self):
        expected = DiffOpExpr.multiply(x**2 + p**2 + 1) - DiffOpExpr.laplacian() * Fraction(1, 4)
        assert named_generator("antinumber_anticommutator") == expected

    def test_number_commutator_is_i_hbar_times_moyal(self):
        assert named_generator("number_commutator") == moyal_bracket(n_symbol) * CRat(0, 1)

    @pytest.mark.parametrize("name", ["lindblad_up", "lindblad_down"])
    def test_lindblad_is_divergence(self, name):
        dec = decompose(named_generator(name))
        assert dec.residual.is_zero()
        assert dec.reassemble() == named_generator(name)

    def test_lindblad_down_current(self):
        j = decompose(named_generator("lindblad_down")).wigner_current
        assert j.jx == DiffOpExpr({(1, 0, 0, 0): -1, (0, 0, 1, 0): -half})
        assert j.jp == DiffOpExpr({(0, 1, 0, 0): -1, (0, 0, 0, 1): -half})

    @pytest.mark.parametrize("hbar", [Fraction(1, 2), Fraction(1, 10)])
    def test_hbar_scaling(self, hbar):
        # the Lindblad combinations stay divergences at every hbar
        for name in ("lindblad_up", "lindblad_down"):
            assert is_divergence(named_generator(name, hbar))
        assert not is_divergence(named_generator("photon_add", hbar))


class TestJLindblad:
    def test_pairing(self):
        assert -j_lindblad("minus").divergence() == named_generator("lindblad_up")
        assert -j_lindblad("plus").divergence() == named_generator("lindblad_down")

    def test_plus_components(self):
        j = j_lindblad("plus")
        assert j.jx == DiffOpExpr({(1, 0, 0, 0): -1, (0, 0, 1, 0): -half})

    def test_damping_cancels(self):
        total = j_lindblad("minus").divergence() + j_lindblad("plus").divergence()
        assert total == -DiffOpExpr.laplacian()

    @pytest.mark.parametrize("sign", ["minus", "plus"])
    def test_residual_zero(self, sign):
        assert residual(j_lindblad(sign).divergence()).is_zero()

    def test_gauge_freedom(self):
        # adding a divergence-free field (d_p psi, -d_x psi) leaves the divergence alone
        psi = DiffOpExpr.multiply(x * p**2)
        gauge = CurrentSymbol(DiffOpExpr.dp() @ psi, -(DiffOpExpr.dx() @ psi))
        j = j_lindblad("minus")
        assert (j + gauge).divergence() == j.divergence()
        assert (j + gauge) != j
