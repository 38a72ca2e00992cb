import json
import math
import random
import warnings

import numpy as np
import pytest

from conftest import random_op
from wignerflow.divergence import named_generator, residual
from wignerflow.dsl import compile_expr
from wignerflow.grid import (
    BathParams,
    BoundaryWarning,
    GridTooSmallError,
    PhaseSpaceGrid,
    StateSpec,
    WignerField,
    apply_expr,
    classical_current,
    derivative,
    diagnostics,
    divergence,
    env_current,
    make_state,
)
from wignerflow.gridio import raster_bytes, read_grid, write_grid
from wignerflow.star import moyal_bracket, oscillator_hamiltonian
from wignerflow.symbolic import DiffOpExpr, PolySymbol

x, p = PolySymbol.x(), PolySymbol.p()
SMALL = PhaseSpaceGrid(-7, 7, -7, 7, 96, 96)
WIDE = PhaseSpaceGrid(-8, 8, -8, 8, 128, 128)
BOX8 = PhaseSpaceGrid(-8, 8, -8, 8, 256, 256)


def value_at(field, x0, p0):
    g = field.grid
    ix = int(round((x0 - g.x_min) / g.dx))
    ip = int(round((p0 - g.p_min) / g.dp))
    assert abs(g.xs[ix] - x0) < 1e-12 and abs(g.ps[ip] - p0) < 1e-12
    return field.values[ix, ip]


class TestGrid:
    def test_periodic_points(self):
        g = PhaseSpaceGrid(-1, 1, 0, 4, 4, 8)
        assert np.allclose(g.xs, [-1, -0.5, 0, 0.5])
        assert g.ps[-1] == pytest.approx(3.5)
        assert g.shape == (4, 8)

    def test_invalid(self):
        with pytest.raises(ValueError):
            PhaseSpaceGrid(1, 1, 0, 1, 8, 8)
        with pytest.raises(ValueError):
            PhaseSpaceGrid(0, 1, 0, 1, 1, 8)


class TestStates:
    def test_vacuum_origin(self):
        W = make_state(StateSpec("vacuum"))
        assert value_at(W, 0, 0) == pytest.approx(1 / np.pi, abs=1e-12)

    def test_fock_one_origin(self):
        W = make_state(StateSpec("fock", n=1))
        assert value_at(W, 0, 0) == pytest.approx(-1 / np.pi, abs=1e-12)

    def test_thermal_zero_is_vacuum(self):
        a = make_state(StateSpec("thermal", nbar=0))
        b = make_state(StateSpec("vacuum"))
        assert np.array_equal(a.values, b.values)

    @pytest.mark.parametrize("n, grid", [(0, None), (1, None), (2, None), (3, BOX8), (4, BOX8)])
    def test_fock_normalized(self, n, grid):
        W = make_state(StateSpec("fock", n=n), grid)
        assert W.integral() == pytest.approx(1, abs=1e-12)
        assert diagnostics(W).purity == pytest.approx(1, abs=1e-9)

    def test_coherent_moments(self):
        d = diagnostics(make_state(StateSpec("coherent", alpha=1 + 0.5j), WIDE))
        assert (d.mean_x, d.mean_p) == pytest.approx((math.sqrt(2), 0.5 * math.sqrt(2)), abs=1e-10)
        assert (d.var_x, d.var_p) == pytest.approx((0.5, 0.5), abs=1e-10)

    def test_squeezed_covariance(self):
        r, phi = 0.3, 0.0
        d = diagnostics(make_state(StateSpec("squeezed", r=r, phi=phi), BOX8))
        assert d.var_x == pytest.approx(math.exp(-2 * r) / 2, abs=1e-10)
        assert d.var_p == pytest.approx(math.exp(2 * r) / 2, abs=1e-10)
        assert d.purity == pytest.approx(1, abs=1e-9)

    def test_squeezed_rotation(self):
        W = make_state(StateSpec("squeezed", r=0.3, phi=math.pi / 2), BOX8)
        d = diagnostics(W)
        assert d.var_x == pytest.approx(math.exp(0.6) / 2, abs=1e-10)

    def test_grid_too_small(self):
        with pytest.raises(GridTooSmallError, match="x_max"):
            make_state(StateSpec("coherent", alpha=1), PhaseSpaceGrid())
        with pytest.raises(GridTooSmallError, match="p_"):
            make_state(StateSpec("squeezed", r=0.3), PhaseSpaceGrid())

    def test_values_are_read_only(self):
        W = make_state(StateSpec())
        with pytest.raises(ValueError):
            W.values[0, 0] = 1.0


class TestDiagnostics:
    def test_vacuum(self):
        d = diagnostics(make_state(StateSpec()))
        assert d.norm == pytest.approx(1, abs=1e-9)
        assert (d.var_x, d.var_p) == pytest.approx((0.5, 0.5), abs=1e-9)
        assert d.purity == pytest.approx(1, abs=1e-9)
        assert d.min_value >= 0

    def test_fock_one_negativity(self):
        d = diagnostics(make_state(StateSpec("fock", n=1)))
        assert d.min_value == pytest.approx(-1 / np.pi, abs=1e-6)

    def test_thermal(self):
        d = diagnostics(make_state(StateSpec("thermal", nbar=1), PhaseSpaceGrid(-10, 10, -10, 10, 256, 256)))
        assert (d.var_x, d.var_p) == pytest.approx((1.5, 1.5), abs=1e-6)
        assert d.purity == pytest.approx(1 / 3, abs=1e-6)


class TestApplyExpr:
    def test_identity(self):
        W = make_state(StateSpec("squeezed"), BOX8)
        assert np.array_equal(apply_expr(DiffOpExpr.identity(), W).values, W.values)

    def test_linear(self):
        E = named_generator("photon_add")
        A = make_state(StateSpec("squeezed"), WIDE)
        B = make_state(StateSpec("fock", n=2), WIDE)
        lhs = apply_expr(E, A.with_values(2 * A.values - 3 * B.values)).values
        rhs = 2 * apply_expr(E, A).values - 3 * apply_expr(E, B).values
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_photon_add_vacuum_is_fock_one(self):
        W = apply_expr(named_generator("photon_add"), make_state(StateSpec()))
        assert W.integral() == pytest.approx(1, abs=1e-12)  # trace of a+ |0><0| a
        fock = make_state(StateSpec("fock", n=1))
        assert np.abs(W.normalized().values - fock.values).max() <= 1e-6

    def test_photon_add_thermal_trace(self):
        # trace of a+ rho a is nbar + 1
        W = make_state(StateSpec("thermal", nbar=0.5), PhaseSpaceGrid(-9, 9, -9, 9, 128, 128))
        assert apply_expr(named_generator("photon_add"), W).integral() == pytest.approx(1.5, abs=1e-9)

    def test_moyal_against_finite_differences(self):
        grid = PhaseSpaceGrid(-8, 8, -8, 8, 256, 256)
        W = make_state(StateSpec("coherent", alpha=1), grid)
        got = apply_expr(moyal_bracket(oscillator_hamiltonian()), W).values
        X, P = grid.mesh
        v = np.asarray(W.values)
        fd = -P * derivative(v, grid, 1, 0, "fd", 8) + X * derivative(v, grid, 0, 1, "fd", 8)
        assert np.abs(got - fd).max() <= 1e-8

    def test_number_anticommutator_closed_form(self):
        W = make_state(StateSpec("squeezed", r=0.3, phi=0.7), BOX8)
        got = apply_expr(named_generator("number_anticommutator"), W).values
        X, P = W.grid.mesh
        v = np.asarray(W.values)
        lap = derivative(v, W.grid, 2, 0) + derivative(v, W.grid, 0, 2)
        assert np.abs(got - ((X**2 + P**2 - 1) * v - 0.25 * lap)).max() <= 1e-8

    def test_conjugate_paired_output_is_real(self):
        out = apply_expr(named_generator("photon_remove"), make_state(StateSpec("fock", n=2)))
        assert out.is_real

    def test_complex_generator(self):
        out = apply_expr(named_generator("number_commutator"), make_state(StateSpec("squeezed"), WIDE))
        assert np.iscomplexobj(out.values)
        assert np.abs(out.values.real).max() < 1e-12

    def test_boundary_warning(self):
        W = make_state(StateSpec()).with_values(np.ones((256, 256)))
        with pytest.warns(BoundaryWarning):
            apply_expr(DiffOpExpr.dx(), W)

    def test_no_warning_for_decaying_state(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            apply_expr(DiffOpExpr.dx(), make_state(StateSpec()))


def gaussian_action(expr: DiffOpExpr, q: PolySymbol) -> PolySymbol:
    """R with E(q g) = R g exactly, for g = exp(-x^2 - p^2)."""
    out = PolySymbol()
    for mono, c in expr.items():
        f = q
        for _ in range(mono.c):
            f = f.diff(1, 0) - x * f * 2
        for _ in range(mono.d):
            f = f.diff(0, 1) - p * f * 2
        out = out + PolySymbol.monomial(mono.a, mono.b, c) * f
    return out


@pytest.mark.parametrize(
    "name",
    ["photon_add", "photon_remove", "number_anticommutator", "antinumber_anticommutator",
     "lindblad_up", "lindblad_down", "number_commutator"],
)
def test_symbolic_numeric_consistency(name):
    rng = random.Random(hash(name) % 1000)
    X, P = SMALL.mesh
    g = np.exp(-X**2 - P**2)
    E = named_generator(name)
    for _ in range(5):
        q = PolySymbol({(a, b): rng.randint(-3, 3) for a in range(4) for b in range(4 - a)})
        W = WignerField(SMALL, np.broadcast_to(q.evaluate(X, P) * g, SMALL.shape).astype(complex))
        expected = gaussian_action(E, q).evaluate(X, P) * g
        got = apply_expr(E, W).values
        assert np.abs(got - expected).max() <= 1e-7


def test_divergences_preserve_trace():
    W = make_state(StateSpec("squeezed", r=0.3, phi=0.4), WIDE)
    for name in ("lindblad_up", "lindblad_down"):
        assert abs(apply_expr(named_generator(name), W).integral()) <= 1e-9
    assert abs(apply_expr(moyal_bracket(x**4 + p**3), W).integral()) <= 1e-9


def test_trace_change_is_residual_average():
    rng = random.Random(11)
    W = make_state(StateSpec("squeezed", r=0.3, phi=0.4), WIDE)
    X, P = WIDE.mesh
    for _ in range(10):
        E = random_op(rng, max_exp=3, max_terms=5)
        lhs = apply_expr(E, W).integral()
        rhs = WIDE.integrate(residual(E).evaluate(X, P) * W.values)
        assert abs(lhs - rhs) <= 1e-7


class TestCurrents:
    def test_gamma_zero(self):
        J = env_current(make_state(StateSpec("fock", n=1)), BathParams(gamma=0, nbar=2))
        assert not J.jx.any() and not J.jp.any()

    def test_vacuum_is_zero_temperature_steady_state(self):
        J = env_current(make_state(StateSpec()), BathParams(gamma=1, nbar=0))
        assert np.abs(J.jx).max() < 1e-12 and np.abs(J.jp).max() < 1e-12

    def test_thermal_steady_state(self):
        grid = PhaseSpaceGrid(-10, 10, -10, 10, 256, 256)
        J = env_current(make_state(StateSpec("thermal", nbar=1), grid), BathParams(gamma=1, nbar=1))
        assert np.abs(J.jx).max() < 1e-12 and np.abs(J.jp).max() < 1e-12

    def test_split(self):
        W = make_state(StateSpec("squeezed"), BOX8)
        bath = BathParams(gamma=0.3, nbar=0.7)
        total = env_current(W, bath)
        parts = env_current(W, bath, "damp") + env_current(W, bath, "diff")
        assert np.abs(total.jx - parts.jx).max() < 1e-15
        assert np.abs(total.jp - parts.jp).max() < 1e-15

    def test_diffusion_constant(self):
        assert BathParams(gamma=0.2, nbar=0.5, omega0=2, hbar=1).diffusion == pytest.approx(0.05)

    def test_classical_oscillator(self):
        W = make_state(StateSpec())
        X, P = W.grid.mesh
        J = classical_current(oscillator_hamiltonian(), W)
        assert np.array_equal(J.jx, P * W.values) and np.array_equal(J.jp, -X * W.values)

    def test_classical_constant(self):
        J = classical_current(PolySymbol.const(4), make_state(StateSpec()))
        assert not J.jx.any() and not J.jp.any()

    def test_classical_quartic(self):
        W = make_state(StateSpec("fock", n=1))
        X, _ = W.grid.mesh
        J = classical_current(x**4, W)
        assert not J.jx.any()
        assert np.allclose(J.jp, -4 * X**3 * W.values, rtol=1e-15, atol=0)

    def test_classical_divergence_is_moyal_for_quadratic(self):
        W = make_state(StateSpec("squeezed"), BOX8)
        H = oscillator_hamiltonian()
        assert np.abs(-divergence(classical_current(H, W)) - apply_expr(moyal_bracket(H), W).values).max() < 1e-12


class TestFiles:
    def test_round_trip(self, tmp_path):
        W = make_state(StateSpec("fock", n=2), PhaseSpaceGrid(-7, 7, -6.5, 6.5, 64, 48))
        write_grid(W, tmp_path / "w")
        back = read_grid(tmp_path / "w")
        assert back.grid == W.grid and back.label == W.label
        assert np.array_equal(back.values, W.values)

    def test_layout_x_fastest(self, tmp_path):
        g = PhaseSpaceGrid(0, 3, 0, 2, 3, 2)
        W = WignerField(g, np.arange(6.0).reshape(3, 2), "ramp")  # values[ix, ip]
        write_grid(W, tmp_path / "r")
        raw = (tmp_path / "r.f64").read_bytes()
        assert raw == np.array([0, 2, 4, 1, 3, 5], dtype="<f8").tobytes()
        meta = json.loads((tmp_path / "r.json").read_text())
        assert meta == {"schema": "wigner-grid/1", "x_min": 0, "x_max": 3, "p_min": 0, "p_max": 2,
                        "nx": 3, "np": 2, "label": "ramp", "kind": "real"}

    def test_complex_interleaved(self, tmp_path):
        g = PhaseSpaceGrid(0, 2, 0, 1, 2, 1 + 1)
        W = WignerField(g, np.array([[1 + 2j, 3 + 4j], [5 + 6j, 7 + 8j]]))
        assert raster_bytes(W) == np.array([1, 2, 5, 6, 3, 4, 7, 8], dtype="<f8").tobytes()
        write_grid(W, tmp_path / "c")
        assert np.array_equal(read_grid(tmp_path / "c").values, W.values)

    def test_csv(self, tmp_path):
        g = PhaseSpaceGrid(0, 2, 0, 2, 2, 2)
        W = WignerField(g, np.array([[0.1, 1 / 3], [2.0, -1e-300]]))
        write_grid(W, tmp_path / "s", fmt="csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines[0] == "0,0,0.10000000000000001"
        assert lines[1] == "1,0,2"
        assert [float(v) for v in lines[2].split(",")] == [0, 1, 1 / 3]
        assert float(lines[3].split(",")[2]) == -1e-300

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            write_grid(make_state(StateSpec()), tmp_path / "z", fmt="npy")


def test_derivative_methods_agree():
    W = make_state(StateSpec("squeezed", r=0.3, phi=0.5), BOX8)
    v = np.asarray(W.values)
    for order in [(1, 0), (0, 1), (2, 0), (1, 1)]:
        spec = derivative(v, W.grid, *order)
        fd4 = derivative(v, W.grid, *order, method="fd", accuracy=4)
        fd8 = derivative(v, W.grid, *order, method="fd", accuracy=8)
        assert np.abs(spec - fd8).max() < np.abs(spec - fd4).max() < 1e-3
