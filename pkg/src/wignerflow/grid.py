"""Wigner functions on a uniform periodic phase-space grid.

Units are dimensionless with hbar = m = omega = 1.  Grid points are
``x_i = x_min + i*dx`` with the right endpoint excluded, and derivatives are
spectral (Fourier) so states must decay to negligible values at the box edges.
Arrays are indexed ``values[ix, ip]``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft
from scipy.special import eval_laguerre

from .symbolic import DiffOpExpr, PolySymbol

__all__ = [
    "PhaseSpaceGrid",
    "WignerField",
    "CurrentField",
    "BathParams",
    "StateKind",
    "StateSpec",
    "Diagnostics",
    "GridTooSmallError",
    "BoundaryWarning",
    "make_state",
    "derivative",
    "SampledOperator",
    "sample_operator",
    "apply_expr",
    "env_current",
    "classical_current",
    "divergence",
    "diagnostics",
    "default_grid",
]

BOUNDARY_STATE_TOL = 1e-12
BOUNDARY_APPLY_TOL = 1e-10


class GridTooSmallError(ValueError):
    pass


class BoundaryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_min: float = -6.0
    x_max: float = 6.0
    p_min: float = -6.0
    p_max: float = 6.0
    nx: int = 256
    np: int = 256

    def __post_init__(self):
        if not self.x_max > self.x_min or not self.p_max > self.p_min:
            raise ValueError("grid bounds must satisfy x_max > x_min and p_max > p_min")
        if self.nx < 2 or self.np < 2:
            raise ValueError("grid needs at least two points per axis")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.np

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.np)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dp

    @cached_property
    def xs(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @cached_property
    def ps(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.np)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable ``(X, P)`` with shapes ``(nx, 1)`` and ``(1, np)``."""
        return self.xs[:, None], self.ps[None, :]

    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * scipy.fft.fftfreq(self.nx, self.dx)[:, None]

    @cached_property
    def kp_half(self) -> np.ndarray:
        return 2 * np.pi * scipy.fft.rfftfreq(self.np, self.dp)[None, :]

    def integrate(self, values: np.ndarray):
        return values.sum() * self.cell_area

    def to_dict(self) -> dict:
        return {
            "x_min": self.x_min,
            "x_max": self.x_max,
            "p_min": self.p_min,
            "p_max": self.p_max,
            "nx": self.nx,
            "np": self.np,
        }


def default_grid() -> PhaseSpaceGrid:
    """256 x 256 over [-6, 6]^2.

    Holds the vacuum and Fock states up to n = 2 under the 1e-12 edge check (n = 2 only
    barely, and not on coarser grids); squeezed states and higher excitations need about
    [-8, 8]^2."""
    return PhaseSpaceGrid()


@dataclass(frozen=True, eq=False)
class WignerField:
    grid: PhaseSpaceGrid
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.grid.shape:
            raise ValueError(f"values have shape {values.shape}, grid expects {self.grid.shape}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def with_values(self, values, label: str | None = None) -> "WignerField":
        return WignerField(self.grid, values, self.label if label is None else label)

    def integral(self):
        return self.grid.integrate(self.values)

    def normalized(self) -> "WignerField":
        return self.with_values(self.values / self.integral().real)

    def real(self, tol: float = 1e-12) -> "WignerField":
        """Drop an imaginary part that is zero within ``tol`` of the peak."""
        if self.is_real:
            return self
        imag = np.abs(self.values.imag).max()
        scale = max(np.abs(self.values).max(), 1.0e-300)
        if imag > tol * scale:
            raise ValueError(f"field is not real: max |Im W| = {imag:.3e}")
        return self.with_values(self.values.real.copy())


@dataclass(frozen=True, eq=False)
class CurrentField:
    grid: PhaseSpaceGrid
    jx: np.ndarray
    jp: np.ndarray

    def __add__(self, other: "CurrentField") -> "CurrentField":
        return CurrentField(self.grid, self.jx + other.jx, self.jp + other.jp)


@dataclass(frozen=True)
class BathParams:
    gamma: float = 0.0
    nbar: float = 0.0
    omega0: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if self.gamma < 0 or self.nbar < 0:
            raise ValueError("gamma and nbar must be non-negative")
        if self.omega0 <= 0 or self.hbar <= 0:
            raise ValueError("omega0 and hbar must be positive")

    @property
    def diffusion(self) -> float:
        """(gamma/2) (hbar/omega0) (nbar + 1/2)."""
        return 0.5 * self.gamma * self.hbar / self.omega0 * (self.nbar + 0.5)


class StateKind(str, enum.Enum):
    VACUUM = "vacuum"
    COHERENT = "coherent"
    SQUEEZED = "squeezed"
    FOCK = "fock"
    THERMAL = "thermal"


@dataclass(frozen=True)
class StateSpec:
    kind: StateKind = StateKind.VACUUM
    alpha: complex = 0j
    r: float = 0.3  # used only by squeezed states
    phi: float = 0.0
    n: int = 0
    nbar: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        if self.n < 0 or self.nbar < 0:
            raise ValueError("n and nbar must be non-negative")

    @property
    def label(self) -> str:
        k = self.kind
        if k is StateKind.COHERENT:
            return f"coherent(alpha={self.alpha})"
        if k is StateKind.SQUEEZED:
            return f"squeezed(r={self.r},phi={self.phi})"
        if k is StateKind.FOCK:
            return f"fock(n={self.n})"
        if k is StateKind.THERMAL:
            return f"thermal(nbar={self.nbar})"
        return "vacuum"


def _gaussian(X, P, x0, p0, var_x, var_p, cov=0.0):
    det = var_x * var_p - cov * cov
    dx, dp = X - x0, P - p0
    quad = (var_p * dx * dx - 2 * cov * dx * dp + var_x * dp * dp) / det
    return np.exp(-0.5 * quad) / (2 * np.pi * math.sqrt(det))


def _check_boundary(values: np.ndarray, tol: float) -> tuple[float, str]:
    peak = np.abs(values).max()
    edges = {
        "x_min": np.abs(values[0, :]).max(),
        "x_max": np.abs(values[-1, :]).max(),
        "p_min": np.abs(values[:, 0]).max(),
        "p_max": np.abs(values[:, -1]).max(),
    }
    name = max(edges, key=edges.get)
    ratio = edges[name] / peak if peak > 0 else 0.0
    return ratio, name


def make_state(spec: StateSpec, grid: PhaseSpaceGrid | None = None) -> WignerField:
    """Closed-form Wigner function, renormalized to unit midpoint integral."""
    grid = grid or default_grid()
    X, P = grid.mesh
    kind = spec.kind
    if kind in (StateKind.VACUUM, StateKind.THERMAL):
        var = (spec.nbar if kind is StateKind.THERMAL else 0.0) + 0.5
        values = _gaussian(X, P, 0.0, 0.0, var, var)
    elif kind is StateKind.COHERENT:
        x0, p0 = math.sqrt(2) * spec.alpha.real, math.sqrt(2) * spec.alpha.imag
        values = _gaussian(X, P, x0, p0, 0.5, 0.5)
    elif kind is StateKind.SQUEEZED:
        vx, vp = 0.5 * math.exp(-2 * spec.r), 0.5 * math.exp(2 * spec.r)
        c, s = math.cos(spec.phi), math.sin(spec.phi)
        # covariance R diag(vx, vp) R^T
        var_x = c * c * vx + s * s * vp
        var_p = s * s * vx + c * c * vp
        cov = c * s * (vx - vp)
        values = _gaussian(X, P, 0.0, 0.0, var_x, var_p, cov)
    elif kind is StateKind.FOCK:
        r2 = X * X + P * P
        values = (-1) ** spec.n / np.pi * np.exp(-r2) * eval_laguerre(spec.n, 2 * r2)
    else:  # pragma: no cover
        raise ValueError(f"unknown state kind {kind}")
    values = np.broadcast_to(values, grid.shape).astype(float)
    ratio, edge = _check_boundary(values, BOUNDARY_STATE_TOL)
    if ratio >= BOUNDARY_STATE_TOL:
        raise GridTooSmallError(
            f"{spec.label}: |W| at the {edge} edge is {ratio:.3e} of the peak "
            f"(must be below {BOUNDARY_STATE_TOL:g}); enlarge the box"
        )
    values = values / grid.integrate(values)
    return WignerField(grid, values, spec.label)


# --- differentiation -------------------------------------------------------

# central-difference stencils for the first derivative, offsets 1..k
_FD_FIRST = {
    4: (2 / 3, -1 / 12),
    8: (4 / 5, -1 / 5, 4 / 105, -1 / 280),
}


def _fd_first(values, h, axis, accuracy):
    weights = _FD_FIRST[accuracy]
    out = np.zeros_like(values)
    for k, w in enumerate(weights, start=1):
        out = out + w * (np.roll(values, -k, axis=axis) - np.roll(values, k, axis=axis))
    return out / h


def derivative(
    values: np.ndarray,
    grid: PhaseSpaceGrid,
    nx: int = 0,
    np_: int = 0,
    method: str = "spectral",
    accuracy: int = 4,
) -> np.ndarray:
    """``d_x**nx d_p**np_`` of gridded data.

    ``method="fd"`` uses periodic central differences of the given accuracy order
    (4 or 8) applied repeatedly; it exists as an independent cross-check of the
    spectral path.
    """
    if method == "fd":
        if accuracy not in _FD_FIRST:
            raise ValueError(f"accuracy must be one of {sorted(_FD_FIRST)}")
        out = values
        for _ in range(nx):
            out = _fd_first(out, grid.dx, 0, accuracy)
        for _ in range(np_):
            out = _fd_first(out, grid.dp, 1, accuracy)
        return out
    if method != "spectral":
        raise ValueError(f"unknown method {method!r}")
    if np.iscomplexobj(values):
        return derivative(values.real, grid, nx, np_) + 1j * derivative(
            values.imag, grid, nx, np_
        )
    return _Spectral(grid).apply(scipy.fft.rfft2(values), [(nx, np_)])[(nx, np_)]


class _Spectral:
    """Spectral multipliers on the half-complex (rfft2) layout."""

    def __init__(self, grid: PhaseSpaceGrid):
        self.grid = grid
        self._cache: dict = {}

    def multiplier(self, c: int, d: int) -> np.ndarray:
        key = (c, d)
        if key not in self._cache:
            kx = (1j * self.grid.kx) ** c
            kp = (1j * self.grid.kp_half) ** d
            if c % 2 and self.grid.nx % 2 == 0:
                kx = kx.copy()
                kx[self.grid.nx // 2] = 0
            if d % 2 and self.grid.np % 2 == 0:
                kp = kp.copy()
                kp[:, -1] = 0
            self._cache[key] = kx * kp
        return self._cache[key]

    def apply(self, spectrum: np.ndarray, orders) -> dict:
        shape = self.grid.shape
        out = {}
        for c, d in orders:
            if c == d == 0:
                out[(c, d)] = scipy.fft.irfft2(spectrum, s=shape)
            else:
                out[(c, d)] = scipy.fft.irfft2(spectrum * self.multiplier(c, d), s=shape)
        return out


# --- sampled operators -----------------------------------------------------


@dataclass
class SampledOperator:
    """Generator sampled on a grid: ``sum_(c,d) coeff[c,d](x,p) * d_x^c d_p^d W``."""

    grid: PhaseSpaceGrid
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        self._spectral = _Spectral(self.grid)

    @property
    def is_real(self) -> bool:
        return all(not np.iscomplexobj(c) for c in self.coeffs.values())

    def add(self, c: int, d: int, array) -> None:
        array = np.broadcast_to(array, self.grid.shape)
        if (c, d) in self.coeffs:
            self.coeffs[(c, d)] = self.coeffs[(c, d)] + array
        else:
            self.coeffs[(c, d)] = np.array(array)

    def apply_real(self, values: np.ndarray) -> np.ndarray:
        if all(key == (0, 0) for key in self.coeffs):
            return self.apply_spectrum(None, values)
        return self.apply_spectrum(scipy.fft.rfft2(values), values)

    def apply_spectrum(self, spectrum: np.ndarray | None, values: np.ndarray | None = None) -> np.ndarray:
        """Apply to a real field given its ``rfft2`` spectrum.

        When ``values`` is passed the derivative-free term multiplies it directly,
        skipping a transform round trip."""
        orders = [k for k in self.coeffs if k != (0, 0) or values is None]
        derivs = self._spectral.apply(spectrum, orders) if orders else {}
        if values is not None:
            derivs[(0, 0)] = values
        out = None
        for key, coeff in self.coeffs.items():
            term = coeff * derivs[key]
            out = term if out is None else out + term
        if out is None:
            return np.zeros(self.grid.shape)
        return out

    def __call__(self, values: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(values):
            return self.apply_real(values.real) + 1j * self.apply_real(values.imag)
        return self.apply_real(values)

    def spectral_radius_bound(self) -> float:
        """Crude bound on the largest eigenvalue magnitude of the semi-discrete operator."""
        kx = np.pi / self.grid.dx
        kp = np.pi / self.grid.dp
        return float(
            sum(np.abs(coef).max() * kx**c * kp**d for (c, d), coef in self.coeffs.items())
        )


def sample_operator(expr: DiffOpExpr, grid: PhaseSpaceGrid) -> SampledOperator:
    X, P = grid.mesh
    by_order: dict = {}
    for mono, coeff in expr.items():
        by_order.setdefault((mono.c, mono.d), {})[(mono.a, mono.b)] = coeff
    op = SampledOperator(grid)
    scale = 2**-0.5 if expr.root2 else 1.0
    for (c, d), poly_terms in by_order.items():
        values = PolySymbol(poly_terms).evaluate(X, P) * scale
        values = np.broadcast_to(values, grid.shape)
        if np.all(values.imag == 0):
            values = values.real
        op.add(c, d, values)
    return op


def _warn_boundary(field_: WignerField):
    ratio, edge = _check_boundary(field_.values, BOUNDARY_APPLY_TOL)
    if ratio >= BOUNDARY_APPLY_TOL:
        warnings.warn(
            f"{field_.label or 'field'}: |W| at the {edge} edge is {ratio:.2e} of the peak; "
            "periodic spectral derivatives may be inaccurate",
            BoundaryWarning,
            stacklevel=3,
        )


def apply_expr(expr: DiffOpExpr, W: WignerField, label: str | None = None) -> WignerField:
    """Evaluate a generator on gridded data with spectral derivatives."""
    _warn_boundary(W)
    values = sample_operator(expr, W.grid)(np.asarray(W.values))
    return W.with_values(values, label)


def _gradient(values, grid):
    spectrum = scipy.fft.rfft2(values)
    d = _Spectral(grid).apply(spectrum, [(1, 0), (0, 1)])
    return d[(1, 0)], d[(0, 1)]


def env_current(
    W: WignerField, bath: BathParams, part: str = "total"
) -> CurrentField:
    """Bath current ``-(gamma/2) W (x, p) - (gamma/2)(hbar/omega0)(nbar + 1/2) grad W``.

    ``part`` selects ``"damp"``, ``"diff"`` or the ``"total"`` of both.
    """
    if part not in ("total", "damp", "diff"):
        raise ValueError(f"part must be 'total', 'damp' or 'diff', not {part!r}")
    grid = W.grid
    values = np.asarray(W.values).real
    zero = np.zeros(grid.shape)
    if bath.gamma == 0:
        return CurrentField(grid, zero, zero.copy())
    jx, jp = zero, zero.copy()
    if part in ("total", "damp"):
        X, P = grid.mesh
        jx = jx - 0.5 * bath.gamma * X * values
        jp = jp - 0.5 * bath.gamma * P * values
    if part in ("total", "diff"):
        gx, gp = _gradient(values, grid)
        jx = jx - bath.diffusion * gx
        jp = jp - bath.diffusion * gp
    return CurrentField(grid, jx, jp)


def classical_current(H: PolySymbol, W: WignerField) -> CurrentField:
    """``(W d_p H, -W d_x H)``."""
    grid = W.grid
    X, P = grid.mesh
    values = np.asarray(W.values).real
    dpH = np.broadcast_to(np.real(H.diff(0, 1).evaluate(X, P)), grid.shape)
    dxH = np.broadcast_to(np.real(H.diff(1, 0).evaluate(X, P)), grid.shape)
    return CurrentField(grid, values * dpH, -values * dxH)


def divergence(J: CurrentField) -> np.ndarray:
    """Spectral ``d_x jx + d_p jp``."""
    return derivative(J.jx, J.grid, 1, 0) + derivative(J.jp, J.grid, 0, 1)


@dataclass(frozen=True)
class Diagnostics:
    norm: float
    mean_x: float
    mean_p: float
    var_x: float
    var_p: float
    purity: float
    min_value: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def diagnostics(W: WignerField, hbar: float = 1.0) -> Diagnostics:
    """Midpoint-rule moments; purity is ``2 pi hbar * integral W^2``."""
    grid = W.grid
    values = np.asarray(W.values).real
    X, P = grid.mesh
    norm = grid.integrate(values)
    mean_x = grid.integrate(X * values) / norm
    mean_p = grid.integrate(P * values) / norm
    var_x = grid.integrate((X - mean_x) ** 2 * values) / norm
    var_p = grid.integrate((P - mean_p) ** 2 * values) / norm
    purity = 2 * np.pi * hbar * grid.integrate(values * values)
    return Diagnostics(
        float(norm),
        float(mean_x),
        float(mean_p),
        float(var_x),
        float(var_p),
        float(purity),
        float(values.min()),
    )
