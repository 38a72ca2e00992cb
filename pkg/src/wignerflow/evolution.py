"""Time integration of dW/dt = -div J by the method of lines and classical RK4."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.fft

from .grid import (
    BathParams,
    Diagnostics,
    PhaseSpaceGrid,
    SampledOperator,
    StateSpec,
    WignerField,
    apply_expr,
    diagnostics,
    divergence,
    env_current,
    make_state,
    sample_operator,
)
from .gridio import write_grid
from .star import moyal_bracket
from .symbolic import PolySymbol

__all__ = [
    "EvolutionConfig",
    "Frame",
    "NumericalBlowupError",
    "GeneratorKernel",
    "rhs",
    "step",
    "evolve",
    "write_run",
    "RK4_STABILITY",
    "edge_taper",
]

# extent of the RK4 stability region along the imaginary axis is 2*sqrt(2);
# along the negative real axis about 2.785.  Take the smaller.
RK4_STABILITY = 2.78


class NumericalBlowupError(ArithmeticError):
    def __init__(self, t: float, detail: str = "non-finite values"):
        super().__init__(f"{detail} at t={t:.6g}")
        self.t = t


@dataclass(frozen=True)
class EvolutionConfig:
    hamiltonian: PolySymbol
    initial: StateSpec
    grid: PhaseSpaceGrid
    t_end: float
    dt: Optional[float] = None
    frame_stride: int = 1
    bath: Optional[BathParams] = None
    # Test switch: drop the diffusion half of the bath current.
    diffusion: bool = True

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.frame_stride < 1:
            raise ValueError("frame_stride must be a positive integer")


@dataclass(frozen=True, eq=False)
class Frame:
    t: float
    field: WignerField
    diag: Diagnostics


def rhs(W: WignerField, H: PolySymbol, bath: BathParams | None = None) -> WignerField:
    """``{{H, W}} - div J_env``: the Moyal flow plus the bath current."""
    out = np.asarray(apply_expr(moyal_bracket(H), W).values)
    if bath is not None and bath.gamma > 0:
        out = out - divergence(env_current(W, bath))
    return W.with_values(out)


def edge_taper(coord: np.ndarray, lo: float, hi: float, flat: float = 0.75) -> np.ndarray:
    """Smooth window: 1 on the central ``flat`` fraction of [lo, hi], falling to 0 with
    all derivatives at the edges."""
    half = 0.5 * (hi - lo)
    xi = np.abs((coord - (lo + half)) / half)
    s = np.clip((xi - flat) / (1.0 - flat), 0.0, 1.0)

    def bump(u):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)

    rise = bump(1.0 - s)
    return rise / (rise + bump(s))


class GeneratorKernel:
    """The same right-hand side as :func:`rhs`, pre-sampled for repeated calls.

    The Moyal part is the sampled generator.  The bath part is evaluated in
    conservative form ``-div J_env`` so the discrete trace is conserved exactly.  The
    damping velocity ``-(gamma/2)(x, p)`` is multiplied by :func:`edge_taper`: on the
    periodic box the untapered velocity jumps at the seam, which then acts as a source
    that amplifies round-off at rate ~gamma.  States are required to vanish at the
    edges, so the taper does not change the dynamics where W is non-negligible.
    """

    def __init__(
        self,
        grid: PhaseSpaceGrid,
        H: PolySymbol,
        bath: BathParams | None = None,
        diffusion: bool = True,
    ):
        self.grid = grid
        self.op: SampledOperator = sample_operator(moyal_bracket(H), grid)
        self.bath = bath if bath is not None and bath.gamma > 0 else None
        if self.bath is not None:
            X, P = grid.mesh
            g = 0.5 * self.bath.gamma
            self._vx = np.broadcast_to(-g * X * edge_taper(X, grid.x_min, grid.x_max), grid.shape)
            self._vp = np.broadcast_to(-g * P * edge_taper(P, grid.p_min, grid.p_max), grid.shape)
            self._diff = self.bath.diffusion if diffusion else 0.0
            self._ikx = 1j * grid.kx
            self._ikp = 1j * grid.kp_half
            if grid.nx % 2 == 0:
                self._ikx = self._ikx.copy()
                self._ikx[grid.nx // 2] = 0
            if grid.np % 2 == 0:
                self._ikp = self._ikp.copy()
                self._ikp[:, -1] = 0

    def _bath_term(self, values: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
        shape = self.grid.shape
        jx = self._vx * values
        jp = self._vp * values
        if self._diff:
            jx = jx - self._diff * scipy.fft.irfft2(spectrum * self._ikx, s=shape)
            jp = jp - self._diff * scipy.fft.irfft2(spectrum * self._ikp, s=shape)
        div = scipy.fft.rfft2(jx) * self._ikx + scipy.fft.rfft2(jp) * self._ikp
        return -scipy.fft.irfft2(div, s=shape)

    def _real(self, values: np.ndarray) -> np.ndarray:
        spectrum = scipy.fft.rfft2(values)
        out = self.op.apply_spectrum(spectrum, values)
        if self.bath is not None:
            out = out + self._bath_term(values, spectrum)
        return out

    def __call__(self, values: np.ndarray) -> np.ndarray:
        if np.iscomplexobj(values):
            return self._real(values.real) + 1j * self._real(values.imag)
        return self._real(values)

    def max_stable_dt(self) -> float:
        radius = self.op.spectral_radius_bound()
        if self.bath is not None:
            kx, kp = np.pi / self.grid.dx, np.pi / self.grid.dp
            radius += np.abs(self._vx).max() * kx + np.abs(self._vp).max() * kp
            radius += self.bath.gamma + self._diff * (kx * kx + kp * kp)
        return math.inf if radius == 0 else RK4_STABILITY / radius

    def default_dt(self) -> float:
        return 0.8 * self.max_stable_dt()


def _rk4(values: np.ndarray, f: Callable, dt: float) -> np.ndarray:
    k1 = f(values)
    k2 = f(values + 0.5 * dt * k1)
    k3 = f(values + 0.5 * dt * k2)
    k4 = f(values + dt * k3)
    return values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _kernel(config: EvolutionConfig) -> GeneratorKernel:
    return GeneratorKernel(config.grid, config.hamiltonian, config.bath, config.diffusion)


def step(
    W: WignerField,
    config: EvolutionConfig,
    dt: float | None = None,
    t: float = 0.0,
    kernel: GeneratorKernel | None = None,
) -> WignerField:
    """Advance ``W`` by one RK4 step of ``dt`` (default ``config.dt``)."""
    kernel = kernel or _kernel(config)
    dt = config.dt if dt is None else dt
    if dt is None:
        dt = kernel.default_dt()
    if dt == 0:
        return W
    values = _rk4(np.asarray(W.values), kernel, dt)
    if not np.all(np.isfinite(values)):
        raise NumericalBlowupError(t + dt)
    return W.with_values(values)


def evolve(config: EvolutionConfig, initial: WignerField | None = None) -> list[Frame]:
    """Integrate to ``t_end``; frames every ``frame_stride`` steps plus the final one.

    ``dt`` is shrunk slightly so that an integer number of steps lands on ``t_end``.
    """
    kernel = _kernel(config)
    limit = kernel.max_stable_dt()
    dt = config.dt if config.dt is not None else kernel.default_dt()
    if dt > limit:
        raise ValueError(
            f"dt={dt:.4g} exceeds the RK4 stability estimate {limit:.4g} for this grid"
        )
    W = initial if initial is not None else make_state(config.initial, config.grid)
    hbar = config.bath.hbar if config.bath else 1.0
    frames = [Frame(0.0, W, diagnostics(W, hbar))]
    if config.t_end == 0:
        return frames
    n_steps = max(1, math.ceil(config.t_end / dt - 1e-9))
    dt = config.t_end / n_steps
    values = np.asarray(W.values)
    for k in range(1, n_steps + 1):
        values = _rk4(values, kernel, dt)
        t = k * dt
        if k % config.frame_stride == 0 or k == n_steps:
            if not np.all(np.isfinite(values)):
                raise NumericalBlowupError(t)
            field_ = W.with_values(values)
            frames.append(Frame(t, field_, diagnostics(field_, hbar)))
    return frames


def write_run(
    frames: list[Frame],
    out_dir: str | Path,
    config_echo: dict,
    fmt: str = "f64",
) -> Path:
    """Write each frame as a grid file pair plus ``manifest.json``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    series: dict = {"t": []}
    for idx, frame in enumerate(frames):
        stem = out_dir / f"frame_{idx:05d}"
        write_grid(frame.field, stem, fmt)
        entries.append({"index": idx, "t": frame.t, "file": stem.name})
        series["t"].append(frame.t)
        for key, value in frame.diag.as_dict().items():
            series.setdefault(key, []).append(value)
    manifest = {
        "schema": "wigner-run/1",
        "config": config_echo,
        "frames": entries,
        "diagnostics": series,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path
