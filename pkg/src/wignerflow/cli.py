"""Command-line entry point: ``wignerflow {verify,decompose,state,evolve}``.

Exit codes: 0 success (or divergence), 2 parse/config error, 3 not a divergence,
4 grid too small, 5 numerical blow-up.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from .divergence import decompose, named_generator
from .dsl import GRAMMAR, DslError, compile_expr, format_expr, format_poly, parse_symbol
from .evolution import EvolutionConfig, NumericalBlowupError, evolve, write_run
from .grid import (
    BathParams,
    GridTooSmallError,
    PhaseSpaceGrid,
    StateSpec,
    apply_expr,
    make_state,
)
from .gridio import write_grid
from .identities import run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_DIVERGENCE = 3
EXIT_GRID = 4
EXIT_NUMERIC = 5

_NUM = {"type": "number"}
RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema", "hamiltonian", "initial", "grid", "t_end"],
    "properties": {
        "schema": {"const": "wigner-run/1"},
        "hamiltonian": {"type": "string"},
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["vacuum", "coherent", "squeezed", "fock", "thermal"]},
                "alpha": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "r": _NUM,
                "phi": _NUM,
                "n": {"type": "integer", "minimum": 0},
                "nbar": {"type": "number", "minimum": 0},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["x_min", "x_max", "p_min", "p_max", "nx", "np"],
            "properties": {
                "x_min": _NUM,
                "x_max": _NUM,
                "p_min": _NUM,
                "p_max": _NUM,
                "nx": {"type": "integer", "minimum": 2},
                "np": {"type": "integer", "minimum": 2},
            },
        },
        "bath": {
            "type": "object",
            "additionalProperties": False,
            "required": ["gamma"],
            "properties": {
                "gamma": {"type": "number", "minimum": 0},
                "nbar": {"type": "number", "minimum": 0},
                "omega0": {"type": "number", "exclusiveMinimum": 0},
                "hbar": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "minimum": 0},
        "frame_stride": {"type": "integer", "minimum": 1},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "format": {"enum": ["f64", "csv"]},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def cmd_verify(args) -> int:
    checks = run_suite()
    for check in checks:
        print(check.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} identities hold as expected")
    return EXIT_OK if failed == 0 else 1


def cmd_decompose(args) -> int:
    try:
        expr = compile_expr(args.expr, args.hbar)
    except DslError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"  {args.expr}", file=sys.stderr)
        if exc.line == 1:
            print("  " + " " * (exc.col - 1) + "^", file=sys.stderr)
        return EXIT_CONFIG
    dec = decompose(expr)
    J = dec.wigner_current
    print(f"generator: {format_expr(expr)}")
    print(f"residual: {format_poly(dec.residual)}")
    print(f"Jx: {format_expr(J.jx)}")
    print(f"Jp: {format_expr(J.jp)}")
    if dec.residual.is_zero():
        print("divergence: yes (dW/dt = -div J)")
        return EXIT_OK
    print("divergence: no (dW/dt = -div J + residual . W)")
    return EXIT_NOT_DIVERGENCE


def _grid_from_args(args) -> PhaseSpaceGrid:
    return PhaseSpaceGrid(args.x_min, args.x_max, args.p_min, args.p_max, args.nx, args.np)


def cmd_state(args) -> int:
    try:
        grid = _grid_from_args(args)
        spec = StateSpec(args.kind, args.alpha, args.r, args.phi, args.n, args.nbar)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        W = make_state(spec, grid)
    except GridTooSmallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRID
    out = Path(args.out)
    written = write_grid(W, out / "W0", args.format)
    add = named_generator("photon_add")
    current = W
    for k in range(1, args.photon_add + 1):
        raw = apply_expr(add, current)
        trace = raw.integral()
        normed = raw.normalized()
        current = normed.with_values(normed.values, f"{W.label} + {k} photon(s)")
        written += write_grid(current, out / f"W0_added{k}", args.format)
        print(f"photon addition {k}: trace before renormalization = {trace:.12g}, "
              f"min W = {current.values.min():.6g}")
    for path in written:
        print(path)
    return EXIT_OK


def load_run_config(path: str | Path, hbar=1):
    """Read and validate a ``wigner-run/1`` file; returns (EvolutionConfig, raw dict)."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        jsonschema.validate(raw, RUN_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {where}: {exc.message}") from exc
    try:
        H = parse_symbol(raw["hamiltonian"], hbar)
        init = dict(raw["initial"])
        if "alpha" in init:
            init["alpha"] = complex(*init["alpha"])
        spec = StateSpec(**init)
        grid = PhaseSpaceGrid(**raw["grid"])
        bath = BathParams(**raw["bath"]) if "bath" in raw else None
        config = EvolutionConfig(
            hamiltonian=H,
            initial=spec,
            grid=grid,
            t_end=raw["t_end"],
            dt=raw.get("dt"),
            frame_stride=raw.get("frame_stride", 1),
            bath=bath,
        )
    except DslError as exc:
        raise ConfigError(f"{path}: hamiltonian: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config, raw


def cmd_evolve(args) -> int:
    try:
        config, raw = load_run_config(args.config, args.hbar)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        frames = evolve(config)
    except GridTooSmallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GRID
    except NumericalBlowupError as exc:
        print(f"error: numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    output = raw.get("output", {})
    out_dir = Path(args.out if args.out is not None else output.get("dir", "run"))
    fmt = args.format or output.get("format", "f64")
    manifest = write_run(frames, out_dir, raw, fmt)
    first, last = frames[0], frames[-1]
    diff = last.field.values - first.field.values
    l2 = math.sqrt(float(config.grid.integrate(np.abs(diff) ** 2)))
    d = last.diag
    print(
        f"final t={last.t:.6g} norm={d.norm:.12g} mean_x={d.mean_x:.6g} mean_p={d.mean_p:.6g} "
        f"var_x={d.var_x:.9g} var_p={d.var_p:.9g} purity={d.purity:.9g} "
        f"min={d.min_value:.6g} l2_vs_initial={l2:.3e}"
    )
    print(manifest)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--hbar", type=_rational, default=Fraction(1),
                        help="rational value substituted for hbar (default 1)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--format", choices=["f64", "csv"], default=None,
                        help="grid export format (default f64)")

    parser = argparse.ArgumentParser(
        prog="wignerflow",
        description="Wigner phase-space currents: exact star-product algebra and grid evolution.",
        epilog="expression grammar:\n" + GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=[common], help="run the exact identity suite")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser(
        "decompose",
        parents=[common],
        help="split a generator into -div J plus a residual",
        epilog="expression grammar:\n" + GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("expr", help="generator, e.g. '2*a*W*a~ - a~*a*W - W*a~*a'")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("state", parents=[common], help="export a state (and photon-added copies)")
    p.add_argument("--kind", default="vacuum",
                   choices=["vacuum", "coherent", "squeezed", "fock", "thermal"])
    p.add_argument("--alpha", type=_complex, default=0j, help="coherent amplitude, e.g. 1.5 or 1+0.5j")
    p.add_argument("--r", type=float, default=0.3, help="squeezing parameter")
    p.add_argument("--phi", type=float, default=0.0, help="squeezing angle")
    p.add_argument("--n", type=int, default=0, help="Fock number")
    p.add_argument("--nbar", type=float, default=0.0, help="thermal occupation")
    p.add_argument("--x-min", type=float, default=-8.0)
    p.add_argument("--x-max", type=float, default=8.0)
    p.add_argument("--p-min", type=float, default=-8.0)
    p.add_argument("--p-max", type=float, default=8.0)
    p.add_argument("--nx", type=int, default=256, help="points along x (endpoint excluded)")
    p.add_argument("--np", type=int, default=256, help="points along p")
    p.add_argument("--photon-add", type=int, default=0, metavar="N", help="also write N successive photon-added copies")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("evolve", parents=[common], help="integrate a wigner-run/1 config")
    p.add_argument("config", help="JSON run file (schema wigner-run/1)")
    p.set_defaults(func=cmd_evolve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if args.command == "state":
        args.out = args.out or "."
        args.format = args.format or "f64"
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
