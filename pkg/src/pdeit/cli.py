"""Command-line entry point.

Subcommands cover the full pipeline: simulate measurement matrices, apply
partial-boundary maps, extrapolate traces, evaluate the scattering
transform and sinograms, run the reconstruction, and drive the error
experiments.  Every command accepts --config (JSON) plus flag overrides
and is deterministic given the config and seed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .boundary import FourierIndexSet, unit_disk_grid
from .dbar import make_workspace, reconstruct
from .experiments import (
    SCATTERING_PRESETS,
    ExperimentConfig,
    run_data_error_experiment,
    run_recon_error_experiment,
    write_csv,
)
from .forward import (
    AnalyticLaplaceSolver,
    GammaArc,
    NeumannSolver,
    analytic_nd_laplace,
    build_phantom,
    nd_matrix,
)
from .io import (
    load_nd_matrix,
    load_scattering_grid,
    load_trace,
    save_nd_matrix,
    save_reconstruction,
    save_scattering_grid,
    save_trace,
)
from .mesh import unit_disk_mesh
from .partial import (
    add_noise,
    combine_matrices,
    difference_matrix,
    extrapolate_difference,
    partial_nd_matrix,
)
from .scattering import cgo_sinogram, scattering_grid


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _load_config(args) -> dict:
    if getattr(args, "config", None):
        return json.loads(Path(args.config).read_text())
    return {}


def _resolved(args, **extra) -> dict:
    """Config actually used, for provenance headers."""
    cfg = _load_config(args)
    cfg.update({k: v for k, v in extra.items() if v is not None})
    return cfg


def _phantom_field(kind: str, params: dict, M: int, edge: float):
    mesh = unit_disk_mesh(M, edge)
    return build_phantom(kind, mesh, params=params)


def _cmd_simulate_nd(args) -> int:
    idx = FourierIndexSet(N=args.N)
    cfg = _resolved(
        args, phantom=args.phantom, N=args.N, analytic=args.analytic,
        difference=args.difference, grid_M=args.M, mesh_edge=args.edge,
    )
    if args.analytic:
        if args.phantom != "uniform":
            return _fail("--analytic only matches the uniform phantom")
        matrix = analytic_nd_laplace(idx)
    else:
        params = json.loads(args.params) if args.params else {}
        field = _phantom_field(args.phantom, params, args.M, args.edge)
        solver = NeumannSolver(field)
        matrix = nd_matrix(solver, idx)
        if args.difference:
            from .forward import ConductivityField

            one = NeumannSolver(
                ConductivityField(mesh=field.mesh, sigma=np.ones(field.mesh.n_vertices))
            )
            matrix = difference_matrix(matrix, nd_matrix(one, idx))
    save_nd_matrix(args.out, matrix, config=cfg)
    return 0


def _cmd_partial_nd(args) -> int:
    idx = FourierIndexSet(N=args.N)
    gamma = GammaArc(h=args.h, rotation=args.rotation)
    cfg = _resolved(
        args, phantom=args.phantom, N=args.N, map=args.map, h=args.h,
        rotation=args.rotation, mode=args.mode, grid_M=args.M, mesh_edge=args.edge,
    )
    if args.phantom == "uniform" and args.analytic:
        solver = AnalyticLaplaceSolver(unit_disk_grid(args.M))
    else:
        params = json.loads(args.params) if args.params else {}
        solver = NeumannSolver(_phantom_field(args.phantom, params, args.M, args.edge))
    matrix = partial_nd_matrix(solver, args.map, gamma, idx, mode=args.mode)
    save_nd_matrix(args.out, matrix, config=cfg)
    return 0


def _cmd_extrapolate(args) -> int:
    trace = load_trace(args.input)
    gamma = GammaArc(h=args.h, rotation=args.rotation)
    filled = extrapolate_difference(trace, gamma)
    save_trace(args.out, filled, config=_resolved(args, h=args.h, rotation=args.rotation))
    return 0


def _cmd_scatter(args) -> int:
    matrix = load_nd_matrix(args.input)
    c = None if args.c is None or args.c <= 0 else args.c
    grid = scattering_grid(matrix, args.R, c=c, m=args.m, connective=args.connective)
    cfg = _resolved(args, R=args.R, c=c, m=args.m, connective=args.connective)
    save_scattering_grid(args.out, grid, config=cfg)
    return 0


def _cmd_sinogram(args) -> int:
    matrix = load_nd_matrix(args.input)
    thetas = np.linspace(0, 2 * np.pi, args.n_theta, endpoint=False)
    phis = np.linspace(0, 2 * np.pi, args.n_phi, endpoint=False)
    S = cgo_sinogram(matrix, args.r, thetas, phis)
    cfg = _resolved(args, r=args.r, n_theta=args.n_theta, n_phi=args.n_phi)
    lines = ["# " + json.dumps(cfg, sort_keys=True, separators=(",", ":")) + "\n",
             "theta,phi,re,im\n"]
    for i, th in enumerate(thetas):
        for j, ph in enumerate(phis):
            lines.append(
                "%.15g,%.15g,%.17g,%.17g\n" % (th, ph, S[i, j].real, S[i, j].imag)
            )
    Path(args.out).write_text("".join(lines))
    return 0


def _cmd_reconstruct(args) -> int:
    t = load_scattering_grid(args.input)
    ws = make_workspace(
        t.R, m_d=args.m_d, q_factor=args.q_factor,
        tolerance=args.tolerance, max_iterations=args.max_iterations,
    )
    field = reconstruct(t, args.z_n, ws)
    cfg = _resolved(
        args, z_n=args.z_n, m_d=args.m_d, q_factor=args.q_factor,
        tolerance=args.tolerance,
        scattering={"R": t.R, "c": t.c},
    )
    save_reconstruction(args.out, field, config=cfg)
    return 0


def _cmd_combine(args) -> int:
    a = load_nd_matrix(args.inputs[0])
    b = load_nd_matrix(args.inputs[1])
    save_nd_matrix(args.out, combine_matrices(a, b), config=_resolved(args))
    return 0


def _cmd_noise(args) -> int:
    a = load_nd_matrix(args.input)
    save_nd_matrix(
        args.out, add_noise(a, args.level, args.seed),
        config=_resolved(args, level=args.level, seed=args.seed),
    )
    return 0


def _cmd_experiment(args) -> int:
    data = _load_config(args)
    if args.preset:
        if args.preset not in SCATTERING_PRESETS:
            return _fail(f"unknown preset {args.preset!r}")
        data.setdefault("scattering", {}).update(SCATTERING_PRESETS[args.preset])
    cfg = ExperimentConfig.from_dict(data)
    if args.which == "data-error":
        rows = run_data_error_experiment(cfg)
    else:
        rows = run_recon_error_experiment(cfg)
    out = Path(cfg.out_dir) / (args.out or f"{args.which}.csv")
    write_csv(out, rows, config=cfg.to_dict())
    print(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pdeit",
        description="Partial-boundary EIT simulation and reconstruction toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON config file", default=None)
        sp.add_argument("--out", help="output path", required=False)

    sp = sub.add_parser("simulate-nd", help="phantom to measurement matrix (JSON)")
    add_common(sp)
    sp.add_argument("--phantom", default="circle",
                    choices=["uniform", "circle", "heart-and-lungs", "custom"])
    sp.add_argument("--params", default=None, help="JSON phantom parameter overrides")
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--M", type=int, default=256)
    sp.add_argument("--edge", type=float, default=0.02)
    sp.add_argument("--analytic", action="store_true",
                    help="exact unit-disk matrix (uniform phantom only)")
    sp.add_argument("--difference", action="store_true",
                    help="subtract the unit-background matrix")
    sp.set_defaults(func=_cmd_simulate_nd)

    sp = sub.add_parser("partial-nd", help="partial-boundary measurement matrix")
    add_common(sp)
    sp.add_argument("--phantom", default="circle",
                    choices=["uniform", "circle", "heart-and-lungs", "custom"])
    sp.add_argument("--params", default=None)
    sp.add_argument("--N", type=int, default=8)
    sp.add_argument("--M", type=int, default=256)
    sp.add_argument("--edge", type=float, default=0.02)
    sp.add_argument("--map", default="cutoff", choices=["cutoff", "scaling"])
    sp.add_argument("--h", type=float, required=True, help="missing-arc length (radians)")
    sp.add_argument("--rotation", type=float, default=0.0)
    sp.add_argument("--mode", default="ideal-full", choices=["ideal-full", "extrapolated"])
    sp.add_argument("--analytic", action="store_true")
    sp.set_defaults(func=_cmd_partial_nd)

    sp = sub.add_parser("extrapolate", help="fill the gap of a restricted trace CSV")
    add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--rotation", type=float, default=0.0)
    sp.set_defaults(func=_cmd_extrapolate)

    sp = sub.add_parser("scatter", help="matrix JSON to scattering grid JSON")
    add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--R", type=float, required=True)
    sp.add_argument("--c", type=float, default=None, help="threshold; omit to disable")
    sp.add_argument("--m", type=int, default=33)
    sp.add_argument("--connective", default="or", choices=["or", "and"])
    sp.set_defaults(func=_cmd_scatter)

    sp = sub.add_parser("sinogram", help="CGO sinogram CSV at fixed |k| = r")
    add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--n-theta", type=int, default=64)
    sp.add_argument("--n-phi", type=int, default=64)
    sp.set_defaults(func=_cmd_sinogram)

    sp = sub.add_parser("reconstruct", help="scattering grid JSON to sigma CSV")
    add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--z-n", type=int, default=64)
    sp.add_argument("--m-d", type=int, default=128)
    sp.add_argument("--q-factor", type=float, default=2.3)
    sp.add_argument("--tolerance", type=float, default=1e-6)
    sp.add_argument("--max-iterations", type=int, default=300)
    sp.set_defaults(func=_cmd_reconstruct)

    sp = sub.add_parser("combine", help="average two difference matrices")
    add_common(sp)
    sp.add_argument("inputs", nargs=2)
    sp.set_defaults(func=_cmd_combine)

    sp = sub.add_parser("noise", help="perturb a matrix with Gaussian noise")
    add_common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--level", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=_cmd_noise)

    sp = sub.add_parser("experiment", help="run a convergence experiment")
    add_common(sp)
    sp.add_argument("which", choices=["data-error", "recon-error"])
    sp.add_argument("--preset", default=None,
                    help=f"named scattering preset: {', '.join(sorted(SCATTERING_PRESETS))}")
    sp.set_defaults(func=_cmd_experiment)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    for name in ("out",):
        if getattr(args, name, None) is None and args.command not in ("experiment",):
            return _fail("--out is required")
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
