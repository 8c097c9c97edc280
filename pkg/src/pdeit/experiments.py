"""Experiment drivers: data-error and reconstruction-error sweeps.

Each driver sweeps the missing-arc length h, measures relative errors of
partial-boundary quantities against full-boundary references, and appends
the least-squares log-log slope fitted over the smallest half of the
sweep.  Results are plain CSV tables with the resolved configuration
embedded as a '#'-prefixed JSON header line.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .boundary import (
    BoundaryTrace,
    FourierIndexSet,
    fourier_basis,
    norm_l2,
    unit_disk_grid,
)
from .dbar import make_workspace, reconstruct
from .forward import (
    AnalyticLaplaceSolver,
    GammaArc,
    NeumannSolver,
    analytic_nd_laplace,
    build_phantom,
    nd_matrix,
)
from .mesh import DEFAULT_EDGE, unit_disk_mesh
from .partial import apply_partial_map, difference_matrix, partial_nd_matrix
from .scattering import scattering_grid

#: named (R, c) presets for thresholded reconstructions, keyed by phantom,
#: partial-boundary map, and percentage of accessible boundary
SCATTERING_PRESETS = {
    "circle-cutoff-75": {"R": 5.0, "c": 5.0},
    "circle-cutoff-50": {"R": 4.5, "c": 6.0},
    "circle-cutoff-25": {"R": 4.5, "c": 8.0},
    "circle-scaling-75": {"R": 5.0, "c": 4.0},
    "circle-scaling-50": {"R": 5.0, "c": 4.0},
    "circle-scaling-25": {"R": 4.0, "c": 4.0},
    "hnl-cutoff-87.5": {"R": 4.0, "c": 10.0},
    "hnl-cutoff-75": {"R": 4.0, "c": 8.0},
    "hnl-cutoff-50": {"R": 4.0, "c": 8.0},
    "hnl-scaling-87.5": {"R": 4.0, "c": 10.0},
    "hnl-scaling-75": {"R": 4.0, "c": 10.0},
    "hnl-scaling-50": {"R": 5.0, "c": 10.0},
}


def default_h_sweep(n: int = 32, step: float = 2 * np.pi / 64) -> list[float]:
    """Arithmetic sweep h = step, 2*step, ..., n*step (default up to pi)."""
    return [step * j for j in range(1, n + 1)]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a driver needs, JSON-serializable, validated on build."""

    phantom: dict = field(default_factory=lambda: {"kind": "circle"})
    h_values: tuple[float, ...] = tuple(default_h_sweep(8))
    rotation: float = 0.0
    maps: tuple[str, ...] = ("cutoff", "scaling")
    N: int = 8
    grid_M: int = 256
    mesh_edge: float = DEFAULT_EDGE
    mesh_refine: int = 0
    measurement_mode: str = "ideal-full"
    orders: tuple[int, ...] = (1,)
    matrix_mode: bool = False
    scattering: dict = field(
        default_factory=lambda: {"R": 3.0, "c": None, "connective": "or", "m": 33}
    )
    dbar: dict = field(
        default_factory=lambda: {
            "q_factor": 2.3, "m_d": 128, "tolerance": 1e-6, "max_iterations": 300,
        }
    )
    z_grid_n: int = 64
    out_dir: str = "."
    seed: int = 0

    def __post_init__(self):
        hs = tuple(float(h) for h in self.h_values)
        if any(not 0 < h < 2 * np.pi for h in hs):
            raise ValueError("h values must lie in (0, 2*pi)")
        if list(hs) != sorted(hs):
            raise ValueError("h values must be sorted ascending")
        object.__setattr__(self, "h_values", hs)
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "orders", tuple(int(n) for n in self.orders))
        if self.measurement_mode not in ("ideal-full", "extrapolated"):
            raise ValueError(f"unknown measurement mode {self.measurement_mode!r}")
        for key in ("tolerance",):
            if self.dbar.get(key, 1.0) <= 0:
                raise ValueError("dbar tolerance must be positive")
        if self.scattering.get("R", 1.0) <= 0:
            raise ValueError("scattering radius must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        base = ExperimentConfig()
        known = set(base.to_dict())
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged = {**base.to_dict(), **data}
        for key in ("h_values", "maps", "orders"):
            merged[key] = tuple(merged[key])
        return ExperimentConfig(**merged)

    @staticmethod
    def from_json(path: str | Path) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def slope_loglog(h: np.ndarray, err: np.ndarray, smallest_fraction: float = 0.5) -> float:
    """Least-squares slope of log(err) vs log(h) over the smallest h values."""
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    order = np.argsort(h)
    n = max(2, int(np.ceil(len(h) * smallest_fraction)))
    sel = order[:n]
    good = err[sel] > 0
    if np.count_nonzero(good) < 2:
        return float("nan")
    return float(np.polyfit(np.log(h[sel][good]), np.log(err[sel][good]), 1)[0])


def _phantom_solvers(cfg: ExperimentConfig):
    """(solver, reference_solver) pair for the configured phantom.

    A uniform phantom on the disk uses the exact spectral solver for both.
    Otherwise the measurement solver lives on the configured mesh and the
    reference solver on a once-refined mesh (high-accuracy reference).
    """
    kind = cfg.phantom.get("kind", "circle")
    if kind == "uniform":
        solver = AnalyticLaplaceSolver(unit_disk_grid(cfg.grid_M))
        return solver, solver
    mesh = unit_disk_mesh(cfg.grid_M, cfg.mesh_edge)
    for _ in range(cfg.mesh_refine):
        from .mesh import refine

        mesh = refine(mesh)
    fine = unit_disk_mesh(2 * cfg.grid_M, cfg.mesh_edge / 2)
    params = {k: v for k, v in cfg.phantom.items() if k != "kind"}
    field_c = build_phantom(kind, mesh, params=params)
    field_f = build_phantom(kind, fine, params=params)
    return NeumannSolver(field_c), NeumannSolver(field_f)


def run_data_error_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Relative data error of partial against full measurements, per h.

    Single-current rows measure ||(partial - full) phi_n|| / ||full phi_n||
    per basis order; matrix rows measure the relative Frobenius error of
    the difference matrices (ideal and, when configured, extrapolated).
    Returns a list of row dicts; save with write_csv.
    """
    solver, ref_solver = _phantom_solvers(cfg)
    idx = FourierIndexSet(N=cfg.N)
    rows: list[dict] = []
    hs = np.array(cfg.h_values)

    if not cfg.matrix_mode:
        for map_kind in cfg.maps:
            for n in cfg.orders:
                full = ref_solver.solve_trace(fourier_basis(n, ref_solver.grid))
                denom = norm_l2(full)
                errs = []
                for h in hs:
                    gamma = GammaArc(h=float(h), rotation=cfg.rotation)
                    current = apply_partial_map(
                        map_kind, fourier_basis(n, solver.grid), gamma
                    )
                    partial = solver.solve_trace(current)
                    errs.append(_trace_distance(partial, full) / denom)
                slope = slope_loglog(hs, np.array(errs))
                for h, e in zip(hs, errs):
                    rows.append(
                        {
                            "experiment": "data-error", "mode": "single-current",
                            "map": map_kind, "n": n, "h": float(h),
                            "error": float(e), "slope_small_h": slope,
                        }
                    )
        return rows

    # matrix mode: difference-matrix errors, ideal and extrapolated
    full_sigma = nd_matrix(solver, idx)
    full_one = _background_matrix(solver, idx)
    full_diff = difference_matrix(full_sigma, full_one)
    ref_diff = difference_matrix(nd_matrix(ref_solver, idx), _background_matrix(ref_solver, idx))
    denom = ref_diff.frobenius()
    modes = ["ideal-full"]
    if cfg.measurement_mode == "extrapolated":
        modes.append("extrapolated")
    background = _background_solver(solver)
    for map_kind in cfg.maps:
        for mode in modes:
            errs = []
            for h in hs:
                gamma = GammaArc(h=float(h), rotation=cfg.rotation)
                if mode == "ideal-full":
                    part_sigma = partial_nd_matrix(solver, map_kind, gamma, idx)
                    part_one = partial_nd_matrix(background, map_kind, gamma, idx)
                    pdiff = difference_matrix(part_sigma, part_one)
                else:
                    pdiff = partial_nd_matrix(
                        solver, map_kind, gamma, idx,
                        mode="extrapolated", background_solver=background,
                    )
                errs.append(
                    float(np.linalg.norm(pdiff.entries - full_diff.entries)) / denom
                )
            slope = slope_loglog(hs, np.array(errs))
            for h, e in zip(hs, errs):
                rows.append(
                    {
                        "experiment": "data-error", "mode": f"matrix-{mode}",
                        "map": map_kind, "n": None, "h": float(h),
                        "error": float(e), "slope_small_h": slope,
                    }
                )
    return rows


def _background_solver(solver):
    if isinstance(solver, AnalyticLaplaceSolver):
        return solver
    from .forward import ConductivityField

    return NeumannSolver(
        ConductivityField(mesh=solver.mesh, sigma=np.ones(solver.mesh.n_vertices))
    )


def _background_matrix(solver, idx: FourierIndexSet):
    if isinstance(solver, AnalyticLaplaceSolver):
        return analytic_nd_laplace(idx)
    return nd_matrix(_background_solver(solver), idx)


def _trace_distance(a: BoundaryTrace, b: BoundaryTrace) -> float:
    if a.grid.M == b.grid.M:
        return norm_l2(BoundaryTrace(grid=a.grid, values=a.values - b.values))
    # reference on a finer grid: compare on the coarse nodes (every other
    # node of the refined uniform grid)
    step = b.grid.M // a.grid.M
    vals = b.values[::step]
    diff = a.values - vals
    return float(np.sqrt(np.sum(np.abs(diff) ** 2 * a.grid.weights)))


def run_recon_error_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Relative reconstruction error from partial against full data, per h.

    Protocol: fixed truncation radius, no threshold, extrapolated
    difference matrices for the partial data; both reconstructions share
    the spatial grid and solver workspace.
    """
    solver, _ = _phantom_solvers(cfg)
    idx = FourierIndexSet(N=cfg.N)
    background = _background_solver(solver)
    sc = dict(cfg.scattering)
    R, m = float(sc.get("R", 3.0)), int(sc.get("m", 33))
    c = sc.get("c")
    connective = sc.get("connective", "or")
    ws = make_workspace(
        R,
        m_d=int(cfg.dbar.get("m_d", 128)),
        q_factor=float(cfg.dbar.get("q_factor", 2.3)),
        tolerance=float(cfg.dbar.get("tolerance", 1e-6)),
        max_iterations=int(cfg.dbar.get("max_iterations", 300)),
    )

    full_diff = difference_matrix(nd_matrix(solver, idx), _background_matrix(solver, idx))
    t_full = scattering_grid(full_diff, R, c=c, m=m, connective=connective)
    field_full = reconstruct(t_full, cfg.z_grid_n, ws)

    rows: list[dict] = []
    hs = np.array(cfg.h_values)
    for map_kind in cfg.maps:
        errs = []
        for h in hs:
            gamma = GammaArc(h=float(h), rotation=cfg.rotation)
            pdiff = partial_nd_matrix(
                solver, map_kind, gamma, idx,
                mode="extrapolated", background_solver=background,
            )
            t_part = scattering_grid(pdiff, R, c=c, m=m, connective=connective)
            field_part = reconstruct(t_part, cfg.z_grid_n, ws)
            errs.append(field_part.l2_relative_error(field_full))
        slope = slope_loglog(hs, np.array(errs))
        for h, e in zip(hs, errs):
            rows.append(
                {
                    "experiment": "recon-error", "mode": cfg.measurement_mode,
                    "map": map_kind, "n": None, "h": float(h),
                    "error": float(e), "slope_small_h": slope,
                }
            )
    return rows


CSV_COLUMNS = ("experiment", "mode", "map", "n", "h", "error", "slope_small_h")


def write_csv(path: str | Path, rows: list[dict], config: dict | None = None) -> None:
    lines = []
    if config is not None:
        lines.append(
            "# " + json.dumps(config, sort_keys=True, separators=(",", ":")) + "\n"
        )
    lines.append(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        cells = []
        for col in CSV_COLUMNS:
            v = row.get(col)
            if v is None:
                cells.append("")
            elif isinstance(v, float):
                cells.append("%.17g" % v)
            else:
                cells.append(str(v))
        lines.append(",".join(cells) + "\n")
    Path(path).write_text("".join(lines))


def read_csv(path: str | Path) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line.split(",")
                continue
            cells = line.split(",")
            row = {}
            for key, cell in zip(header, cells):
                if cell == "":
                    row[key] = None
                elif key in ("h", "error", "slope_small_h"):
                    row[key] = float(cell)
                elif key == "n":
                    row[key] = int(cell)
                else:
                    row[key] = cell
            rows.append(row)
    return rows
