"""On-disk formats for traces, matrices, scattering grids, and fields.

All CSV outputs may carry a single '#'-prefixed JSON header line with the
resolved run configuration; JSON outputs carry it in a "config" key.
Floats are written in fixed scientific-style formats so identical runs
produce byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .boundary import BoundaryGrid, BoundaryTrace, FourierIndexSet, unit_disk_grid
from .forward import GammaArc, NDMatrix
from .mesh import Mesh
from .dbar import ReconstructionField
from .scattering import KGrid, ScatteringGrid

THETA_FMT = "%.15g"
VALUE_FMT = "%.17g"


def _config_header(config: dict | None) -> str:
    if config is None:
        return ""
    return "# " + json.dumps(config, sort_keys=True, separators=(",", ":")) + "\n"


def read_config_header(path: str | Path) -> dict | None:
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("#"):
        return json.loads(first[1:].strip())
    return None


# ---------------------------------------------------------------------------
# boundary traces: CSV with columns theta,re,im; NaN markers spelled "nan"


def save_trace(path: str | Path, trace: BoundaryTrace, config: dict | None = None) -> None:
    lines = [_config_header(config), "theta,re,im\n"]
    for th, v in zip(trace.grid.theta, trace.values):
        lines.append(
            f"{THETA_FMT % th},{_fmt_or_nan(v.real)},{_fmt_or_nan(v.imag)}\n"
        )
    Path(path).write_text("".join(lines))


def _fmt_or_nan(x: float) -> str:
    return "nan" if np.isnan(x) else VALUE_FMT % x


def load_trace(path: str | Path, grid: BoundaryGrid | None = None) -> BoundaryTrace:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("theta"):
                continue
            th, re, im = line.split(",")
            rows.append((float(th), float(re), float(im)))
    M = len(rows)
    grid = grid if grid is not None else unit_disk_grid(M)
    if grid.M != M:
        raise ValueError(f"trace file has {M} rows, grid expects {grid.M}")
    values = np.array([complex(r, i) for _, r, i in rows])
    return BoundaryTrace(grid=grid, values=values)


# ---------------------------------------------------------------------------
# ND matrices: JSON


def nd_matrix_to_dict(m: NDMatrix, config: dict | None = None) -> dict:
    out = {
        "index_set": list(m.index_set.indices),
        "kind": m.kind,
        "gamma": None if m.gamma is None else {"h": m.gamma.h, "rotation": m.gamma.rotation},
        "entries": [[float(v.real), float(v.imag)] for v in m.entries.ravel()],
    }
    if config is not None:
        out["config"] = config
    return out


def save_nd_matrix(path: str | Path, m: NDMatrix, config: dict | None = None) -> None:
    Path(path).write_text(json.dumps(nd_matrix_to_dict(m, config), sort_keys=True))


def nd_matrix_from_dict(data: dict) -> NDMatrix:
    indices = data["index_set"]
    N = max(indices)
    idx = FourierIndexSet(N=N)
    if list(idx.indices) != list(indices):
        raise ValueError("index_set is not the symmetric nonzero range")
    n = idx.size
    flat = np.array([complex(re, im) for re, im in data["entries"]])
    gamma = data.get("gamma")
    return NDMatrix(
        index_set=idx,
        entries=flat.reshape(n, n),
        kind=data["kind"],
        gamma=None if gamma is None else GammaArc(h=gamma["h"], rotation=gamma["rotation"]),
    )


def load_nd_matrix(path: str | Path) -> NDMatrix:
    return nd_matrix_from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# scattering grids: JSON


def save_scattering_grid(path: str | Path, s: ScatteringGrid, config: dict | None = None) -> None:
    out = {
        "R": s.kgrid.R,
        "c": s.c,
        "connective": s.connective,
        "m": s.kgrid.m,
        "values": [[float(v.real), float(v.imag)] for v in s.values.ravel()],
        "mask": [bool(b) for b in s.mask.ravel()],
    }
    if config is not None:
        out["config"] = config
    Path(path).write_text(json.dumps(out, sort_keys=True))


def load_scattering_grid(path: str | Path) -> ScatteringGrid:
    data = json.loads(Path(path).read_text())
    m = int(data["m"])
    vals = np.array([complex(re, im) for re, im in data["values"]]).reshape(m, m)
    mask = np.array(data["mask"], dtype=bool).reshape(m, m)
    return ScatteringGrid(
        kgrid=KGrid(R=float(data["R"]), m=m),
        values=vals,
        mask=mask,
        c=data.get("c"),
        connective=data.get("connective", "or"),
    )


# ---------------------------------------------------------------------------
# reconstruction fields: CSV x,y,inside,sigma,residual (row-major over x, y)


def save_reconstruction(
    path: str | Path, f: ReconstructionField, config: dict | None = None
) -> None:
    lines = [_config_header(config), "x,y,inside,sigma,residual\n"]
    for i, x in enumerate(f.xs):
        for j, y in enumerate(f.ys):
            sig = _fmt_or_nan(f.sigma[i, j])
            res = _fmt_or_nan(f.residuals[i, j])
            lines.append(
                f"{VALUE_FMT % x},{VALUE_FMT % y},{int(f.inside[i, j])},{sig},{res}\n"
            )
    Path(path).write_text("".join(lines))


def load_reconstruction(path: str | Path) -> ReconstructionField:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x,"):
                continue
            x, y, ins, sig, res = line.split(",")
            rows.append((float(x), float(y), bool(int(ins)), float(sig), float(res)))
    xs = np.unique([r[0] for r in rows])
    ys = np.unique([r[1] for r in rows])
    shape = (len(xs), len(ys))
    if len(rows) != shape[0] * shape[1]:
        raise ValueError("reconstruction file is not a full grid")
    sigma = np.array([r[3] for r in rows]).reshape(shape)
    inside = np.array([r[2] for r in rows]).reshape(shape)
    resid = np.array([r[4] for r in rows]).reshape(shape)
    meta = read_config_header(path) or {}
    return ReconstructionField(
        xs=xs, ys=ys, sigma=sigma, inside=inside, residuals=resid,
        mu0_imag=np.full(shape, np.nan), flagged=np.zeros(shape, dtype=bool),
        R=float(meta.get("scattering", {}).get("R", np.nan)),
        c=meta.get("scattering", {}).get("c"),
    )


# ---------------------------------------------------------------------------
# meshes: plain text, counts in the header


def save_mesh(path: str | Path, mesh: Mesh, config: dict | None = None) -> None:
    lines = [_config_header(config)]
    lines.append(
        f"mesh {mesh.n_vertices} vertices {len(mesh.triangles)} triangles "
        f"{len(mesh.boundary_index)} boundary\n"
    )
    for x, y in mesh.vertices:
        lines.append(f"v {VALUE_FMT % x} {VALUE_FMT % y}\n")
    for a, b, c in mesh.triangles:
        lines.append(f"t {a} {b} {c}\n")
    lines.append("b " + " ".join(str(i) for i in mesh.boundary_index) + "\n")
    Path(path).write_text("".join(lines))


def load_mesh(path: str | Path) -> Mesh:
    verts, tris, bidx = [], [], None
    kind = "unit-disk"
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("mesh"):
                continue
            tag, *rest = line.split()
            if tag == "v":
                verts.append([float(rest[0]), float(rest[1])])
            elif tag == "t":
                tris.append([int(x) for x in rest])
            elif tag == "b":
                bidx = np.array([int(x) for x in rest])
    verts = np.array(verts)
    bpos = verts[bidx]
    if not np.allclose(np.linalg.norm(bpos, axis=1), 1.0, atol=1e-9):
        kind = "parametrized"
    if kind == "unit-disk":
        grid = unit_disk_grid(len(bidx))
    else:
        from .boundary import parametrized_grid

        grid = parametrized_grid(bpos, len(bidx))
    return Mesh(vertices=verts, triangles=np.array(tris), boundary_index=bidx, grid=grid)
