"""Render pdeit output files into figures.

Four figure kinds are supported, matching the toolkit's documented file
formats: log-log convergence curves from experiment CSVs, conductivity
heatmaps from reconstruction CSVs, CGO sinogram panels from sinogram
CSVs, and real/imaginary scattering-transform panels from scattering-grid
JSON files.  Inputs are read-only and must carry the embedded
configuration header ('#'-prefixed JSON line for CSV, a "config" key for
JSON); rendering never recomputes or alters numeric data.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("loglog-convergence", "field-heatmap", "sinogram", "scattering-panel")

DEFAULT_STYLE = {
    "dpi": 150,
    "cmap": "viridis",
    "figsize_per_panel": [3.2, 3.0],
    "guide_slope": True,
    "shared_colorscale": True,
    "gamma_line": True,
}


class RenderError(ValueError):
    pass


def load_spec(path: str | Path) -> dict:
    spec = json.loads(Path(path).read_text())
    return normalize_spec(spec, base=Path(path).parent)


def normalize_spec(spec: dict, base: Path | None = None) -> dict:
    if "kind" not in spec or spec["kind"] not in FIGURE_KINDS:
        raise RenderError(f"figure kind must be one of {FIGURE_KINDS}")
    inputs = spec.get("inputs") or []
    if not inputs:
        raise RenderError("spec needs at least one input file")
    if "output" not in spec:
        raise RenderError("spec needs an output path")
    base = base or Path(".")
    spec = dict(spec)
    spec["inputs"] = [str((base / p)) if not Path(p).is_absolute() else p for p in inputs]
    spec["output"] = (
        str(base / spec["output"])
        if not Path(spec["output"]).is_absolute()
        else spec["output"]
    )
    style = dict(DEFAULT_STYLE)
    user_style = spec.get("style") or {}
    if isinstance(user_style, str):
        user_style = json.loads(Path(user_style).read_text())
    style.update(user_style)
    spec["style"] = style
    return spec


def render(spec: dict | str | Path) -> dict:
    """Render one figure; returns metadata (color limits, guides drawn)."""
    if not isinstance(spec, dict):
        spec = load_spec(spec)
    else:
        spec = normalize_spec(spec)
    kind = spec["kind"]
    for path in spec["inputs"]:
        if not Path(path).exists():
            raise RenderError(f"input file not found: {path}")
    if kind == "loglog-convergence":
        return _render_convergence(spec)
    if kind == "field-heatmap":
        return _render_fields(spec)
    if kind == "sinogram":
        return _render_sinogram(spec)
    return _render_scattering(spec)


# ---------------------------------------------------------------------------
# input readers (documented wire formats; header required)


def _read_header(path: str) -> dict:
    with open(path) as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise RenderError(f"{path}: missing embedded config header")
    return json.loads(first[1:].strip())


def _read_experiment_csv(path: str) -> tuple[dict, list[dict]]:
    config = _read_header(path)
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
            cells = dict(zip(header, line.split(",")))
            rows.append(
                {
                    "map": cells.get("map", ""),
                    "mode": cells.get("mode", ""),
                    "n": cells.get("n") or "",
                    "h": float(cells["h"]),
                    "error": float(cells["error"]),
                }
            )
    if not rows:
        raise RenderError(f"{path}: no data rows")
    return config, rows


def _read_reconstruction_csv(path: str) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    config = _read_header(path)
    xs, ys, ins, sig = [], [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("x,"):
                continue
            x, y, i, s, _ = line.split(",")
            xs.append(float(x))
            ys.append(float(y))
            ins.append(bool(int(i)))
            sig.append(float(s))
    ux, uy = np.unique(xs), np.unique(ys)
    shape = (len(ux), len(uy))
    sigma = np.array(sig).reshape(shape)
    inside = np.array(ins).reshape(shape)
    return config, ux, uy, sigma, inside


def _read_sinogram_csv(path: str) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    config = _read_header(path)
    th, ph, re, im = [], [], [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("theta"):
                continue
            a, b, c, d = line.split(",")
            th.append(float(a))
            ph.append(float(b))
            re.append(float(c))
            im.append(float(d))
    ut, up = np.unique(th), np.unique(ph)
    S = (np.array(re) + 1j * np.array(im)).reshape(len(ut), len(up))
    return config, ut, up, S


def _read_scattering_json(path: str) -> tuple[dict, float, np.ndarray, np.ndarray]:
    data = json.loads(Path(path).read_text())
    if "config" not in data:
        raise RenderError(f"{path}: missing embedded config header")
    m = int(data["m"])
    values = np.array([complex(a, b) for a, b in data["values"]]).reshape(m, m)
    mask = np.array(data["mask"], dtype=bool).reshape(m, m)
    return data["config"], float(data["R"]), values, mask


# ---------------------------------------------------------------------------
# renderers


def _save(fig, spec) -> None:
    fig.savefig(spec["output"], dpi=spec["style"]["dpi"])
    plt.close(fig)


def _render_convergence(spec: dict) -> dict:
    style = spec["style"]
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    all_h, all_e = [], []
    for path in spec["inputs"]:
        _, rows = _read_experiment_csv(path)
        groups: dict[tuple, list[dict]] = {}
        for row in rows:
            groups.setdefault((row["map"], row["mode"], row["n"]), []).append(row)
        for (map_kind, mode, n), grp in sorted(groups.items()):
            grp = sorted(grp, key=lambda r: r["h"])
            label = map_kind + (f" n={n}" if n else "") + (f" [{mode}]" if mode else "")
            ax.loglog([r["h"] for r in grp], [r["error"] for r in grp],
                      marker="o", label=label)
            all_h += [r["h"] for r in grp]
            all_e += [r["error"] for r in grp]
    guide = bool(style["guide_slope"]) and len(all_h) >= 2
    if guide:
        h = np.array(sorted(set(all_h)))
        anchor = np.exp(np.mean(np.log(all_e)))
        mid = np.exp(np.mean(np.log(h)))
        ax.loglog(h, anchor * h / mid, "k--", linewidth=1, label="slope 1")
    ax.set_xlabel("h")
    ax.set_ylabel("relative error")
    ax.legend(fontsize=7)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, spec)
    return {"output": spec["output"], "guide_drawn": guide}


def _render_fields(spec: dict) -> dict:
    style = spec["style"]
    panels = [_read_reconstruction_csv(p) for p in spec["inputs"]]
    n = len(panels)
    w, h = style["figsize_per_panel"]
    fig, axes = plt.subplots(1, n, figsize=(w * n + 0.8, h), squeeze=False)
    masked = []
    for (_, ux, uy, sigma, inside) in panels:
        vals = np.where(inside, sigma, np.nan)
        masked.append(vals)
    if style["shared_colorscale"]:
        vmin = min(np.nanmin(v) for v in masked)
        vmax = max(np.nanmax(v) for v in masked)
        clims = [(vmin, vmax)] * n
    else:
        clims = [(np.nanmin(v), np.nanmax(v)) for v in masked]
    cmap = plt.get_cmap(style["cmap"]).copy()
    cmap.set_bad("white")
    im = None
    for j, ((config, ux, uy, _, _), vals, (vmin, vmax)) in enumerate(
        zip(panels, masked, clims)
    ):
        ax = axes[0, j]
        im = ax.imshow(
            vals.T, origin="lower", cmap=cmap, vmin=vmin, vmax=vmax,
            extent=[ux[0], ux[-1], uy[0], uy[-1]],
        )
        ax.set_aspect("equal")
        ax.set_xticks([])
        ax.set_yticks([])
        if style["gamma_line"]:
            gamma = _find_gamma(config)
            if gamma is not None:
                hh, rot = gamma
                arc = np.linspace(rot + hh / 2, rot + 2 * np.pi - hh / 2, 200)
                ax.plot(1.01 * np.cos(arc), 1.01 * np.sin(arc), "k-", linewidth=2)
                ax.set_xlim(min(ux[0], -1.05), max(ux[-1], 1.05))
                ax.set_ylim(min(uy[0], -1.05), max(uy[-1], 1.05))
    fig.colorbar(im, ax=axes.ravel().tolist(), shrink=0.85)
    _save(fig, spec)
    return {"output": spec["output"], "clims": clims}


def _find_gamma(config: dict):
    if "gamma" in config and isinstance(config["gamma"], dict):
        g = config["gamma"]
        return float(g["h"]), float(g.get("rotation", 0.0))
    if "h" in config:
        return float(config["h"]), float(config.get("rotation", 0.0))
    return None


def _render_sinogram(spec: dict) -> dict:
    style = spec["style"]
    config, ut, up, S = _read_sinogram_csv(spec["inputs"][0])
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.4))
    for ax, part, label in ((axes[0], S.real, "real"), (axes[1], S.imag, "imaginary")):
        im = ax.imshow(
            part.T, origin="lower", cmap=style["cmap"], aspect="auto",
            extent=[ut[0], ut[-1], up[0], up[-1]],
        )
        ax.set_xlabel("arg z")
        ax.set_ylabel("arg k")
        ax.set_title(label)
        fig.colorbar(im, ax=ax, shrink=0.9)
    _save(fig, spec)
    return {"output": spec["output"], "shape": list(S.shape)}


def _render_scattering(spec: dict) -> dict:
    style = spec["style"]
    panels = [_read_scattering_json(p) for p in spec["inputs"]]
    n = len(panels)
    w, h = style["figsize_per_panel"]
    fig, axes = plt.subplots(2, n, figsize=(w * n + 0.8, 2 * h), squeeze=False)
    parts = []
    for (_, R, values, mask) in panels:
        vals = np.where(mask, values, np.nan + 1j * np.nan)
        parts.append((vals.real, vals.imag))
    if style["shared_colorscale"]:
        vmin = min(np.nanmin(p[i]) for p in parts for i in (0, 1))
        vmax = max(np.nanmax(p[i]) for p in parts for i in (0, 1))
        clim = (vmin, vmax)
    else:
        clim = (None, None)
    cmap = plt.get_cmap(style["cmap"]).copy()
    cmap.set_bad("white")
    im = None
    for j, ((_, R, _, _), (re, imag)) in enumerate(zip(panels, parts)):
        for row, part in ((0, re), (1, imag)):
            ax = axes[row, j]
            im = ax.imshow(
                part.T, origin="lower", cmap=cmap,
                vmin=clim[0], vmax=clim[1], extent=[-R, R, -R, R],
            )
            ax.set_aspect("equal")
            ax.set_xticks([])
            ax.set_yticks([])
    axes[0, 0].set_ylabel("real part")
    axes[1, 0].set_ylabel("imaginary part")
    fig.colorbar(im, ax=axes.ravel().tolist(), shrink=0.85)
    _save(fig, spec)
    return {"output": spec["output"], "clim": list(clim)}
