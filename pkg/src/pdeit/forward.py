"""Forward simulation of the conductivity equation with injected currents.

Solves div(sigma grad u) = 0 with Neumann data sigma du/dnu = f and the
normalization that u integrates to zero over the boundary, using P1 finite
elements; assembles current-to-voltage matrices in the trigonometric
basis.  For unit conductivity on the disk the exact solution is available
and is used both as a fast solver and as the accuracy oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .boundary import (
    TWO_PI,
    BoundaryGrid,
    BoundaryTrace,
    FourierIndexSet,
    basis_coefficients,
    fourier_basis,
    unit_disk_grid,
    zero_mean_project,
)
from .mesh import DEFAULT_EDGE, Mesh, _dist_to_polyline, unit_disk_mesh

#: default clearance band next to the boundary where sigma must equal 1
DEFAULT_CLEARANCE = 0.1

#: default mollifier width for smoothed inclusions
DEFAULT_MOLLIFIER = 0.05

# Discrete currents may carry a small quadrature-level imbalance (the
# scaling map's resampled traces have mean O(1/M)); both solvers absorb it
# through their compatibility projection.  Only grossly incompatible
# inputs, like constants, are rejected.
ZERO_MEAN_INPUT_RTOL = 0.05


# ---------------------------------------------------------------------------
# conductivity phantoms


@dataclass(frozen=True)
class Inclusion:
    """One smoothed or sharp inclusion of an elementary shape."""

    shape: str  # "circle" | "ellipse"
    center: tuple[float, float]
    value: float
    radius: float = 0.0
    semi_axes: tuple[float, float] = (0.0, 0.0)
    angle: float = 0.0  # rotation in radians
    mollifier: float = 0.0  # transition width; 0 means a sharp edge

    def level(self, pts: np.ndarray) -> np.ndarray:
        """Signed distance proxy: <= 0 inside, measured radially for circles."""
        p = pts - np.asarray(self.center)
        if self.shape == "circle":
            return np.linalg.norm(p, axis=-1) - self.radius
        c, s = np.cos(self.angle), np.sin(self.angle)
        xr = c * p[..., 0] + s * p[..., 1]
        yr = -s * p[..., 0] + c * p[..., 1]
        a, b = self.semi_axes
        return np.sqrt((xr / a) ** 2 + (yr / b) ** 2) - 1.0

    def reach(self) -> float:
        """Largest distance from the origin to the support of the inclusion."""
        cx, cy = self.center
        if self.shape == "circle":
            return math.hypot(cx, cy) + self.radius + self.mollifier / 2
        t = np.linspace(0, 2 * np.pi, 720, endpoint=False)
        a, b = self.semi_axes
        c, s = np.cos(self.angle), np.sin(self.angle)
        ex, ey = a * np.cos(t), b * np.sin(t)
        px = cx + c * ex - s * ey
        py = cy + s * ex + c * ey
        pad = self.mollifier / 2 if self.mollifier > 0 else 0.0
        return float(np.hypot(px, py).max()) + pad

    def weight(self, pts: np.ndarray) -> np.ndarray:
        """Blend weight in [0, 1]: 1 deep inside, 0 outside."""
        lev = self.level(pts)
        if self.mollifier <= 0:
            return (lev <= 0).astype(float)
        if self.shape == "circle":
            dist = lev  # level is a true radial distance for circles
        else:
            dist = lev * min(self.semi_axes)  # approximate distance
        u = 0.5 - dist / self.mollifier
        return _smoothstep(np.clip(u, 0.0, 1.0))


def _smoothstep(u: np.ndarray) -> np.ndarray:
    # quintic: C2 at both ends, so sqrt(sigma) stays twice differentiable
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


@dataclass(frozen=True)
class ConductivityField:
    """Per-vertex conductivity on a triangulated domain."""

    mesh: Mesh
    sigma: np.ndarray
    background: float = 1.0
    inclusions: tuple[Inclusion, ...] = field(default=())

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=float)
        if sig.shape != (self.mesh.n_vertices,):
            raise ValueError("sigma must have one value per mesh vertex")
        if np.any(sig <= 0):
            raise ValueError("sigma must be strictly positive")
        object.__setattr__(self, "sigma", sig)

    def sigma_at(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate the analytic phantom profile at arbitrary points."""
        vals = np.full(np.asarray(pts).shape[:-1], self.background, dtype=float)
        for inc in self.inclusions:
            w = inc.weight(np.asarray(pts))
            vals = vals + (inc.value - self.background) * w
        return vals

    @property
    def is_uniform(self) -> bool:
        return len(self.inclusions) == 0


def circle_phantom_inclusions(
    center=(-0.6, 0.0), radius=0.15, value=2.0, mollifier=DEFAULT_MOLLIFIER
) -> tuple[Inclusion, ...]:
    return (
        Inclusion(
            shape="circle",
            center=tuple(center),
            value=float(value),
            radius=float(radius),
            mollifier=float(mollifier),
        ),
    )


def heart_and_lungs_inclusions() -> tuple[Inclusion, ...]:
    """Heart (value 2) and two lungs (value 0.5), sharp-edged ellipses."""
    deg = np.pi / 180.0
    return (
        Inclusion(
            shape="ellipse", center=(0.1, 0.5), value=2.0,
            semi_axes=(0.25, 0.18), angle=-35 * deg,
        ),
        Inclusion(
            shape="ellipse", center=(0.45, -0.15), value=0.5,
            semi_axes=(0.25, 0.45), angle=20 * deg,
        ),
        Inclusion(
            shape="ellipse", center=(-0.45, -0.15), value=0.5,
            semi_axes=(0.25, 0.45), angle=-20 * deg,
        ),
    )


def build_phantom(
    kind: str,
    mesh: Mesh | None = None,
    *,
    params: dict | None = None,
    clearance: float = DEFAULT_CLEARANCE,
) -> ConductivityField:
    """Construct a conductivity field on a mesh.

    Parameters
    ----------
    kind : str
        "uniform", "circle", "heart-and-lungs", or "custom" (inclusions
        passed via params["inclusions"]).
    mesh : Mesh, optional
        Defaults to the standard disk mesh.
    params : dict, optional
        Overrides for the phantom geometry (circle: center, radius, value,
        mollifier).
    clearance : float
        Required sigma == background band next to the boundary; inclusions
        reaching into this band are rejected.
    """
    mesh = mesh if mesh is not None else unit_disk_mesh()
    params = dict(params or {})
    if kind == "uniform":
        incs: tuple[Inclusion, ...] = ()
    elif kind == "circle":
        incs = circle_phantom_inclusions(
            center=params.get("center", (-0.6, 0.0)),
            radius=params.get("radius", 0.15),
            value=params.get("value", 2.0),
            mollifier=params.get("mollifier", DEFAULT_MOLLIFIER),
        )
    elif kind == "heart-and-lungs":
        incs = heart_and_lungs_inclusions()
    elif kind == "custom":
        incs = tuple(params.get("inclusions", ()))
    else:
        raise ValueError(f"unknown phantom kind {kind!r}")

    _check_clearance(incs, mesh, clearance)
    f = ConductivityField(mesh=mesh, sigma=np.ones(mesh.n_vertices), inclusions=incs)
    return replace(f, sigma=f.sigma_at(mesh.vertices))


def _check_clearance(incs, mesh: Mesh, clearance: float) -> None:
    if not incs:
        return
    if mesh.grid.domain_kind == "unit-disk":
        limit = 1.0 - clearance
        for inc in incs:
            if inc.reach() > limit:
                raise ValueError(
                    f"inclusion reaches {inc.reach():.3f} from the origin; "
                    f"sigma must equal the background within {clearance} of the boundary"
                )
    else:
        poly = mesh.grid.positions
        for inc in incs:
            d = _dist_to_polyline(np.atleast_2d(np.asarray(inc.center)), poly)[0]
            pad = inc.radius if inc.shape == "circle" else max(inc.semi_axes)
            if d - pad - inc.mollifier / 2 < clearance:
                raise ValueError(
                    "inclusion too close to the boundary for the clearance band"
                )


# ---------------------------------------------------------------------------
# solvers


class NeumannSolver:
    """Shared-factorization FEM solver for one conductivity field.

    The singular Neumann system is closed with a scalar multiplier row
    enforcing a zero boundary mean, which keeps the matrix symmetric; one
    LU factorization serves every current pattern.
    """

    def __init__(self, field: ConductivityField):
        self.field = field
        self.mesh = field.mesh
        self.grid = field.mesh.grid
        A = _stiffness(field.mesh, field.sigma)
        V = field.mesh.n_vertices
        w = np.zeros(V)
        self._w_bnd = _lumped_boundary_weights(field.mesh)
        w[field.mesh.boundary_index] = self._w_bnd
        K = sp.bmat(
            [[A, sp.csc_matrix(w[:, None])], [sp.csc_matrix(w[None, :]), None]],
            format="csc",
        )
        self._lu = spla.splu(K)
        self._V = V

    def solve_trace(self, current: BoundaryTrace) -> BoundaryTrace:
        """Boundary voltage trace for a zero-mean current pattern."""
        _require_zero_mean(current)
        f = current.values
        b = np.zeros(self._V + 1)
        bidx = self.mesh.boundary_index
        br = b.copy()
        br[bidx] = self._w_bnd * f.real
        u = self._lu.solve(br)
        if np.any(f.imag):
            bi = b.copy()
            bi[bidx] = self._w_bnd * f.imag
            u = u + 1j * self._lu.solve(bi)
        trace = BoundaryTrace(grid=self.grid, values=np.asarray(u)[bidx])
        return zero_mean_project(trace)


class AnalyticLaplaceSolver:
    """Spectral solver for unit conductivity on the unit disk.

    Acts as a Fourier multiplier: the coefficient of order m is divided by
    |m| (solution of the Laplace equation with Neumann data).  Exact for
    band-limited currents, used wherever sigma == 1 data is needed without
    discretization error.
    """

    def __init__(self, grid: BoundaryGrid | None = None):
        self.grid = grid if grid is not None else unit_disk_grid()
        if self.grid.domain_kind != "unit-disk":
            raise ValueError("analytic solver is defined on the unit disk only")
        m = np.fft.fftfreq(self.grid.M, d=1.0 / self.grid.M)
        inv = np.zeros(self.grid.M)
        inv[m != 0] = 1.0 / np.abs(m[m != 0])
        self._inv = inv

    def solve_trace(self, current: BoundaryTrace) -> BoundaryTrace:
        _require_zero_mean(current)
        coeffs = np.fft.fft(current.values) / self.grid.M
        coeffs = coeffs * self._inv  # mode 0 annihilated
        vals = np.fft.ifft(coeffs * self.grid.M)
        return BoundaryTrace(grid=self.grid, values=vals)


def solve_neumann(field: ConductivityField, current: BoundaryTrace) -> BoundaryTrace:
    """One-shot FEM solve; build a NeumannSolver to reuse the factorization."""
    return NeumannSolver(field).solve_trace(current)


def _require_zero_mean(current: BoundaryTrace) -> None:
    w = current.grid.weights
    total = abs(np.sum(current.values * w))
    scale = np.sum(np.abs(current.values) * w)
    if scale > 0 and total > ZERO_MEAN_INPUT_RTOL * scale:
        raise ValueError(
            "current pattern must have zero mean (Neumann compatibility); "
            f"relative mean {total / scale:.2e}"
        )


def _stiffness(mesh: Mesh, sigma_v: np.ndarray) -> sp.csr_matrix:
    P, T = mesh.vertices, mesh.triangles
    p0, p1, p2 = P[T[:, 0]], P[T[:, 1]], P[T[:, 2]]
    d1, d2 = p1 - p0, p2 - p0
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    area = 0.5 * np.abs(det)
    g0 = np.column_stack([p1[:, 1] - p2[:, 1], p2[:, 0] - p1[:, 0]]) / det[:, None]
    g1 = np.column_stack([p2[:, 1] - p0[:, 1], p0[:, 0] - p2[:, 0]]) / det[:, None]
    g2 = np.column_stack([p0[:, 1] - p1[:, 1], p1[:, 0] - p0[:, 0]]) / det[:, None]
    G = np.stack([g0, g1, g2], axis=1)
    # per-vertex sigma is linear on each triangle: its integral is the
    # vertex average times the area
    coef = sigma_v[T].mean(axis=1) * area
    rows, cols, vals = [], [], []
    for a in range(3):
        for b in range(3):
            rows.append(T[:, a])
            cols.append(T[:, b])
            vals.append(coef * np.einsum("ij,ij->i", G[:, a], G[:, b]))
    n = mesh.n_vertices
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()


def _lumped_boundary_weights(mesh: Mesh) -> np.ndarray:
    ell = mesh.grid.chord_lengths
    return 0.5 * (ell + np.roll(ell, 1))


# ---------------------------------------------------------------------------
# ND matrices


@dataclass(frozen=True)
class GammaArc:
    """Accessible boundary arc descriptor.

    The complement (the gap) has angular length h and is centered at the
    angle `rotation`; Gamma itself is the closed arc
    {theta : (theta - rotation) mod 2*pi in [h/2, 2*pi - h/2]}.
    """

    h: float
    rotation: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.h < TWO_PI:
            raise ValueError("gap length h must lie in [0, 2*pi)")

    def gap_mask(self, theta: np.ndarray) -> np.ndarray:
        """True on grid nodes inside the open gap."""
        d = np.mod(theta - self.rotation, TWO_PI)
        a = self.h / 2
        return (d < a) | (d > TWO_PI - a)

    @property
    def measure(self) -> float:
        return TWO_PI - self.h


@dataclass(frozen=True)
class NDMatrix:
    """Finite matrix of a current-to-voltage operator in the basis.

    entries[row, col] pairs the response to the column-index current
    against the row-index basis function, both in the storage order of
    the index set.
    """

    index_set: FourierIndexSet
    entries: np.ndarray
    kind: str = "full"  # full | partial-cutoff | partial-scaling | difference
    gamma: GammaArc | None = None

    KINDS = ("full", "partial-cutoff", "partial-scaling", "difference")

    def __post_init__(self):
        E = np.asarray(self.entries, dtype=complex)
        n = self.index_set.size
        if E.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n} for N={self.index_set.N}")
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown matrix kind {self.kind!r}")
        object.__setattr__(self, "entries", E)

    def entry(self, n: int, ell: int) -> complex:
        p = self.index_set.position
        return complex(self.entries[p(n), p(ell)])

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return self.entries @ coeffs

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))


def nd_matrix(
    field_or_solver, idx: FourierIndexSet, grid: BoundaryGrid | None = None
) -> NDMatrix:
    """Full-boundary measurement matrix, one forward solve per column."""
    solver = _as_solver(field_or_solver, grid)
    solver.grid.require_order(idx.N)
    n = idx.size
    E = np.zeros((n, n), dtype=complex)
    for j, ell in enumerate(idx.indices):
        current = fourier_basis(ell, solver.grid)
        trace = solver.solve_trace(current)
        E[:, j] = basis_coefficients(trace, idx)
    return NDMatrix(index_set=idx, entries=E, kind="full")


def analytic_nd_laplace(idx: FourierIndexSet, grid: BoundaryGrid | None = None) -> NDMatrix:
    """Exact unit-disk matrix for sigma == 1: diagonal 1/|n|."""
    if grid is not None and grid.domain_kind != "unit-disk":
        raise ValueError("analytic matrix is defined on the unit disk only")
    diag = np.array([1.0 / abs(n) for n in idx.indices])
    return NDMatrix(index_set=idx, entries=np.diag(diag).astype(complex), kind="full")


def _as_solver(field_or_solver, grid: BoundaryGrid | None = None):
    if isinstance(field_or_solver, (NeumannSolver, AnalyticLaplaceSolver)):
        return field_or_solver
    if isinstance(field_or_solver, ConductivityField):
        return NeumannSolver(field_or_solver)
    raise TypeError(f"cannot build a solver from {type(field_or_solver)!r}")
