"""Boundary grids, the trigonometric current basis, and boundary quadrature.

Everything downstream (forward solves, partial-boundary maps, scattering)
works with samples of complex-valued functions on a uniform boundary grid.
On the unit disk the grid parameter is the polar angle; on a user-supplied
polygonal domain it is the arclength angle (cumulative chord length
normalized to total 2*pi), so the basis functions and quadrature weights
take the same form in both cases.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

#: relative tolerance for the zero-mean property of a trace
ZERO_MEAN_RTOL = 1e-12


@dataclass(frozen=True)
class BoundaryGrid:
    """Uniform sampling grid on the boundary of the domain.

    Parameters
    ----------
    M : int
        Number of samples. theta_j = 2*pi*j/M for j = 0..M-1.
    domain_kind : str
        "unit-disk" or "parametrized".
    positions : ndarray, shape (M, 2)
        Physical coordinates of the grid nodes.
    source_vertices : ndarray or None
        For parametrized domains, the polyline the grid was built from.
    vertex_arclength : ndarray or None
        Normalized arclength angle of each source vertex (the samples of
        the cumulative-chord-length map, scaled to total 2*pi).
    """

    M: int
    domain_kind: str = "unit-disk"
    positions: np.ndarray = field(default=None, repr=False)
    source_vertices: np.ndarray | None = field(default=None, repr=False)
    vertex_arclength: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.M < 4:
            raise ValueError(f"grid needs at least 4 samples, got M={self.M}")
        if self.domain_kind not in ("unit-disk", "parametrized"):
            raise ValueError(f"unknown domain_kind {self.domain_kind!r}")
        if self.positions is None:
            th = self.theta
            object.__setattr__(
                self, "positions", np.column_stack([np.cos(th), np.sin(th)])
            )

    @property
    def theta(self) -> np.ndarray:
        """Grid angles in [0, 2*pi), strictly increasing."""
        return TWO_PI * np.arange(self.M) / self.M

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights of the uniform trapezoid rule (all equal)."""
        return np.full(self.M, TWO_PI / self.M)

    @property
    def chord_lengths(self) -> np.ndarray:
        """Physical edge lengths of the boundary polygon through the nodes."""
        p = self.positions
        return np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)

    def require_order(self, n_max: int) -> None:
        """Check the Nyquist margin M >= 4*n_max for basis order n_max."""
        if self.M < 4 * n_max:
            raise ValueError(
                f"grid M={self.M} too coarse for basis order {n_max} "
                f"(needs M >= {4 * n_max})"
            )


def unit_disk_grid(M: int = 256) -> BoundaryGrid:
    return BoundaryGrid(M=M)


def parametrized_grid(vertices: np.ndarray, M: int = 256) -> BoundaryGrid:
    """Grid on a closed polyline, uniform in normalized arclength.

    The vertices describe the boundary in positive orientation; the closing
    edge from the last vertex back to the first is implied.  Grid nodes are
    placed at M equal steps of cumulative chord length, so the arclength
    angle of node j is exactly 2*pi*j/M and the disk formulas for basis and
    quadrature apply unchanged.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValueError("vertices must be an (n, 2) array with n >= 3")
    closed = np.vstack([v, v[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    if np.any(seg == 0.0):
        raise ValueError("degenerate (zero-length) polyline segment")
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    # resample at uniform arclength fractions
    s_nodes = total * np.arange(M) / M
    x = np.interp(s_nodes, cum, closed[:, 0])
    y = np.interp(s_nodes, cum, closed[:, 1])
    return BoundaryGrid(
        M=M,
        domain_kind="parametrized",
        positions=np.column_stack([x, y]),
        source_vertices=v,
        vertex_arclength=TWO_PI * cum[:-1] / total,
    )


@dataclass(frozen=True)
class FourierIndexSet:
    """Symmetric set of nonzero basis orders (-N, ..., -1, 1, ..., N)."""

    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be a positive integer")

    @property
    def indices(self) -> list[int]:
        return [n for n in range(-self.N, self.N + 1) if n != 0]

    @property
    def size(self) -> int:
        return 2 * self.N

    def position(self, n: int) -> int:
        """Row/column position of order n in matrix storage."""
        if n == 0 or abs(n) > self.N:
            raise ValueError(f"order {n} not in index set (N={self.N})")
        return n + self.N if n < 0 else n + self.N - 1


@dataclass(frozen=True)
class BoundaryTrace:
    """Complex samples of a boundary function on a grid."""

    grid: BoundaryGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.grid.M,):
            raise ValueError(
                f"trace length {vals.shape} does not match grid M={self.grid.M}"
            )
        object.__setattr__(self, "values", vals)

    def is_zero_mean(self) -> bool:
        w = self.grid.weights
        total = abs(np.sum(self.values * w))
        scale = np.sum(np.abs(self.values) * w)
        return total <= ZERO_MEAN_RTOL * scale if scale > 0 else True

    def mask(self) -> np.ndarray:
        """Boolean array marking missing-data nodes (NaN markers)."""
        return np.isnan(self.values.real) | np.isnan(self.values.imag)


def fourier_basis(n: int, grid: BoundaryGrid) -> BoundaryTrace:
    """Samples of the orthonormal current pattern of order n.

    phi_n(theta) = exp(i*n*theta) / sqrt(2*pi), with theta the polar angle
    on the disk and the arclength angle on parametrized domains.  n = 0 is
    excluded: currents must have zero mean.
    """
    if n == 0:
        raise ValueError("basis order 0 is excluded (constants carry no current)")
    vals = np.exp(1j * n * grid.theta) / np.sqrt(TWO_PI)
    return BoundaryTrace(grid=grid, values=vals)


def inner_product(f: BoundaryTrace, g: BoundaryTrace) -> complex:
    """L2 boundary pairing (f, g) = integral of f * conj(g).

    Trapezoid rule on the uniform grid; exact for trigonometric
    polynomials of degree < M/2.
    """
    if f.grid is not g.grid and not _same_grid(f.grid, g.grid):
        raise ValueError("traces live on different grids")
    return complex(np.sum(f.values * np.conj(g.values) * f.grid.weights))


def norm_l2(f: BoundaryTrace) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2 * f.grid.weights)))


def zero_mean_project(f: BoundaryTrace) -> BoundaryTrace:
    """Subtract the quadrature mean so the trace integrates to zero."""
    w = f.grid.weights
    mean = np.sum(f.values * w) / np.sum(w)
    return BoundaryTrace(grid=f.grid, values=f.values - mean)


def basis_coefficients(f: BoundaryTrace, idx: FourierIndexSet) -> np.ndarray:
    """Coefficients (f, phi_n) for all n in the index set, in storage order."""
    f.grid.require_order(idx.N)
    th = f.grid.theta
    w = f.grid.weights
    ns = np.array(idx.indices)
    basis = np.exp(1j * np.outer(ns, th)) / np.sqrt(TWO_PI)
    return (basis.conj() * (f.values * w)).sum(axis=1)


def trace_from_coefficients(
    coeffs: np.ndarray, idx: FourierIndexSet, grid: BoundaryGrid
) -> BoundaryTrace:
    """Synthesize sum_n c_n * phi_n on the grid."""
    ns = np.array(idx.indices)
    basis = np.exp(1j * np.outer(ns, grid.theta)) / np.sqrt(TWO_PI)
    return BoundaryTrace(grid=grid, values=coeffs @ basis)


def _same_grid(a: BoundaryGrid, b: BoundaryGrid) -> bool:
    return (
        a.M == b.M
        and a.domain_kind == b.domain_kind
        and np.array_equal(a.positions, b.positions)
    )
