"""Born-approximated CGO boundary solutions and the scattering transform.

The spectral data for the reconstruction is the nonlinear Fourier-type
transform t(k) computed from the difference of measurement matrices.  With
the CGO solutions replaced by their asymptotic exponentials, t(k) becomes
a bilinear form of the difference operator between exponential normal
derivatives; on the unit disk those expand in the trigonometric basis with
coefficients sqrt(2*pi) (i k)^m / (m-1)!, which is the evaluation path used
here.  A direct boundary-quadrature evaluation is kept alongside as an
independent cross-check.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .boundary import (
    TWO_PI,
    BoundaryGrid,
    BoundaryTrace,
    basis_coefficients,
    trace_from_coefficients,
    unit_disk_grid,
)
from .forward import NDMatrix

#: relative tail size above which the truncated exponential expansion warns
TAIL_WARN_RTOL = 1e-4


@dataclass(frozen=True)
class KGrid:
    """Uniform spectral grid over [-R, R]^2 with the origin excluded."""

    R: float
    m: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("truncation radius R must be positive")
        if self.m < 3 or self.m % 2 == 0:
            raise ValueError("m must be an odd integer >= 3 (pairs nodes under k -> -k)")

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.R, self.R, self.m)

    @property
    def nodes(self) -> np.ndarray:
        ax = self.axis
        KX, KY = np.meshgrid(ax, ax, indexing="ij")
        return KX + 1j * KY

    def admissible(self) -> np.ndarray:
        """Nodes usable for evaluation: inside the radius, origin excluded."""
        k = self.nodes
        return (np.abs(k) < self.R) & (np.abs(k) > 0)


@dataclass(frozen=True)
class ScatteringGrid:
    """Truncated/thresholded transform values with their retention mask."""

    kgrid: KGrid
    values: np.ndarray
    mask: np.ndarray
    c: float | None = None
    connective: str = "or"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        msk = np.asarray(self.mask, dtype=bool)
        shape = (self.kgrid.m, self.kgrid.m)
        if vals.shape != shape or msk.shape != shape:
            raise ValueError(f"values and mask must have shape {shape}")
        if np.any(vals[~msk] != 0):
            raise ValueError("values must be zero wherever the mask is false")
        if self.connective not in ("or", "and"):
            raise ValueError("threshold connective must be 'or' or 'and'")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mask", msk)

    @property
    def R(self) -> float:
        return self.kgrid.R


def exponential_coefficients(k: complex, N: int, conjugated: bool = False) -> np.ndarray:
    """Basis coefficients of the boundary normal derivative of e^{ikz}.

    On the unit circle, d/dnu e^{ikz} = i k z e^{ikz} expands as
    sum_{m>=1} sqrt(2*pi) (ik)^m/(m-1)! phi_m; the conjugated variant
    d/dnu e^{i conj(k) conj(z)} carries the same coefficients on phi_{-m}.
    Returns the coefficient array for m = 1..N.
    """
    kk = np.conj(k) if conjugated else k
    m = np.arange(1, N + 1)
    fact = np.array([math.factorial(int(mm) - 1) for mm in m], dtype=float)
    return np.sqrt(TWO_PI) * (1j * kk) ** m / fact


def _warn_tail(k: complex, N: int) -> None:
    coeffs = np.abs(exponential_coefficients(k, N))
    tail = coeffs[-1]
    peak = coeffs.max()
    if peak > 0 and tail / peak > TAIL_WARN_RTOL:
        warnings.warn(
            f"index set N={N} truncates the exponential expansion at |k|={abs(k):.3g}: "
            f"tail coefficient {tail:.3e}",
            RuntimeWarning,
            stacklevel=3,
        )


class _collected_tail_warnings:
    """Collapse per-node truncation warnings of a grid scan into one."""

    def __init__(self, N: int):
        self.N = N

    def __enter__(self):
        self._ctx = warnings.catch_warnings(record=True)
        self._records = self._ctx.__enter__()
        warnings.simplefilter("always", RuntimeWarning)
        return self

    def __exit__(self, *exc):
        self._ctx.__exit__(*exc)
        tails = []
        for rec in self._records:
            msg = str(rec.message)
            if "tail coefficient" in msg:
                tails.append(float(msg.rsplit(" ", 1)[-1]))
            else:
                warnings.warn_explicit(
                    rec.message, rec.category, rec.filename, rec.lineno
                )
        if tails:
            warnings.warn(
                f"index set N={self.N} truncates the exponential expansion on "
                f"{len(tails)} grid nodes (largest tail coefficient {max(tails):.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
        return False


def faddeev_dlayer_kernel(k: complex, z, zeta, diag_tol: float = 1e-13):
    """Normal-derivative kernel of the exponentially modified Green function.

    For unit-circle points z, zeta this is
    (1/2pi) Re(zeta e^{ik(z-zeta)} / (z-zeta)), continuous up to the
    diagonal where the limit equals (1/2pi) (Re(ikz) - 1/2).  Real-valued.
    Accepts scalars or broadcastable arrays of boundary points.
    """
    if k == 0:
        raise ValueError("kernel undefined at k = 0")
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    dz = z - zeta
    small = np.abs(dz) < diag_tol
    safe = np.where(small, 1.0, dz)
    off = (zeta * np.exp(1j * k * dz) / safe).real / TWO_PI
    diag = ((1j * k * z).real - 0.5) / TWO_PI
    out = np.where(small, diag, off)
    return float(out) if out.ndim == 0 else out


def _double_layer_matrix(
    k: complex, target_angles: np.ndarray, grid: BoundaryGrid
) -> np.ndarray:
    zeta = np.exp(1j * grid.theta)
    z = np.exp(1j * target_angles)
    return faddeev_dlayer_kernel(k, z[:, None], zeta[None, :]) * grid.weights


def born_cgo_boundary(
    nd_diff: NDMatrix,
    k: complex,
    grid: BoundaryGrid | None = None,
    target_angles: np.ndarray | None = None,
) -> BoundaryTrace | np.ndarray:
    """Approximate CGO boundary values from a difference matrix.

    psi(z) = e^{ikz} - (B_k + 1/2) applied to (background minus
    measurement) acting on the exponential current; nd_diff holds the
    measurement-minus-background matrix, so its negative is used.  The
    +1/2 is the exterior jump constant of the double layer built from the
    continuous kernel: on the unit circle the Laplace limit of the kernel
    is the constant -1/(4 pi), whose boundary operator applied to 1 gives
    -1/2, and the exterior double-layer limit of 1 must vanish.  Returns
    a BoundaryTrace on the grid, or plain values when `target_angles`
    selects other evaluation points on the circle.
    """
    if k == 0:
        raise ValueError("CGO solutions are indexed by nonzero k")
    if nd_diff.kind != "difference":
        raise ValueError("born_cgo_boundary needs a difference matrix")
    grid = grid if grid is not None else unit_disk_grid()
    if grid.domain_kind != "unit-disk":
        raise ValueError("Born CGO evaluation is defined on the unit disk")
    idx = nd_diff.index_set
    grid.require_order(idx.N)
    _warn_tail(k, idx.N)

    c = exponential_coefficients(k, idx.N)
    cv = np.zeros(idx.size, dtype=complex)
    for m in range(1, idx.N + 1):
        cv[idx.position(m)] = c[m - 1]
    a_coeffs = -nd_diff.apply(cv)  # (R_1 - R_sigma) d/dnu e^{ikz}

    custom = target_angles is not None
    angles = np.asarray(target_angles) if custom else grid.theta
    a_on_grid = trace_from_coefficients(a_coeffs, idx, grid).values
    B = _double_layer_matrix(k, angles, grid)
    ns = np.array(idx.indices)
    a_at_targets = (
        np.exp(1j * np.outer(angles, ns)) / np.sqrt(TWO_PI) @ a_coeffs
        if custom
        else a_on_grid
    )
    z = np.exp(1j * angles)
    psi = np.exp(1j * k * z) - (B @ a_on_grid + 0.5 * a_at_targets)
    if custom:
        return psi
    return BoundaryTrace(grid=grid, values=psi)


def cgo_sinogram(
    nd_diff: NDMatrix,
    r: float,
    theta_grid: np.ndarray,
    phi_grid: np.ndarray,
    grid: BoundaryGrid | None = None,
) -> np.ndarray:
    """mu - 1 on the circle |k| = r over a (boundary angle, arg k) grid.

    Output[i, j] = exp(-i r e^{i(phi_j + theta_i)}) psi(e^{i theta_i},
    r e^{i phi_j}) - 1.
    """
    if r <= 0:
        raise ValueError("sinogram radius must be positive")
    grid = grid if grid is not None else unit_disk_grid()
    theta_grid = np.asarray(theta_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    out = np.zeros((len(theta_grid), len(phi_grid)), dtype=complex)
    z = np.exp(1j * theta_grid)
    with _collected_tail_warnings(nd_diff.index_set.N):
        for j, phi in enumerate(phi_grid):
            k = r * np.exp(1j * phi)
            psi = born_cgo_boundary(nd_diff, k, grid, target_angles=theta_grid)
            out[:, j] = np.exp(-1j * k * z) * psi - 1.0
    return out


def born_scattering(nd_diff: NDMatrix, k: complex) -> complex:
    """Scattering transform value by basis expansion of the exponentials.

    t(k) = integral over the boundary of (d/dnu e^{i conj(k) conj(z)})
    times the background-minus-measurement operator applied to
    d/dnu e^{ikz}; here both exponentials are truncated at the matrix
    order and the pairing reduces to a weighted coefficient sum (the
    pairing integral does not conjugate).
    """
    if k == 0:
        raise ValueError("scattering transform is defined for nonzero k")
    if nd_diff.kind != "difference":
        raise ValueError("born_scattering needs a difference matrix")
    idx = nd_diff.index_set
    _warn_tail(k, idx.N)
    c = exponential_coefficients(k, idx.N)
    d = exponential_coefficients(k, idx.N, conjugated=True)
    cv = np.zeros(idx.size, dtype=complex)
    for m in range(1, idx.N + 1):
        cv[idx.position(m)] = c[m - 1]
    u = -nd_diff.apply(cv)
    um = np.array([u[idx.position(m)] for m in range(1, idx.N + 1)])
    return complex(np.sum(d * um))


def born_scattering_quadrature(
    nd_diff: NDMatrix, k: complex, grid: BoundaryGrid | None = None
) -> complex:
    """Independent evaluation of t(k) by direct boundary quadrature.

    The exponential normal derivatives are sampled on the grid, the input
    one is expanded in the basis by quadrature, the matrix is applied, and
    the final pairing is integrated by the trapezoid rule.  Agrees with
    the basis-expansion path to quadrature accuracy; kept as an oracle.
    """
    if k == 0:
        raise ValueError("scattering transform is defined for nonzero k")
    grid = grid if grid is not None else unit_disk_grid()
    idx = nd_diff.index_set
    zeta = np.exp(1j * grid.theta)
    g = 1j * k * zeta * np.exp(1j * k * zeta)
    f = 1j * np.conj(k) * np.conj(zeta) * np.exp(1j * np.conj(k) * np.conj(zeta))
    g_coeffs = basis_coefficients(BoundaryTrace(grid=grid, values=g), idx)
    u = trace_from_coefficients(-nd_diff.apply(g_coeffs), idx, grid)
    return complex(np.sum(f * u.values * grid.weights))


def scattering_grid(
    nd_diff: NDMatrix,
    R: float,
    c: float | None = None,
    m: int = 33,
    connective: str = "or",
) -> ScatteringGrid:
    """Evaluate t on a uniform k-grid, truncate at |k| < R, threshold at c.

    With the default "or" connective a node is kept when either the real
    or the imaginary part stays below c in magnitude; "and" requires both.
    c = None disables thresholding (pure radial truncation).
    """
    kg = KGrid(R=R, m=m)
    nodes = kg.nodes
    keep = kg.admissible()
    values = np.zeros_like(nodes, dtype=complex)
    with _collected_tail_warnings(nd_diff.index_set.N):
        for i, j in zip(*np.nonzero(keep)):
            values[i, j] = born_scattering(nd_diff, complex(nodes[i, j]))
    mask = keep.copy()
    if c is not None:
        if c <= 0:
            raise ValueError("threshold c must be positive")
        re_ok = np.abs(values.real) < c
        im_ok = np.abs(values.imag) < c
        ok = (re_ok | im_ok) if connective == "or" else (re_ok & im_ok)
        mask &= ok
    values[~mask] = 0.0
    return ScatteringGrid(kgrid=kg, values=values, mask=mask, c=c, connective=connective)
