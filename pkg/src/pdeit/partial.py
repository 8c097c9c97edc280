"""Partial-boundary current maps, restricted measurements, and gap filling.

Two ways of turning a full-boundary current pattern into one supported on
the accessible arc Gamma: a cut-off (restrict and remove the arc mean, a
projection) and a scaling (compress the whole pattern onto the arc).
Measurements taken on Gamma only are extended back to the full boundary by
a cubic fill of the gap, applied to difference data against the unit
background, which is smooth enough for polynomial extension.
"""
from __future__ import annotations

import numpy as np

from .boundary import (
    TWO_PI,
    BoundaryTrace,
    FourierIndexSet,
    basis_coefficients,
    fourier_basis,
)
from .forward import (
    AnalyticLaplaceSolver,
    ConductivityField,
    GammaArc,
    NDMatrix,
    NeumannSolver,
    _as_solver,
    _require_zero_mean,
)

MAP_KINDS = ("cutoff", "scaling")

_DERIV_STENCIL = np.array([11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0])


def apply_partial_map(
    map_kind: str, phi: BoundaryTrace, gamma: GammaArc
) -> BoundaryTrace:
    """Send a zero-mean current pattern to one supported on Gamma.

    cutoff: subtract the Gamma-average, zero outside; idempotent.
    scaling: squeeze the full pattern onto Gamma by the angle change
    t = rotation + (psi - h/2) / r with r = |Gamma| / (2*pi); evaluated
    through the trigonometric interpolant of the samples, so basis
    functions are resampled exactly.
    """
    if map_kind not in MAP_KINDS:
        raise ValueError(f"unknown partial-boundary map {map_kind!r}")
    _require_zero_mean(phi)
    theta = phi.grid.theta
    gap = gamma.gap_mask(theta)
    out = np.zeros_like(phi.values)
    keep = ~gap
    if map_kind == "cutoff":
        if np.any(keep):
            out[keep] = phi.values[keep] - phi.values[keep].mean()
    else:
        r = gamma.measure / TWO_PI
        if r <= 0:
            raise ValueError("scaling map needs a nonempty Gamma")
        psi = np.mod(theta[keep] - gamma.rotation, TWO_PI)
        stretched = gamma.rotation + (psi - gamma.h / 2) / r
        out[keep] = _trig_resample(phi.values, stretched)
    return BoundaryTrace(grid=phi.grid, values=out)


def _trig_resample(values: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of uniform samples."""
    M = len(values)
    coeffs = np.fft.fft(values) / M
    modes = np.fft.fftfreq(M, d=1.0 / M)
    return np.exp(1j * np.outer(angles, modes)) @ coeffs


def restrict_trace(u: BoundaryTrace, gamma: GammaArc) -> BoundaryTrace:
    """Replace values on the inaccessible arc with missing-data markers."""
    out = u.values.copy()
    out[gamma.gap_mask(u.grid.theta)] = np.nan + 1j * np.nan
    return BoundaryTrace(grid=u.grid, values=out)


def extrapolate_difference(
    gtilde: BoundaryTrace,
    gamma: GammaArc,
    endpoint_data: tuple[complex, complex, complex, complex] | None = None,
) -> BoundaryTrace:
    """Fill the measurement gap with a cubic polynomial in the angle.

    The gap is the open interval (-a, a) around the rotation angle, with
    a = h/2.  By default the cubic matches the first valid node on either
    side, with one-sided 4-point finite-difference derivatives there.  When
    `endpoint_data` = (value at -a, value at +a, derivative at -a,
    derivative at +a) is supplied, the cubic interpolates at +-a exactly.
    """
    theta = gtilde.grid.theta
    gap = gamma.gap_mask(theta)
    expected = gtilde.mask()
    if not np.array_equal(expected, gap):
        raise ValueError("missing-data markers do not match the gap of this arc")
    if not np.any(gap):
        return BoundaryTrace(grid=gtilde.grid, values=gtilde.values.copy())

    M = gtilde.grid.M
    step = TWO_PI / M
    d = np.mod(theta - gamma.rotation, TWO_PI)
    a = gamma.h / 2
    valid = ~gap
    if np.count_nonzero(valid) < 8:
        raise ValueError(
            "need at least 4 valid nodes adjacent to each gap endpoint "
            "for the derivative stencils"
        )

    if endpoint_data is not None:
        f_l, f_r, df_l, df_r = endpoint_data
        x_l, x_r = -a, a
    else:
        # nodes ordered by distance from each gap edge along Gamma
        order = np.argsort(d[valid])
        vals = gtilde.values[valid]
        right_vals = vals[order[:4]]  # d ascending from a
        left_vals = vals[order[::-1][:4]]  # d descending from 2*pi - a
        x_r = d[valid][order[0]]
        x_l = d[valid][order[-1]] - TWO_PI
        f_r, f_l = right_vals[0], left_vals[0]
        df_r = np.dot(-_DERIV_STENCIL, right_vals) / step
        df_l = np.dot(_DERIV_STENCIL, left_vals) / step

    span = x_r - x_l
    psi = np.where(d <= np.pi, d, d - TWO_PI)
    s = (psi[gap] - x_l) / span
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    fill = h00 * f_l + h10 * span * df_l + h01 * f_r + h11 * span * df_r

    out = gtilde.values.copy()
    out[gap] = fill
    return BoundaryTrace(grid=gtilde.grid, values=out)


def partial_nd_matrix(
    field_or_solver,
    map_kind: str,
    gamma: GammaArc,
    idx: FourierIndexSet,
    mode: str = "ideal-full",
    background_solver=None,
) -> NDMatrix:
    """Measurement matrix for currents pushed through a partial-boundary map.

    mode "ideal-full" pairs the full-boundary voltage trace directly and
    returns a plain partial matrix.  mode "extrapolated" simulates the
    realistic acquisition: the trace is differenced against the unit
    background on the same discretization, restricted to Gamma,
    cubically extended, and the resulting *difference* matrix is returned
    (kind "difference").  The plain partial matrix can be recovered by
    adding the background partial matrix computed in ideal mode.
    """
    if mode not in ("ideal-full", "extrapolated"):
        raise ValueError(f"unknown measurement mode {mode!r}")
    solver = _as_solver(field_or_solver)
    solver.grid.require_order(idx.N)
    if mode == "extrapolated":
        background = background_solver or _background_for(solver)
    n = idx.size
    E = np.zeros((n, n), dtype=complex)
    for j, ell in enumerate(idx.indices):
        current = apply_partial_map(map_kind, fourier_basis(ell, solver.grid), gamma)
        trace = solver.solve_trace(current)
        if mode == "extrapolated":
            ref = background.solve_trace(current)
            diff = BoundaryTrace(grid=trace.grid, values=trace.values - ref.values)
            filled = extrapolate_difference(restrict_trace(diff, gamma), gamma)
            E[:, j] = basis_coefficients(filled, idx)
        else:
            E[:, j] = basis_coefficients(trace, idx)
    kind = "difference" if mode == "extrapolated" else f"partial-{map_kind}"
    return NDMatrix(index_set=idx, entries=E, kind=kind, gamma=gamma)


def _background_for(solver):
    """sigma == 1 solver on the same discretization as `solver`."""
    if isinstance(solver, AnalyticLaplaceSolver):
        return solver
    field = ConductivityField(
        mesh=solver.mesh, sigma=np.ones(solver.mesh.n_vertices)
    )
    return NeumannSolver(field)


def difference_matrix(a: NDMatrix, b: NDMatrix) -> NDMatrix:
    """Entrywise a - b (measurement minus background)."""
    _require_same_index(a, b)
    gamma = a.gamma if _gamma_equal(a.gamma, b.gamma) else None
    return NDMatrix(
        index_set=a.index_set, entries=a.entries - b.entries,
        kind="difference", gamma=gamma,
    )


def combine_matrices(a: NDMatrix, b: NDMatrix) -> NDMatrix:
    """Average two difference matrices (data fusion across maps)."""
    _require_same_index(a, b)
    if a.kind != "difference" or b.kind != "difference":
        raise ValueError("only difference matrices can be combined")
    gamma = a.gamma if _gamma_equal(a.gamma, b.gamma) else None
    return NDMatrix(
        index_set=a.index_set, entries=0.5 * (a.entries + b.entries),
        kind="difference", gamma=gamma,
    )


def add_noise(a: NDMatrix, level: float, seed: int) -> NDMatrix:
    """Gaussian perturbation with complex entry scale level*||a||_F / (2N).

    Real and imaginary parts each get std scale/sqrt(2), so the expected
    relative Frobenius perturbation equals `level`.
    """
    if level < 0:
        raise ValueError("noise level must be nonnegative")
    if level == 0:
        return a
    rng = np.random.default_rng(seed)
    n = a.index_set.size
    scale = level * a.frobenius() / n
    noise = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * (
        scale / np.sqrt(2.0)
    )
    return NDMatrix(
        index_set=a.index_set, entries=a.entries + noise,
        kind=a.kind, gamma=a.gamma,
    )


def _require_same_index(a: NDMatrix, b: NDMatrix) -> None:
    if a.index_set.N != b.index_set.N:
        raise ValueError("matrices use different index sets")


def _gamma_equal(g1: GammaArc | None, g2: GammaArc | None) -> bool:
    if g1 is None or g2 is None:
        return g1 is g2
    return g1.h == g2.h and g1.rotation == g2.rotation
