"""Shared fixtures; expensive FEM objects are built once per session."""
import numpy as np
import pytest

from pdeit import (
    FourierIndexSet,
    NeumannSolver,
    build_phantom,
    difference_matrix,
    nd_matrix,
    unit_disk_grid,
    unit_disk_mesh,
)


@pytest.fixture(scope="session")
def disk_grid():
    return unit_disk_grid(256)


@pytest.fixture(scope="session")
def disk_mesh():
    return unit_disk_mesh(256, 0.02)


@pytest.fixture(scope="session")
def circle_field(disk_mesh):
    return build_phantom("circle", disk_mesh)


@pytest.fixture(scope="session")
def circle_solver(circle_field):
    return NeumannSolver(circle_field)


@pytest.fixture(scope="session")
def one_solver(disk_mesh):
    return NeumannSolver(build_phantom("uniform", disk_mesh))


@pytest.fixture(scope="session")
def idx16():
    return FourierIndexSet(N=16)


@pytest.fixture(scope="session")
def idx8():
    return FourierIndexSet(N=8)


@pytest.fixture(scope="session")
def circle_diff16(circle_solver, one_solver, idx16):
    """Full-boundary difference matrix of the circle phantom, N = 16."""
    return difference_matrix(
        nd_matrix(circle_solver, idx16), nd_matrix(one_solver, idx16)
    )


@pytest.fixture(scope="session")
def circle_diff8(circle_solver, one_solver, idx8):
    return difference_matrix(
        nd_matrix(circle_solver, idx8), nd_matrix(one_solver, idx8)
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def fine_mesh():
    return unit_disk_mesh(512, 0.01)


@pytest.fixture(scope="session")
def scattering_slope_data(fine_mesh, idx16):
    """Slopes of |t - t_partial|/|k| vs h for the cut-off map at fixed k.

    Computed once on the fine grid over h = 2*pi*{1/128..1/16}; the
    leading linear regime needs nh small, so the sweep sits below the
    default experiment range.
    """
    import warnings

    from pdeit import GammaArc, born_scattering, partial_nd_matrix
    from pdeit.partial import difference_matrix as diff

    solver = NeumannSolver(build_phantom("circle", fine_mesh))
    one = NeumannSolver(build_phantom("uniform", fine_mesh))
    full = diff(nd_matrix(solver, idx16), nd_matrix(one, idx16))
    hs = 2 * np.pi * np.arange(1, 9) / 128
    slopes = {}
    for k in (1.0, 2.0, 3j):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t_full = born_scattering(full, k)
        errs = []
        for h in hs:
            gamma = GammaArc(h=float(h))
            pdiff = diff(
                partial_nd_matrix(solver, "cutoff", gamma, idx16),
                partial_nd_matrix(one, "cutoff", gamma, idx16),
            )
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                errs.append(abs(born_scattering(pdiff, k) - t_full) / abs(k))
        slopes[k] = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return slopes
