"""Partial-boundary EIT: simulated ND measurements and D-bar reconstruction."""

from .boundary import (
    BoundaryGrid,
    BoundaryTrace,
    FourierIndexSet,
    fourier_basis,
    inner_product,
    norm_l2,
    parametrized_grid,
    unit_disk_grid,
    zero_mean_project,
)
from .dbar import (
    DbarResult,
    DbarWorkspace,
    ReconstructionField,
    make_workspace,
    reconstruct,
    solve_dbar_at,
)
from .forward import (
    AnalyticLaplaceSolver,
    ConductivityField,
    GammaArc,
    Inclusion,
    NDMatrix,
    NeumannSolver,
    analytic_nd_laplace,
    build_phantom,
    nd_matrix,
    solve_neumann,
)
from .mesh import Mesh, parametrized_mesh, points_inside, refine, unit_disk_mesh
from .partial import (
    add_noise,
    apply_partial_map,
    combine_matrices,
    difference_matrix,
    extrapolate_difference,
    partial_nd_matrix,
    restrict_trace,
)
from .scattering import (
    KGrid,
    ScatteringGrid,
    born_cgo_boundary,
    born_scattering,
    born_scattering_quadrature,
    cgo_sinogram,
    faddeev_dlayer_kernel,
    scattering_grid,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticLaplaceSolver",
    "BoundaryGrid",
    "BoundaryTrace",
    "ConductivityField",
    "DbarResult",
    "DbarWorkspace",
    "FourierIndexSet",
    "GammaArc",
    "Inclusion",
    "KGrid",
    "Mesh",
    "NDMatrix",
    "NeumannSolver",
    "ReconstructionField",
    "ScatteringGrid",
    "add_noise",
    "analytic_nd_laplace",
    "apply_partial_map",
    "born_cgo_boundary",
    "born_scattering",
    "born_scattering_quadrature",
    "build_phantom",
    "cgo_sinogram",
    "combine_matrices",
    "difference_matrix",
    "extrapolate_difference",
    "faddeev_dlayer_kernel",
    "fourier_basis",
    "inner_product",
    "make_workspace",
    "nd_matrix",
    "norm_l2",
    "parametrized_grid",
    "parametrized_mesh",
    "partial_nd_matrix",
    "points_inside",
    "reconstruct",
    "refine",
    "restrict_trace",
    "scattering_grid",
    "solve_dbar_at",
    "solve_neumann",
    "unit_disk_grid",
    "unit_disk_mesh",
    "zero_mean_project",
]
