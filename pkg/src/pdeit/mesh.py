"""Triangulated domains for the finite element forward solver."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .boundary import BoundaryGrid, parametrized_grid, unit_disk_grid

#: default target edge length for disk meshes
DEFAULT_EDGE = 0.02


@dataclass(frozen=True)
class Mesh:
    """P1 triangulation whose boundary nodes coincide with a BoundaryGrid.

    boundary_index[j] is the vertex index of grid node j, ordered by the
    grid angle, so traces can be read off solutions directly.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_index: np.ndarray
    grid: BoundaryGrid = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices
        t = self.triangles
        d1 = p[t[:, 1]] - p[t[:, 0]]
        d2 = p[t[:, 2]] - p[t[:, 0]]
        return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _ring_points(M: int, n_rings: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference-disk point cloud: center, proportional rings, outer grid ring.

    Ring i of n_rings carries about M*i/n_rings nodes so triangles stay
    close to isotropic; alternate rings are staggered by half a step.
    Returns (points, radii) with the outer M nodes last, in angle order.
    """
    pts = [np.zeros((1, 2))]
    for i in range(1, n_rings):
        r = i / n_rings
        m_i = max(6, int(round(M * r)))
        th = 2 * np.pi * np.arange(m_i) / m_i + (i % 2) * np.pi / m_i
        pts.append(np.column_stack([r * np.cos(th), r * np.sin(th)]))
    th = 2 * np.pi * np.arange(M) / M
    pts.append(np.column_stack([np.cos(th), np.sin(th)]))
    return np.vstack(pts), th


def unit_disk_mesh(M: int = 256, edge_target: float = DEFAULT_EDGE) -> Mesh:
    """Unstructured disk mesh whose outer ring is the uniform boundary grid."""
    if not 0 < edge_target < 1:
        raise ValueError("edge_target must lie in (0, 1)")
    n_rings = max(2, int(round(1.0 / edge_target)))
    points, _ = _ring_points(M, n_rings)
    tri = Delaunay(points)
    grid = unit_disk_grid(M)
    return Mesh(
        vertices=points,
        triangles=tri.simplices.copy(),
        boundary_index=np.arange(len(points) - M, len(points)),
        grid=grid,
    )


def parametrized_mesh(
    vertices: np.ndarray, M: int = 256, edge_target: float = DEFAULT_EDGE
) -> Mesh:
    """Mesh of a star-shaped polygonal domain.

    The reference disk mesh is mapped radially so its outer ring lands on
    the boundary grid nodes (uniform arclength points of the polyline).
    The domain must be star-shaped with respect to the origin; inverted
    triangles after mapping are rejected.
    """
    grid = parametrized_grid(vertices, M)
    n_rings = max(2, int(round(1.0 / edge_target)))
    ref, _ = _ring_points(M, n_rings)
    tri = Delaunay(ref)

    # boundary point as a function of the arclength angle, interpolated
    # periodically through the grid nodes
    bpos = grid.positions
    phi_nodes = grid.theta
    ref_angle = np.arctan2(ref[:, 1], ref[:, 0]) % (2 * np.pi)
    ref_rad = np.linalg.norm(ref, axis=1)
    bx = np.interp(ref_angle, phi_nodes, bpos[:, 0], period=2 * np.pi)
    by = np.interp(ref_angle, phi_nodes, bpos[:, 1], period=2 * np.pi)
    mapped = ref_rad[:, None] * np.column_stack([bx, by])
    # outer ring lands exactly on the grid nodes
    mapped[-M:] = bpos

    mesh = Mesh(
        vertices=mapped,
        triangles=tri.simplices.copy(),
        boundary_index=np.arange(len(mapped) - M, len(mapped)),
        grid=grid,
    )
    areas = _signed_areas(mesh)
    if not (np.all(areas > 0) or np.all(areas < 0)):
        raise ValueError(
            "radial mapping inverted triangles; domain is not star-shaped "
            "with respect to the origin"
        )
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """One uniform red refinement; boundary midpoints are projected back.

    On the disk the refined boundary is the uniform 2M grid; on
    parametrized domains midpoints are projected onto the source polyline.
    """
    V = mesh.vertices
    T = mesh.triangles
    edges = {}
    mid_of = np.zeros((len(T), 3), dtype=int)
    new_pts = [V]
    next_id = len(V)
    mids = []
    for t_i, tri in enumerate(T):
        for e_i, (a, b) in enumerate(((tri[1], tri[2]), (tri[2], tri[0]), (tri[0], tri[1]))):
            key = (min(a, b), max(a, b))
            if key not in edges:
                edges[key] = next_id
                mids.append(0.5 * (V[a] + V[b]))
                next_id += 1
            mid_of[t_i, e_i] = edges[key]
    mids = np.array(mids)
    bset = set(mesh.boundary_index.tolist())
    # project boundary-edge midpoints onto the true boundary
    for key, idx in edges.items():
        a, b = key
        if a in bset and b in bset:
            j = idx - len(V)
            if mesh.grid.domain_kind == "unit-disk":
                mids[j] = mids[j] / np.linalg.norm(mids[j])
            else:
                mids[j] = _project_polyline(mids[j], mesh.grid.source_vertices)
    allV = np.vstack([V, mids])

    newT = []
    for t_i, tri in enumerate(T):
        m0, m1, m2 = mid_of[t_i]
        a, b, c = tri
        newT += [[a, m2, m1], [b, m0, m2], [c, m1, m0], [m0, m1, m2]]
    newT = np.array(newT, dtype=int)

    # refined boundary grid: 2M nodes, original angles interleaved with midpoints
    M2 = 2 * mesh.grid.M
    if mesh.grid.domain_kind == "unit-disk":
        grid2 = unit_disk_grid(M2)
    else:
        grid2 = parametrized_grid(mesh.grid.source_vertices, M2)
    bidx2 = _match_boundary(allV, grid2.positions)
    allV[bidx2] = grid2.positions  # snap to exact grid positions
    return Mesh(vertices=allV, triangles=newT, boundary_index=bidx2, grid=grid2)


def _signed_areas(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices
    t = mesh.triangles
    d1 = p[t[:, 1]] - p[t[:, 0]]
    d2 = p[t[:, 2]] - p[t[:, 0]]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def _project_polyline(p: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    closed = np.vstack([vertices, vertices[:1]])
    a = closed[:-1]
    d = np.diff(closed, axis=0)
    t = np.clip(np.einsum("ij,ij->i", p - a, d) / np.einsum("ij,ij->i", d, d), 0, 1)
    proj = a + t[:, None] * d
    return proj[np.argmin(np.linalg.norm(proj - p, axis=1))]


def _match_boundary(vertices: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Vertex index of the nearest mesh vertex to each target grid node."""
    from scipy.spatial import cKDTree

    tree = cKDTree(vertices)
    dists, idx = tree.query(targets)
    if np.any(dists > 1e-8):
        raise RuntimeError("refined mesh boundary does not match the fine grid")
    return idx


def points_inside(mesh_or_polygon, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Even-odd point-in-polygon test against a boundary polyline.

    Points within `tol` of an edge count as outside, so values are only
    reported strictly inside the domain.
    """
    poly = (
        mesh_or_polygon.grid.positions
        if isinstance(mesh_or_polygon, Mesh)
        else np.asarray(mesh_or_polygon)
    )
    pts = np.atleast_2d(points)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    px, py = poly[:, 0], poly[:, 1]
    for i in range(n):
        x1, y1 = px[i], py[i]
        x2, y2 = px[(i + 1) % n], py[(i + 1) % n]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    # tolerance band: drop points too close to an edge
    near = _dist_to_polyline(pts, poly) <= tol
    return inside & ~near


def _dist_to_polyline(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    closed = np.vstack([poly, poly[:1]])
    a = closed[:-1]
    d = np.diff(closed, axis=0)
    dd = np.einsum("ij,ij->i", d, d)
    best = np.full(len(pts), np.inf)
    for i in range(len(a)):
        t = np.clip(((pts - a[i]) @ d[i]) / dd[i], 0.0, 1.0)
        proj = a[i] + t[:, None] * d[i]
        best = np.minimum(best, np.linalg.norm(pts - proj, axis=1))
    return best
