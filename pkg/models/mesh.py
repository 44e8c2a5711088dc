# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Structured triangulations of squares and their barycentric dual geometry.
"""
from dataclasses import dataclass

import numpy as np

from .ops.p1 import centroids, signed_areas


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    Conforming triangulation with counterclockwise triangles.

    Structured meshes (n > 0) cover the square origin + [0, length]^2 with
    n cells per side; cell (i, j) with k = i + n j holds triangles 2k (below
    the diagonal) and 2k + 1 (above it).
    """
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_node_flags: np.ndarray
    H: float
    n: int = 0
    length: float = 1.0
    origin: tuple = (0.0, 0.0)

    def __post_init__(self):
        for arr in (self.nodes, self.triangles, self.boundary_node_flags):
            arr.setflags(write=False)

    @property
    def num_nodes(self):
        return self.nodes.shape[0]

    @property
    def num_elements(self):
        return self.triangles.shape[0]

    @property
    def coords(self):
        return self.nodes[self.triangles]

    @property
    def areas(self):
        return signed_areas(self.coords)

    @property
    def barycenters(self):
        return centroids(self.coords)

    @property
    def is_structured(self):
        return self.n > 0


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    area: float
    barycenter: np.ndarray
    edge_midpoints: np.ndarray  # midpoint of edge (v_k, v_{k+1}) in row k


@dataclass(frozen=True, eq=False)
class DualGeometry:
    """
    Dual data of one element, indexed by local vertex i.

    Segment 0 of vertex i joins the midpoint of edge (v_i, v_{i+1}) to the
    barycenter, segment 1 the midpoint of edge (v_{i-1}, v_i). Normals point
    out of the dual region of v_i.
    """
    sub_areas: np.ndarray         # [3]
    segment_endpoints: np.ndarray  # [3, 2, 2, 2] (vertex, segment, endpoint, xy)
    segment_lengths: np.ndarray   # [3, 2]
    segment_normals: np.ndarray   # [3, 2, 2]


def _edge_lengths(nodes, triangles):
    coords = nodes[triangles]
    return np.linalg.norm(coords - np.roll(coords, -1, axis=1), axis=-1)


def build_square_mesh(n, length=1.0, origin=(0.0, 0.0)):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError('number of subdivisions must be a positive integer, got {}'.format(n))
    n = int(n)
    ticks = np.linspace(0.0, 1.0, n + 1)
    xs, ys = np.meshgrid(ticks, ticks, indexing='xy')
    unit = np.stack([xs.ravel(), ys.ravel()], axis=-1)
    boundary = np.any((unit == 0.0) | (unit == 1.0), axis=1)
    nodes = np.asarray(origin, dtype=np.float64) + length * unit

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing='xy')
    v00 = (i + (n + 1) * j).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.stack([v00, v10, v11], axis=-1)
    upper = np.stack([v00, v11, v01], axis=-1)
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    H = float(np.sqrt(2.0) * length / n)
    return TriMesh(nodes, triangles, boundary, H, n, float(length), tuple(float(o) for o in origin))


def build_unit_square_mesh(n):
    return build_square_mesh(n)


def single_triangle_mesh(vertices):
    """One-element mesh, handy for local checks on a given triangle."""
    nodes = np.array(vertices, dtype=np.float64).reshape(3, 2)
    triangles = np.array([[0, 1, 2]])
    if signed_areas(nodes[triangles])[0] <= 0:
        raise ValueError('vertices must be counterclockwise and non-degenerate')
    H = float(_edge_lengths(nodes, triangles).max())
    return TriMesh(nodes, triangles, np.ones(3, dtype=bool), H)


def mesh_size(mesh):
    if mesh.num_elements == 0:
        raise ValueError('mesh_size of an empty mesh')
    return float(_edge_lengths(mesh.nodes, mesh.triangles).max())


def _check_element(mesh, k):
    if not 0 <= k < mesh.num_elements:
        raise IndexError('element index {} out of range [0, {})'.format(k, mesh.num_elements))


def element_geometry(mesh, k):
    _check_element(mesh, k)
    coords = mesh.nodes[mesh.triangles[k]]
    midpoints = 0.5 * (coords + np.roll(coords, -1, axis=0))
    return ElementGeometry(float(signed_areas(coords[None])[0]), coords.mean(axis=0), midpoints)


def dual_segments(mesh):
    """
    Dual segment lengths [M, 3, 2] and outward unit normals [M, 3, 2, 2] for
    every element, with the segment convention of DualGeometry.
    """
    coords = mesh.coords
    bary = coords.mean(axis=1)
    mids = 0.5 * (coords + np.roll(coords, -1, axis=1))
    # segment 0 of vertex i uses midpoint i, segment 1 uses midpoint i - 1
    starts = np.stack([mids, np.roll(mids, 1, axis=1)], axis=2)     # [M, 3, 2, 2]
    direction = bary[:, None, None, :] - starts
    lengths = np.linalg.norm(direction, axis=-1)
    normals = np.stack([direction[..., 1], -direction[..., 0]], axis=-1) / lengths[..., None]
    away = np.einsum('mvsk,mvsk->mvs', normals, starts - coords[:, :, None, :])
    normals = np.where((away < 0)[..., None], -normals, normals)
    return lengths, normals, starts


def dual_geometry(mesh, k):
    _check_element(mesh, k)
    lengths, normals, starts = dual_segments(mesh)
    area = float(mesh.areas[k])
    bary = mesh.barycenters[k]
    endpoints = np.stack([starts[k], np.broadcast_to(bary, starts[k].shape)], axis=2)
    return DualGeometry(np.full(3, area / 3.0), endpoints, lengths[k], normals[k])


def locate(mesh, points, tol=1e-12):
    """Index of the structured-mesh triangle containing each point."""
    assert mesh.is_structured, "point location needs a structured mesh"
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    local = (points - np.asarray(mesh.origin)) / mesh.length
    if np.any(local < -tol) or np.any(local > 1.0 + tol):
        raise ValueError('point outside the mesh domain')
    scaled = np.clip(local, 0.0, 1.0) * mesh.n
    cell = np.minimum(np.floor(scaled).astype(np.int64), mesh.n - 1)
    frac = scaled - cell
    k = cell[:, 0] + mesh.n * cell[:, 1]
    return 2 * k + (frac[:, 0] < frac[:, 1])


def dump_mesh(mesh, path):
    with open(path, 'w') as f:
        for (x, y), flag in zip(mesh.nodes, mesh.boundary_node_flags):
            f.write('{:.17g} {:.17g} {}\n'.format(x, y, int(flag)))
        for i, j, k in mesh.triangles:
            f.write('{} {} {}\n'.format(i, j, k))
