# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Vectorized kernels for piecewise linear (P1) triangles.

Every function works on a batch of elements given as vertex coordinates of
shape [num_elements, 3, 2].
"""
import numpy as np


_SQRT15 = np.sqrt(15.0)

# 7-point rule on triangles, exact up to degree 5 (barycentric points)
DUNAVANT7_POINTS = np.array([
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [(9.0 - 2.0 * _SQRT15) / 21.0, (6.0 + _SQRT15) / 21.0, (6.0 + _SQRT15) / 21.0],
    [(6.0 + _SQRT15) / 21.0, (9.0 - 2.0 * _SQRT15) / 21.0, (6.0 + _SQRT15) / 21.0],
    [(6.0 + _SQRT15) / 21.0, (6.0 + _SQRT15) / 21.0, (9.0 - 2.0 * _SQRT15) / 21.0],
    [(9.0 + 2.0 * _SQRT15) / 21.0, (6.0 - _SQRT15) / 21.0, (6.0 - _SQRT15) / 21.0],
    [(6.0 - _SQRT15) / 21.0, (9.0 + 2.0 * _SQRT15) / 21.0, (6.0 - _SQRT15) / 21.0],
    [(6.0 - _SQRT15) / 21.0, (6.0 - _SQRT15) / 21.0, (9.0 + 2.0 * _SQRT15) / 21.0],
])
DUNAVANT7_WEIGHTS = np.array([
    9.0 / 40.0,
    (155.0 + _SQRT15) / 1200.0, (155.0 + _SQRT15) / 1200.0, (155.0 + _SQRT15) / 1200.0,
    (155.0 - _SQRT15) / 1200.0, (155.0 - _SQRT15) / 1200.0, (155.0 - _SQRT15) / 1200.0,
])


def signed_areas(coords):
    e1 = coords[:, 1] - coords[:, 0]
    e2 = coords[:, 2] - coords[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def centroids(coords):
    return coords.mean(axis=1)


def basis_gradients(coords):
    """
    Gradients of the three barycentric basis functions, [num_elements, 3, 2].

    grad(lambda_i) = (y_{i+1} - y_{i+2}, x_{i+2} - x_{i+1}) / (2 |K|) for
    counterclockwise vertex order.
    """
    areas = signed_areas(coords)
    nxt = np.roll(coords, -1, axis=1)
    prv = np.roll(coords, -2, axis=1)
    grads = np.stack([nxt[..., 1] - prv[..., 1], prv[..., 0] - nxt[..., 0]], axis=-1)
    return grads / (2.0 * areas[:, None, None])


def element_gradients(coords, nodal_values):
    """Constant gradient of a P1 function per element; nodal_values is [num_elements, 3]."""
    return np.einsum('mij,mi->mj', basis_gradients(coords), nodal_values)


def local_stiffness(areas, grads, tensors):
    """|K| * grad(phi_i) . (A grad(phi_j)); row i is the test function."""
    return areas[:, None, None] * np.einsum('mik,mkl,mjl->mij', grads, tensors, grads)


def local_mass(areas):
    """Exact P1 mass matrix |K|/12 * (1 + delta_ij)."""
    pattern = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return areas[:, None, None] * pattern


def quadrature_points(coords, points=DUNAVANT7_POINTS):
    """Physical coordinates of barycentric quadrature points, [num_elements, num_points, 2]."""
    return np.einsum('qi,mik->mqk', points, coords)


def integrate(coords, fn, points=DUNAVANT7_POINTS, weights=DUNAVANT7_WEIGHTS):
    """Per-element integral of a vectorized scalar field fn(points[..., 2])."""
    values = fn(quadrature_points(coords, points))
    return np.abs(signed_areas(coords)) * (values @ weights)


def periodic_dof_map(n):
    """
    Identify opposite faces of an n x n structured square mesh.

    Node (i, j) at index i + (n+1) j maps to degree of freedom
    (i mod n) + n (j mod n).
    """
    i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing='xy')
    return ((i % n) + n * (j % n)).ravel()
