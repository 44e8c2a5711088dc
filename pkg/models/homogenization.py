# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Reference side of the studies: periodic unit-cell correctors, homogenized
coefficients, the fine-mesh homogenized solution and H1 error norms.
"""
import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .hmm_fvm import apply_dirichlet, assemble_fem, homogenized_provider, solve_macro
from .mesh import build_square_mesh, build_unit_square_mesh, locate
from .ops.p1 import (DUNAVANT7_POINTS, DUNAVANT7_WEIGHTS, basis_gradients, element_gradients,
                     local_stiffness, periodic_dof_map, quadrature_points)
from .ops.sparse import assemble_begin, solve


MIN_CELL_RESOLUTION = 8
DEFAULT_CELL_RESOLUTION = 64


@dataclass(frozen=True, eq=False)
class HomogenizedCoefficients:
    a0: np.ndarray
    b0: np.ndarray
    c0: float
    x: np.ndarray


@dataclass(frozen=True, eq=False)
class CorrectorField:
    mesh: object
    chi: np.ndarray    # [2, num_nodes], column j is the corrector of direction j
    x: np.ndarray


@dataclass(frozen=True, eq=False)
class ReferenceSolution:
    mesh: object
    values: np.ndarray
    coefficients: Callable
    residual: float


@functools.lru_cache(maxsize=32)
def cell_mesh(n, length=1.0):
    return build_square_mesh(n, length)


def solve_periodic_cell(mesh, a_elem, gradient, rel_tol=1e-10):
    """
    Periodic fluctuation chi with int a (g + grad chi) . grad phi = 0 for all
    periodic phi, on a structured square whose opposite faces are identified.

    Zero mean is enforced by pinning degree of freedom 0 and subtracting the
    area-weighted mean afterwards. Returns nodal values on mesh nodes.
    """
    assert mesh.is_structured, "periodic cell needs a structured square mesh"
    n = mesh.n
    dof = periodic_dof_map(n)
    tri = dof[mesh.triangles]
    areas = mesh.areas
    grads = basis_gradients(mesh.coords)
    flux = np.einsum('mkl,l->mk', a_elem, np.asarray(gradient, dtype=np.float64))

    assembler = assemble_begin(n * n)
    assembler.add_entries(np.repeat(tri, 3, axis=1), np.tile(tri, (1, 3)),
                          local_stiffness(areas, grads, a_elem).reshape(-1, 9))
    assembler.add_rhs(tri, -areas[:, None] * np.einsum('mik,mk->mi', grads, flux))
    pinned = np.zeros(n * n, dtype=bool)
    pinned[0] = True
    system = apply_dirichlet(assembler.finalize(), pinned)

    chi = solve(system, rel_tol=rel_tol).solution[dof]
    mean = np.sum(areas * chi[mesh.triangles].mean(axis=1)) / areas.sum()
    return chi - mean


def _cell_averages(mesh, a_elem, b_elem, c_elem, chi):
    """Flux averages <a (e_j + grad chi_j)>, <b . (e_j + grad chi_j)> and <c>."""
    areas = mesh.areas
    volume = areas.sum()
    a0 = np.zeros((2, 2))
    b0 = np.zeros(2)
    for j in range(2):
        grad = np.eye(2)[j] + element_gradients(mesh.coords, chi[j][mesh.triangles])
        a0[:, j] = np.einsum('m,mkl,ml->k', areas, a_elem, grad) / volume
        b0[j] = np.einsum('m,mk,mk->', areas, b_elem, grad) / volume
    c0 = float(np.sum(areas * c_elem) / volume)
    return a0, b0, c0


def _cell_coefficients(spec, x, mesh):
    y = mesh.barycenters
    x = np.broadcast_to(np.asarray(x, dtype=np.float64), y.shape)
    return spec.eval_a(x, y), spec.eval_b(x, y), spec.eval_c(x, y)


def periodic_corrector(spec, x, n_cell=DEFAULT_CELL_RESOLUTION):
    if n_cell < MIN_CELL_RESOLUTION:
        raise ValueError('n_cell must be at least {}, got {}'.format(MIN_CELL_RESOLUTION, n_cell))
    mesh = cell_mesh(int(n_cell))
    a_elem, _, _ = _cell_coefficients(spec, x, mesh)
    chi = np.stack([solve_periodic_cell(mesh, a_elem, np.eye(2)[j]) for j in range(2)])
    return CorrectorField(mesh, chi, np.asarray(x, dtype=np.float64))


def homogenized_coefficients(spec, x, n_cell=DEFAULT_CELL_RESOLUTION):
    corrector = periodic_corrector(spec, x, n_cell)
    a_elem, b_elem, c_elem = _cell_coefficients(spec, x, corrector.mesh)
    a0, b0, c0 = _cell_averages(corrector.mesh, a_elem, b_elem, c_elem, corrector.chi)
    a0 = 0.5 * (a0 + a0.T)
    return HomogenizedCoefficients(a0, b0, c0, corrector.x)


def homogenized_field(spec, n_cell=DEFAULT_CELL_RESOLUTION):
    """
    Callable x [..., 2] -> (a0 [..., 2, 2], b0 [..., 2], c0 [...]).

    x-independent problems solve the cell problems once; otherwise results
    are memoised per distinct point.
    """
    if not spec.x_dependent:
        hc = homogenized_coefficients(spec, np.array([0.5, 0.5]), n_cell)

        def field(x):
            shape = np.shape(x)[:-1]
            return (np.broadcast_to(hc.a0, shape + (2, 2)).copy(),
                    np.broadcast_to(hc.b0, shape + (2,)).copy(), np.full(shape, hc.c0))
        return field

    @functools.lru_cache(maxsize=None)
    def at(point):
        hc = homogenized_coefficients(spec, np.array(point), n_cell)
        return hc.a0, hc.b0, hc.c0

    def field(x):
        x = np.asarray(x, dtype=np.float64)
        flat = x.reshape(-1, 2)
        records = [at(tuple(p)) for p in flat]
        a0 = np.stack([r[0] for r in records]).reshape(x.shape[:-1] + (2, 2))
        b0 = np.stack([r[1] for r in records]).reshape(x.shape[:-1] + (2,))
        c0 = np.array([r[2] for r in records]).reshape(x.shape[:-1])
        return a0, b0, c0
    return field


def reference_solution(source, f, n_fine, n_cell=DEFAULT_CELL_RESOLUTION):
    """
    Fine-mesh P1 solution of the homogenized problem.

    source is a ProblemSpec (coefficients homogenized numerically) or a
    coefficient field x -> (a0, b0, c0).
    """
    field = source if callable(source) else homogenized_field(source, n_cell)
    mesh = build_unit_square_mesh(n_fine)
    form = assemble_fem(mesh, homogenized_provider(field, mesh), f, quadrature='exact')
    solution = solve_macro(form)
    return ReferenceSolution(mesh, solution.values, field, solution.residual)


def _norms(l2_sq, semi_sq):
    l2, semi = float(np.sqrt(l2_sq)), float(np.sqrt(semi_sq))
    return {'l2': l2, 'h1_semi': semi, 'h1': float(np.sqrt(l2_sq + semi_sq))}


def h1_error(u, v):
    """
    H1 distance between two P1 functions on nested structured unit-square
    meshes, by centroid quadrature on the finer mesh. Symmetric in u, v.
    """
    fine, coarse = (u, v) if u.mesh.n >= v.mesh.n else (v, u)
    if not (fine.mesh.is_structured and coarse.mesh.is_structured):
        raise ValueError('h1_error needs structured meshes')
    if fine.mesh.n % coarse.mesh.n:
        raise ValueError('non-nested resolutions {} and {}'.format(fine.mesh.n, coarse.mesh.n))

    centers = fine.mesh.barycenters
    fine_vals = fine.values[fine.mesh.triangles]
    fine_grad = element_gradients(fine.mesh.coords, fine_vals)

    k = locate(coarse.mesh, centers)
    coords = coarse.mesh.coords[k]
    grads = basis_gradients(coords)
    lam = 1.0 / 3.0 + np.einsum('mik,mk->mi', grads, centers - coords.mean(axis=1))
    coarse_vals = coarse.values[coarse.mesh.triangles[k]]
    coarse_grad = np.einsum('mij,mi->mj', grads, coarse_vals)

    areas = fine.mesh.areas
    du = fine_vals.mean(axis=1) - np.einsum('mi,mi->m', lam, coarse_vals)
    dg = fine_grad - coarse_grad
    return _norms(np.sum(areas * du ** 2), np.sum(areas * np.sum(dg ** 2, axis=1)))


def exact_error(solution, u, grad_u):
    """H1 error of a P1 solution against an analytic function, 7-point rule per element."""
    mesh = solution.mesh
    coords = mesh.coords
    points = quadrature_points(coords)
    vals = solution.values[mesh.triangles]
    uh = vals @ DUNAVANT7_POINTS.T                                  # [M, Q]
    gh = element_gradients(coords, vals)[:, None, :]
    areas = mesh.areas
    l2_sq = np.sum(areas * ((uh - u(points)) ** 2 @ DUNAVANT7_WEIGHTS))
    semi_sq = np.sum(areas * (np.sum((gh - grad_u(points)) ** 2, axis=-1) @ DUNAVANT7_WEIGHTS))
    return _norms(l2_sq, semi_sq)
