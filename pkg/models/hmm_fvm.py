# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Macro assembly on the coarse mesh: the finite volume element form on the
barycentric dual mesh, the P1 finite element reference forms and the
operator-gap diagnostics comparing them.
"""
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import torch

from .mesh import dual_segments, locate
from .ops.p1 import (DUNAVANT7_POINTS, DUNAVANT7_WEIGHTS, basis_gradients, integrate,
                     local_mass, local_stiffness, quadrature_points)
from .ops.sparse import DENSE_LIMIT, SparseSystem, assemble_begin, dense_form, solve


PROVENANCES = ('hmm', 'homogenized', 'direct')
SCHEMES = ('fvm', 'fem_exact', 'fem_quadrature')

# integral of lambda_j over the dual sub-region of vertex i, divided by |K|
_DUAL_MASS = np.full((3, 3), 7.0 / 108.0) + np.eye(3) * (11.0 / 54.0 - 7.0 / 108.0)


@dataclass(frozen=True, eq=False)
class CoefficientProvider:
    """
    Per-element coefficient values at the barycenter.

    field, when set, maps points [..., 2] to (A, b, c) and lets exact-mode
    finite element assembly integrate the coefficient variation.
    """
    A: np.ndarray   # [M, 2, 2]
    b: np.ndarray   # [M, 2]
    c: np.ndarray   # [M]
    provenance: str
    field: Optional[Callable] = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f'provenance {self.provenance} not supported')
        m = self.A.shape[0]
        if self.A.shape != (m, 2, 2) or self.b.shape != (m, 2) or self.c.shape != (m,):
            raise ValueError('inconsistent provider shapes A{} b{} c{}'.format(
                self.A.shape, self.b.shape, self.c.shape))
        if self.provenance == 'homogenized':
            asym = np.max(np.abs(self.A - np.swapaxes(self.A, 1, 2))) if m else 0.0
            assert asym <= 1e-9, "homogenized tensor not symmetric ({:.2e})".format(asym)

    @property
    def num_elements(self):
        return self.A.shape[0]


@dataclass(frozen=True, eq=False)
class CoarseSolution:
    mesh: object
    values: np.ndarray
    residual: float = 0.0


@dataclass(frozen=True, eq=False)
class AssembledForm:
    system: SparseSystem
    scheme: str
    provider: CoefficientProvider
    mesh: object
    dirichlet_applied: bool


def _stack(A, b, c):
    return (np.array(A, dtype=np.float64), np.array(b, dtype=np.float64),
            np.array(c, dtype=np.float64))


def direct_provider(spec, mesh):
    """Coefficients sampled at (Q, Q/eps) with no micro solve."""
    eps = spec.epsilon

    def field(x):
        return spec.eval_a(x, x / eps), spec.eval_b(x, x / eps), spec.eval_c(x, x / eps)

    return CoefficientProvider(*_stack(*field(mesh.barycenters)), provenance='direct', field=field)


def homogenized_provider(field, mesh):
    return CoefficientProvider(*_stack(*field(mesh.barycenters)), provenance='homogenized', field=field)


def effective_provider(effective):
    """Stack per-element EffectiveData records in element order."""
    effective = list(effective)
    A = np.stack([e.A_H for e in effective]) if effective else np.zeros((0, 2, 2))
    b = np.stack([e.b_H for e in effective]) if effective else np.zeros((0, 2))
    c = np.array([e.c_H for e in effective], dtype=np.float64)
    return CoefficientProvider(*_stack(A, b, c), provenance='hmm')


def _check_cover(mesh, provider):
    if provider.num_elements != mesh.num_elements:
        raise ValueError('provider/mesh mismatch: {} records for {} elements'.format(
            provider.num_elements, mesh.num_elements))


def _scatter(mesh, local, local_rhs):
    tri = mesh.triangles
    assembler = assemble_begin(mesh.num_nodes)
    assembler.add_entries(np.repeat(tri, 3, axis=1), np.tile(tri, (1, 3)), local.reshape(-1, 9))
    assembler.add_rhs(tri, local_rhs)
    return assembler.finalize()


def apply_dirichlet(system, boundary):
    """Replace boundary rows by identity rows with zero right-hand side."""
    boundary = np.asarray(boundary, dtype=bool)
    keep = sp.diags((~boundary).astype(np.float64))
    matrix = (keep @ system.matrix + sp.diags(boundary.astype(np.float64))).tocsr()
    matrix.eliminate_zeros()
    return SparseSystem.from_matrix(matrix, np.where(boundary, 0.0, system.rhs))


def _load_vector(mesh, f, rule):
    coords = mesh.coords
    areas = mesh.areas
    if rule == 'barycenter':
        fq = f(mesh.barycenters)
        return np.repeat((areas * fq / 3.0)[:, None], 3, axis=1)
    if rule == 'exact':
        fq = f(quadrature_points(coords))                            # [M, Q]
        return areas[:, None] * np.einsum('mq,q,qi->mi', fq, DUNAVANT7_WEIGHTS, DUNAVANT7_POINTS)
    raise ValueError(f'rhs rule {rule} not supported')


def _convection(areas, b, grads):
    # (|K|/3) b . grad(phi_j), identical in every test row
    row = np.einsum('mk,mjk->mj', b, grads) * (areas / 3.0)[:, None]
    return np.repeat(row[:, None, :], 3, axis=1)


def _finish(mesh, provider, local, local_rhs, scheme, dirichlet):
    system = _scatter(mesh, local, local_rhs)
    if dirichlet:
        system = apply_dirichlet(system, mesh.boundary_node_flags)
    return AssembledForm(system, scheme, provider, mesh, dirichlet)


def assemble_fvm(mesh, provider, f, lumping='barycenter', apply_dirichlet=True):
    """
    Finite volume element form with barycenter coefficients.

    Row P collects the fluxes through the two dual segments of every element
    touching P, plus (|K|/3)(b . grad u_H + c u_H(Q)) and (|K|/3) f(Q).
    lumping='dual' integrates c u_H exactly over each dual sub-region instead.
    """
    _check_cover(mesh, provider)
    if lumping not in ('barycenter', 'dual'):
        raise ValueError(f'lumping {lumping} not supported')
    areas = mesh.areas
    grads = basis_gradients(mesh.coords)
    lengths, normals, _ = dual_segments(mesh)
    weighted = np.einsum('mvs,mvsk->mvk', lengths, normals)       # sum over the two segments
    diffusion = -np.einsum('mik,mkl,mjl->mij', weighted, provider.A, grads)

    if lumping == 'barycenter':
        reaction = (areas * provider.c / 9.0)[:, None, None] * np.ones((1, 3, 3))
    else:
        reaction = (areas * provider.c)[:, None, None] * _DUAL_MASS

    local = diffusion + _convection(areas, provider.b, grads) + reaction
    return _finish(mesh, provider, local, _load_vector(mesh, f, 'barycenter'), 'fvm', apply_dirichlet)


def assemble_fem(mesh, provider, f, quadrature='exact', rhs='barycenter', apply_dirichlet=True):
    """P1 Galerkin form with exact (7-point) or barycenter coefficient quadrature."""
    _check_cover(mesh, provider)
    areas = mesh.areas
    coords = mesh.coords
    grads = basis_gradients(coords)

    if quadrature == 'barycenter':
        local = (local_stiffness(areas, grads, provider.A)
                 + _convection(areas, provider.b, grads)
                 + (areas * provider.c / 9.0)[:, None, None] * np.ones((1, 3, 3)))
        scheme = 'fem_quadrature'
    elif quadrature == 'exact':
        if provider.field is None:
            local = (local_stiffness(areas, grads, provider.A)
                     + _convection(areas, provider.b, grads)
                     + provider.c[:, None, None] * local_mass(areas))
        else:
            Aq, bq, cq = provider.field(quadrature_points(coords))    # [M,Q,2,2] [M,Q,2] [M,Q]
            w = DUNAVANT7_WEIGHTS
            lam = DUNAVANT7_POINTS                                    # [Q, 3]
            A_mean = np.einsum('q,mqkl->mkl', w, Aq)
            stiffness = local_stiffness(areas, grads, A_mean)
            convection = areas[:, None, None] * np.einsum('q,qi,mqk,mjk->mij', w, lam, bq, grads)
            reaction = areas[:, None, None] * np.einsum('q,mq,qi,qj->mij', w, cq, lam, lam)
            local = stiffness + convection + reaction
        scheme = 'fem_exact'
    else:
        raise ValueError(f'quadrature {quadrature} not supported')

    return _finish(mesh, provider, local, _load_vector(mesh, f, rhs), scheme, apply_dirichlet)


def solve_macro(form, rel_tol=1e-10):
    assert form.dirichlet_applied, "boundary rows must be imposed before solving"
    report = solve(form.system, rel_tol=rel_tol)
    values = report.solution.copy()
    values[form.mesh.boundary_node_flags] = 0.0
    return CoarseSolution(form.mesh, values, report.relative_residual)


def nodal_interpolant(mesh, fn):
    return CoarseSolution(mesh, np.asarray(fn(mesh.nodes), dtype=np.float64))


def _values(v):
    return v.values if isinstance(v, CoarseSolution) else np.asarray(v, dtype=np.float64)


def pi_star_apply(mesh, v, x, tol=1e-12):
    """
    Value of v at the node whose dual region contains x.

    A point lies in the dual region of the vertex with the largest
    barycentric coordinate; ties go to the lowest node index.
    """
    points = np.atleast_2d(np.asarray(x, dtype=np.float64))
    k = locate(mesh, points)
    coords = mesh.coords[k]
    lam = 1.0 / 3.0 + np.einsum('mik,mk->mi', basis_gradients(coords), points - coords.mean(axis=1))
    nodes = mesh.triangles[k]
    winners = lam >= lam.max(axis=1, keepdims=True) - tol
    idx = np.where(winners, nodes, np.iinfo(np.int64).max).min(axis=1)
    out = _values(v)[idx]
    return out[0] if np.ndim(x) == 1 else out


def _linear_square_integral(area, w0, w1, w2):
    return area / 12.0 * (w0 ** 2 + w1 ** 2 + w2 ** 2 + (w0 + w1 + w2) ** 2)


def pi_star_deficit(mesh, v):
    """
    L2 norm of v - Pi* v, integrated exactly.

    Each dual sub-region is split into two triangles (v_i, m_i, Q) and
    (v_i, Q, m_{i-1}) of area |K|/6 on which v - v_i is linear.
    """
    vals = _values(v)[mesh.triangles]
    nxt, prv = np.roll(vals, -1, axis=1), np.roll(vals, 1, axis=1)
    w_next = 0.5 * (nxt - vals)
    w_prev = 0.5 * (prv - vals)
    w_bary = vals.mean(axis=1, keepdims=True) - vals
    sub = (mesh.areas / 6.0)[:, None]
    total = (_linear_square_integral(sub, 0.0, w_next, w_bary)
             + _linear_square_integral(sub, 0.0, w_bary, w_prev))
    return float(np.sqrt(total.sum()))


def barycenter_quadrature_error(mesh, g):
    """E_K(g) = int_K g - |K| g(Q) per element, reference by the 7-point rule."""
    return integrate(mesh.coords, g) - mesh.areas * g(mesh.barycenters)


def h1_gram(mesh):
    """Exact P1 mass plus stiffness matrix."""
    areas = mesh.areas
    identity = np.broadcast_to(np.eye(2), (mesh.num_elements, 2, 2))
    local = local_stiffness(areas, basis_gradients(mesh.coords), identity) + local_mass(areas)
    return _scatter(mesh, local, np.zeros((mesh.num_elements, 3)))


def coefficient_gap(provider, reference):
    """e(HMM): largest entrywise deviation over elements and coefficient components."""
    return float(max(np.max(np.abs(provider.A - reference.A)),
                     np.max(np.abs(provider.b - reference.b)),
                     np.max(np.abs(provider.c - reference.c))))


class GapMetric(object):
    """
    H1-scaled operator norms over the interior nodes of a mesh.

    With G = L L^T the interior H1 Gram matrix, the gap of a difference D is
    the spectral norm of L^-1 D L^-T.
    """

    def __init__(self, mesh, max_dimension=DENSE_LIMIT):
        self.interior = np.flatnonzero(~mesh.boundary_node_flags)
        gram = dense_form(h1_gram(mesh), max_dimension)[np.ix_(self.interior, self.interior)]
        self.chol = torch.linalg.cholesky(torch.from_numpy(gram))
        self.max_dimension = max_dimension

    def _whiten(self, matrix):
        return torch.linalg.solve_triangular(self.chol, matrix, upper=False)

    def operator(self, first, second):
        i = np.ix_(self.interior, self.interior)
        diff = (dense_form(first.system, self.max_dimension)[i]
                - dense_form(second.system, self.max_dimension)[i])
        left = self._whiten(torch.from_numpy(diff))
        both = self._whiten(left.T.contiguous()).T
        return float(torch.linalg.matrix_norm(both, ord=2))

    def functional(self, first, second):
        d = torch.from_numpy((first - second)[self.interior]).reshape(-1, 1)
        return float(torch.linalg.vector_norm(self._whiten(d)))


def _zero_source(x):
    return np.zeros(np.shape(x)[:-1])


def operator_gap_diagnostics(mesh, hmm_provider, hom_provider, metric=None):
    """
    Operator gaps between the forms chained from the exact finite element
    form to the finite volume element form:
      eps1: exact vs barycenter quadrature (homogenized coefficients)
      eps2: homogenized vs estimated coefficients (barycenter FEM)
      eps3: barycenter FEM vs FVM; eps3_dual uses the dual-exact reaction
    """
    metric = metric or GapMetric(mesh)
    kw = dict(f=_zero_source, apply_dirichlet=False)
    exact = assemble_fem(mesh, hom_provider, quadrature='exact', **kw)
    hom_bary = assemble_fem(mesh, hom_provider, quadrature='barycenter', **kw)
    hmm_bary = assemble_fem(mesh, hmm_provider, quadrature='barycenter', **kw)
    fvm = assemble_fvm(mesh, hmm_provider, lumping='barycenter', **kw)
    fvm_dual = assemble_fvm(mesh, hmm_provider, lumping='dual', **kw)
    return {
        'eps1': metric.operator(exact, hom_bary),
        'eps2': metric.operator(hom_bary, hmm_bary),
        'eps3': metric.operator(hmm_bary, fvm),
        'eps3_dual': metric.operator(hmm_bary, fvm_dual),
        'total': metric.operator(exact, fvm),
    }


def rhs_consistency(mesh, f, metric=None):
    """sup_v |(f, v) - (f, Pi* v)_H| / |v|_1 over interior P1 functions."""
    metric = metric or GapMetric(mesh)
    tri = mesh.triangles
    exact = np.zeros(mesh.num_nodes)
    lumped = np.zeros(mesh.num_nodes)
    np.add.at(exact, tri, _load_vector(mesh, f, 'exact'))
    np.add.at(lumped, tri, _load_vector(mesh, f, 'barycenter'))
    return metric.functional(exact, lumped)


def dump_solution(solution, path):
    with open(path, 'w') as f:
        for i, ((x, y), u) in enumerate(zip(solution.mesh.nodes, solution.values)):
            f.write('{} {:.17g} {:.17g} {:.17g}\n'.format(i, x, y, u))
