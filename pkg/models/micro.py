# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Micro cell problems on the sampling cube of side delta around a macro point
and the effective data a^H, b^H, c^H estimated from them.

Cell problems are solved in rescaled coordinates y = (x - Q) / eps on a
square of side L = delta / eps, so cost does not depend on eps.
"""
import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from .hmm_fvm import apply_dirichlet, effective_provider
from .homogenization import solve_periodic_cell
from .mesh import build_square_mesh
from .ops.p1 import basis_gradients, element_gradients, local_stiffness
from .ops.sparse import SparseSystem, assemble_begin, solve


BC_MODES = ('dirichlet', 'periodic')
MIN_CELLS_PER_PERIOD = 4


@dataclass(frozen=True)
class MicroConfig:
    delta: float
    epsilon: float
    cells_per_period: int = 16
    bc_mode: str = 'dirichlet'

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError('delta must be positive, got {}'.format(self.delta))
        if not self.epsilon > 0:
            raise ValueError('epsilon must be positive, got {}'.format(self.epsilon))
        if self.cells_per_period < MIN_CELLS_PER_PERIOD:
            raise ValueError('cells_per_period must be at least {}, got {}'.format(
                MIN_CELLS_PER_PERIOD, self.cells_per_period))
        if self.bc_mode not in BC_MODES:
            raise ValueError(f'bc_mode {self.bc_mode} not supported')
        if self.bc_mode == 'periodic':
            L = self.cell_length
            if abs(L - round(L)) > 1e-9 or round(L) < 1:
                raise ValueError('periodic mode needs an integer delta/eps, got {}'.format(L))

    @classmethod
    def from_ratio(cls, delta_over_eps, epsilon, cells_per_period=16, bc_mode='dirichlet'):
        return cls(delta_over_eps * epsilon, epsilon, cells_per_period, bc_mode)

    @property
    def cell_length(self):
        return self.delta / self.epsilon

    @property
    def resolution(self):
        return max(1, int(round(self.cells_per_period * self.cell_length)))

    @property
    def mesh(self):
        L = self.cell_length
        origin = (0.0, 0.0) if self.bc_mode == 'periodic' else (-0.5 * L, -0.5 * L)
        return _micro_mesh(self.resolution, L, origin)


@functools.lru_cache(maxsize=16)
def _micro_mesh(n, length, origin):
    return build_square_mesh(n, length, origin)


@dataclass(frozen=True, eq=False)
class MicroSolution:
    mesh: object
    values: np.ndarray
    gradient: np.ndarray   # boundary data g, values equal g . y on the boundary

    @property
    def element_gradients(self):
        return element_gradients(self.mesh.coords, self.values[self.mesh.triangles])


@dataclass(frozen=True, eq=False)
class EffectiveData:
    A_H: np.ndarray
    b_H: np.ndarray
    c_H: float
    Q: np.ndarray


def _sample_points(Q, cfg, y):
    """Fast-variable sample points; the periodic cell is period aligned."""
    if cfg.bc_mode == 'periodic':
        return y
    return np.asarray(Q, dtype=np.float64) / cfg.epsilon + y


def _cell_field(ev, Q, cfg, mesh):
    y = _sample_points(Q, cfg, mesh.barycenters)
    x = np.broadcast_to(np.asarray(Q, dtype=np.float64), y.shape)
    return ev(x, y)


def solve_cell(spec, Q, cfg, gradient):
    """P1 solution of -div(a(Q, .) grad w) = 0 on the cell with w = g . y on its boundary."""
    g = np.asarray(gradient, dtype=np.float64)
    mesh = cfg.mesh
    a_elem = _cell_field(spec.eval_a, Q, cfg, mesh)
    linear = mesh.nodes @ g

    if cfg.bc_mode == 'periodic':
        return MicroSolution(mesh, linear + solve_periodic_cell(mesh, a_elem, g), g)

    tri = mesh.triangles
    assembler = assemble_begin(mesh.num_nodes)
    assembler.add_entries(np.repeat(tri, 3, axis=1), np.tile(tri, (1, 3)),
                          local_stiffness(mesh.areas, basis_gradients(mesh.coords), a_elem).reshape(-1, 9))
    boundary = mesh.boundary_node_flags
    system = apply_dirichlet(assembler.finalize(), boundary)
    system = SparseSystem(system.matrix, np.where(boundary, linear, 0.0))
    values = solve(system, rel_tol=1e-10).solution
    values[boundary] = linear[boundary]
    return MicroSolution(mesh, values, g)


def solve_corrector(spec, Q, cfg, j):
    if j not in (1, 2):
        raise ValueError('direction index must be 1 or 2, got {}'.format(j))
    return solve_cell(spec, Q, cfg, np.eye(2)[j - 1])


def cell_average(phi, Q, cfg):
    """Centroid-rule average over the sampling cell of a field phi(y) in fast variables."""
    mesh = cfg.mesh
    values = phi(_sample_points(Q, cfg, mesh.barycenters))
    areas = mesh.areas
    return float(np.sum(areas * values) / areas.sum())


def average_reaction(spec, Q, cfg):
    Q = np.asarray(Q, dtype=np.float64)
    return cell_average(lambda y: spec.eval_c(np.broadcast_to(Q, y.shape), y), Q, cfg)


def flux_averages(spec, Q, cfg, solution):
    """(<a grad w>, <b . grad w>) over the cell for one micro solution."""
    mesh = solution.mesh
    areas = mesh.areas
    grad = solution.element_gradients
    a_elem = _cell_field(spec.eval_a, Q, cfg, mesh)
    b_elem = _cell_field(spec.eval_b, Q, cfg, mesh)
    volume = areas.sum()
    flux = np.einsum('m,mkl,ml->k', areas, a_elem, grad) / volume
    drift = float(np.einsum('m,mk,mk->', areas, b_elem, grad) / volume)
    return flux, drift


def effective_data(spec, Q, cfg):
    Q = np.asarray(Q, dtype=np.float64)
    A_H = np.zeros((2, 2))
    b_H = np.zeros(2)
    for j in (1, 2):
        A_H[:, j - 1], b_H[j - 1] = flux_averages(spec, Q, cfg, solve_corrector(spec, Q, cfg, j))
    return EffectiveData(A_H, b_H, average_reaction(spec, Q, cfg), Q)


def estimate_provider(spec, mesh, cfg, cache=False, threads=1, progress=False):
    """
    Effective data at every macro barycenter.

    Returns (CoefficientProvider, number of micro solves). With cache set and
    x-independent coefficients one record is shared by all elements.
    """
    centers = mesh.barycenters
    if cache and not spec.x_dependent:
        shared = effective_data(spec, centers[0], cfg)
        return effective_provider([shared] * mesh.num_elements), 2

    def task(Q):
        return effective_data(spec, Q, cfg)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        records = list(tqdm(pool.map(task, centers), total=len(centers),
                            desc='micro', disable=not progress))
    return effective_provider(records), 2 * mesh.num_elements
