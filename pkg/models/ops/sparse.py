# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Sparse assembly by accumulation and residual-checked linear solves.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


DIRECT_LIMIT = 100_000
DENSE_LIMIT = 4000


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class SparseSystem:
    """Finalized matrix in row-compressed layout plus its right-hand side."""
    matrix: sp.csr_matrix
    rhs: np.ndarray

    @classmethod
    def from_matrix(cls, matrix, rhs=None):
        matrix = sp.csr_matrix(matrix, dtype=np.float64, copy=True)
        matrix.sum_duplicates()
        matrix.sort_indices()
        n = matrix.shape[0]
        if matrix.shape != (n, n):
            raise ValueError('matrix must be square, got shape {}'.format(matrix.shape))
        rhs = np.zeros(n) if rhs is None else np.asarray(rhs, dtype=np.float64)
        if rhs.shape != (n,):
            raise ValueError('rhs has length {} but dimension is {}'.format(rhs.shape, n))
        return cls(matrix, rhs)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    @property
    def indptr(self):
        return self.matrix.indptr

    @property
    def indices(self):
        return self.matrix.indices

    @property
    def data(self):
        return self.matrix.data

    def relative_residual(self, x):
        b_norm = np.linalg.norm(self.rhs)
        r_norm = np.linalg.norm(self.matrix @ x - self.rhs)
        return r_norm / b_norm if b_norm > 0 else r_norm


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: np.ndarray
    relative_residual: float
    iterations: int


class SparseAssembler(object):
    """
    Accumulates (row, col, value) triples; duplicates are summed on finalize.

    Single writer; not safe to share between threads.
    """

    def __init__(self, dimension):
        if dimension < 0:
            raise ValueError('dimension must be non-negative, got {}'.format(dimension))
        self.dimension = int(dimension)
        self._rows = []
        self._cols = []
        self._vals = []
        self._rhs = np.zeros(self.dimension)
        self._finalized = False

    def _check_open(self):
        if self._finalized:
            raise RuntimeError('cannot add entries after finalize()')

    def _check_range(self, idx):
        if idx.size and (idx.min() < 0 or idx.max() >= self.dimension):
            raise IndexError('index out of range for dimension {}'.format(self.dimension))

    def add_entry(self, row, col, value):
        self.add_entries([row], [col], [value])

    def add_entries(self, rows, cols, values):
        self._check_open()
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=np.float64).ravel()
        assert rows.shape == cols.shape == values.shape, "rows, cols and values must match"
        self._check_range(rows)
        self._check_range(cols)
        self._rows.append(rows)
        self._cols.append(cols)
        self._vals.append(values)

    def add_rhs(self, rows, values):
        self._check_open()
        rows = np.asarray(rows, dtype=np.int64).ravel()
        self._check_range(rows)
        np.add.at(self._rhs, rows, np.asarray(values, dtype=np.float64).ravel())

    def finalize(self):
        self._check_open()
        self._finalized = True
        if self._rows:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        matrix = sp.coo_matrix((vals, (rows, cols)), shape=(self.dimension, self.dimension))
        return SparseSystem.from_matrix(matrix.tocsr(), self._rhs.copy())


def assemble_begin(dimension):
    return SparseAssembler(dimension)


def _direct(system, symmetric_hint, rel_tol):
    permc_spec = 'MMD_AT_PLUS_A' if symmetric_hint else 'COLAMD'
    try:
        lu = spla.splu(system.matrix.tocsc(), permc_spec=permc_spec)
    except RuntimeError as e:
        raise SolverError('singular matrix: {}'.format(e)) from e
    x = lu.solve(system.rhs)
    # a few steps of iterative refinement against the stored matrix
    for _ in range(3):
        if not np.all(np.isfinite(x)) or system.relative_residual(x) <= rel_tol:
            break
        x = x + lu.solve(system.rhs - system.matrix @ x)
    return x, 0


def _krylov(system, symmetric_hint, rel_tol):
    n = system.dimension
    cap = 10 * n
    counter = [0]

    def callback(_):
        counter[0] += 1

    if symmetric_hint:
        diag = system.matrix.diagonal()
        if np.any(diag == 0):
            raise SolverError('singular matrix: zero on the diagonal')
        precond = sp.diags(1.0 / diag)
        x, info = spla.cg(system.matrix, system.rhs, rtol=rel_tol, atol=0.0,
                          maxiter=cap, M=precond, callback=callback)
    else:
        try:
            ilu = spla.spilu(system.matrix.tocsc(), drop_tol=1e-5, fill_factor=20)
        except RuntimeError as e:
            raise SolverError('singular matrix: {}'.format(e)) from e
        precond = spla.LinearOperator(system.matrix.shape, ilu.solve)
        restart = min(50, n)
        x, info = spla.gmres(system.matrix, system.rhs, rtol=rel_tol, atol=0.0,
                             restart=restart, maxiter=int(math.ceil(cap / restart)),
                             M=precond, callback=callback, callback_type='pr_norm')
    if info > 0:
        raise SolverError('iteration cap exceeded: {} iterations (cap {})'.format(counter[0], cap))
    if info < 0:
        raise SolverError('illegal input or breakdown (info={})'.format(info))
    return x, counter[0]


def solve(system, symmetric_hint=False, rel_tol=1e-10):
    """
    Solve system.matrix @ x = system.rhs and verify the residual afterwards.

    Direct sparse LU up to DIRECT_LIMIT unknowns, preconditioned Krylov
    iterations beyond. Raises SolverError instead of returning an
    unconverged solution.
    """
    assert rel_tol > 0, "rel_tol must be positive"
    n = system.dimension
    if n == 0 or not np.any(system.rhs):
        return SolveReport(np.zeros(n), 0.0, 0)

    if n <= DIRECT_LIMIT:
        x, iterations = _direct(system, symmetric_hint, rel_tol)
    else:
        x, iterations = _krylov(system, symmetric_hint, rel_tol)

    if not np.all(np.isfinite(x)):
        raise SolverError('singular matrix: non-finite solution')
    residual = system.relative_residual(x)
    if residual > rel_tol:
        raise SolverError('relative residual {:.3e} above tolerance {:.1e}'.format(residual, rel_tol))
    return SolveReport(x, float(residual), iterations)


def dense_form(system, max_dimension=DENSE_LIMIT):
    if system.dimension > max_dimension:
        raise ValueError('dense_form size guard: dimension {} exceeds {}'.format(
            system.dimension, max_dimension))
    return system.matrix.toarray()


def dump_matrix(system, path):
    coo = system.matrix.tocoo()
    with open(path, 'w') as f:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            f.write('{} {} {:.17g}\n'.format(i, j, v))
