# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

import os
import tempfile

import numpy as np
import scipy.sparse as sp

from models.ops.sparse import (SolverError, SparseAssembler, SparseSystem, _krylov, assemble_begin,
                               dense_form, dump_matrix, solve)


def _laplacian_1d(n, convection=0.0):
    main = 2.0 * np.ones(n)
    lower = -(1.0 + convection) * np.ones(n - 1)
    upper = -(1.0 - convection) * np.ones(n - 1)
    return sp.diags([lower, main, upper], [-1, 0, 1], format='csr')


def test_duplicates_are_summed():
    asm = assemble_begin(3)
    asm.add_entry(0, 0, 1.0)
    asm.add_entry(0, 0, 2.5)
    asm.add_entries([1, 2], [1, 2], [4.0, 5.0])
    asm.add_rhs([0, 0], [1.0, 1.0])
    system = asm.finalize()
    assert system.dimension == 3
    assert system.matrix[0, 0] == 3.5
    assert system.rhs[0] == 2.0
    assert list(system.indptr) == [0, 1, 2, 3]


def test_assembler_errors():
    asm = SparseAssembler(2)
    try:
        asm.add_entry(2, 0, 1.0)
        assert False, "out of range index accepted"
    except IndexError:
        pass
    asm.finalize()
    try:
        asm.add_entry(0, 0, 1.0)
        assert False, "entry accepted after finalize"
    except RuntimeError:
        pass


def test_from_matrix_checks():
    try:
        SparseSystem.from_matrix(sp.csr_matrix(np.ones((2, 3))))
        assert False, "non-square matrix accepted"
    except ValueError:
        pass
    try:
        SparseSystem.from_matrix(sp.eye(3), np.ones(2))
        assert False, "rhs length mismatch accepted"
    except ValueError:
        pass


def test_direct_solve_matches_dense():
    matrix = _laplacian_1d(50, convection=0.3)
    rhs = np.linspace(1.0, 2.0, 50)
    system = SparseSystem.from_matrix(matrix, rhs)
    report = solve(system)
    assert report.relative_residual <= 1e-10
    assert np.allclose(report.solution, np.linalg.solve(matrix.toarray(), rhs), atol=1e-10)


def test_hand_solves():
    system = SparseSystem.from_matrix(sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]])), np.array([3.0, 3.0]))
    report = solve(system, symmetric_hint=True)
    assert np.allclose(report.solution, [1.0, 1.0], atol=1e-12)
    report = solve(SparseSystem.from_matrix(_laplacian_1d(3), np.ones(3)))
    assert np.allclose(report.solution, [1.5, 2.0, 1.5], atol=1e-12)
    report = solve(SparseSystem.from_matrix(sp.eye(3, format='csr'), np.array([1.0, 2.0, 3.0])))
    assert np.allclose(report.solution, [1.0, 2.0, 3.0])


def test_random_triples_match_dense_accumulation():
    rng = np.random.default_rng(7)
    for _ in range(10):
        dim = int(rng.integers(1, 51))
        k = int(rng.integers(0, 300))
        rows = rng.integers(0, dim, k)
        cols = rng.integers(0, dim, k)
        values = rng.normal(size=k)
        asm = assemble_begin(dim)
        for r, c, v in zip(rows, cols, values):
            asm.add_entry(int(r), int(c), float(v))
        expected = np.zeros((dim, dim))
        np.add.at(expected, (rows, cols), values)
        assert np.allclose(dense_form(asm.finalize()), expected, atol=1e-12), dim


def test_zero_rhs():
    report = solve(SparseSystem.from_matrix(_laplacian_1d(10)))
    assert not np.any(report.solution)
    assert report.relative_residual == 0.0


def test_singular_matrix():
    system = SparseSystem.from_matrix(sp.csr_matrix((3, 3)), np.ones(3))
    try:
        solve(system)
        assert False, "singular matrix solved"
    except SolverError:
        pass


def test_krylov_paths():
    rhs = np.ones(200)
    for hint, convection in ((True, 0.0), (False, 0.4)):
        system = SparseSystem.from_matrix(_laplacian_1d(200, convection), rhs)
        x, iterations = _krylov(system, hint, 1e-10)
        assert system.relative_residual(x) <= 1e-9
        assert iterations >= 1


def test_dense_form_guard():
    system = SparseSystem.from_matrix(sp.eye(5))
    assert np.array_equal(dense_form(system), np.eye(5))
    try:
        dense_form(system, max_dimension=4)
        assert False, "size guard not enforced"
    except ValueError as e:
        assert 'size guard' in str(e)


def test_dump_matrix():
    system = SparseSystem.from_matrix(sp.csr_matrix(np.array([[2.0, 0.0], [-1.0, 0.5]])))
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, 'matrix.txt')
        dump_matrix(system, path)
        with open(path) as f:
            lines = f.read().splitlines()
    assert sorted(lines) == ['0 0 2', '1 0 -1', '1 1 0.5']


if __name__ == '__main__':
    for name, fn in list(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
            print(f'* True {name}')
