# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

import numpy as np

from models.hmm_fvm import CoarseSolution, nodal_interpolant
from models.homogenization import (exact_error, h1_error, homogenized_coefficients, homogenized_field,
                                   periodic_corrector, reference_solution)
from models.mesh import build_unit_square_mesh
from models.ops.p1 import element_gradients
from problems.coefficients import (catalog_entry, catalog_get, laminate_alpha, sine_solution,
                                   sine_solution_gradient)


X = np.array([0.3, 0.6])
SINE_H1_NORM = np.sqrt(0.25 + np.pi ** 2 / 2.0)


def _zero(x):
    return np.zeros(x.shape[:-1])


def test_constant_corrector_vanishes():
    spec = catalog_get('constant')
    corrector = periodic_corrector(spec, X, 8)
    assert np.max(np.abs(corrector.chi)) <= 1e-12
    hc = homogenized_coefficients(spec, X, 8)
    assert np.allclose(hc.a0, np.eye(2), atol=1e-12)
    assert np.allclose(hc.b0, [1.0, 0.0], atol=1e-12)
    assert abs(hc.c0 - 1.0) <= 1e-12


def test_laminate_corrector():
    spec = catalog_get('laminate')
    corrector = periodic_corrector(spec, X, 16)
    mesh = corrector.mesh
    assert np.max(np.abs(corrector.chi[1])) <= 1e-10
    grad = element_gradients(mesh.coords, corrector.chi[0][mesh.triangles])
    alpha = laminate_alpha(mesh.barycenters[:, 0])
    assert np.allclose(alpha * (1.0 + grad[:, 0]), 1.6, atol=1e-8)
    assert np.allclose(grad[:, 1], 0.0, atol=1e-10)


def test_corrector_periodic_and_zero_mean():
    spec = catalog_get('smooth-periodic')
    corrector = periodic_corrector(spec, X, 16)
    mesh = corrector.mesh
    n = mesh.n
    idx = np.arange(mesh.num_nodes).reshape(n + 1, n + 1)
    areas = mesh.areas
    for chi in corrector.chi:
        assert np.array_equal(chi[idx[:, 0]], chi[idx[:, n]])
        assert np.array_equal(chi[idx[0, :]], chi[idx[n, :]])
        assert abs(np.sum(areas * chi[mesh.triangles].mean(axis=1))) <= 1e-12


def test_homogenized_oracles():
    hc = homogenized_coefficients(catalog_get('laminate'), X, 64)
    assert np.allclose(hc.a0, np.diag([1.6, 2.5]), atol=1e-3)

    hc = homogenized_coefficients(catalog_get('smooth-periodic'), X, 64)
    assert np.allclose(hc.a0, np.diag([np.sqrt(3.0), 2.0]), atol=2e-3)
    assert np.allclose(hc.b0, [1.0, 0.0], atol=1e-6)
    assert abs(hc.c0 - 2.0) <= 1e-6


def test_voigt_reuss_bounds():
    for name, (harmonic, arithmetic) in (('laminate', (1.6, 2.5)), ('smooth-periodic', (np.sqrt(3.0), 2.0))):
        eig = np.linalg.eigvalsh(homogenized_coefficients(catalog_get(name), X, 32).a0)
        assert eig.min() >= harmonic - 2e-3 and eig.max() <= arithmetic + 2e-3, (name, eig)


def test_cell_resolution_guard():
    try:
        periodic_corrector(catalog_get('laminate'), X, 4)
        assert False, "coarse cell mesh accepted"
    except ValueError:
        pass


def test_homogenized_field_broadcasts():
    field = homogenized_field(catalog_get('laminate'), 16)
    a0, b0, c0 = field(np.zeros((3, 5, 2)))
    assert a0.shape == (3, 5, 2, 2) and b0.shape == (3, 5, 2) and c0.shape == (3, 5)
    assert np.allclose(a0[1, 2], np.diag([1.6, 2.5]), atol=1e-8)


def test_reference_zero_source():
    field = catalog_entry('constant').homogenized
    ref = reference_solution(field, _zero, 8)
    assert not np.any(ref.values)


def test_reference_manufactured():
    field = catalog_entry('manufactured').homogenized
    errors = [exact_error(reference_solution(field, catalog_get('manufactured').eval_f, n),
                          sine_solution, sine_solution_gradient)['h1'] for n in (16, 32)]
    assert 1.8 <= errors[0] / errors[1] <= 2.2, errors


def test_reference_self_convergence():
    field = catalog_entry('smooth-periodic').homogenized
    f = catalog_get('smooth-periodic').eval_f
    refs = [reference_solution(field, f, n) for n in (8, 16, 32)]
    first = h1_error(refs[0], refs[1])['h1']
    second = h1_error(refs[1], refs[2])['h1']
    assert 1.7 <= first / second <= 2.3, (first, second)


def test_h1_error_properties():
    fine = build_unit_square_mesh(64)
    coarse = build_unit_square_mesh(16)
    u = nodal_interpolant(fine, sine_solution)
    zero = CoarseSolution(coarse, np.zeros(coarse.num_nodes))
    err = h1_error(zero, u)
    assert abs(err['h1'] - SINE_H1_NORM) <= 1e-2, err
    assert err == h1_error(u, zero)
    assert abs(err['h1'] ** 2 - err['l2'] ** 2 - err['h1_semi'] ** 2) <= 1e-12

    same = nodal_interpolant(coarse, sine_solution)
    assert h1_error(same, same)['h1'] <= 1e-14
    try:
        h1_error(zero, nodal_interpolant(build_unit_square_mesh(24), sine_solution))
        assert False, "non-nested meshes accepted"
    except ValueError:
        pass


if __name__ == '__main__':
    for name, fn in list(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
            print(f'* True {name}')
