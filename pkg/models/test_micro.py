# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

import numpy as np

from models.homogenization import homogenized_coefficients
from models.mesh import build_unit_square_mesh
from models.micro import (MicroConfig, average_reaction, effective_data, estimate_provider,
                          flux_averages, solve_cell, solve_corrector)
from problems.coefficients import CATALOG, catalog_get, laminate_alpha


Q = np.array([0.37, 0.52])
EPS = 0.01
SMOOTH_A0 = np.diag([np.sqrt(3.0), 2.0])


def _periodic(cells_per_period=16, ratio=1.0):
    return MicroConfig.from_ratio(ratio, EPS, cells_per_period, 'periodic')


def _dirichlet(ratio=2.0, cells_per_period=8):
    return MicroConfig.from_ratio(ratio, EPS, cells_per_period, 'dirichlet')


def test_config_validation():
    cfg = _dirichlet(2.5, 8)
    assert abs(cfg.cell_length - 2.5) < 1e-12 and cfg.resolution == 20
    for kwargs in (dict(delta=0.0, epsilon=EPS), dict(delta=EPS, epsilon=-1.0),
                   dict(delta=EPS, epsilon=EPS, cells_per_period=2),
                   dict(delta=EPS, epsilon=EPS, bc_mode='neumann'),
                   dict(delta=1.5 * EPS, epsilon=EPS, bc_mode='periodic')):
        try:
            MicroConfig(**kwargs)
            assert False, "invalid config accepted: {}".format(kwargs)
        except ValueError:
            pass


def test_constant_problem_is_identity():
    spec = catalog_get('constant', EPS)
    solution = solve_corrector(spec, Q, _dirichlet(), 1)
    assert np.allclose(solution.element_gradients, [1.0, 0.0], atol=1e-10)
    data = effective_data(spec, Q, _dirichlet())
    assert np.allclose(data.A_H, np.eye(2), atol=1e-10)
    assert np.allclose(data.b_H, [1.0, 0.0], atol=1e-10)
    assert abs(data.c_H - 1.0) <= 1e-12


def test_dirichlet_boundary_values_exact():
    spec = catalog_get('smooth-periodic', EPS)
    solution = solve_corrector(spec, Q, _dirichlet(1.5), 2)
    boundary = solution.mesh.boundary_node_flags
    assert np.array_equal(solution.values[boundary], solution.mesh.nodes[boundary, 1])


def test_laminate_cell_gradients():
    spec = catalog_get('laminate', EPS)
    cfg = _periodic(16)
    tangential = solve_corrector(spec, Q, cfg, 2)
    assert np.allclose(tangential.element_gradients, [0.0, 1.0], atol=1e-10)
    normal = solve_corrector(spec, Q, cfg, 1)
    alpha = laminate_alpha(normal.mesh.barycenters[:, 0])
    assert np.allclose(alpha * normal.element_gradients[:, 0], 1.6, atol=1e-8)


def test_periodic_solution_structure():
    spec = catalog_get('smooth-periodic', EPS)
    solution = solve_corrector(spec, Q, _periodic(8, 2.0), 1)
    mesh = solution.mesh
    n = mesh.n
    fluctuation = solution.values - mesh.nodes[:, 0]
    idx = np.arange(mesh.num_nodes).reshape(n + 1, n + 1)
    assert np.allclose(fluctuation[idx[:, 0]], fluctuation[idx[:, n]], atol=1e-12)
    assert abs(np.sum(mesh.areas * fluctuation[mesh.triangles].mean(axis=1))) <= 1e-12


def test_matched_cell_oracles():
    data = effective_data(catalog_get('laminate', EPS), Q, _periodic(64))
    assert np.allclose(data.A_H, np.diag([1.6, 2.5]), atol=1e-3)
    assert abs(data.A_H[0, 1]) <= 1e-8 and abs(data.A_H[1, 0]) <= 1e-8

    data = effective_data(catalog_get('smooth-periodic', EPS), Q, _periodic(64))
    assert np.allclose(data.A_H, SMOOTH_A0, atol=2e-3)
    assert abs(data.c_H - 2.0) <= 1e-6
    assert abs(data.A_H[0, 1]) <= 1e-3


def test_average_reaction():
    assert abs(average_reaction(catalog_get('smooth-periodic', EPS), Q, _dirichlet(1.0, 64)) - 2.0) <= 1e-6
    assert average_reaction(catalog_get('constant', EPS), Q, _dirichlet(2.5)) == 1.0
    spec = catalog_get('smooth-periodic', EPS)
    coarse = average_reaction(spec, Q, _dirichlet(2.5, 64))
    fine = average_reaction(spec, Q, _dirichlet(2.5, 320))
    # centroid rule error is O(h^2): about 3e-5 at 64 cells per period
    assert abs(coarse - fine) <= 1e-4
    assert abs(fine - 2.0) <= 1.0 / (np.pi * 2.5) + 1e-5


def test_matched_cell_agrees_with_corrector():
    for name in ('smooth-periodic', 'laminate'):
        spec = catalog_get(name, EPS)
        hc = homogenized_coefficients(spec, Q, 32)
        data = effective_data(spec, Q, _periodic(32))
        assert np.max(np.abs(data.A_H - hc.a0)) <= 1e-3, name
        assert np.max(np.abs(data.b_H - hc.b0)) <= 1e-3, name


def test_reaction_average_matches_homogenized():
    spec = catalog_get('smooth-periodic', EPS)
    c0 = homogenized_coefficients(spec, Q, 16).c0
    for ratio in (1.0, 2.0, 3.0):
        assert abs(average_reaction(spec, Q, _dirichlet(ratio, 16)) - c0) <= 1e-10, ratio


def test_linearity():
    spec = catalog_get('smooth-periodic', EPS)
    cfg = _dirichlet(1.5)
    data = effective_data(spec, Q, cfg)
    alpha, beta = 0.7, -1.3
    flux, drift = flux_averages(spec, Q, cfg, solve_cell(spec, Q, cfg, [alpha, beta]))
    assert np.allclose(flux, alpha * data.A_H[:, 0] + beta * data.A_H[:, 1], atol=1e-9)
    assert abs(drift - (alpha * data.b_H[0] + beta * data.b_H[1])) <= 1e-9


def test_ellipticity_band():
    for name in CATALOG:
        spec = catalog_get(name, EPS)
        lam, Lam = spec.ellipticity
        for cfg in (_dirichlet(2.0), _periodic(8, 2.0)):
            A = effective_data(spec, Q, cfg).A_H
            eig = np.linalg.eigvalsh(0.5 * (A + A.T))
            assert lam - 1e-9 <= eig.min() and eig.max() <= Lam + 1e-9, (name, eig)


def test_micro_mesh_convergence():
    spec = catalog_get('smooth-periodic', EPS)
    A = [effective_data(spec, Q, _periodic(cpp)).A_H for cpp in (8, 16, 32)]
    ratio = np.max(np.abs(A[1] - A[2])) / np.max(np.abs(A[0] - A[1]))
    assert ratio <= 0.6, ratio


def test_dirichlet_decay():
    spec = catalog_get('smooth-periodic', EPS)
    ratios = (1.0, 2.0, 4.0, 8.0)
    errors = [np.max(np.abs(effective_data(spec, Q, _dirichlet(r, 16)).A_H - SMOOTH_A0)) for r in ratios]
    slope = np.polyfit(np.log(ratios), np.log(errors), 1)[0]
    assert slope <= -0.8, (slope, errors)


def test_estimate_provider_counts():
    spec = catalog_get('smooth-periodic', EPS)
    mesh = build_unit_square_mesh(2)
    cfg = _periodic(8)
    provider, solves = estimate_provider(spec, mesh, cfg, threads=2)
    assert solves == 2 * mesh.num_elements and provider.provenance == 'hmm'
    cached, solves = estimate_provider(spec, mesh, cfg, cache=True)
    assert solves == 2
    assert np.allclose(cached.A, provider.A, atol=1e-12)


if __name__ == '__main__':
    for name, fn in list(globals().items()):
        if name.startswith('test_') and callable(fn):
            fn()
            print(f'* True {name}')
