# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Study runners used in main.py
"""
import csv
import dataclasses
import math
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

import util.misc as utils
from models import build_model
from models.hmm_fvm import (GapMetric, assemble_fem, barycenter_quadrature_error, coefficient_gap,
                            homogenized_provider, operator_gap_diagnostics, nodal_interpolant,
                            pi_star_deficit, rhs_consistency, solve_macro)
from models.homogenization import exact_error, h1_error, homogenized_field, reference_solution
from models.mesh import build_unit_square_mesh, single_triangle_mesh
from models.micro import MicroConfig, cell_average
from models.ops.p1 import basis_gradients
from problems import build_problem, catalog_entry


GAP_MAX_RESOLUTION = 16
AVERAGING_RATIOS = (1.0, 2.0, 4.0, 8.0, 1.5, 2.5, 4.5, 8.5)
RESULT_COLUMNS = ('study', 'problem', 'n', 'H', 'eps', 'delta_over_eps', 'bc_mode',
                  'l2', 'h1', 'rate_h1', 'ehmm')
TIMING_COLUMNS = ('study', 'n', 'delta_over_eps', 'micro_solves', 'time_micro', 'time_macro')
SPLIT_COLUMNS = ('n', 'H', 'ref_vs_fem', 'fem_vs_fvm', 'ref_vs_fvm')


class StageError(RuntimeError):
    pass


@contextmanager
def stage(name, point):
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError('stage {} failed at {}: {}'.format(name, point, e)) from e


@dataclass
class RateRow:
    study: str
    problem: str
    n: int
    H: float
    eps: float
    delta_over_eps: float
    bc_mode: str
    l2: float
    h1: float
    rate_h1: float = float('nan')
    ehmm: float = float('nan')


def compute_rates(params, errors):
    """Incremental rates log(e_{k-1}/e_k) / log(p_{k-1}/p_k); undefined for the first row and zero errors."""
    rates = [float('nan')]
    for (p0, e0), (p1, e1) in zip(zip(params, errors), zip(params[1:], errors[1:])):
        if e0 > 0 and e1 > 0 and p0 != p1:
            rates.append(math.log(e0 / e1) / math.log(p0 / p1))
        else:
            rates.append(float('nan'))
    return rates[:len(errors)]


def fit_slope(params, errors):
    """Least-squares log-log slope over the rows with positive error."""
    pairs = [(p, e) for p, e in zip(params, errors) if e > 0 and np.isfinite(e)]
    if len(pairs) < 2:
        return float('nan')
    p, e = np.log(np.array(pairs)).T
    return float(np.polyfit(p, e, 1)[0])


def _fmt(value):
    if isinstance(value, float):
        return '' if math.isnan(value) else '{:.10e}'.format(value)
    return str(value)


def write_csv(path, columns, rows):
    with open(path, 'w', newline='') as f:
        w = csv.writer(f, lineterminator='\n')
        w.writerow(columns)
        for row in rows:
            record = dataclasses.asdict(row) if dataclasses.is_dataclass(row) else row
            w.writerow([_fmt(record[c]) for c in columns])


def print_rate_table(rows, param='H'):
    print('{:>6} {:>12} {:>14} {:>14} {:>8} {:>12}'.format('n', param, 'l2', 'h1', 'rate', 'ehmm'))
    for r in rows:
        p = r.H if param == 'H' else r.delta_over_eps
        print('{:>6} {:>12.5g} {:>14.6e} {:>14.6e} {:>8} {:>12}'.format(
            r.n, p, r.l2, r.h1, '-' if math.isnan(r.rate_h1) else '{:.3f}'.format(r.rate_h1),
            '-' if math.isnan(r.ehmm) else '{:.3e}'.format(r.ehmm)))


def _zero(x):
    return np.zeros(np.shape(x)[:-1])


def study_problem(cfg):
    problem = build_problem(cfg)
    if cfg.zero_source:
        problem = dataclasses.replace(problem, f=_zero)
    return problem


def reference_field(problem, n_cell):
    """Homogenized coefficients: analytic for x-dependent catalog entries, cell solves otherwise."""
    entry = catalog_entry(problem.name)
    if problem.x_dependent and entry.homogenized is not None:
        return entry.homogenized
    return homogenized_field(problem, n_cell)


def _check_finite(point, *values):
    if not all(np.isfinite(v) for v in values):
        print('WARNING: non-finite error at {}: {}'.format(point, values))
        raise StageError('non-finite error at {}'.format(point))


def _errors(problem, solution, ref):
    entry = catalog_entry(problem.name)
    if entry.solution is not None and problem.f is not _zero:
        return exact_error(solution, *entry.solution)
    return h1_error(solution, ref)


class _Study(object):
    """Shared plumbing of one study: problem, homogenized reference and meters."""

    def __init__(self, cfg, header):
        self.cfg = cfg
        self.problem = study_problem(cfg)
        self.header = header
        self.metric_logger = utils.MetricLogger(delimiter="  ")
        self.timings = []
        with stage('reference', 'n_fine={}'.format(cfg.n_fine)):
            self.field = reference_field(self.problem, cfg.n_cell)
            self.ref = reference_solution(self.field, self.problem.eval_f, cfg.n_fine, cfg.n_cell)

    def solve(self, n, ratio, **kwargs):
        point = 'n={} delta_over_eps={}'.format(n, ratio)
        with stage('mesh', point):
            mesh = build_unit_square_mesh(n)
        with stage('micro+macro', point):
            out = build_model(self.cfg, self.problem, ratio, **kwargs)(mesh)
        with stage('error', point):
            err = _errors(self.problem, out['solution'], self.ref)
            ehmm = coefficient_gap(out['provider'], homogenized_provider(self.field, mesh))
        _check_finite(point, err['l2'], err['h1'])
        self.metric_logger.update(time_micro=out['time_micro'], time_macro=out['time_macro'],
                                  h1=err['h1'])
        self.timings.append({'study': self.cfg.study, 'n': n, 'delta_over_eps': float(ratio),
                             'micro_solves': out['micro_solves'], 'time_micro': out['time_micro'],
                             'time_macro': out['time_macro']})
        row = RateRow(self.cfg.study, self.problem.name, n, mesh.H, self.problem.epsilon, float(ratio),
                      self.cfg.bc_mode, err['l2'], err['h1'], ehmm=ehmm)
        return mesh, out, row


def run_h_sweep(cfg):
    """
    Coarse refinement at fixed micro data. Each point also solves the exact
    finite element form with homogenized coefficients for the error split.
    """
    study = _Study(cfg, 'h-sweep:')
    ratio = cfg.delta_over_eps[0]
    rows, split = [], []
    for n in study.metric_logger.log_every(cfg.resolutions, 1, study.header):
        mesh, out, row = study.solve(n, ratio)
        with stage('error split', 'n={}'.format(n)):
            form = assemble_fem(mesh, homogenized_provider(study.field, mesh), study.problem.eval_f)
            fem = solve_macro(form)
            split.append({'n': n, 'H': mesh.H,
                          'ref_vs_fem': h1_error(fem, study.ref)['h1'],
                          'fem_vs_fvm': h1_error(fem, out['solution'])['h1'],
                          'ref_vs_fvm': h1_error(out['solution'], study.ref)['h1']})
        rows.append(row)

    for row, rate in zip(rows, compute_rates([r.H for r in rows], [r.h1 for r in rows])):
        row.rate_h1 = rate
    slope = fit_slope([r.H for r in rows], [r.h1 for r in rows])
    print_rate_table(rows, 'H')
    print('least-squares h1 slope vs H: {:.3f}'.format(slope))
    return {'rows': rows, 'split': split, 'timings': study.timings,
            'log_stats': {'study': cfg.study, 'problem': cfg.problem, 'slope_h1': slope,
                          'final_rate_h1': rows[-1].rate_h1, **study.metric_logger.totals()}}


def run_delta_sweep(cfg):
    """Sampling-cell sweep at the first coarse resolution; e(HMM) and H1 error per delta/eps."""
    study = _Study(cfg, 'delta-sweep:')
    n = cfg.resolutions[0]
    rows = []
    for ratio in study.metric_logger.log_every(cfg.delta_over_eps, 1, study.header):
        _, _, row = study.solve(n, ratio, always_micro=True)
        rows.append(row)

    ratios = [r.delta_over_eps for r in rows]
    for row, rate in zip(rows, compute_rates(ratios, [r.h1 for r in rows])):
        row.rate_h1 = rate
    ehmm_slope = fit_slope(ratios, [r.ehmm for r in rows])
    print_rate_table(rows, 'delta_over_eps')
    print('least-squares e(HMM) slope vs delta/eps: {:.3f}'.format(ehmm_slope))
    return {'rows': rows, 'timings': study.timings,
            'log_stats': {'study': cfg.study, 'problem': cfg.problem, 'slope_ehmm': ehmm_slope,
                          'slope_h1': fit_slope(ratios, [r.h1 for r in rows]),
                          **study.metric_logger.totals()}}


def averaging_table(epsilon, cells_per_period, ratios=AVERAGING_RATIOS):
    """Cell average of sin(2 pi y1) on centred cells whose fast phase is a quarter period."""
    Q = np.array([0.25 * epsilon, 0.5])
    table = []
    for ratio in ratios:
        cfg = MicroConfig.from_ratio(ratio, epsilon, cells_per_period, 'dirichlet')
        error = abs(cell_average(lambda y: np.sin(2.0 * np.pi * y[..., 0]), Q, cfg))
        table.append({'delta_over_eps': ratio, 'error': error})
    return table


QUADRATURE_BATTERY = {
    '1': lambda x: np.ones(x.shape[:-1]),
    'x1': lambda x: x[..., 0],
    'x2': lambda x: x[..., 1],
    'x1^2': lambda x: x[..., 0] ** 2,
    'x1*x2': lambda x: x[..., 0] * x[..., 1],
    'x2^2': lambda x: x[..., 1] ** 2,
}


def quadrature_battery():
    reference = single_triangle_mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    return {name: float(barycenter_quadrature_error(reference, g)[0])
            for name, g in QUADRATURE_BATTERY.items()}


def _h1_semi(solution):
    mesh = solution.mesh
    grads = np.einsum('mij,mi->mj', basis_gradients(mesh.coords), solution.values[mesh.triangles])
    return float(np.sqrt(np.sum(mesh.areas * np.sum(grads ** 2, axis=1))))


def run_lemma_checks(cfg):
    """Operator gaps, right-hand-side consistency, averaging errors, Pi* deficits and E_K values."""
    if max(cfg.resolutions) > GAP_MAX_RESOLUTION:
        raise ValueError('lemma checks size guard: resolutions {} exceed n = {}'.format(
            cfg.resolutions, GAP_MAX_RESOLUTION))
    problem = study_problem(cfg)
    field = reference_field(problem, cfg.n_cell)
    ratio = cfg.delta_over_eps[0]
    solver = build_model(cfg, problem, ratio, always_micro=True)
    metric_logger = utils.MetricLogger(delimiter="  ")

    gaps = {k: [] for k in ('eps1', 'eps2', 'eps3', 'eps3_dual', 'total', 't2')}
    pi_star, H = [], []
    for n in metric_logger.log_every(cfg.resolutions, 1, 'lemmas:'):
        point = 'n={}'.format(n)
        with stage('mesh', point):
            mesh = build_unit_square_mesh(n)
            metric = GapMetric(mesh)
        with stage('micro', point):
            hmm_provider, _ = solver.estimate(mesh)
        with stage('diagnostics', point):
            diag = operator_gap_diagnostics(mesh, hmm_provider, homogenized_provider(field, mesh), metric)
            diag['t2'] = rhs_consistency(mesh, problem.eval_f, metric)
            v = nodal_interpolant(mesh, lambda x: x[..., 0])
            deficit = pi_star_deficit(mesh, v)
        for k in gaps:
            gaps[k].append(diag[k])
        H.append(mesh.H)
        pi_star.append({'n': n, 'deficit': deficit, 'ratio': deficit / (mesh.H * _h1_semi(v))})
        metric_logger.update(eps3=diag['eps3'], eps3_dual=diag['eps3_dual'])

    averaging = averaging_table(cfg.epsilon, max(cfg.cells_per_period, 64))
    fractional = [a for a in averaging if a['delta_over_eps'] % 1]
    report = {
        'problem': cfg.problem,
        'delta_over_eps': ratio,
        'bc_mode': cfg.bc_mode,
        'resolutions': list(cfg.resolutions),
        'H': H,
        **gaps,
        'slopes': {k: fit_slope(H, v) for k, v in gaps.items()},
        'averaging': averaging,
        'averaging_slope': fit_slope([a['delta_over_eps'] for a in fractional],
                                     [a['error'] for a in fractional]),
        'pi_star': pi_star,
        'quadrature': quadrature_battery(),
    }

    print('{:>6} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}'.format(
        'n', 'eps1', 'eps2', 'eps3', 'eps3_dual', 'total', 't2'))
    for i, n in enumerate(cfg.resolutions):
        print('{:>6} '.format(n) + ' '.join('{:>12.4e}'.format(gaps[k][i]) for k in gaps))
    print('slopes vs H: ' + ', '.join('{} {:.3f}'.format(k, s) for k, s in report['slopes'].items()))
    print('averaging slope vs delta/eps (non-integer ratios): {:.3f}'.format(report['averaging_slope']))
    return {'report': report,
            'log_stats': {'study': cfg.study, 'problem': cfg.problem, **report['slopes']}}


def run_single_solve(cfg):
    study = _Study(cfg, 'solve:')
    n = cfg.resolutions[0]
    mesh, out, row = study.solve(n, cfg.delta_over_eps[0])
    print('n={} micro solves={} time micro={:.3f}s macro={:.3f}s l2={:.6e} h1={:.6e}'.format(
        n, out['micro_solves'], out['time_micro'], out['time_macro'], row.l2, row.h1))
    return {'rows': [row], 'timings': study.timings, 'solution': out['solution'],
            'provider': out['provider'], 'mesh': mesh, 'form': out['form'],
            'log_stats': {'study': cfg.study, 'problem': cfg.problem, 'n': n,
                          'micro_solves': out['micro_solves'], 'h1': row.h1}}


EFFECTIVE_COLUMNS = ('A11', 'A12', 'A21', 'A22', 'b1', 'b2', 'c')


def format_effective_row(k, Q, provider):
    values = [*provider.A[k].ravel(), *provider.b[k], provider.c[k]]
    return '{:>6} {:>10.4f} {:>10.4f} '.format(k, Q[0], Q[1]) + ' '.join('{:>12.6f}'.format(v) for v in values)


def run_effective(cfg):
    problem = study_problem(cfg)
    n = cfg.resolutions[0]
    mesh = build_unit_square_mesh(n)
    with stage('micro', 'n={}'.format(n)):
        provider, micro_solves = build_model(cfg, problem, cfg.delta_over_eps[0],
                                             always_micro=True).estimate(mesh)
    print('{:>6} {:>10} {:>10} '.format('elem', 'Qx', 'Qy') + ' '.join('{:>12}'.format(c) for c in EFFECTIVE_COLUMNS))
    for k, Q in enumerate(mesh.barycenters):
        print(format_effective_row(k, Q, provider))
    return {'mesh': mesh, 'provider': provider,
            'log_stats': {'study': cfg.study, 'problem': cfg.problem, 'n': n, 'micro_solves': micro_solves}}


def dump_effective(mesh, provider, path):
    with open(path, 'w') as f:
        for k, Q in enumerate(mesh.barycenters):
            values = [Q[0], Q[1], *provider.A[k].ravel(), *provider.b[k], provider.c[k]]
            f.write('{} '.format(k) + ' '.join('{:.17g}'.format(v) for v in values) + '\n')


RUNNERS = {
    'h_sweep': run_h_sweep,
    'delta_sweep': run_delta_sweep,
    'lemma_checks': run_lemma_checks,
    'single_solve': run_single_solve,
    'effective': run_effective,
}


def run_study(cfg):
    if cfg.study not in RUNNERS:
        raise ValueError(f'study {cfg.study} not supported')
    return RUNNERS[cfg.study](cfg)
