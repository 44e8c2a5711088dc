# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Locally periodic coefficients a(x, x/eps), b(x, x/eps), c(x, x/eps), the
source f(x) and the catalog of built-in test problems.

All evaluators are vectorized: x and y broadcast against each other with a
trailing axis of length 2.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np


DEFAULT_EPSILON = 0.01
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    name: str
    a: Callable
    b: Callable
    c: Callable
    f: Callable
    epsilon: float
    ellipticity: Tuple[float, float]
    oscillatory: bool = True
    x_dependent: bool = False

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError('epsilon must be positive, got {}'.format(self.epsilon))
        lam, Lam = self.ellipticity
        if not 0 < lam <= Lam:
            raise ValueError('ellipticity bounds must satisfy 0 < lambda <= Lambda, got {}'.format(
                self.ellipticity))

    def eval_a(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        return self.a(x, y)

    def eval_b(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        return self.b(x, y)

    def eval_c(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
        return self.c(x, y)

    def eval_f(self, x):
        return self.f(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class ProblemEntry:
    """
    Catalog entry: a ProblemSpec factory plus optional analytic data.

    homogenized(x) returns (a0 [..., 2, 2], b0 [..., 2], c0 [...]);
    solution is a pair (u(x), grad_u(x)).
    """
    build: Callable[[float], ProblemSpec]
    homogenized: Optional[Callable] = None
    solution: Optional[Tuple[Callable, Callable]] = None


def _isotropic(s):
    return s[..., None, None] * np.eye(2)


def _frac(y):
    return y - np.floor(y)


def sine_source(x):
    return 2.0 * np.pi ** 2 * np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])


def sine_solution(x):
    return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])


def sine_solution_gradient(x):
    sx, sy = np.sin(np.pi * x[..., 0]), np.sin(np.pi * x[..., 1])
    cx, cy = np.cos(np.pi * x[..., 0]), np.cos(np.pi * x[..., 1])
    return np.pi * np.stack([cx * sy, sx * cy], axis=-1)


def _constant_homogenized(a0, b0, c0):
    a0, b0 = np.asarray(a0, dtype=np.float64), np.asarray(b0, dtype=np.float64)

    def field(x):
        shape = np.shape(x)[:-1]
        return (np.broadcast_to(a0, shape + (2, 2)), np.broadcast_to(b0, shape + (2,)),
                np.full(shape, float(c0)))
    return field


# constant

def _constant(epsilon):
    return ProblemSpec(
        name='constant',
        a=lambda x, y: _isotropic(np.ones(y.shape[:-1])),
        b=lambda x, y: np.stack([np.ones(y.shape[:-1]), np.zeros(y.shape[:-1])], axis=-1),
        c=lambda x, y: np.ones(y.shape[:-1]),
        f=sine_source,
        epsilon=epsilon,
        ellipticity=(1.0, 1.0),
        oscillatory=False,
    )


# smooth-periodic

def _smooth_b(x, y):
    return np.stack([1.0 + 0.5 * np.cos(TWO_PI * y[..., 1]), np.zeros(y.shape[:-1])], axis=-1)


def _smooth_c(x, y):
    return 2.0 + np.cos(TWO_PI * y[..., 0])


def _smooth_periodic(epsilon):
    return ProblemSpec(
        name='smooth-periodic',
        a=lambda x, y: _isotropic(2.0 + np.sin(TWO_PI * y[..., 0])),
        b=_smooth_b,
        c=_smooth_c,
        f=sine_source,
        epsilon=epsilon,
        ellipticity=(1.0, 3.0),
    )


def _smooth_periodic_x(epsilon):
    return ProblemSpec(
        name='smooth-periodic-x',
        a=lambda x, y: _isotropic((1.0 + x[..., 0]) * (2.0 + np.sin(TWO_PI * y[..., 0]))),
        b=_smooth_b,
        c=_smooth_c,
        f=sine_source,
        epsilon=epsilon,
        ellipticity=(1.0, 6.0),
        x_dependent=True,
    )


def _smooth_periodic_x_homogenized(x):
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape[:-1]
    scale = (1.0 + x[..., 0])[..., None, None]
    a0 = scale * np.diag([np.sqrt(3.0), 2.0])
    return a0, np.broadcast_to(np.array([1.0, 0.0]), shape + (2,)), np.full(shape, 2.0)


# laminate

def laminate_alpha(y1):
    return np.where(_frac(y1) < 0.5, 1.0, 4.0)


def _laminate(epsilon):
    return ProblemSpec(
        name='laminate',
        a=lambda x, y: _isotropic(laminate_alpha(y[..., 0])),
        b=lambda x, y: np.zeros(y.shape),
        c=lambda x, y: np.zeros(y.shape[:-1]),
        f=sine_source,
        epsilon=epsilon,
        ellipticity=(1.0, 4.0),
    )


# manufactured

def _manufactured(epsilon):
    return ProblemSpec(
        name='manufactured',
        a=lambda x, y: _isotropic(np.ones(y.shape[:-1])),
        b=lambda x, y: np.zeros(y.shape),
        c=lambda x, y: np.zeros(y.shape[:-1]),
        f=sine_source,
        epsilon=epsilon,
        ellipticity=(1.0, 1.0),
        oscillatory=False,
    )


CATALOG = {
    'constant': ProblemEntry(_constant, homogenized=_constant_homogenized(np.eye(2), [1.0, 0.0], 1.0)),
    'smooth-periodic': ProblemEntry(
        _smooth_periodic,
        homogenized=_constant_homogenized(np.diag([np.sqrt(3.0), 2.0]), [1.0, 0.0], 2.0)),
    'smooth-periodic-x': ProblemEntry(_smooth_periodic_x, homogenized=_smooth_periodic_x_homogenized),
    'laminate': ProblemEntry(
        _laminate, homogenized=_constant_homogenized(np.diag([1.6, 2.5]), [0.0, 0.0], 0.0)),
    'manufactured': ProblemEntry(
        _manufactured,
        homogenized=_constant_homogenized(np.eye(2), [0.0, 0.0], 0.0),
        solution=(sine_solution, sine_solution_gradient)),
}


def catalog_entry(name):
    if name not in CATALOG:
        raise ValueError(f'problem {name} not supported')
    return CATALOG[name]


def catalog_get(name, epsilon=DEFAULT_EPSILON):
    return catalog_entry(name).build(epsilon)


@dataclass(frozen=True)
class PeriodicityReport:
    passed: bool
    max_deviation: float
    samples: int

    def __bool__(self):
        return self.passed


@dataclass(frozen=True)
class EllipticityReport:
    passed: bool
    symmetric: bool
    min_eigenvalue: float
    max_eigenvalue: float
    min_c: float

    def __bool__(self):
        return self.passed


def _sample(samples, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(samples, 2))
    y = rng.uniform(-2.0, 2.0, size=(samples, 2))
    return x, y


def periodicity_check(spec, samples=100, seed=0, atol=1e-12):
    """Unit-shift periodicity of a, b and c in y at random sample points."""
    assert samples >= 1, "need at least one sample"
    x, y = _sample(samples, seed)
    deviation = 0.0
    for shift in (np.array([1.0, 0.0]), np.array([0.0, 1.0])):
        for ev in (spec.eval_a, spec.eval_b, spec.eval_c):
            deviation = max(deviation, float(np.max(np.abs(ev(x, y + shift) - ev(x, y)))))
    return PeriodicityReport(deviation <= atol, deviation, samples)


def ellipticity_check(spec, samples=100, seed=0, tol=1e-12):
    """Symmetry of a, eigenvalues inside the declared band and c >= 0 at random points."""
    x, y = _sample(samples, seed)
    a = spec.eval_a(x, y)
    symmetric = bool(np.max(np.abs(a - np.swapaxes(a, -1, -2))) <= tol)
    eig = np.linalg.eigvalsh(0.5 * (a + np.swapaxes(a, -1, -2)))
    min_c = float(np.min(spec.eval_c(x, y)))
    lam, Lam = spec.ellipticity
    passed = symmetric and eig.min() >= lam - tol and eig.max() <= Lam + tol and min_c >= 0.0
    return EllipticityReport(bool(passed), symmetric, float(eig.min()), float(eig.max()), min_c)
