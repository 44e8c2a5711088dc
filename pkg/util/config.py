# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
Study configuration: flat `key = value` files feeding parser defaults, and
the validated StudyConfig the runners consume.
"""
from dataclasses import dataclass
from typing import List

from models.micro import MicroConfig
from problems import CATALOG


STUDIES = {
    'solve': 'single_solve',
    'h-sweep': 'h_sweep',
    'delta-sweep': 'delta_sweep',
    'lemmas': 'lemma_checks',
    'effective': 'effective',
}

FINE_FACTOR = 4
# studies whose errors are measured against the fine reference solution
REFERENCE_STUDIES = ('h_sweep', 'delta_sweep', 'single_solve')

_ALIASES = {'output': 'out', 'output_dir': 'out'}
_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


def int_list(text):
    return [int(v) for v in str(text).split(',') if v.strip()]


def float_list(text):
    return [float(v) for v in str(text).split(',') if v.strip()]


def load_config(path):
    """Parse `key = value` lines; `#` starts a comment, blank lines are skipped."""
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ValueError('{}:{}: expected `key = value`, got {!r}'.format(path, lineno, raw.strip()))
            key, value = (s.strip() for s in line.split('=', 1))
            key = key.replace('-', '_')
            key = _ALIASES.get(key, key)
            if not key:
                raise ValueError('{}:{}: empty key'.format(path, lineno))
            values[key] = (value, lineno)
    return values


def config_defaults(parser, values, path='<config>'):
    """Turn loaded config values into parser defaults; flags given on the command line still win."""
    actions = {a.dest: a for a in parser._actions}
    defaults = {}
    for key, (value, lineno) in values.items():
        if key not in actions or key in ('help', 'config'):
            raise ValueError('{}:{}: unknown key {}'.format(path, lineno, key))
        if actions[key].nargs == 0:
            lowered = value.lower()
            if lowered not in _TRUE + _FALSE:
                raise ValueError('{}:{}: {} expects a boolean, got {!r}'.format(path, lineno, key, value))
            defaults[key] = lowered in _TRUE
        else:
            # argparse applies `type` to string defaults
            defaults[key] = value
    return defaults


@dataclass(frozen=True)
class StudyConfig:
    study: str
    problem: str
    epsilon: float
    delta_over_eps: List[float]
    cells_per_period: int
    bc_mode: str
    resolutions: List[int]
    n_fine: int
    n_cell: int
    out: str = ''
    threads: int = 1
    cache_effective: bool = False
    zero_source: bool = False
    progress: bool = False
    seed: int = 42

    def __post_init__(self):
        if self.study not in STUDIES.values():
            raise ValueError(f'study {self.study} not supported')
        if self.problem not in CATALOG:
            raise ValueError(f'problem {self.problem} not supported')
        if not self.epsilon > 0:
            raise ValueError('epsilon must be positive, got {}'.format(self.epsilon))
        if not self.resolutions or any(n < 1 for n in self.resolutions):
            raise ValueError('resolutions must be positive integers, got {}'.format(self.resolutions))
        if any(b <= a for a, b in zip(self.resolutions, self.resolutions[1:])):
            raise ValueError('resolutions must be strictly increasing, got {}'.format(self.resolutions))
        bad = [n for n in self.resolutions if self.n_fine % n]
        if bad:
            raise ValueError('n_fine {} is not a multiple of resolutions {}'.format(self.n_fine, bad))
        if self.study in REFERENCE_STUDIES and self.n_fine < FINE_FACTOR * max(self.resolutions):
            raise ValueError('n_fine {} must be at least {} x the finest resolution {}'.format(
                self.n_fine, FINE_FACTOR, max(self.resolutions)))
        if not self.delta_over_eps or any(d <= 0 for d in self.delta_over_eps):
            raise ValueError('delta_over_eps values must be positive, got {}'.format(self.delta_over_eps))
        if self.threads < 1:
            raise ValueError('threads must be at least 1, got {}'.format(self.threads))
        # MicroConfig checks cells_per_period, bc_mode and integer ratios in periodic mode
        for d in self.delta_over_eps:
            self.micro_config(d)

    def micro_config(self, delta_over_eps):
        return MicroConfig.from_ratio(delta_over_eps, self.epsilon, self.cells_per_period, self.bc_mode)


def build_study_config(args):
    return StudyConfig(
        study=STUDIES[args.command],
        problem=args.problem,
        epsilon=args.epsilon,
        delta_over_eps=list(args.delta_over_eps),
        cells_per_period=args.cells_per_period,
        bc_mode=args.bc_mode,
        resolutions=list(args.resolutions),
        n_fine=args.n_fine,
        n_cell=args.n_cell,
        out=args.out,
        threads=args.threads,
        cache_effective=args.cache_effective,
        zero_source=args.zero_source,
        progress=args.progress,
        seed=args.seed,
    )
