# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

from .coefficients import CATALOG, ProblemSpec, catalog_entry, catalog_get


def build_problem(args):
    if args.problem not in CATALOG:
        raise ValueError(f'problem {args.problem} not supported')
    return catalog_get(args.problem, args.epsilon)
