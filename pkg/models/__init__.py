# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

from .hmm import build


def build_model(args, problem, delta_over_eps=None, **kwargs):
    return build(args, problem, delta_over_eps, **kwargs)
