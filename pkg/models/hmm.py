# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

"""
HMM-FVM solver: micro estimation of the effective data followed by the
finite volume element macro solve.
"""
import time

from .hmm_fvm import assemble_fvm, direct_provider, solve_macro
from .micro import MicroConfig, estimate_provider


class HMMFVM(object):
    """ Coarse solver whose missing coefficients come from micro cell problems """
    def __init__(self, problem, micro_cfg, cache_effective=False, threads=1, progress=False,
                 always_micro=False, lumping='barycenter'):
        """ Initializes the solver.
        Parameters:
            problem: ProblemSpec with the oscillating coefficients and the source
            micro_cfg: MicroConfig of the sampling cells
            cache_effective: share one effective record across elements for x-independent problems
            threads: worker threads for the per-element micro solves
            always_micro: run micro solves even when the coefficients do not oscillate
            lumping: reaction treatment of the macro scheme, 'barycenter' or 'dual'
        """
        self.problem = problem
        self.micro_cfg = micro_cfg
        self.cache_effective = cache_effective
        self.threads = threads
        self.progress = progress
        self.always_micro = always_micro
        self.lumping = lumping

    def estimate(self, mesh):
        if not (self.problem.oscillatory or self.always_micro):
            return direct_provider(self.problem, mesh), 0
        return estimate_provider(self.problem, mesh, self.micro_cfg, cache=self.cache_effective,
                                 threads=self.threads, progress=self.progress)

    def __call__(self, mesh):
        """ The solve expects a coarse TriMesh.

            It returns a dict with the following elements:
               - "solution": CoarseSolution with zero boundary values
               - "provider": the CoefficientProvider used by the macro form
               - "form": the AssembledForm handed to the linear solver
               - "micro_solves": number of cell problems solved
               - "time_micro", "time_macro": wall-clock seconds per phase
        """
        start = time.time()
        provider, micro_solves = self.estimate(mesh)
        time_micro = time.time() - start

        start = time.time()
        form = assemble_fvm(mesh, provider, self.problem.eval_f, lumping=self.lumping)
        solution = solve_macro(form)
        time_macro = time.time() - start

        return {'solution': solution, 'provider': provider, 'micro_solves': micro_solves,
                'time_micro': time_micro, 'time_macro': time_macro, 'form': form}


def build(args, problem, delta_over_eps=None, **kwargs):
    ratio = args.delta_over_eps[0] if delta_over_eps is None else delta_over_eps
    micro_cfg = MicroConfig.from_ratio(ratio, problem.epsilon, args.cells_per_period, args.bc_mode)
    return HMMFVM(problem, micro_cfg, cache_effective=args.cache_effective, threads=args.threads,
                  progress=args.progress, **kwargs)
