# ------------------------------------------------------------------------
# HMM-FVM Lab
# Licensed under the Apache License, Version 2.0 [see LICENSE for details]
# ------------------------------------------------------------------------

from .sparse import SolverError, SparseAssembler, SparseSystem, assemble_begin, dense_form, solve
