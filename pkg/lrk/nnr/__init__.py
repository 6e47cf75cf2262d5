# lrk/nnr/__init__.py

from .parameters import (
    LAMBDA_MAX, ORACLE_GRID, ProjectedRegularizer, SolverError, discrepancy_stop,
    exhaustive_lambda_search, optimal_lambda_oracle, outer_stop_singular_values, secant_lambda_update,
)
from .irn import InnerSolver, irn_nnrp, preconditioned_operator, solve_reweighted
from .flexible import FlexibleProcess, FlexibleVariant, flexible_nnrp
from .svt import svt

__all__ = [
    'LAMBDA_MAX', 'ORACLE_GRID', 'ProjectedRegularizer', 'SolverError', 'discrepancy_stop',
    'exhaustive_lambda_search', 'optimal_lambda_oracle', 'outer_stop_singular_values',
    'secant_lambda_update', 'InnerSolver', 'irn_nnrp', 'preconditioned_operator',
    'solve_reweighted', 'FlexibleProcess', 'FlexibleVariant', 'flexible_nnrp', 'svt',
]
