# lrk/krylov/__init__.py

from lrk.krylov.factorizations import (
    ArnoldiState, FactorizationError, GkbState, arnoldi_step, gkb_step, orthogonalize,
    start_arnoldi, start_gkb,
)
from lrk.krylov.projected import projected_tikhonov
from lrk.krylov.solvers import gmres, gram_solve, lr_fgmres, lr_flsqr, lsqr, residual_norm, rs_lr_gmres

__all__ = [
    'ArnoldiState', 'FactorizationError', 'GkbState', 'arnoldi_step', 'gkb_step', 'orthogonalize',
    'start_arnoldi', 'start_gkb', 'projected_tikhonov',
    'gmres', 'gram_solve', 'lr_fgmres', 'lr_flsqr', 'lsqr', 'residual_norm', 'rs_lr_gmres',
]
