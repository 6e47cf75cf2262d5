# lrk/lowrank/__init__.py

from lrk.lowrank.svd_tools import (
    LowRankError, SvdTriple, normalized_singular_values, nuclear_norm, numerical_rank, shrink,
    smooth_schatten, smooth_schatten_gradient, svd, truncate,
)
from lrk.lowrank.reweight import (
    Direction, PowerMode, Reweighter, apply_transform, build_reweighter,
    build_reweighter_from_basis, preconditioner_action,
)

__all__ = [
    'LowRankError', 'SvdTriple', 'normalized_singular_values', 'nuclear_norm', 'numerical_rank',
    'shrink', 'smooth_schatten', 'smooth_schatten_gradient', 'svd', 'truncate',
    'Direction', 'PowerMode', 'Reweighter', 'apply_transform', 'build_reweighter',
    'build_reweighter_from_basis', 'preconditioner_action',
]
