# lrk/linops/__init__.py

from lrk.linops.vectorize import OperatorError, side_of, unvec, unvec_square, vec
from lrk.linops.operators import (
    ImagingOperator, OperatorKind, dense_operator, gaussian_blur_matrix, gaussian_blur_operator,
    identity_operator, inpainting_operator, normal_equations_operator, shaking_blur_operator,
    shaking_psf,
)
from lrk.linops.tomography import default_detector_count, limited_angles, tomography_operator
from lrk.linops.masks import random_mask, structured_mask

__all__ = [
    'OperatorError', 'side_of', 'unvec', 'unvec_square', 'vec',
    'ImagingOperator', 'OperatorKind', 'dense_operator', 'gaussian_blur_matrix',
    'gaussian_blur_operator', 'identity_operator', 'inpainting_operator',
    'normal_equations_operator', 'shaking_blur_operator', 'shaking_psf',
    'default_detector_count', 'limited_angles', 'tomography_operator',
    'random_mask', 'structured_mask',
]
