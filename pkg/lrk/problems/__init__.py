# lrk/problems/__init__.py

from lrk.problems.metrics import SPECTRUM_CUTOFF, ProblemError, normalized_spectrum, relative_error
from lrk.problems.images import (
    SYNTHETIC_SOURCES, house_like_image, load_image, peppers_like_image, phantom_image,
    source_image, star_image,
)
from lrk.problems.generators import (
    GENERATORS, TestProblem, add_noise, generate_problem, inpainting_problem, phantom_problem,
    star_problem,
)
from lrk.problems.export import export_problem, import_problem, load_pgm, save_pgm

__all__ = [
    'SPECTRUM_CUTOFF', 'ProblemError', 'normalized_spectrum', 'relative_error',
    'SYNTHETIC_SOURCES', 'house_like_image', 'load_image', 'peppers_like_image', 'phantom_image',
    'source_image', 'star_image',
    'GENERATORS', 'TestProblem', 'add_noise', 'generate_problem', 'inpainting_problem',
    'phantom_problem', 'star_problem',
    'export_problem', 'import_problem', 'load_pgm', 'save_pgm',
]
