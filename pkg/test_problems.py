import json

import numpy as np
import pytest
from PIL import Image

from lrk.krylov import lsqr
from lrk.lowrank import numerical_rank
from lrk.models import StoppingRule
from lrk.problems import (
    ProblemError, add_noise, export_problem, generate_problem, import_problem, inpainting_problem,
    load_image, load_pgm, normalized_spectrum, phantom_problem, relative_error, save_pgm,
    star_problem,
)


class TestGenerators:
    def test_star_rank(self):
        problem = star_problem(n=32, seed=1)
        assert numerical_rank(problem.x_exact) == 2
        assert problem.op.shape == (1024, 1024)
        assert problem.n == 32

    def test_phantom_rank_and_shape(self):
        problem = phantom_problem(n=32, angle_span_degrees=90.0)
        assert numerical_rank(problem.x_exact) == 4
        n_angles = problem.params['n_angles']
        assert n_angles == 16
        assert problem.op.shape == (n_angles * problem.params['detector_count'], 1024)

    @pytest.mark.parametrize('level', [1e-3, 1e-2, 0.1])
    def test_noise_level_is_exact(self, level):
        problem = star_problem(n=16, noise_level=level, seed=3)
        ratio = np.linalg.norm(problem.b - problem.b_exact) / np.linalg.norm(problem.b_exact)
        assert ratio == pytest.approx(level, rel=1e-12)
        assert problem.epsilon == pytest.approx(level * np.linalg.norm(problem.b_exact), rel=1e-12)

    def test_zero_noise(self, rng):
        b = rng.standard_normal(10)
        assert np.array_equal(add_noise(b, 0.0, seed=1), b)
        with pytest.raises(ProblemError):
            add_noise(b, -1e-3, seed=1)

    def test_determinism(self):
        first = inpainting_problem(n=16, seed=5)
        second = inpainting_problem(n=16, seed=5)
        other = inpainting_problem(n=16, seed=6)
        assert np.array_equal(first.b, second.b)
        assert not np.array_equal(first.b, other.b)

    def test_inpainting_rank_cap(self):
        problem = inpainting_problem(image='peppers-like', n=24, rank_cap=5, blur='gaussian')
        assert numerical_rank(problem.x_exact) <= 5
        assert problem.op.shape[0] < problem.op.shape[1]

    def test_all_pixels_kept_without_blur(self):
        """A = I: один шаг LSQR даёт x = b."""
        problem = inpainting_problem(n=8, missing_fraction=0.0, blur='none', noise_level=0.0)
        assert problem.op.shape == (64, 64)
        report = lsqr(problem.op, problem.b, StoppingRule(max_iter=1))
        assert np.allclose(report.final_x, problem.b)

    def test_invalid_parameters(self):
        with pytest.raises(ProblemError):
            star_problem(n=8)
        with pytest.raises(ProblemError):
            phantom_problem(n=16, angle_span_degrees=180.0)
        with pytest.raises(ProblemError):
            inpainting_problem(n=16, rank_cap=17)
        with pytest.raises(ProblemError):
            inpainting_problem(n=16, pattern='stripes')
        with pytest.raises(ProblemError):
            inpainting_problem(n=16, image='lena')

    def test_generate_problem(self):
        problem = generate_problem('star', n=16, seed=2)
        assert problem.name == 'star'
        with pytest.raises(ProblemError):
            generate_problem('satellite')
        with pytest.raises(ProblemError):
            generate_problem('star', n=16, unknown=1)


class TestMetrics:
    def test_relative_error(self, rng):
        x = rng.standard_normal(9)
        assert relative_error(x, x) == 0.0
        assert relative_error(np.zeros(9), x) == pytest.approx(1.0)
        assert relative_error(2.0 * x, x) == pytest.approx(1.0)
        with pytest.raises(ProblemError):
            relative_error(x, np.zeros(9))
        with pytest.raises(ProblemError):
            relative_error(x, np.ones(4))

    def test_normalized_spectrum_cutoff(self):
        x = np.diag([2.0, 1.0, 1e-4]).reshape(-1, order='F')
        assert np.allclose(normalized_spectrum(x), [1.0, 0.5])
        assert np.allclose(normalized_spectrum(x, cutoff=None), [1.0, 0.5, 5e-5])


class TestExport:
    def test_pgm_round_trip(self, rng, tmp_path):
        x = rng.standard_normal(36)
        path = save_pgm(x, tmp_path / 'img.pgm')
        loaded = load_pgm(path)
        expected = (x - x.min()) / (x.max() - x.min())
        assert loaded.shape == (6, 6)
        assert np.allclose(loaded.reshape(-1, order='F'), expected, atol=1.0 / 65535)

    def test_export_and_import(self, star16, tmp_path):
        directory = export_problem(star16, tmp_path / 'star')
        for name in ('x_exact.pgm', 'b.npy', 'problem.json'):
            assert (directory / name).exists()
        with open(directory / 'problem.json', encoding='utf-8') as f:
            meta = json.load(f)
        assert meta['generator'] == 'star'
        assert meta['shape'] == [256, 256]
        restored = import_problem(directory)
        assert np.array_equal(restored.b, star16.b)

    def test_import_detects_mismatch(self, star16, tmp_path):
        directory = export_problem(star16, tmp_path / 'star')
        np.save(directory / 'b.npy', star16.b + 1e-6)
        with pytest.raises(ProblemError):
            import_problem(directory)

    def test_import_missing_directory(self, tmp_path):
        with pytest.raises(ProblemError):
            import_problem(tmp_path / 'absent')

    def test_load_image(self, tmp_path):
        path = tmp_path / 'gradient.png'
        Image.fromarray(np.tile(np.arange(0, 256, 8, dtype=np.uint8), (32, 1))).save(path)
        image = load_image(path, 16)
        assert image.shape == (16, 16)
        assert image.max() == pytest.approx(1.0)
        problem = inpainting_problem(image='file', path=path, n=16)
        assert problem.params['path'] == str(path)

    def test_unreadable_image(self, tmp_path):
        path = tmp_path / 'broken.png'
        path.write_text('not an image')
        with pytest.raises(ProblemError):
            load_image(path, 16)
        with pytest.raises(ProblemError):
            load_image(tmp_path / 'missing.png', 16)
