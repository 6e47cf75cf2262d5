import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from lrk.cli import EXIT_CONFIG_ERROR, EXIT_SOLVER_FAILURE, cli
from lrk.config import ConfigurationError
from lrk.krylov.solvers import new_report
from lrk.processing import CROSS_CHECK_TOL, CrossCheckError, ExperimentRunner, parse_experiment_config

SMALL_STAR = {
    'problem': {'type': 'star', 'n': 16, 'noise_level': 1e-3, 'sigma_blur': 1.5, 'seed': 0},
    'solvers': [
        {'name': 'gmres', 'max_iter': 5},
        {'name': 'lsqr', 'max_iter': 5, 'lambda_rule': {'kind': 'fixed', 'value': 1e-4}},
        {'name': 'lr-fgmres', 'max_iter': 5, 'kappa': 2, 'kappa_b': 2},
        {'name': 'rs-lr-gmres', 'max_iter': 6, 'restart': 3, 'kappa': 2},
        {'name': 'irn-lsqr-nnrp', 'max_iter': 10, 'max_inner': 5, 'max_outer': 2, 'stop': 'max_iter'},
        {'name': 'flsqr-nnrp', 'max_iter': 5},
        {'name': 'svt', 'max_iter': 5, 'tau': 0.01, 'delta': 1.0},
    ],
    'flags': {'emit_images': True, 'emit_spectra': True, 'cross_check_residuals': True},
}


def _write(tmp_path, data, name='config.json'):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding='utf-8')
    return path


def _run(*args):
    return CliRunner().invoke(cli, ['run', *map(str, args)])


class TestConfigParsing:
    def test_defaults_filled(self):
        config = parse_experiment_config(SMALL_STAR)
        gmres = config.solvers[0].to_dict()
        assert gmres['theta'] == 1.01
        assert gmres['stop'] == 'max_iter'
        assert gmres['lambda_rule']['kind'] == 'zero'
        assert config.solvers[3].settings['max_outer'] == 2
        assert config.output_dir == 'results'

    def test_irn_defaults_to_discrepancy(self):
        config = parse_experiment_config({'problem': {'type': 'star'}, 'solvers': [{'name': 'irn-gmres-nnrp'}]})
        assert config.solvers[0].settings['stop'] == 'discrepancy'
        assert config.problem['seed'] == 0

    @pytest.mark.parametrize('data, path', [
        ({'problem': {'type': 'star'}, 'solvers': []}, 'solvers'),
        ({'problem': {'type': 'star'}, 'solvers': [{'name': 'cg'}]}, 'solvers[0].name'),
        ({'problem': {'type': 'star'}, 'solvers': [{'name': 'gmres', 'max_iter': 0}]}, 'solvers[0].max_iter'),
        ({'problem': {'type': 'star'}, 'solvers': [{'name': 'gmres', 'kapa': 3}]}, 'solvers[0].kapa'),
        ({'problem': {'type': 'star'}, 'solvers': [{'name': 'svt', 'lambda_rule': 'secant'}]},
         'solvers[0].lambda_rule'),
        ({'problem': {'type': 'star'}, 'solvers': [{'name': 'flsqr-nnrp', 'lambda_rule': 'optimal'}]},
         'solvers[0].lambda_rule'),
        ({'problem': {'type': 'star'}, 'solvers': [{'name': 'gmres'}, {'name': 'gmres'}]}, 'solvers[1].label'),
        ({'problem': {'type': 'blob'}, 'solvers': [{'name': 'gmres'}]}, 'problem.type'),
        ({'problem': {'type': 'star', 'angles': 3}, 'solvers': [{'name': 'gmres'}]}, 'problem.angles'),
        ({'problem': {'type': 'star'}, 'solvers': [{'name': 'gmres'}], 'flags': {'verbose': True}},
         'flags.verbose'),
    ])
    def test_errors_name_the_field(self, data, path):
        with pytest.raises(ConfigurationError) as e:
            parse_experiment_config(data)
        assert str(e.value).startswith(path)


class TestCli:
    def test_validate_only(self, tmp_path):
        result = _run(_write(tmp_path, SMALL_STAR), '--validate-only', '--seed-override', 7)
        assert result.exit_code == 0
        resolved = json.loads(result.output)
        assert resolved['problem']['seed'] == 7
        assert resolved['solvers'][0]['max_iter'] == 5

    def test_config_errors(self, tmp_path):
        empty = _write(tmp_path, {'problem': {'type': 'star'}, 'solvers': []})
        result = _run(empty)
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert 'solvers' in result.output

        unknown = _write(tmp_path, {'problem': {'type': 'star'}, 'solvers': [{'name': 'cg'}]}, 'unknown.json')
        result = _run(unknown)
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert 'solvers[0].name' in result.output

        assert _run(tmp_path / 'missing.json').exit_code == EXIT_CONFIG_ERROR

    def test_invalid_problem_parameters(self, tmp_path):
        data = {'problem': {'type': 'star', 'n': 8}, 'solvers': [{'name': 'gmres'}]}
        result = _run(_write(tmp_path, data), '--out', tmp_path / 'out')
        assert result.exit_code == EXIT_CONFIG_ERROR

    def test_small_run(self, tmp_path):
        out = tmp_path / 'out'
        result = _run(_write(tmp_path, SMALL_STAR), '--out', out)
        assert result.exit_code == 0, result.output

        frame = pd.read_csv(out / 'gmres_iterations.csv')
        assert list(frame.columns) == ['iter', 'outer', 'rel_error', 'residual', 'lambda_hat']
        assert list(frame['iter']) == [1, 2, 3, 4, 5]
        assert (pd.read_csv(out / 'lsqr_iterations.csv')['lambda_hat'] == 1e-4).all()

        irn = pd.read_csv(out / 'irn-lsqr-nnrp_iterations.csv')
        assert list(irn['outer']) == [1] * 5 + [2] * 5
        for k in (1, 2):
            spectrum = pd.read_csv(out / f'irn-lsqr-nnrp_spectrum_outer{k}.csv')
            assert list(spectrum.columns) == ['iteration', 'index', 'sigma']
            assert spectrum['sigma'].iloc[0] == pytest.approx(1.0)
            assert (spectrum['sigma'] >= 1e-3).all()
        assert (out / 'svt_best.pgm').exists()

        with open(out / 'summary.json', encoding='utf-8') as f:
            summary = json.load(f)
        assert summary['problem']['shape'] == [256, 256]
        assert set(summary['solvers']) == {s['name'] for s in SMALL_STAR['solvers']}
        assert summary['solvers']['irn-lsqr-nnrp']['outer_cycles'] == 2
        assert 0 < summary['solvers']['gmres']['min_rel_error'] < 1

    def test_deterministic(self, tmp_path):
        config = _write(tmp_path, SMALL_STAR)
        for out in ('a', 'b'):
            assert _run(config, '--out', tmp_path / out).exit_code == 0
        for name in ('gmres', 'irn-lsqr-nnrp', 'svt'):
            first = (tmp_path / 'a' / f'{name}_iterations.csv').read_text()
            second = (tmp_path / 'b' / f'{name}_iterations.csv').read_text()
            assert first == second

    def test_solver_failure_keeps_other_artifacts(self, tmp_path):
        data = {
            'problem': {'type': 'phantom', 'n': 16, 'seed': 1},
            'solvers': [{'name': 'gmres', 'max_iter': 3}, {'name': 'lsqr', 'max_iter': 3}],
        }
        out = tmp_path / 'out'
        result = _run(_write(tmp_path, data), '--out', out)
        assert result.exit_code == EXIT_SOLVER_FAILURE
        assert (out / 'lsqr_iterations.csv').exists()
        assert not (out / 'gmres_iterations.csv').exists()
        with open(out / 'summary.json', encoding='utf-8') as f:
            assert 'error' in json.load(f)['solvers']['gmres']

    def test_bad_thread_count_is_config_error(self, tmp_path, monkeypatch):
        monkeypatch.setenv('LRK_THREADS', 'zero')
        out = tmp_path / 'out'
        result = _run(_write(tmp_path, SMALL_STAR), '--out', out)
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert 'LRK_THREADS' in result.output
        assert not out.exists()


def _drifting_gmres(gap):
    """GMRES-заглушка, у которой проекционная невязка отличается от истинной на gap."""
    def solver(op, b, stop, rule, x_exact=None, track_true_residual=False, name='gmres'):
        report = new_report(name)
        x = np.zeros(op.shape[1])
        true_residual = float(np.linalg.norm(b))
        report.record(x, 1, true_residual + gap, 0.0, x_exact, true_residual)
        return report
    return solver


class TestCrossCheck:
    CONFIG = {
        'problem': {'type': 'star', 'n': 16, 'noise_level': 1e-3, 'sigma_blur': 1.5, 'seed': 0},
        'solvers': [{'name': 'gmres', 'max_iter': 3}, {'name': 'lsqr', 'max_iter': 3}],
        'flags': {'cross_check_residuals': True},
    }

    def test_gap_below_tolerance_passes(self, tmp_path, monkeypatch):
        monkeypatch.setattr('lrk.processing.gmres', _drifting_gmres(0.5 * CROSS_CHECK_TOL))
        result = ExperimentRunner(parse_experiment_config(self.CONFIG), tmp_path).run()
        assert result.ok

    def test_gap_above_tolerance_raises(self, tmp_path, monkeypatch):
        monkeypatch.setattr('lrk.processing.gmres', _drifting_gmres(2.0 * CROSS_CHECK_TOL))
        runner = ExperimentRunner(parse_experiment_config(self.CONFIG), tmp_path)
        with pytest.raises(CrossCheckError):
            runner.run()

    def test_mismatch_aborts_cli_run(self, tmp_path, monkeypatch):
        monkeypatch.setattr('lrk.processing.gmres', _drifting_gmres(1e-3))
        out = tmp_path / 'out'
        result = _run(_write(tmp_path, self.CONFIG), '--out', out)
        assert result.exit_code == EXIT_SOLVER_FAILURE
        assert 'gmres' in result.output
        assert not (out / 'summary.json').exists()

    def test_true_residual_solvers_are_not_compared(self, tmp_path):
        data = {**self.CONFIG, 'solvers': [{'name': 'lr-fgmres', 'max_iter': 3, 'kappa': 2, 'kappa_b': 2}]}
        result = ExperimentRunner(parse_experiment_config(data), tmp_path).run()
        assert result.ok
        assert not result.reports['lr-fgmres'].projected_identity
