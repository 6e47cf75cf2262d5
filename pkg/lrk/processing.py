# lrk/processing.py

import inspect
import json
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, NoReturn, Optional, Tuple, Union

from attrs import define, field, frozen

from lrk.config import Config_Run, ConfigurationError
from lrk.imports.import_json import JsonImportError, import_json_file
from lrk.krylov import gmres, lr_fgmres, lr_flsqr, lsqr, rs_lr_gmres
from lrk.linops import normal_equations_operator
from lrk.logging_config import logger
from lrk.models import GammaSchedule, LambdaKind, LambdaRule, NnrConfig, SolveReport, StoppingRule
from lrk.nnr import SolverError, exhaustive_lambda_search, flexible_nnrp, irn_nnrp, svt
from lrk.problems import GENERATORS, TestProblem, generate_problem
from lrk.reports import ArtifactWriter

SOLVER_NAMES: Tuple[str, ...] = (
    'gmres', 'lsqr', 'rs-lr-gmres', 'lr-fgmres', 'lr-flsqr', 'irn-gmres-nnrp', 'irn-lsqr-nnrp',
    'fgmres-nnrp', 'flsqr-nnrp', 'fgmres-nnrp-v', 'flsqr-nnrp-v', 'svt',
)
IRN_SOLVERS = ('irn-gmres-nnrp', 'irn-lsqr-nnrp')
FLEXIBLE_SOLVERS = ('fgmres-nnrp', 'flsqr-nnrp', 'fgmres-nnrp-v', 'flsqr-nnrp-v')
# правило optimal требует ортонормированного базиса решения
OPTIMAL_SOLVERS = ('gmres', 'lsqr') + IRN_SOLVERS
# решатели без проекционной задачи Тихонова
UNREGULARIZED_SOLVERS = ('rs-lr-gmres', 'svt')

TOP_LEVEL_KEYS = ('problem', 'solvers', 'output_dir', 'flags')
FLAG_KEYS = ('emit_images', 'emit_spectra', 'cross_check_residuals')
SOLVER_DEFAULTS: Dict[str, Any] = {
    'max_iter': 100,
    'lambda_rule': 'zero',
    'stop': None,
    'theta': 1.01,
    'epsilon': None,
    'p': 1.0,
    'gamma0': 1.0,
    'gamma_decay': 0.1,
    'gamma_min': 1e-10,
    'max_outer': None,
    'max_inner': 25,
    'tau_sigma': 0.1,
    'kappa': 30,
    'kappa_b': 30,
    'restart': 40,
    'tau': 1.0,
    'delta': 2.0,
}
INT_KEYS = ('max_iter', 'max_outer', 'max_inner', 'kappa', 'kappa_b', 'restart')
FLOAT_KEYS = ('theta', 'epsilon', 'p', 'gamma0', 'gamma_decay', 'gamma_min', 'tau_sigma', 'tau', 'delta')
CROSS_CHECK_TOL = 1e-8


class CrossCheckError(SolverError):
    """Исключение, прерывающее эксперимент при расхождении проекционной и истинной невязок."""
    pass


def _fail(path: str, message: str) -> NoReturn:
    logger.error(f"Ошибка конфигурации {path}: {message}")
    raise ConfigurationError(f"{path}: {message}")


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _parse_lambda_rule(raw: Any, path: str) -> LambdaRule:
    if isinstance(raw, str):
        if raw not in ('zero', 'secant', 'optimal'):
            _fail(path, f"ожидалось zero, secant, optimal или объект, получено {raw!r}")
        return LambdaRule(LambdaKind(raw))
    if not isinstance(raw, dict):
        _fail(path, f"ожидалась строка или объект, получено {type(raw).__name__}")
    kind = raw.get('kind')
    unknown = set(raw) - {'kind', 'value', 'grid'}
    if unknown:
        _fail(f"{path}.{sorted(unknown)[0]}", "неизвестный ключ")
    if kind == 'fixed':
        value = raw.get('value')
        if not _is_number(value) or value < 0:
            _fail(f"{path}.value", f"ожидалось число >= 0, получено {value!r}")
        return LambdaRule.fixed(value)
    if kind == 'search':
        grid = raw.get('grid')
        if not isinstance(grid, list) or not grid or not all(_is_number(g) and g >= 0 for g in grid):
            _fail(f"{path}.grid", "ожидался непустой список чисел >= 0")
        return LambdaRule(LambdaKind.SEARCH, grid=[float(g) for g in grid])
    if kind in ('zero', 'secant', 'optimal'):
        return LambdaRule(LambdaKind(kind))
    _fail(f"{path}.kind", f"ожидалось fixed, search, zero, secant или optimal, получено {kind!r}")


def _nnr_config(settings: Dict[str, Any], epsilon: Optional[float]) -> NnrConfig:
    return NnrConfig(
        p=settings['p'],
        gamma_schedule=GammaSchedule(settings['gamma0'], settings['gamma_decay'], settings['gamma_min']),
        lambda_rule=settings['lambda_rule'],
        theta=settings['theta'],
        epsilon=epsilon,
        max_outer=settings['max_outer'],
        max_inner=settings['max_inner'],
        max_iter=settings['max_iter'],
        tau_sigma=settings['tau_sigma'],
        use_discrepancy=settings['stop'] == 'discrepancy',
    )


@frozen
class SolverSpec:
    """Решатель эксперимента: имя из замкнутого набора, метка и разрешённые настройки."""
    name: str
    label: str
    settings: Dict[str, Any] = field(factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        settings = dict(self.settings)
        rule: LambdaRule = settings['lambda_rule']
        settings['lambda_rule'] = {'kind': rule.kind.value, 'value': rule.value, 'grid': list(rule.grid)}
        return {'name': self.name, 'label': self.label, **settings}


def _parse_solver(raw: Any, index: int) -> SolverSpec:
    path = f"solvers[{index}]"
    if not isinstance(raw, dict):
        _fail(path, f"ожидался объект, получено {type(raw).__name__}")
    name = raw.get('name')
    if name not in SOLVER_NAMES:
        _fail(f"{path}.name", f"неизвестный решатель {name!r}, допустимы {', '.join(SOLVER_NAMES)}")
    for key in raw:
        if key not in ('name', 'label') and key not in SOLVER_DEFAULTS:
            _fail(f"{path}.{key}", "неизвестный ключ")

    settings = {**SOLVER_DEFAULTS, **{k: v for k, v in raw.items() if k not in ('name', 'label')}}
    for key in INT_KEYS:
        value = settings[key]
        if (value is not None or key != 'max_outer') and (not _is_int(value) or value < 1):
            _fail(f"{path}.{key}", f"ожидалось целое >= 1, получено {value!r}")
    for key in FLOAT_KEYS:
        value = settings[key]
        if (value is not None or key != 'epsilon') and not _is_number(value):
            _fail(f"{path}.{key}", f"ожидалось число, получено {value!r}")
    for key in ('tau', 'delta', 'gamma0', 'gamma_min', 'tau_sigma'):
        if settings[key] <= 0:
            _fail(f"{path}.{key}", f"должно быть > 0, получено {settings[key]}")
    if settings['epsilon'] is not None and settings['epsilon'] < 0:
        _fail(f"{path}.epsilon", f"должно быть >= 0, получено {settings['epsilon']}")
    if settings['theta'] <= 1:
        _fail(f"{path}.theta", f"должно быть > 1, получено {settings['theta']}")

    if settings['stop'] is None:
        settings['stop'] = 'discrepancy' if name in IRN_SOLVERS else 'max_iter'
    if settings['stop'] not in ('discrepancy', 'max_iter'):
        _fail(f"{path}.stop", f"ожидалось discrepancy или max_iter, получено {settings['stop']!r}")
    if settings['max_outer'] is None:
        settings['max_outer'] = math.ceil(settings['max_iter'] / settings['restart']) if name == 'rs-lr-gmres' else 4

    rule = _parse_lambda_rule(settings['lambda_rule'], f"{path}.lambda_rule")
    if name in UNREGULARIZED_SOLVERS and rule.kind is not LambdaKind.ZERO:
        _fail(f"{path}.lambda_rule", f"{name} не решает проекционную задачу Тихонова, допустимо только zero")
    if rule.kind is LambdaKind.OPTIMAL and name not in OPTIMAL_SOLVERS:
        _fail(f"{path}.lambda_rule", f"optimal допустимо только для {', '.join(OPTIMAL_SOLVERS)}")
    settings['lambda_rule'] = rule

    if name in IRN_SOLVERS or name in FLEXIBLE_SOLVERS:
        try:
            _nnr_config(settings, epsilon=1.0 if settings['epsilon'] is None else settings['epsilon'])
        except ConfigurationError as e:
            _fail(path, str(e))

    label = raw.get('label', name)
    if not isinstance(label, str) or not label or any(c in label for c in '/\\'):
        _fail(f"{path}.label", f"ожидалась непустая строка без разделителей пути, получено {label!r}")
    return SolverSpec(name, label, settings)


def _parse_problem(raw: Any, seed_override: Optional[int]) -> Dict[str, Any]:
    if not isinstance(raw, dict):
        _fail('problem', "ожидался объект с ключом type")
    kind = raw.get('type')
    if kind not in GENERATORS:
        _fail('problem.type', f"ожидалось одно из {sorted(GENERATORS)}, получено {kind!r}")
    accepted = inspect.signature(GENERATORS[kind]).parameters
    params = {k: v for k, v in raw.items() if k != 'type'}
    for key in params:
        if key not in accepted:
            _fail(f"problem.{key}", f"неизвестный параметр задачи {kind}")
    if 'seed' in params and not _is_int(params['seed']):
        _fail('problem.seed', f"ожидалось целое, получено {params['seed']!r}")
    if 'n' in params and (not _is_int(params['n']) or params['n'] < 2):
        _fail('problem.n', f"ожидалось целое >= 2, получено {params['n']!r}")
    if 'noise_level' in params and (not _is_number(params['noise_level']) or params['noise_level'] < 0):
        _fail('problem.noise_level', f"ожидалось число >= 0, получено {params['noise_level']!r}")
    params.setdefault('seed', 0)
    if seed_override is not None:
        params['seed'] = seed_override
    return {'type': kind, **params}


@frozen
class ExperimentConfig:
    """
    Разобранная и проверенная конфигурация эксперимента.

    Attributes:
        problem (Dict[str, Any]): type и аргументы генератора.
        solvers (Tuple[SolverSpec, ...]): Решатели в порядке запуска.
        output_dir (str): Каталог результатов.
        emit_images (bool): Писать ли `<label>_best.pgm`.
        emit_spectra (bool): Писать ли спектры по внешним циклам.
        cross_check_residuals (bool): Сверять ли проекционные невязки с истинными.
    """
    problem: Dict[str, Any]
    solvers: Tuple[SolverSpec, ...]
    output_dir: str = 'results'
    emit_images: bool = True
    emit_spectra: bool = True
    cross_check_residuals: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            'problem': dict(self.problem),
            'solvers': [s.to_dict() for s in self.solvers],
            'output_dir': self.output_dir,
            'flags': {
                'emit_images': self.emit_images,
                'emit_spectra': self.emit_spectra,
                'cross_check_residuals': self.cross_check_residuals,
            },
        }


def parse_experiment_config(data: Dict[str, Any], seed_override: Optional[int] = None) -> ExperimentConfig:
    """
    Проверяет JSON-конфигурацию и подставляет значения по умолчанию.

    Args:
        data (Dict[str, Any]): Содержимое JSON-документа.
        seed_override (Optional[int]): Замена problem.seed.

    Returns:
        ExperimentConfig: Разобранная конфигурация.

    Raises:
        ConfigurationError: Сообщение называет путь к ошибочному полю.
    """
    if not isinstance(data, dict):
        _fail('$', "ожидался объект JSON")
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            _fail(key, "неизвестный ключ")
    problem = _parse_problem(data.get('problem'), seed_override)

    raw_solvers = data.get('solvers')
    if not isinstance(raw_solvers, list) or not raw_solvers:
        _fail('solvers', "ожидался непустой список решателей")
    solvers = tuple(_parse_solver(raw, i) for i, raw in enumerate(raw_solvers))
    labels = [s.label for s in solvers]
    for i, label in enumerate(labels):
        if label in labels[:i]:
            _fail(f"solvers[{i}].label", f"метка {label!r} уже используется")

    flags = data.get('flags', {})
    if not isinstance(flags, dict):
        _fail('flags', "ожидался объект")
    for key, value in flags.items():
        if key not in FLAG_KEYS:
            _fail(f"flags.{key}", "неизвестный флаг")
        if not isinstance(value, bool):
            _fail(f"flags.{key}", f"ожидалось true/false, получено {value!r}")
    output_dir = data.get('output_dir', 'results')
    if not isinstance(output_dir, str) or not output_dir:
        _fail('output_dir', f"ожидалась непустая строка, получено {output_dir!r}")

    config = ExperimentConfig(
        problem=problem,
        solvers=solvers,
        output_dir=output_dir,
        emit_images=flags.get('emit_images', True),
        emit_spectra=flags.get('emit_spectra', True),
        cross_check_residuals=flags.get('cross_check_residuals', False),
    )
    logger.info(f"Конфигурация разобрана: задача {problem['type']}, решателей {len(solvers)}")
    return config


def load_experiment_config(path: Union[str, Path], seed_override: Optional[int] = None) -> ExperimentConfig:
    """Читает и проверяет JSON-файл конфигурации эксперимента."""
    try:
        data = import_json_file(path)
    except JsonImportError as e:
        raise ConfigurationError(str(e)) from e
    return parse_experiment_config(data, seed_override)


@define(eq=False)
class ExperimentResult:
    summary: Dict[str, Any]
    reports: Dict[str, SolveReport] = field(factory=dict)
    failures: Dict[str, str] = field(factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


class ExperimentRunner:
    """Класс для запуска эксперимента: генерация задачи, решатели, запись артефактов."""

    def __init__(self, config: ExperimentConfig, out_dir: Union[str, Path, None] = None) -> None:
        """
        Инициализирует ExperimentRunner.

        Args:
            config (ExperimentConfig): Проверенная конфигурация.
            out_dir (Union[str, Path, None]): Каталог результатов вместо config.output_dir.

        Raises:
            ConfigurationError: Неверное значение LRK_THREADS.
        """
        self.config = config
        self.threads = Config_Run.threads()
        self.out_dir = Path(out_dir or config.output_dir)
        self.problem: Optional[TestProblem] = None

    def build_problem(self) -> TestProblem:
        params = {k: v for k, v in self.config.problem.items() if k != 'type'}
        self.problem = generate_problem(self.config.problem['type'], **params)
        return self.problem

    def _dispatch(self, spec: SolverSpec, problem: TestProblem, rule: LambdaRule) -> SolveReport:
        s = spec.settings
        op, b = problem.op, problem.b
        n = problem.n
        epsilon = problem.epsilon if s['epsilon'] is None else s['epsilon']
        stop = StoppingRule(
            max_iter=s['max_iter'], epsilon=epsilon, theta=s['theta'],
            use_discrepancy=s['stop'] == 'discrepancy',
        )
        common = dict(
            x_exact=problem.x_exact,
            track_true_residual=self.config.cross_check_residuals,
            name=spec.label,
        )
        kappa, kappa_b = min(s['kappa'], n), min(s['kappa_b'], n)
        name = spec.name
        if name == 'gmres':
            return gmres(op, b, stop, rule, **common)
        if name == 'lsqr':
            return lsqr(op, b, stop, rule, **common)
        if name == 'lr-fgmres':
            return lr_fgmres(op, b, kappa_b, kappa, stop, rule, **common)
        if name == 'lr-flsqr':
            return lr_flsqr(op, b, kappa_b, kappa, stop, rule, **common)
        if name == 'rs-lr-gmres':
            if op.shape[0] != op.shape[1]:
                # прямоугольный оператор: нормальные уравнения AᵀA x = Aᵀb
                logger.info(f"{spec.label}: оператор {op.shape}, решаются нормальные уравнения")
                stop = StoppingRule(max_iter=s['max_iter'])
                op, b = normal_equations_operator(op), op.rmatvec(b)
            return rs_lr_gmres(op, b, s['restart'], kappa, s['max_outer'], stop, **common)
        if name == 'svt':
            return svt(op, b, s['tau'], s['delta'], stop, **common)

        config = _nnr_config({**s, 'lambda_rule': rule}, epsilon)
        if name in IRN_SOLVERS:
            inner = 'gkb' if name == 'irn-lsqr-nnrp' else 'arnoldi'
            return irn_nnrp(op, b, config, inner, keep_iterates=False, **common)
        inner = 'fgk' if name.startswith('flsqr') else 'farnoldi'
        variant = 'basis-v' if name.endswith('-v') else 'iterate'
        return flexible_nnrp(op, b, config, inner, variant, **common)

    def run_solver(self, spec: SolverSpec, problem: TestProblem) -> SolveReport:
        """
        Запускает один решатель; правило search перебирает фиксированные λ̂.

        Raises:
            CrossCheckError: Расхождение проекционной и истинной невязок.
        """
        rule: LambdaRule = spec.settings['lambda_rule']
        if rule.kind is LambdaKind.SEARCH:
            report = exhaustive_lambda_search(
                lambda lam: self._dispatch(spec, problem, LambdaRule.fixed(lam)), rule.grid,
            )
        else:
            report = self._dispatch(spec, problem, rule)
        if self.config.cross_check_residuals:
            self.cross_check(spec.label, report, problem)
        return report

    def cross_check(self, label: str, report: SolveReport, problem: TestProblem) -> None:
        if not report.projected_identity:
            logger.info(f"{label}: невязка истинная, сверка не требуется")
            return
        for record in report.iterations:
            if record.true_residual is None:
                continue
            gap = abs(record.residual - record.true_residual)
            if gap > CROSS_CHECK_TOL:
                logger.error(f"{label}: итерация {record.iteration}, расхождение невязок {gap:.3e}")
                raise CrossCheckError(
                    f"{label}: проекционная и истинная невязки расходятся на {gap:.3e} "
                    f"на итерации {record.iteration}"
                )

    def _safe_run(self, spec: SolverSpec, problem: TestProblem) -> Tuple[Optional[SolveReport], Optional[str]]:
        try:
            return self.run_solver(spec, problem), None
        except CrossCheckError:
            raise
        except Exception as e:
            logger.exception(f"Сбой решателя {spec.label}: {e}")
            return None, f"{type(e).__name__}: {e}"

    def run(self) -> ExperimentResult:
        """
        Выполняет эксперимент; решатели идут параллельно (не более LRK_THREADS).

        Артефакты успешно завершившихся решателей пишутся и при сбоях других.
        Расхождение невязок при сверке прерывает весь эксперимент.

        Returns:
            ExperimentResult: Сводка, отчёты и сообщения об ошибках по меткам.

        Raises:
            CrossCheckError: Проекционная невязка разошлась с истинной.
        """
        problem = self.problem or self.build_problem()
        writer = ArtifactWriter(self.out_dir)
        threads = self.threads
        logger.info(f"Запуск {len(self.config.solvers)} решателей, потоков {threads}")
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(self._safe_run, spec, problem) for spec in self.config.solvers]
            outcomes = [f.result() for f in futures]

        result = ExperimentResult(summary={})
        solvers_summary: Dict[str, Any] = {}
        for spec, (report, error) in zip(self.config.solvers, outcomes):
            if error is not None:
                result.failures[spec.label] = error
                solvers_summary[spec.label] = {'name': spec.name, 'error': error}
                continue
            result.reports[spec.label] = report
            writer.write_iterations(spec.label, report)
            if self.config.emit_spectra:
                writer.write_spectra(spec.label, report)
            if self.config.emit_images:
                writer.write_best_image(spec.label, report)
            solvers_summary[spec.label] = {'name': spec.name, **report.summary()}

        result.summary = {
            'problem': {
                **self.config.problem,
                'shape': list(problem.op.shape),
                'epsilon': problem.epsilon,
            },
            'solvers': solvers_summary,
        }
        writer.write_summary(result.summary)
        if result.failures:
            logger.error(f"Эксперимент завершён с ошибками: {sorted(result.failures)}")
        else:
            logger.info("Эксперимент завершён")
        return result


def resolved_config_json(config: ExperimentConfig) -> str:
    return json.dumps(config.to_dict(), ensure_ascii=False, indent=2)
