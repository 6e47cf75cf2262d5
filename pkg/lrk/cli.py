# lrk/cli.py

import sys
from typing import Optional

import click

from lrk.config import ConfigurationError
from lrk.logging_config import logger
from lrk.problems import ProblemError
from lrk.processing import ExperimentRunner, load_experiment_config, resolved_config_json

EXIT_CONFIG_ERROR = 1
EXIT_SOLVER_FAILURE = 2


@click.group()
def cli() -> None:
    """Низкоранговые крыловские решатели для некорректных задач восстановления изображений."""


@cli.command('run')
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), default=None,
              help='Каталог результатов (вместо output_dir из конфигурации).')
@click.option('--validate-only', is_flag=True, default=False,
              help='Только проверить конфигурацию и вывести её с подставленными значениями.')
@click.option('--seed-override', type=int, default=None, help='Заменить problem.seed.')
def run(config_path: str, out_dir: Optional[str], validate_only: bool, seed_override: Optional[int]) -> None:
    """Запускает эксперимент по JSON-конфигурации CONFIG_PATH."""
    try:
        config = load_experiment_config(config_path, seed_override)
    except ConfigurationError as e:
        click.echo(f"Ошибка конфигурации: {e}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)

    if validate_only:
        click.echo(resolved_config_json(config))
        return

    try:
        runner = ExperimentRunner(config, out_dir)
    except ConfigurationError as e:
        click.echo(f"Ошибка конфигурации: {e}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    try:
        runner.build_problem()
    except ProblemError as e:
        click.echo(f"Ошибка конфигурации: problem: {e}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)
    try:
        result = runner.run()
    except Exception as e:
        logger.exception(f"Эксперимент прерван: {e}")
        click.echo(f"Ошибка выполнения: {e}", err=True)
        sys.exit(EXIT_SOLVER_FAILURE)

    for label, error in result.failures.items():
        click.echo(f"{label}: {error}", err=True)
    for label, entry in result.summary['solvers'].items():
        if 'error' not in entry:
            click.echo(f"{label}: min_rel_error={entry['min_rel_error']}, итераций {entry['iterations']}, "
                       f"остановка {entry['stop_reason']}")
    click.echo(f"Результаты: {runner.out_dir}")
    if not result.ok:
        sys.exit(EXIT_SOLVER_FAILURE)


if __name__ == '__main__':
    cli()
