# lrk/reports/artifacts.py

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from lrk.logging_config import logger
from lrk.models import SolveReport
from lrk.problems.export import save_pgm
from lrk.problems.metrics import SPECTRUM_CUTOFF

# 17 значащих цифр: double восстанавливается без потерь
FLOAT_FORMAT = '%.17g'


class ArtifactWriter:
    """
    Запись результатов запуска в каталог: CSV итераций и спектров, PGM лучшего
    приближения и summary.json.
    """

    def __init__(self, out_dir: Union[str, Path], spectrum_cutoff: Optional[float] = SPECTRUM_CUTOFF) -> None:
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.spectrum_cutoff = spectrum_cutoff

    def write_iterations(self, label: str, report: SolveReport) -> Path:
        """Пишет `<label>_iterations.csv` с колонками iter,outer,rel_error,residual,lambda_hat."""
        path = self.out_dir / f"{label}_iterations.csv"
        report.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='')
        logger.info(f"{label}: история итераций записана в {path}")
        return path

    def write_spectra(self, label: str, report: SolveReport) -> List[Path]:
        """
        Пишет `<label>_spectrum_outer<k>.csv` для каждого внешнего цикла k.

        Колонки: iteration (последняя итерация цикла), index, sigma; значения ниже
        порога отбрасываются.
        """
        last_iteration: Dict[int, int] = {}
        for record in report.iterations:
            last_iteration[record.outer] = record.iteration
        paths = []
        for k, spectrum in enumerate(report.spectra, start=1):
            sigma = np.asarray(spectrum, dtype=float)
            if self.spectrum_cutoff is not None:
                sigma = sigma[sigma >= self.spectrum_cutoff]
            frame = pd.DataFrame({
                'iteration': last_iteration.get(k, 0),
                'index': np.arange(1, sigma.size + 1),
                'sigma': sigma,
            }, columns=['iteration', 'index', 'sigma'])
            path = self.out_dir / f"{label}_spectrum_outer{k}.csv"
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            paths.append(path)
        logger.info(f"{label}: записано спектров {len(paths)}")
        return paths

    def write_best_image(self, label: str, report: SolveReport) -> Optional[Path]:
        """Пишет `<label>_best.pgm` (лучшее приближение, иначе последнее)."""
        x = report.best_x if report.best_x is not None else report.final_x
        if x is None:
            logger.warning(f"{label}: нет приближений для записи изображения")
            return None
        return save_pgm(x, self.out_dir / f"{label}_best.pgm")

    def write_summary(self, summary: Dict[str, Any]) -> Path:
        path = self.out_dir / 'summary.json'
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(summary, f, ensure_ascii=False, indent=2)
        logger.info(f"Сводка записана в {path}")
        return path
