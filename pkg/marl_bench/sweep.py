"""
Learning-curve sweeps comparing SARL and MARL on synthetic tasks.

A sweep covers every (K, lambda) point, both learners, every n on the grid and
every trial. Each cell derives its own seeds from the base seed, so cells can
run in any order or concurrently and the output files are byte-identical.
"""

import csv
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from . import charts
from .config import SweepConfig
from .errors import MarlBenchError, ValidationError
from .formats import format_float
from .learners import Learner, first_meeting, run_trial, trial_seeds
from .seeding import derive_seed
from .tasks import SyntheticTask, TaskConfig, make_task, noise_floor

logger = logging.getLogger(__name__)

ROWS_HEADER = ["mode", "K", "lambda", "learner", "n", "trial", "test_mse", "mean_reward"]
SUMMARY_HEADER = ["mode", "K", "lambda", "learner", "n", "mean_mse", "std_mse"]
NSTAR_HEADER = ["mode", "K", "lambda", "learner", "n_star"]

LEARNERS = (Learner.SARL, Learner.MARL)


class Row(NamedTuple):
    mode: str
    K: int
    lam: float
    learner: str
    n: int
    trial: int
    test_mse: float
    mean_reward: float


class Summary(NamedTuple):
    mode: str
    K: int
    lam: float
    learner: str
    n: int
    mean_mse: float
    std_mse: float


class NStar(NamedTuple):
    mode: str
    K: int
    lam: float
    learner: str
    n_star: Optional[int]


@dataclass
class SweepResult:
    rows: List[Row]
    summaries: List[Summary]
    n_star_table: List[NStar]
    files: Dict[str, str] = field(default_factory=dict)
    charts: Dict[Tuple[str, int, float], str] = field(default_factory=dict)

    def curve(self, K: int, lam: float, learner: str) -> List[Tuple[int, float, float]]:
        return [
            (s.n, s.mean_mse, s.std_mse)
            for s in self.summaries
            if s.K == K and s.lam == lam and s.learner == learner
        ]

    def n_star(self, K: int, lam: float, learner: str) -> Optional[int]:
        for row in self.n_star_table:
            if row.K == K and row.lam == lam and row.learner == learner:
                return row.n_star
        raise KeyError((K, lam, learner))


@dataclass(frozen=True)
class _Cell:
    K: int
    lam: float
    learner: Learner
    n: int
    trial: int


def check_output_dir(output_dir: str) -> None:
    """Create output_dir if needed and make sure files can be written there."""
    try:
        os.makedirs(output_dir, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=output_dir, prefix=".marl-bench-"):
            pass
    except OSError as e:
        raise ValidationError(f"output_dir: {output_dir} is not writable ({e})", field="output_dir")


def sweep_tasks(cfg: SweepConfig) -> Dict[Tuple[int, float], SyntheticTask]:
    tasks = {}
    for K in sorted(set(cfg.K_list)):
        for lam in cfg.lambdas:
            config = TaskConfig(
                K=K,
                p=cfg.feature_dim(K),
                lam=lam,
                sigma2=cfg.sigma2,
                weight_seed=derive_seed(cfg.base_seed, "weights", K, lam),
                mode=cfg.mode,
            )
            tasks[(K, lam)] = make_task(config)
    return tasks


def _run_cell(cfg: SweepConfig, task: SyntheticTask, cell: _Cell) -> Row:
    data_seed, train_seed = trial_seeds(cfg.base_seed, cell.K, cell.lam, cell.learner, cell.n, cell.trial)
    try:
        result = run_trial(
            task, cell.learner, cell.n, data_seed, cfg.train_config(train_seed), cfg.test_set_size
        )
        test_mse, mean_reward = result.overall_mse, result.mean_reward
    except MarlBenchError as e:
        logger.warning(f"cell {cell} failed: {e}")
        test_mse, mean_reward = math.nan, math.nan
    return Row(cfg.mode.value, cell.K, cell.lam, cell.learner.value, cell.n, cell.trial, test_mse, mean_reward)


def summarize(rows: List[Row], threshold_mse: float) -> Tuple[List[Summary], List[NStar]]:
    """Trial aggregates of the rows (finite trials only) and the n_star table."""
    groups: Dict[Tuple, List[float]] = {}
    for row in rows:
        groups.setdefault((row.mode, row.K, row.lam, row.learner, row.n), []).append(row.test_mse)
    summaries = []
    for key in sorted(groups):
        values = np.array([v for v in groups[key] if math.isfinite(v)])
        if len(values):
            summaries.append(Summary(*key, float(np.mean(values)), float(np.std(values))))
        else:
            summaries.append(Summary(*key, math.nan, math.nan))
    curves: Dict[Tuple, List] = {}
    for s in summaries:
        curves.setdefault((s.mode, s.K, s.lam, s.learner), []).append((s.n, s.mean_mse, s.std_mse))
    n_stars = [NStar(*key, first_meeting(curve, threshold_mse)) for key, curve in sorted(curves.items())]
    return summaries, n_stars


def _write_csv(path: str, header: List[str], rows) -> str:
    with open(path, "w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
    return path


def write_results(result: SweepResult, output_dir: str) -> Dict[str, str]:
    files = {
        "rows": _write_csv(
            os.path.join(output_dir, "rows.csv"),
            ROWS_HEADER,
            (
                [r.mode, r.K, format_float(r.lam), r.learner, r.n, r.trial,
                 format_float(r.test_mse), format_float(r.mean_reward)]
                for r in result.rows
            ),
        ),
        "summary": _write_csv(
            os.path.join(output_dir, "summary.csv"),
            SUMMARY_HEADER,
            (
                [s.mode, s.K, format_float(s.lam), s.learner, s.n,
                 format_float(s.mean_mse), format_float(s.std_mse)]
                for s in result.summaries
            ),
        ),
        "nstar": _write_csv(
            os.path.join(output_dir, "nstar.csv"),
            NSTAR_HEADER,
            (
                [s.mode, s.K, format_float(s.lam), s.learner, "none" if s.n_star is None else s.n_star]
                for s in result.n_star_table
            ),
        ),
    }
    return files


def run_sweep(cfg: SweepConfig, charts_enabled: bool = True) -> SweepResult:
    """Run every cell of the sweep and write rows.csv, summary.csv, nstar.csv and charts."""
    cfg.validate()
    check_output_dir(cfg.output_dir)
    tasks = sweep_tasks(cfg)
    cells = [
        _Cell(K, lam, learner, n, trial)
        for (K, lam) in sorted(tasks)
        for learner in LEARNERS
        for n in cfg.n_grid
        for trial in range(cfg.trials)
    ]
    logger.info(f"running {len(cells)} cells with workers={cfg.workers}")
    if cfg.workers and cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda cell: _run_cell(cfg, tasks[(cell.K, cell.lam)], cell), cells))
    else:
        rows = [_run_cell(cfg, tasks[(cell.K, cell.lam)], cell) for cell in cells]
    rows.sort(key=lambda r: (r.mode, r.K, r.lam, r.learner, r.n, r.trial))

    summaries, n_stars = summarize(rows, cfg.threshold_mse)
    result = SweepResult(rows, summaries, n_stars)
    result.files = write_results(result, cfg.output_dir)

    if charts_enabled:
        for (K, lam), task in sorted(tasks.items()):
            path = os.path.join(cfg.output_dir, charts.curve_filename(cfg.mode.value, K, lam))
            curves = {learner.value: result.curve(K, lam, learner.value) for learner in LEARNERS}
            title = f"{cfg.mode.value}, K={K}, p={task.p}, lambda={lam:g}"
            charts.write_curve_svg(
                path, curves, title,
                threshold_mse=cfg.threshold_mse,
                noise_floor=float(np.mean(noise_floor(task))),
            )
            result.charts[(cfg.mode.value, K, lam)] = path
        result.files["report"] = charts.write_markdown_report(
            result, os.path.join(cfg.output_dir, "report.md")
        )
    return result
