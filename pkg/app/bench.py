"""Batch runs over a level directory with PAR-2 scoring."""
from concurrent.futures import ThreadPoolExecutor, as_completed
import copy
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import pandas as pd

from app.exceptions import PlannerError
from app.level import iter_level_files, load_level
from app.planner import Planner
from app.planner_config import PlannerConfig
from app.run_record import RunRecord

SUMMARY_COLUMNS = ['reach', 'solved', 'timeouts', 'par2', 'common_solved_time']


def par2(seconds: Sequence[Optional[float]], timeout: float) -> float:
    """Sum of runtimes, counting every unsolved run (None) as twice the timeout."""
    return sum(2 * timeout if s is None else s for s in seconds)


def bench_instance(path: Path, reach: str, config: PlannerConfig) -> RunRecord:
    """Run one (instance, reach) pair; failures come back as error records."""
    run_config = copy.copy(config)
    run_config.reach = reach
    try:
        level = load_level(path)
        return Planner(run_config).run(level, instance=path.name)
    except (PlannerError, ValueError) as e:
        logging.error(f"Benchmark {path.name} with {reach} failed: {e}")
        return RunRecord(instance=path.name, game='', mode=run_config.mode, reach=reach,
                         status='error', seed=run_config.seed, error=str(e))


def run_bench(directory: Union[str, Path], config: PlannerConfig,
              reaches: Iterable[str] = ('path', 'dag', 'tree')) -> List[RunRecord]:
    """
    Run every level file in ``directory`` once per reach encoding.

    Records come back sorted by instance then reach, whatever order the
    workers finish in.
    """
    tasks = [(path, reach) for path in iter_level_files(directory) for reach in reaches]
    if not tasks:
        logging.warning(f"No level files in {directory}")
        return []
    logging.info(f"Running {len(tasks)} benchmark tasks with {config.workers} workers")
    records = []
    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        future_to_task = {
            executor.submit(bench_instance, path, reach, config): (path, reach)
            for path, reach in tasks
        }
        for future in as_completed(future_to_task):
            path, reach = future_to_task[future]
            record = future.result()
            logging.info(f"Finished {path.name} [{reach}]: {record.status}")
            records.append(record)
    return sorted(records, key=lambda r: (r.instance, r.reach))


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    data = [{
        'instance': r.instance,
        'reach': r.reach,
        'status': r.status,
        'solved': r.solved,
        'lb': r.lb,
        'ub': r.ub,
        'elapsed': r.elapsed,
    } for r in records]
    return pd.DataFrame(data, columns=['instance', 'reach', 'status', 'solved',
                                       'lb', 'ub', 'elapsed'])


def summarize(frame: pd.DataFrame, timeout: float) -> pd.DataFrame:
    """
    One row per reach encoding: solved count, timeouts, PAR-2 score and
    the total time on instances every encoding solved.
    """
    if frame.empty:
        logging.warning("No benchmark records to summarize")
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    reaches = frame['reach'].nunique()
    solved_counts = frame[frame['solved']].groupby('instance')['reach'].nunique()
    common = set(solved_counts[solved_counts == reaches].index)
    rows = []
    for reach, group in frame.groupby('reach', sort=True):
        seconds = [e if s else None for e, s in zip(group['elapsed'], group['solved'])]
        rows.append({
            'reach': reach,
            'solved': int(group['solved'].sum()),
            'timeouts': int((~group['solved']).sum()),
            'par2': par2(seconds, timeout),
            'common_solved_time': float(group[group['instance'].isin(common)]['elapsed'].sum()),
        })
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def save_report(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
        logging.info(f"Benchmark report saved to {path}")
        return path
    except OSError as e:
        logging.error(f"Failed to save benchmark report: {e}")
        raise PlannerError(f"Failed to save benchmark report: {e}")
