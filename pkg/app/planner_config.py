from dataclasses import dataclass
from pathlib import Path
import logging
import os
from typing import Optional
from dotenv import load_dotenv

from app.exceptions import ConfigurationError

load_dotenv()

BACKENDS = ('pysat', 'external')
REACH_ENCODINGS = ('path', 'dag', 'tree')
MODES = ('full', 'collapsed', 'hybrid')
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def get_project_root() -> Path:
    """
    Return the root directory of the project

    """

    current_file = Path(__file__)
    return current_file.parent.parent


def _env_flag(name: str, default: str) -> bool:
    value = os.getenv(name, default).lower()
    return value == 'true' or value == '1'


@dataclass
class PlannerConfig:
    """
    Planner configuration settings
    """
    def __init__(
            self,
            base_dir: Optional[Path] = None,
            backend: Optional[str] = None,
            pysat_solver: Optional[str] = None,
            solver_cmd: Optional[str] = None,
            timeout: Optional[float] = None,
            total_timeout: Optional[float] = None,
            horizon_cap: Optional[int] = None,
            seed: Optional[int] = None,
            workers: Optional[int] = None,
            reach: Optional[str] = None,
            descend_reach: Optional[str] = None,
            mode: Optional[str] = None,
            invariants: Optional[bool] = None,
            oracle_cap: Optional[int] = None,
            log_level: Optional[str] = None
    ):
        """
        Initialize configuration from arguments, then environment variables, then defaults
        """
        project_root = get_project_root()
        self.base_dir = base_dir or Path(
            os.getenv('SNOWPLAN_BASE_DIR', str(project_root))
        ).resolve()

        self.backend = (backend or os.getenv('SNOWPLAN_BACKEND', 'pysat')).lower()
        self.pysat_solver = pysat_solver or os.getenv(
            'SNOWPLAN_PYSAT_SOLVER', 'glucose4'
        )
        self.solver_cmd = solver_cmd or os.getenv(
            'SNOWPLAN_SOLVER_CMD', 'kissat -q {input}'
        )

        self.timeout = timeout if timeout is not None else float(
            os.getenv('SNOWPLAN_TIMEOUT', '60')
        )
        self.total_timeout = total_timeout if total_timeout is not None else float(
            os.getenv('SNOWPLAN_TOTAL_TIMEOUT', '600')
        )
        self.horizon_cap = horizon_cap if horizon_cap is not None else int(
            os.getenv('SNOWPLAN_HORIZON_CAP', '60')
        )
        self.seed = seed if seed is not None else int(
            os.getenv('SNOWPLAN_SEED', '0')
        )
        self.workers = workers if workers is not None else int(
            os.getenv('SNOWPLAN_WORKERS', '1')
        )

        self.reach = (reach or os.getenv('SNOWPLAN_REACH', 'tree')).lower()
        self.descend_reach = (
            descend_reach or os.getenv('SNOWPLAN_DESCEND_REACH', 'path')
        ).lower()
        self.mode = (mode or os.getenv('SNOWPLAN_MODE', 'hybrid')).lower()

        self.invariants = invariants if invariants is not None else _env_flag(
            'SNOWPLAN_INVARIANTS', 'true'
        )
        self.oracle_cap = oracle_cap if oracle_cap is not None else int(
            os.getenv('SNOWPLAN_ORACLE_CAP', '200000')
        )
        self.log_level = (log_level or os.getenv('SNOWPLAN_LOG_LEVEL', 'INFO')).upper()

    @property
    def log_dir(self) -> Path:
        """
        get log path
        """
        return Path(os.getenv(
            'SNOWPLAN_LOG_DIR',
            str(self.base_dir / "logs")
        )).resolve()

    @property
    def log_file(self) -> Path:
        """
        Get log file path for log entries
        """
        return Path(os.getenv(
            'SNOWPLAN_LOG_FILE',
            str(self.log_dir / "snowplan.log")
        )).resolve()

    @property
    def records_dir(self) -> Path:
        """
        get run record folder path
        """
        return Path(os.getenv(
            'SNOWPLAN_RECORDS_DIR',
            str(self.base_dir / "records")
        )).resolve()

    @property
    def records_file(self) -> Path:
        """
        get run record file path
        """
        return Path(os.getenv(
            'SNOWPLAN_RECORDS_FILE',
            str(self.records_dir / "runs.jsonl")
        )).resolve()

    @property
    def levels_dir(self) -> Path:
        """
        folder holding user supplied level assets
        """
        return Path(os.getenv(
            'SNOWPLAN_LEVELS_DIR',
            str(self.base_dir / "levels")
        )).resolve()

    def budget_policy(self):
        """Build the search budget from the timeout settings."""
        from app.planner import BudgetPolicy
        return BudgetPolicy(
            per_call=self.timeout,
            total=self.total_timeout,
            horizon_cap=self.horizon_cap
        )

    def validate(self) -> None:
        """
        Validates configuration settings

        Raises:
            ConfigurationError: If any configuration parameter is invalid.
        """
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be positive")
        if self.total_timeout <= 0:
            raise ConfigurationError("total_timeout must be positive")
        if self.horizon_cap <= 0:
            raise ConfigurationError("horizon_cap must be positive")
        if self.workers <= 0:
            raise ConfigurationError("workers must be positive")
        if self.oracle_cap <= 0:
            raise ConfigurationError("oracle_cap must be positive")
        if self.seed < 0:
            raise ConfigurationError("seed must not be negative")
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"backend must be one of {', '.join(BACKENDS)}")
        if self.reach not in REACH_ENCODINGS:
            raise ConfigurationError(f"reach must be one of {', '.join(REACH_ENCODINGS)}")
        if self.descend_reach not in REACH_ENCODINGS:
            raise ConfigurationError(
                f"descend_reach must be one of {', '.join(REACH_ENCODINGS)}"
            )
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {', '.join(MODES)}")
        if self.log_level not in LOG_LEVELS:
            raise ConfigurationError(f"log_level must be one of {', '.join(LOG_LEVELS)}")
        if self.backend == 'external' and '{input}' not in self.solver_cmd:
            raise ConfigurationError("solver_cmd must contain an {input} placeholder")


def configure_logging(config: PlannerConfig) -> None:
    """Send log records to the configured log file."""
    config.log_dir.mkdir(parents=True, exist_ok=True)
    config.log_file.parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        filename=str(config.log_file),
        level=getattr(logging, config.log_level, logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        force=True
    )
    logging.info(f"Logging to {config.log_file}")
