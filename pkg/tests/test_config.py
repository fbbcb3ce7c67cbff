import logging
import os
from pathlib import Path

import pytest

from app.exceptions import ConfigurationError
from app.planner import BudgetPolicy
from app.planner_config import PlannerConfig, configure_logging, get_project_root

# testing variables

TEST_ENV = {
    'SNOWPLAN_BACKEND': 'external',
    'SNOWPLAN_SOLVER_CMD': 'cadical {input}',
    'SNOWPLAN_TIMEOUT': '12.5',
    'SNOWPLAN_TOTAL_TIMEOUT': '90',
    'SNOWPLAN_HORIZON_CAP': '25',
    'SNOWPLAN_SEED': '7',
    'SNOWPLAN_WORKERS': '3',
    'SNOWPLAN_REACH': 'DAG',
    'SNOWPLAN_DESCEND_REACH': 'tree',
    'SNOWPLAN_MODE': 'collapsed',
    'SNOWPLAN_INVARIANTS': 'false',
    'SNOWPLAN_LOG_DIR': './test_logs',
    'SNOWPLAN_LOG_FILE': './test_logs/test_log.log',
    'SNOWPLAN_RECORDS_DIR': './test_records',
    'SNOWPLAN_RECORDS_FILE': './test_records/test_runs.jsonl',
}


@pytest.fixture(autouse=True)
def test_env(monkeypatch):
    for key, value in TEST_ENV.items():
        monkeypatch.setenv(key, value)


def clear_env_vars(monkeypatch, *args):
    for var in args:
        monkeypatch.delenv(var, raising=False)

def test_environment_configuration():
    config = PlannerConfig()
    assert config.backend == 'external'
    assert config.solver_cmd == 'cadical {input}'
    assert config.timeout == 12.5
    assert config.total_timeout == 90
    assert config.horizon_cap == 25
    assert config.seed == 7
    assert config.workers == 3
    assert config.reach == 'dag'
    assert config.descend_reach == 'tree'
    assert config.mode == 'collapsed'
    assert config.invariants is False
    assert config.log_dir == Path('./test_logs').resolve()
    assert config.log_file == Path('./test_logs/test_log.log').resolve()
    assert config.records_dir == Path('./test_records').resolve()
    assert config.records_file == Path('./test_records/test_runs.jsonl').resolve()

def test_custom_configuration():
    config = PlannerConfig(
        backend='PYSAT',
        timeout=3,
        total_timeout=30,
        horizon_cap=9,
        seed=1,
        reach='path',
        mode='hybrid',
        invariants=True
    )
    assert config.backend == 'pysat'
    assert config.timeout == 3
    assert config.horizon_cap == 9
    assert config.reach == 'path'
    assert config.mode == 'hybrid'
    assert config.invariants is True

def test_default_fallbacks(monkeypatch):
    clear_env_vars(monkeypatch, *TEST_ENV)
    config = PlannerConfig()
    assert config.backend == 'pysat'
    assert config.pysat_solver == 'glucose4'
    assert config.timeout == 60
    assert config.total_timeout == 600
    assert config.horizon_cap == 60
    assert config.seed == 0
    assert config.workers == 1
    assert config.reach == 'tree'
    assert config.descend_reach == 'path'
    assert config.mode == 'hybrid'
    assert config.invariants is True
    assert config.oracle_cap == 200000
    assert config.log_level == 'INFO'

@pytest.mark.parametrize("value, expected", [
    ('true', True), ('1', True), ('TRUE', True), ('false', False), ('0', False),
])
def test_invariants_env_var(monkeypatch, value, expected):
    monkeypatch.setenv('SNOWPLAN_INVARIANTS', value)
    assert PlannerConfig(invariants=None).invariants is expected

def test_get_project_root():
    assert (get_project_root() / "app").exists()

def test_directory_properties(monkeypatch):
    clear_env_vars(monkeypatch, 'SNOWPLAN_LOG_DIR', 'SNOWPLAN_RECORDS_DIR', 'SNOWPLAN_LEVELS_DIR')
    config = PlannerConfig(base_dir=Path('/custom_base_dir'))
    assert config.log_dir == Path('/custom_base_dir/logs').resolve()
    assert config.records_dir == Path('/custom_base_dir/records').resolve()
    assert config.levels_dir == Path('/custom_base_dir/levels').resolve()

def test_file_properties(monkeypatch):
    clear_env_vars(monkeypatch, 'SNOWPLAN_LOG_DIR', 'SNOWPLAN_LOG_FILE',
                   'SNOWPLAN_RECORDS_DIR', 'SNOWPLAN_RECORDS_FILE')
    config = PlannerConfig(base_dir=Path('/custom_base_dir'))
    assert config.log_file == Path('/custom_base_dir/logs/snowplan.log').resolve()
    assert config.records_file == Path('/custom_base_dir/records/runs.jsonl').resolve()

def test_base_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv('SNOWPLAN_BASE_DIR', str(tmp_path))
    assert PlannerConfig().base_dir == tmp_path.resolve()

def test_budget_policy_from_config():
    policy = PlannerConfig(timeout=5, total_timeout=50, horizon_cap=11).budget_policy()
    assert policy == BudgetPolicy(per_call=5, total=50, horizon_cap=11)

@pytest.mark.parametrize("overrides, message", [
    ({'timeout': -1}, "timeout must be positive"),
    ({'total_timeout': 0.0}, "total_timeout must be positive"),
    ({'horizon_cap': -3}, "horizon_cap must be positive"),
    ({'workers': -2}, "workers must be positive"),
    ({'oracle_cap': -1}, "oracle_cap must be positive"),
    ({'seed': -1}, "seed must not be negative"),
    ({'backend': 'minisat'}, "backend must be one of"),
    ({'reach': 'bfs'}, "reach must be one of"),
    ({'descend_reach': 'bfs'}, "descend_reach must be one of"),
    ({'mode': 'parallel'}, "mode must be one of"),
    ({'log_level': 'chatty'}, "log_level must be one of"),
    ({'backend': 'external', 'solver_cmd': 'kissat'}, "placeholder"),
])
def test_invalid_settings(overrides, message):
    with pytest.raises(ConfigurationError, match=message):
        config = PlannerConfig(**overrides)
        config.validate()

def test_valid_settings_pass():
    PlannerConfig().validate()

def test_configure_logging_writes_log_file(monkeypatch, tmp_path):
    monkeypatch.setenv('SNOWPLAN_LOG_DIR', str(tmp_path / "logs"))
    monkeypatch.setenv('SNOWPLAN_LOG_FILE', str(tmp_path / "logs" / "run.log"))
    configure_logging(PlannerConfig(log_level='DEBUG'))
    logging.debug("configured")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert "configured" in (tmp_path / "logs" / "run.log").read_text()
    assert os.path.isdir(tmp_path / "logs")
