# RUN RECORD

from dataclasses import dataclass, field
from datetime import datetime
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from app.exceptions import ValidationError

TIMING_FIELDS = ('elapsed', 'timestamp', 'seconds')


@dataclass
class Attempt:
    """
    One solve call made while searching.
    """

    phase: str
    horizon: int
    mode: str
    reach: str
    status: str
    seconds: float = 0.0
    variables: int = 0
    clauses: int = 0
    actions: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'phase': self.phase,
            'horizon': self.horizon,
            'mode': self.mode,
            'reach': self.reach,
            'status': self.status,
            'seconds': round(self.seconds, 6),
            'variables': self.variables,
            'clauses': self.clauses,
            'actions': self.actions,
        }

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> 'Attempt':
        return Attempt(**{key: data[key] for key in (
            'phase', 'horizon', 'mode', 'reach', 'status', 'seconds',
            'variables', 'clauses'
        )}, actions=data.get('actions'))

    def __str__(self) -> str:
        return (
            f"{self.phase} T={self.horizon} {self.mode}/{self.reach}: "
            f"{self.status} ({self.seconds:.2f}s, {self.variables} vars, {self.clauses} clauses)"
        )


@dataclass
class RunRecord:
    """
    Object representing one planner run on one instance.
    """

    instance: str
    game: str
    mode: str
    reach: str
    status: str
    lb: Optional[int] = None
    ub: Optional[int] = None
    lurd: Optional[str] = None
    seed: int = 0
    backend: str = ""
    descend_reach: Optional[str] = None
    last_horizon: Optional[int] = None
    error: Optional[str] = None
    attempts: List[Attempt] = field(default_factory=list)
    elapsed: float = 0.0
    timestamp: datetime = field(default_factory=datetime.now)

    @property
    def solved(self) -> bool:
        return self.status == 'optimal'

    def to_dict(self) -> Dict[str, Any]:
        """
        Convert record to dictionary for serialization.
        """
        return {
            'instance': self.instance,
            'game': self.game,
            'mode': self.mode,
            'reach': self.reach,
            'descend_reach': self.descend_reach,
            'status': self.status,
            'lb': self.lb,
            'ub': self.ub,
            'lurd': self.lurd,
            'seed': self.seed,
            'backend': self.backend,
            'last_horizon': self.last_horizon,
            'error': self.error,
            'attempts': [attempt.to_dict() for attempt in self.attempts],
            'elapsed': round(self.elapsed, 6),
            'timestamp': self.timestamp.isoformat()
        }

    def deterministic_dict(self) -> Dict[str, Any]:
        """The record without its timing fields."""
        data = self.to_dict()
        for key in TIMING_FIELDS:
            data.pop(key, None)
        data['attempts'] = [
            {k: v for k, v in attempt.items() if k not in TIMING_FIELDS}
            for attempt in data['attempts']
        ]
        return data

    @staticmethod
    def from_dict(data: Dict[str, Any]) -> 'RunRecord':
        """
        Create record from dictionary.
        """
        try:
            return RunRecord(
                instance=data['instance'],
                game=data['game'],
                mode=data['mode'],
                reach=data['reach'],
                descend_reach=data.get('descend_reach'),
                status=data['status'],
                lb=data.get('lb'),
                ub=data.get('ub'),
                lurd=data.get('lurd'),
                seed=int(data.get('seed', 0)),
                backend=data.get('backend', ''),
                last_horizon=data.get('last_horizon'),
                error=data.get('error'),
                attempts=[Attempt.from_dict(p) for p in data.get('attempts', [])],
                elapsed=float(data.get('elapsed', 0.0)),
                timestamp=datetime.fromisoformat(data['timestamp'])
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Invalid run record data: {str(e)}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_json(line: str) -> 'RunRecord':
        try:
            return RunRecord.from_dict(json.loads(line))
        except json.JSONDecodeError as e:
            raise ValidationError(f"Invalid run record line: {e}")

    def __str__(self) -> str:
        bounds = f"lb={self.lb} ub={self.ub}"
        return f"{self.instance} [{self.mode}/{self.reach}] {self.status} {bounds}"

    def __repr__(self) -> str:
        return (
            f"RunRecord(instance='{self.instance}', "
            f"mode='{self.mode}', "
            f"reach='{self.reach}', "
            f"status='{self.status}', "
            f"lb={self.lb}, "
            f"ub={self.ub})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RunRecord):
            return NotImplemented
        return self.deterministic_dict() == other.deterministic_dict()


def append_record(record: RunRecord, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('a', encoding='utf-8') as handle:
        handle.write(record.to_json() + "\n")
    logging.info(f"Run record for {record.instance} appended to {path}")


def read_records(path: Union[str, Path]) -> List[RunRecord]:
    """Read every record of a line-delimited record file."""
    path = Path(path)
    if not path.exists():
        logging.warning(f"No run records at {path}")
        return []
    records = []
    for line in path.read_text(encoding='utf-8').splitlines():
        if line.strip():
            records.append(RunRecord.from_json(line))
    logging.info(f"Loaded {len(records)} run records from {path}")
    return records
