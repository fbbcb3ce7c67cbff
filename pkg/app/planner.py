from dataclasses import dataclass, field
from enum import Enum
import json
import logging
from pathlib import Path
import time
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from app.backends import BackendFactory, SolveStatus, SolverBackend, solve
from app.encoder import EncodingConfig, Mode, PlanningEncoding, encode
from app.exceptions import ContractError, PlanValidationError, PlannerError, SerializationError
from app.game import GameState, is_goal, run_plan, step, walk
from app.level import Direction, Level
from app.observers import AttemptObserver
from app.plan_io import ObjectAction, Plan, PlanForm, decode_encoding, to_lurd
from app.planner_config import PlannerConfig
from app.run_record import Attempt, RunRecord, append_record


class BoundStatus(Enum):
    OPTIMAL = "optimal"
    BOUNDED = "bounded"
    UNKNOWN = "unknown"


@dataclass
class Bounds:
    """Lower and upper bound on the optimum, with seconds spent per phase."""
    lower: Optional[int] = None
    upper: Optional[int] = None
    status: BoundStatus = BoundStatus.UNKNOWN
    timings: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.lower is not None and self.upper is not None and self.lower > self.upper:
            raise ContractError(f"Lower bound {self.lower} exceeds upper bound {self.upper}")
        if self.status is BoundStatus.OPTIMAL and (self.lower is None or self.lower != self.upper):
            raise ContractError("An optimal result needs equal bounds")

    def __str__(self) -> str:
        return f"{self.status.value} [{self.lower}, {self.upper}]"


@dataclass(frozen=True)
class BudgetPolicy:
    per_call: float
    total: float
    horizon_cap: int

    def __post_init__(self):
        if self.per_call <= 0 or self.total <= 0 or self.horizon_cap <= 0:
            raise ContractError("Budget values must be positive")


class Deadline:
    """Wall clock budget shared by every phase of one run."""

    def __init__(self, policy: BudgetPolicy):
        self.policy = policy
        self.start = time.perf_counter()

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def remaining(self) -> float:
        return self.policy.total - self.elapsed

    def call_budget(self) -> float:
        return min(self.policy.per_call, self.remaining())

    def since(self, mark: float) -> float:
        return self.elapsed - mark

    @property
    def expired(self) -> bool:
        return self.remaining() <= 0


@dataclass
class SearchResult:
    bounds: Bounds
    moves: Optional[List[Direction]] = None
    plan: Optional[Plan] = None
    lurd: Optional[str] = None
    ub_history: List[int] = field(default_factory=list)
    last_horizon: Optional[int] = None
    parallel_horizon: Optional[int] = None


def apply_actions(level: Level, state: GameState,
                  actions: Sequence[ObjectAction]) -> Tuple[GameState, List[Direction]]:
    """Walk to each acting cell and perform the action, in the given order."""
    moves: List[Direction] = []
    for action in actions:
        path = walk(level, state, action.cell)
        if path is None:
            raise SerializationError(f"Cannot walk to {action.cell} for action {action}")
        for d in path:
            state = step(level, state, d).state
        result = step(level, state, action.direction)
        if result.rejected or not result.kind.is_object_action:
            raise SerializationError(f"Action {action} is not an object action here")
        moves.extend(path)
        moves.append(action.direction)
        state = result.state
    return state, moves


def serialize(level: Level, plan: Plan) -> List[Direction]:
    """
    Turn a stepped plan into primitive moves.

    Actions inside a step go row-major by acting cell, then N, S, E, W.
    A shortest walk is inserted before each action; jumps become walks.
    """
    if plan.form is PlanForm.SEQUENTIAL:
        return list(plan.moves)
    state = level.initial_state()
    moves: List[Direction] = []
    for index, plan_step in enumerate(plan.steps):
        if plan_step.jump is not None:
            path = walk(level, state, plan_step.jump)
            if path is None:
                logging.error(f"Jump to {plan_step.jump} in step {index} is not walkable")
                raise SerializationError(f"Jump to {plan_step.jump} in step {index} is not walkable")
            for d in path:
                state = step(level, state, d).state
            moves.extend(path)
            continue
        state, step_moves = apply_actions(level, state, plan_step.ordered())
        moves.extend(step_moves)
    return moves


def _validated(level: Level, moves: List[Direction]) -> str:
    run = run_plan(level, moves)
    if not run.ok or not is_goal(level, run.state):
        logging.error(f"Decoded plan fails replay (rejected at {run.rejected_at})")
        raise PlanValidationError("Decoded plan does not reach the goal")
    return to_lurd(level, moves)


class Planner:
    """
    Runs the search strategies against one backend and reports every
    solve call to its observers.
    """

    def __init__(self, config: Optional[PlannerConfig] = None,
                 backend: Optional[SolverBackend] = None):
        self.config = config or PlannerConfig(base_dir=Path("."))
        self.backend = backend or BackendFactory.create_backend(self.config)
        self.observers: List[AttemptObserver] = []
        self.attempts: List[Attempt] = []
        self.records: List[RunRecord] = []
        logging.info(f"Planner initialized with backend {self.backend}")

    @property
    def policy(self) -> BudgetPolicy:
        return self.config.budget_policy()

    def add_observer(self, observer: AttemptObserver):
        self.observers.append(observer)

    def remove_observer(self, observer: AttemptObserver):
        self.observers.remove(observer)

    def notify_observers(self, attempt: Attempt):
        for obs in self.observers:
            obs.update(attempt)

    def _attempt(self, level: Level, config: EncodingConfig, phase: str,
               deadline: Deadline):
        encoding = encode(level, config)
        outcome = solve(encoding.formula, deadline.call_budget(), self.backend)
        variables, clauses = encoding.stats()
        attempt = Attempt(
            phase=phase, horizon=config.horizon, mode=config.mode.value,
            reach=config.reach, status=outcome.status.value, seconds=outcome.elapsed,
            variables=variables, clauses=clauses
        )
        self.attempts.append(attempt)
        self.notify_observers(attempt)
        return outcome, encoding

    def _encoding_config(self, mode: Mode, horizon: int, reach: str) -> EncodingConfig:
        return EncodingConfig(mode, horizon, reach=reach, invariants=self.config.invariants)

    def solve_sequential(self, level: Level, mode: Mode = Mode.COLLAPSED,
                         reach: Optional[str] = None,
                         policy: Optional[BudgetPolicy] = None,
                         deadline: Optional[Deadline] = None) -> SearchResult:
        """Iterative deepening over T = 0, 1, 2, ... until the first SAT horizon."""
        if mode not in (Mode.FULL, Mode.COLLAPSED):
            raise ContractError(f"Sequential search needs FULL or COLLAPSED, got {mode.value}")
        reach = reach or self.config.reach
        policy = policy or self.policy
        deadline = deadline or Deadline(policy)
        started = deadline.elapsed
        last_unsat, last = -1, None
        for horizon in range(policy.horizon_cap + 1):
            if deadline.expired:
                break
            last = horizon
            outcome, encoding = self._attempt(
                level, self._encoding_config(mode, horizon, reach), 'sequential', deadline
            )
            if outcome.status is SolveStatus.UNSAT:
                last_unsat = horizon
                continue
            if outcome.status is SolveStatus.UNKNOWN:
                break
            plan = decode_encoding(encoding, outcome.model)
            self.attempts[-1].actions = plan.object_actions
            moves = serialize(level, plan)
            bounds = Bounds(horizon, horizon, BoundStatus.OPTIMAL,
                            {'sequential': deadline.since(started)})
            logging.info(f"Sequential {mode.value} optimum {horizon}")
            return SearchResult(bounds, moves, plan, _validated(level, moves),
                                last_horizon=horizon)
        status = BoundStatus.BOUNDED if last_unsat >= 0 else BoundStatus.UNKNOWN
        logging.warning(f"Sequential search stopped, lower bound {last_unsat + 1}")
        return SearchResult(
            Bounds(last_unsat + 1, None, status, {'sequential': deadline.since(started)}),
            last_horizon=last
        )

    def ascend_parallel(self, level: Level, reach: Optional[str] = None,
                        policy: Optional[BudgetPolicy] = None,
                        deadline: Optional[Deadline] = None) -> SearchResult:
        """Smallest parallel horizon; its object action count is an upper bound."""
        reach = reach or self.config.reach
        policy = policy or self.policy
        deadline = deadline or Deadline(policy)
        started = deadline.elapsed
        last = None
        for horizon in range(policy.horizon_cap + 1):
            if deadline.expired:
                break
            last = horizon
            outcome, encoding = self._attempt(
                level, self._encoding_config(Mode.PARALLEL, horizon, reach), 'ascend', deadline
            )
            if outcome.status is SolveStatus.UNSAT:
                continue
            if outcome.status is SolveStatus.UNKNOWN:
                break
            plan = decode_encoding(encoding, outcome.model)
            self.attempts[-1].actions = plan.object_actions
            moves = serialize(level, plan)
            lurd = _validated(level, moves)
            ub = plan.object_actions
            status = BoundStatus.OPTIMAL if ub == 0 else BoundStatus.BOUNDED
            bounds = Bounds(0 if ub == 0 else None, ub, status,
                            {'ascend': deadline.since(started)})
            logging.info(f"Parallel plan at T={horizon} with upper bound {ub}")
            return SearchResult(bounds, moves, plan, lurd, [ub], last_horizon=horizon,
                                parallel_horizon=horizon)
        return SearchResult(Bounds(timings={'ascend': deadline.since(started)}),
                            last_horizon=last)

    def descend(self, level: Level, ub: int, reach: Optional[str] = None,
                policy: Optional[BudgetPolicy] = None,
                moves: Optional[List[Direction]] = None,
                deadline: Optional[Deadline] = None) -> SearchResult:
        """
        Try T = UB - 1 with noop padding until UNSAT. A SAT answer sets the
        new UB to its object action count, which may drop by more than one.
        """
        reach = reach or self.config.descend_reach
        policy = policy or self.policy
        deadline = deadline or Deadline(policy)
        started = deadline.elapsed
        current, best = ub, moves
        lurd = to_lurd(level, moves) if moves is not None else None
        history = [ub]
        plan = None
        last = None
        while current > 0:
            if deadline.expired:
                break
            horizon = current - 1
            last = horizon
            outcome, encoding = self._attempt(
                level, self._encoding_config(Mode.DESCEND, horizon, reach), 'descend', deadline
            )
            if outcome.status is SolveStatus.UNSAT:
                logging.info(f"Descend proved optimum {current}")
                return SearchResult(
                    Bounds(current, current, BoundStatus.OPTIMAL,
                           {'descend': deadline.since(started)}),
                    best, plan, lurd, history, last_horizon=horizon
                )
            if outcome.status is SolveStatus.UNKNOWN:
                logging.warning(f"Descend budget exhausted at T={horizon}")
                return SearchResult(
                    Bounds(None, current, BoundStatus.BOUNDED,
                           {'descend': deadline.since(started)}),
                    best, plan, lurd, history, last_horizon=horizon
                )
            plan = decode_encoding(encoding, outcome.model)
            self.attempts[-1].actions = plan.object_actions
            found = plan.object_actions
            if found >= current:
                raise PlannerError(f"Descend found {found} actions at horizon {horizon}")
            best = serialize(level, plan)
            lurd = _validated(level, best)
            current = found
            history.append(current)
            logging.info(f"Descend lowered upper bound to {current}")
        if current == 0:
            return SearchResult(Bounds(0, 0, BoundStatus.OPTIMAL,
                                       {'descend': deadline.since(started)}),
                                best, plan, lurd, history, last_horizon=last)
        return SearchResult(Bounds(None, current, BoundStatus.BOUNDED,
                                   {'descend': deadline.since(started)}),
                            best, plan, lurd, history, last_horizon=last)

    def solve_hybrid(self, level: Level, reach: Optional[str] = None,
                     descend_reach: Optional[str] = None,
                     policy: Optional[BudgetPolicy] = None) -> SearchResult:
        """Parallel ascend for an upper bound, then sequential descend to the optimum."""
        policy = policy or self.policy
        deadline = Deadline(policy)
        ascent = self.ascend_parallel(level, reach, policy, deadline)
        if ascent.bounds.upper is None or ascent.bounds.status is BoundStatus.OPTIMAL:
            return ascent
        descent = self.descend(level, ascent.bounds.upper, descend_reach, policy,
                               ascent.moves, deadline)
        descent.bounds.timings = {**ascent.bounds.timings, **descent.bounds.timings}
        descent.parallel_horizon = ascent.parallel_horizon
        if descent.last_horizon is None:
            descent.last_horizon = ascent.last_horizon
        return descent

    def solve(self, level: Level, mode: Optional[str] = None) -> SearchResult:
        mode = (mode or self.config.mode).lower()
        if mode == 'hybrid':
            return self.solve_hybrid(level)
        if mode == 'full':
            return self.solve_sequential(level, Mode.FULL)
        if mode == 'collapsed':
            return self.solve_sequential(level, Mode.COLLAPSED)
        raise ValueError(f"Unknown search mode: {mode}")

    def run(self, level: Level, instance: Optional[str] = None,
            mode: Optional[str] = None) -> RunRecord:
        """Solve one instance and keep its run record."""
        mode = (mode or self.config.mode).lower()
        self.attempts = []
        start = time.perf_counter()
        try:
            result = self.solve(level, mode)
            record = build_record(instance or level.name, level, result, self.config,
                                  mode, str(self.backend), self.attempts)
        except PlannerError as e:
            logging.error(f"Run on {instance or level.name} failed: {e}")
            record = RunRecord(
                instance=instance or level.name, game=level.game.value, mode=mode,
                reach=self.config.reach, status='error', seed=self.config.seed,
                backend=str(self.backend), error=str(e), attempts=list(self.attempts)
            )
        record.elapsed = time.perf_counter() - start
        self.records.append(record)
        return record

    def save_record(self, record: RunRecord) -> None:
        append_record(record, self.config.records_file)

    def save_report(self, path: Optional[Path] = None) -> Path:
        """Save the kept records as a CSV table using pandas"""
        path = Path(path or self.config.records_dir / "report.csv")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            data = [{
                'instance': r.instance,
                'game': r.game,
                'mode': r.mode,
                'reach': r.reach,
                'lb': r.lb,
                'ub': r.ub,
                'status': r.status,
                'elapsed': r.elapsed,
            } for r in self.records]
            df = pd.DataFrame(data)
            df.to_csv(path, index=False)
            logging.info(f"Report saved to {path}")
            return path
        except OSError as e:
            logging.error(f"Failed to save report: {e}")
            raise PlannerError(f"Failed to save report: {e}")


def build_record(instance: str, level: Level, result: SearchResult, config: PlannerConfig,
                 mode: str, backend: str, attempts: Sequence[Attempt]) -> RunRecord:
    bounds = result.bounds
    uses_descend = mode == 'hybrid'
    return RunRecord(
        instance=instance,
        game=level.game.value,
        mode=mode,
        reach='none' if mode == 'full' else config.reach,
        descend_reach=config.descend_reach if uses_descend else None,
        status=bounds.status.value,
        lb=bounds.lower,
        ub=bounds.upper,
        lurd=result.lurd,
        seed=config.seed,
        backend=backend,
        last_horizon=result.last_horizon,
        attempts=list(attempts),
        elapsed=sum(bounds.timings.values()),
    )


def run_record(instance: str, level: Level, result: SearchResult, config: PlannerConfig,
               mode: str, backend: str, attempts: Sequence[Attempt] = ()) -> str:
    """One self-describing JSON line for a finished run."""
    return build_record(instance, level, result, config, mode, backend, attempts).to_json()


def solve_sequential(level: Level, mode: Mode, reach: str = "tree",
                     policy: Optional[BudgetPolicy] = None) -> SearchResult:
    return Planner(PlannerConfig(base_dir=Path("."), reach=reach)).solve_sequential(
        level, mode, reach, policy
    )


def ascend_parallel(level: Level, reach: str = "tree",
                    policy: Optional[BudgetPolicy] = None) -> SearchResult:
    return Planner(PlannerConfig(base_dir=Path("."), reach=reach)).ascend_parallel(
        level, reach, policy
    )


def descend(level: Level, ub: int, reach: str = "path",
            policy: Optional[BudgetPolicy] = None) -> SearchResult:
    return Planner(PlannerConfig(base_dir=Path("."), descend_reach=reach)).descend(
        level, ub, reach, policy
    )


def solve_hybrid(level: Level, reach: str = "tree", descend_reach: str = "path",
                 policy: Optional[BudgetPolicy] = None) -> SearchResult:
    return Planner(PlannerConfig(base_dir=Path("."), reach=reach,
                                 descend_reach=descend_reach)).solve_hybrid(
        level, reach, descend_reach, policy
    )
