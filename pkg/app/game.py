"""Executable game rules for Snowman and Sokoban, plus a brute-force optimum oracle."""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
import logging
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from app.graph import Cell
from app.level import BallSize, Direction, Game, Level, Stack


class MoveKind(Enum):
    MOVE = "move"
    ROLL = "roll"
    PUSH = "push"
    POP = "pop"
    REJECTED = "rejected"

    @property
    def is_object_action(self) -> bool:
        return self in (MoveKind.ROLL, MoveKind.PUSH, MoveKind.POP)


class Metric(Enum):
    MOVES = "moves"
    OBJECT_ACTIONS = "object_actions"


@dataclass(frozen=True)
class GameState:
    """Agent position, remaining snow and the ball stacks (or boxes) per cell."""
    agent: Cell
    snow: FrozenSet[Cell]
    stacks: Tuple[Tuple[Cell, Stack], ...]

    @staticmethod
    def create(agent: Cell, snow: Iterable[Cell], stacks: Mapping[Cell, Stack]) -> 'GameState':
        return GameState(agent, frozenset(snow), tuple(sorted(
            (cell, tuple(stack)) for cell, stack in stacks.items() if stack
        )))

    @cached_property
    def stack_map(self) -> Dict[Cell, Stack]:
        return dict(self.stacks)

    def occupied(self, cell: Cell) -> bool:
        return cell in self.stack_map

    def with_agent(self, agent: Cell) -> 'GameState':
        return GameState(agent, self.snow, self.stacks)


@dataclass(frozen=True)
class StepResult:
    kind: MoveKind
    state: Optional[GameState] = None

    @property
    def rejected(self) -> bool:
        return self.kind is MoveKind.REJECTED


REJECTED = StepResult(MoveKind.REJECTED)


def grow(size: BallSize) -> BallSize:
    if size is BallSize.SMALL:
        return BallSize.MEDIUM
    return BallSize.LARGE


def _land(level: Level, snow: Set[Cell], cell: Cell, size: BallSize) -> BallSize:
    """A ball arriving on an empty cell picks up any snow there."""
    if level.game is Game.SNOWMAN and cell in snow:
        snow.discard(cell)
        return grow(size)
    return size


def step(level: Level, state: GameState, direction: Direction) -> StepResult:
    """Apply one agent move; illegal moves give REJECTED."""
    target = direction.apply(state.agent)
    beyond = direction.apply(state.agent, 2)
    if not level.is_floor(target):
        return REJECTED
    stacks = dict(state.stack_map)
    if target not in stacks:
        return StepResult(MoveKind.MOVE, state.with_agent(target))
    if not level.is_floor(beyond):
        return REJECTED

    snow = set(state.snow)
    moving = stacks[target]
    below = stacks.get(beyond)

    if len(moving) == 1:
        ball = moving[0]
        if below is None:
            del stacks[target]
            stacks[beyond] = (_land(level, snow, beyond, ball),)
            kind = MoveKind.PUSH if level.game is Game.SOKOBAN else MoveKind.ROLL
            return StepResult(kind, GameState.create(target, snow, stacks))
        if level.game is Game.SNOWMAN and below[-1] > ball:
            del stacks[target]
            stacks[beyond] = below + (ball,)
            return StepResult(MoveKind.PUSH, GameState.create(target, snow, stacks))
        return REJECTED

    if below is not None:
        return REJECTED
    top = moving[-1]
    stacks[target] = moving[:-1]
    stacks[beyond] = (_land(level, snow, beyond, top),)
    return StepResult(MoveKind.POP, GameState.create(state.agent, snow, stacks))


def is_goal(level: Level, state: GameState) -> bool:
    if level.game is Game.SOKOBAN:
        return all(cell in level.goals for cell, _ in state.stacks)
    return all(len(stack) == 3 for _, stack in state.stacks)


@dataclass
class PlanRun:
    """Outcome of replaying a move sequence."""
    state: GameState
    kinds: List[MoveKind] = field(default_factory=list)
    rejected_at: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.rejected_at is None

    @property
    def object_actions(self) -> int:
        return sum(1 for kind in self.kinds if kind.is_object_action)


def run_plan(level: Level, moves: Sequence[Direction],
             state: Optional[GameState] = None) -> PlanRun:
    """Fold ``step`` over ``moves``, stopping at the first rejected move."""
    state = state or level.initial_state()
    run = PlanRun(state)
    for index, direction in enumerate(moves):
        result = step(level, run.state, direction)
        if result.rejected:
            run.rejected_at = index
            return run
        run.kinds.append(result.kind)
        run.state = result.state
    return run


def reachable_cells(level: Level, state: GameState) -> Set[Cell]:
    """Cells the agent can walk to without touching any ball."""
    seen = {state.agent}
    queue = deque([state.agent])
    while queue:
        cell = queue.popleft()
        for d in Direction:
            nxt = d.apply(cell)
            if nxt not in seen and level.is_floor(nxt) and not state.occupied(nxt):
                seen.add(nxt)
                queue.append(nxt)
    return seen


def walk(level: Level, state: GameState, target: Cell) -> Optional[List[Direction]]:
    """Shortest walk to ``target`` over ball-free floor, or None."""
    if target == state.agent:
        return []
    parent: Dict[Cell, Tuple[Cell, Direction]] = {}
    seen = {state.agent}
    queue = deque([state.agent])
    while queue:
        cell = queue.popleft()
        for d in Direction:
            nxt = d.apply(cell)
            if nxt in seen or not level.is_floor(nxt) or state.occupied(nxt):
                continue
            seen.add(nxt)
            parent[nxt] = (cell, d)
            if nxt == target:
                path = []
                while nxt != state.agent:
                    nxt, move = parent[nxt]
                    path.append(move)
                return path[::-1]
            queue.append(nxt)
    return None


def _object_successors(level: Level, state: GameState) -> Iterable[GameState]:
    for cell in sorted(reachable_cells(level, state)):
        for d in Direction:
            if not state.occupied(d.apply(cell)):
                continue
            result = step(level, state.with_agent(cell), d)
            if not result.rejected and result.kind.is_object_action:
                yield result.state


def _canonical(level: Level, state: GameState) -> GameState:
    return state.with_agent(min(reachable_cells(level, state)))


def oracle_optimal(level: Level, metric: Metric = Metric.MOVES,
                   cap: int = 200000) -> Optional[int]:
    """
    Exact optimum by breadth-first search over simulator states.

    OBJECT_ACTIONS counts rolls, pushes and pops with walking free, using
    states whose agent is replaced by the smallest cell of its region.
    Returns None when the level is unsolvable or more than ``cap`` states
    would be visited.
    """
    start = level.initial_state()
    if metric is Metric.OBJECT_ACTIONS:
        start = _canonical(level, start)
    if is_goal(level, start):
        return 0
    seen = {start}
    frontier = [start]
    depth = 0
    while frontier:
        depth += 1
        nxt_frontier = []
        for state in frontier:
            if metric is Metric.MOVES:
                successors = []
                for d in Direction:
                    result = step(level, state, d)
                    if not result.rejected:
                        successors.append(result.state)
            else:
                successors = [_canonical(level, s) for s in _object_successors(level, state)]
            for succ in successors:
                if succ in seen:
                    continue
                if is_goal(level, succ):
                    logging.info(
                        f"Oracle {metric.value} optimum {depth} after {len(seen)} states"
                    )
                    return depth
                seen.add(succ)
                if len(seen) > cap:
                    logging.warning(f"Oracle state cap {cap} exceeded")
                    return None
                nxt_frontier.append(succ)
        frontier = nxt_frontier
    return None
