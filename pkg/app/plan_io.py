"""Plans decoded from SAT models, and the LURD solution notation."""
from dataclasses import dataclass, field
from enum import Enum
import logging
from typing import Dict, List, Optional, Sequence, Tuple

from app.cnf import Formula, parse_name
from app.encoder import Mode
from app.exceptions import PlanValidationError, RegistryError, ValidationError
from app.game import run_plan
from app.graph import Cell
from app.level import Direction, Level

DIRECTION_ORDER = {d: i for i, d in enumerate(Direction)}


class PlanForm(Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


@dataclass(frozen=True)
class ObjectAction:
    """Act on the neighbouring cell in ``direction`` while standing on ``cell``."""
    cell: Cell
    direction: Direction

    @property
    def sort_key(self) -> Tuple[int, int, int]:
        return self.cell[0], self.cell[1], DIRECTION_ORDER[self.direction]

    def __str__(self) -> str:
        return f"{self.direction.name}@{self.cell[0]},{self.cell[1]}"


@dataclass(frozen=True)
class Step:
    """Object actions performed together, or a single jump."""
    actions: Tuple[ObjectAction, ...] = ()
    jump: Optional[Cell] = None

    def __post_init__(self):
        if self.jump is not None and self.actions:
            raise ValidationError("A jump step cannot hold object actions")
        if self.jump is None and not self.actions:
            raise ValidationError("Steps must not be empty")

    def ordered(self) -> List[ObjectAction]:
        return sorted(self.actions, key=lambda a: a.sort_key)


@dataclass
class Plan:
    form: PlanForm
    moves: List[Direction] = field(default_factory=list)
    steps: List[Step] = field(default_factory=list)
    noops: int = 0

    @property
    def object_actions(self) -> Optional[int]:
        """Object actions in a stepped plan; None for a move sequence."""
        if self.form is PlanForm.PARALLEL:
            return sum(len(step.actions) for step in self.steps)
        return None

    @property
    def move_count(self) -> int:
        if self.form is PlanForm.SEQUENTIAL:
            return len(self.moves)
        return len(self.steps)

    def __str__(self) -> str:
        if self.form is PlanForm.SEQUENTIAL:
            return "".join(d.letter for d in self.moves)
        parts = []
        for step in self.steps:
            if step.jump is not None:
                parts.append(f"jump@{step.jump[0]},{step.jump[1]}")
            else:
                parts.append("{" + " ".join(str(a) for a in step.ordered()) + "}")
        return " ".join(parts)


def _cell(fields: Dict[str, str]) -> Cell:
    return int(fields['row']), int(fields['col'])


def decode(formula: Formula, model: Dict[int, bool], mode) -> Plan:
    """
    Read the true action literals of a model back into a plan.

    FULL models give a move sequence; every other mode gives steps of
    object actions (one per step except in parallel mode). Noop steps are
    counted, not kept.
    """
    mode = getattr(mode, 'mode', mode)
    dirs: Dict[int, List[Direction]] = {}
    acts: Dict[int, List[ObjectAction]] = {}
    jumps: Dict[int, List[Cell]] = {}
    noops: Dict[int, bool] = {}
    horizon = 0
    for name, var in formula.registry.items():
        kind, fields = parse_name(name)
        if kind not in ('dir', 'act', 'jump', 'noop'):
            continue
        t = int(fields['t'])
        horizon = max(horizon, t + 1)
        if not model.get(var, False):
            continue
        if kind == 'dir':
            dirs.setdefault(t, []).append(Direction[fields['d']])
        elif kind == 'act':
            acts.setdefault(t, []).append(ObjectAction(_cell(fields), Direction[fields['d']]))
        elif kind == 'jump':
            jumps.setdefault(t, []).append(_cell(fields))
        else:
            noops[t] = True

    if mode is Mode.FULL:
        moves = []
        for t in range(horizon):
            chosen = dirs.get(t, [])
            if len(chosen) != 1:
                raise RegistryError(f"Step {t} has {len(chosen)} directions")
            moves.append(chosen[0])
        return Plan(PlanForm.SEQUENTIAL, moves=moves)

    steps = []
    noop_count = 0
    for t in range(horizon):
        step_acts, step_jumps = acts.get(t, []), jumps.get(t, [])
        if noops.get(t):
            if step_acts or step_jumps:
                raise RegistryError(f"Step {t} mixes a noop with actions")
            noop_count += 1
            continue
        if step_jumps:
            if len(step_jumps) > 1 or step_acts:
                raise RegistryError(f"Step {t} has an invalid jump")
            steps.append(Step(jump=step_jumps[0]))
            continue
        if not step_acts:
            raise RegistryError(f"Step {t} has no action")
        if mode is not Mode.PARALLEL and len(step_acts) > 1:
            raise RegistryError(f"Step {t} has {len(step_acts)} actions")
        steps.append(Step(actions=tuple(sorted(step_acts, key=lambda a: a.sort_key))))
    return Plan(PlanForm.PARALLEL, steps=steps, noops=noop_count)


def decode_encoding(encoding, model: Dict[int, bool]) -> Plan:
    return decode(encoding.formula, model, encoding.config.mode)


def to_lurd(level: Level, plan) -> str:
    """
    Render a move sequence as LURD text, uppercase where the move
    rolls, pushes or pops.
    """
    moves = plan.moves if isinstance(plan, Plan) else list(plan)
    run = run_plan(level, moves)
    if not run.ok:
        logging.error(f"Plan rejected at move {run.rejected_at}")
        raise PlanValidationError(f"Move {run.rejected_at} is rejected by the simulator")
    return "".join(
        d.letter.upper() if kind.is_object_action else d.letter
        for d, kind in zip(moves, run.kinds)
    )


def parse_lurd(text: str) -> List[Tuple[Direction, bool]]:
    """LURD text to (direction, uppercase) pairs."""
    result = []
    for index, ch in enumerate(text.strip()):
        if ch not in 'lurdLURD':
            raise ValidationError(f"Invalid LURD character {ch!r} at position {index}")
        result.append((Direction.from_letter(ch), ch.isupper()))
    return result


def lurd_moves(text: str) -> List[Direction]:
    return [d for d, _ in parse_lurd(text)]
