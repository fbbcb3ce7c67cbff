"""
Compile a level and a horizon into CNF.

Four modes share one event model. An event is one concrete way an action
can play out (e.g. "roll a small ball east onto snow"). Every event
fixes the next value of all state variables on the cells it affects,
which lets one frame axiom per variable license every change.

  FULL       one primitive move per step, agent position tracked cell by cell
  COLLAPSED  one object action per step, walking replaced by reachability
  PARALLEL   any set of non-interfering object actions per step, or a jump
  DESCEND    COLLAPSED plus a trailing noop action
"""
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
import logging
from typing import Dict, FrozenSet, List, Optional, Tuple

from app.cnf import Const, Formula, Literal, neg, var_name
from app.exceptions import ContractError
from app.game import grow
from app.graph import Cell, Graph
from app.level import BallSize, Direction, Game, Level, grid_graph
from app.reach import ReachEncoderFactory, ReachFragment

SIZE_KIND = {BallSize.SMALL: 'bs', BallSize.MEDIUM: 'bm', BallSize.LARGE: 'bl'}

# every non-empty set of sizes is a valid stack
STACKS: List[FrozenSet[BallSize]] = [
    frozenset(group) for n in (1, 2, 3) for group in combinations(BallSize, n)
]


class Mode(Enum):
    FULL = "full"
    COLLAPSED = "collapsed"
    PARALLEL = "parallel"
    DESCEND = "descend"


@dataclass(frozen=True)
class EncodingConfig:
    mode: Mode
    horizon: int
    reach: str = "tree"
    invariants: bool = True
    require_goal: bool = True
    action_budget: Optional[int] = None

    def __post_init__(self):
        if self.horizon < 0:
            raise ContractError(f"Horizon must not be negative, got {self.horizon}")
        if self.reach not in ReachEncoderFactory.names():
            raise ContractError(f"Unknown reachability encoding: {self.reach}")
        if self.action_budget is not None and self.action_budget < 0:
            raise ContractError("Action budget must not be negative")


@dataclass
class Event:
    kind: str
    cell: Cell
    direction: Direction
    variant: str
    pre: List[Literal]
    post: List[Literal]
    agent_to: Optional[Cell] = None


@dataclass
class PlanningEncoding:
    """A compiled formula together with the lookups needed to read a model back."""
    formula: Formula
    level: Level
    config: EncodingConfig
    graph: Graph
    actions: Dict[Tuple[int, Cell, Direction], int] = field(default_factory=dict)
    jumps: Dict[Tuple[int, Cell], int] = field(default_factory=dict)
    noops: Dict[int, int] = field(default_factory=dict)
    directions: Dict[Tuple[int, Direction], int] = field(default_factory=dict)
    fragments: List[ReachFragment] = field(default_factory=list)

    def action_var(self, cell: Cell, direction: Direction, t: int) -> Optional[int]:
        return self.actions.get((t, cell, direction))

    def jump_var(self, cell: Cell, t: int) -> Optional[int]:
        return self.jumps.get((t, cell))

    def noop_var(self, t: int) -> Optional[int]:
        return self.noops.get(t)

    def stats(self) -> Tuple[int, int]:
        return self.formula.stats()


def _cell_fields(cell: Cell) -> dict:
    return {'row': cell[0], 'col': cell[1]}


class PlanningEncoder:
    def __init__(self, level: Level, config: EncodingConfig):
        self.level = level
        self.config = config
        self.T = config.horizon
        self.formula = Formula()
        self.graph = grid_graph(level)
        self.cells: List[Cell] = list(self.graph.cells)
        self.sokoban = level.game is Game.SOKOBAN
        self.reach_encoder = ReachEncoderFactory.create_encoder(config.reach)
        self._state: Dict[Tuple[str, Cell, int], Literal] = {}
        self._touch: Dict[int, List[int]] = {}
        self.encoding = PlanningEncoding(self.formula, level, config, self.graph)

    def encode(self) -> PlanningEncoding:
        self._allocate_states()
        self._initial_state()
        for t in range(self.T + 1):
            for cell in self.cells:
                self.formula.add_implies([self.agent(cell, t)], [neg(self.occ(cell, t))])
            self.formula.exactly_one([self.agent(cell, t) for cell in self.cells])
            self._invariants(t)

        step = {
            Mode.FULL: self._full_step,
            Mode.COLLAPSED: self._collapsed_step,
            Mode.DESCEND: self._collapsed_step,
            Mode.PARALLEL: self._parallel_step,
        }[self.config.mode]
        for t in range(self.T):
            step(t)
            self._frame(t)
        if self.config.mode is Mode.DESCEND:
            self._descend_rules()
        if self.config.require_goal:
            self._goal()

        nv, nc = self.formula.stats()
        logging.info(
            f"Encoded {self.level.name or 'level'} mode={self.config.mode.value} "
            f"reach={self.config.reach} T={self.T}: {nv} variables, {nc} clauses"
        )
        return self.encoding

    # state variables

    def _allocate_states(self) -> None:
        f = self.formula
        for t in range(self.T + 1):
            for cell in self.cells:
                fields = dict(_cell_fields(cell), t=t)
                if self.sokoban:
                    self._state[('b', cell, t)] = f.fresh_var(var_name('b', **fields))
                else:
                    if cell in self.level.snow:
                        self._state[('s', cell, t)] = f.fresh_var(var_name('s', **fields))
                    for kind in SIZE_KIND.values():
                        self._state[(kind, cell, t)] = f.fresh_var(var_name(kind, **fields))
                self._state[('c', cell, t)] = f.fresh_var(var_name('c', **fields))
            for cell in self.cells:
                balls = [self.ball(cell, size, t) for size in BallSize]
                if self.sokoban:
                    occ = balls[0]
                else:
                    occ = f.define_or(var_name('occ', **_cell_fields(cell), t=t), balls)
                self._state[('occ', cell, t)] = occ

    def ball(self, cell: Cell, size: BallSize, t: int) -> Literal:
        if self.sokoban:
            if size is BallSize.SMALL:
                return self._state.get(('b', cell, t), Const.FALSE)
            return Const.FALSE
        return self._state.get((SIZE_KIND[size], cell, t), Const.FALSE)

    def snow(self, cell: Cell, t: int) -> Literal:
        return self._state.get(('s', cell, t), Const.FALSE)

    def agent(self, cell: Cell, t: int) -> Literal:
        return self._state.get(('c', cell, t), Const.FALSE)

    def occ(self, cell: Cell, t: int) -> Literal:
        return self._state.get(('occ', cell, t), Const.TRUE)

    def exact(self, cell: Cell, sizes: FrozenSet[BallSize], t: int) -> List[Literal]:
        """Literals saying the stack on ``cell`` at ``t`` is exactly ``sizes``."""
        return [
            self.ball(cell, size, t) if size in sizes else neg(self.ball(cell, size, t))
            for size in BallSize
        ]

    def _state_vars(self, t: int, with_agent: bool) -> List[Tuple[Literal, Literal]]:
        pairs = []
        for cell in self.cells:
            for size in BallSize:
                pairs.append((self.ball(cell, size, t), self.ball(cell, size, t + 1)))
            pairs.append((self.snow(cell, t), self.snow(cell, t + 1)))
            if with_agent:
                pairs.append((self.agent(cell, t), self.agent(cell, t + 1)))
        return [(a, b) for a, b in pairs if isinstance(a, int)]

    def _initial_state(self) -> None:
        stacks = self.level.stack_map
        for cell in self.cells:
            for lit in self.exact(cell, frozenset(stacks.get(cell, ())), 0):
                self.formula.add_clause([lit])
            snow = self.snow(cell, 0)
            if isinstance(snow, int):
                self.formula.add_clause([snow])
            agent = self.agent(cell, 0)
            self.formula.add_clause([agent if cell == self.level.agent else neg(agent)])

    def _invariants(self, t: int) -> None:
        m = self.level.snowmen
        if self.sokoban or not self.config.invariants or m == 0:
            return
        self.formula.at_most_k([self.ball(c, BallSize.LARGE, t) for c in self.cells], m)
        self.formula.at_least_k([self.ball(c, BallSize.SMALL, t) for c in self.cells], m)

    def _goal(self) -> None:
        T = self.T
        for cell in self.cells:
            if self.sokoban:
                if cell not in self.level.goals:
                    self.formula.add_clause([neg(self.ball(cell, BallSize.SMALL, T))])
            else:
                small, medium, large = (self.ball(cell, size, T) for size in BallSize)
                self.formula.add_equal(small, medium)
                self.formula.add_equal(medium, large)

    # events

    def _object_events(self, p: Cell, d: Direction, t: int) -> List[Event]:
        l1, l2 = d.apply(p), d.apply(p, 2)
        if not (self.level.is_floor(l1) and self.level.is_floor(l2)):
            return []
        empty = frozenset()
        events = []
        for size in BallSize:
            single = frozenset([size])
            for snowy in (False, True):
                events.append(self._landing_event(
                    'push' if self.sokoban else 'roll', p, d, t,
                    moving=single, left=empty, ball=size, snowy=snowy, agent_to=l1
                ))
            for below in STACKS:
                if min(below) <= size:
                    continue
                events.append(Event(
                    'push', p, d, f"{size.name}>{'.'.join(s.name for s in sorted(below))}",
                    pre=self.exact(l1, single, t) + self.exact(l2, below, t),
                    post=self.exact(l1, empty, t + 1) + self.exact(l2, below | single, t + 1),
                    agent_to=l1,
                ))
        for stack in STACKS:
            if len(stack) < 2:
                continue
            top = min(stack)
            for snowy in (False, True):
                events.append(self._landing_event(
                    'pop', p, d, t, moving=stack, left=stack - {top}, ball=top,
                    snowy=snowy, agent_to=p
                ))
        return [e for e in events if Const.FALSE not in e.pre and Const.FALSE not in e.post]

    def _landing_event(self, kind, p, d, t, moving, left, ball, snowy, agent_to) -> Event:
        """A ball leaves ``l1`` for the empty cell ``l2``, growing if it lands on snow."""
        l1, l2 = d.apply(p), d.apply(p, 2)
        snow_now = self.snow(l2, t)
        landed = grow(ball) if snowy else ball
        pre = self.exact(l1, moving, t) + self.exact(l2, frozenset(), t)
        pre.append(snow_now if snowy else neg(snow_now))
        post = self.exact(l1, left, t + 1) + self.exact(l2, frozenset([landed]), t + 1)
        if snowy:
            post.append(neg(self.snow(l2, t + 1)))
        variant = f"{'.'.join(s.name for s in sorted(moving))}{'-snow' if snowy else ''}"
        return Event(kind, p, d, variant, pre, post, agent_to)

    def _add_event(self, event: Event, t: int, trigger: List[Literal],
                   move_agent: bool) -> int:
        f = self.formula
        name = var_name('ev', k=event.kind, **_cell_fields(event.cell),
                        d=event.direction.name, x=event.variant, t=t)
        e = f.fresh_var(name)
        post = list(event.post)
        if move_agent and event.agent_to is not None and event.agent_to != event.cell:
            post += [neg(self.agent(event.cell, t + 1)), self.agent(event.agent_to, t + 1)]
        for lit in event.pre + trigger + post:
            f.add_implies([e], [lit])
        for lit in post:
            if isinstance(lit, int):
                self._touch.setdefault(abs(lit), []).append(e)
        return e

    def _frame(self, t: int) -> None:
        """A state variable changes only if an event touching it happens."""
        with_agent = self.config.mode is Mode.FULL
        for now, nxt in self._state_vars(t, with_agent):
            touching = self._touch.get(abs(nxt), [])
            self.formula.add_clause([neg(now), nxt] + touching)
            self.formula.add_clause([now, neg(nxt)] + touching)

    # FULL

    def _full_step(self, t: int) -> None:
        f = self.formula
        dirs = {}
        for d in Direction:
            dirs[d] = f.fresh_var(var_name('dir', d=d.name, t=t))
            self.encoding.directions[(t, d)] = dirs[d]
        f.exactly_one(list(dirs.values()))
        for p in self.cells:
            for d in Direction:
                trigger = [self.agent(p, t), dirs[d]]
                l1 = d.apply(p)
                if not self.level.is_floor(l1):
                    f.add_implies(trigger, [])
                    continue
                move = Event('move', p, d, 'walk', pre=[neg(self.occ(l1, t))], post=[],
                             agent_to=l1)
                options = [self._add_event(move, t, trigger, move_agent=True)]
                for event in self._object_events(p, d, t):
                    options.append(self._add_event(event, t, trigger, move_agent=True))
                f.add_implies(trigger, options)

    # COLLAPSED / DESCEND

    def _collapsed_step(self, t: int) -> None:
        f = self.formula
        acts = self._actions(t)
        choices = list(acts.values())
        if self.config.mode is Mode.DESCEND:
            noop = f.fresh_var(var_name('noop', t=t))
            self.encoding.noops[t] = noop
            choices.append(noop)
            for cell in self.cells:
                f.add_implies([noop, self.agent(cell, t)], [self.agent(cell, t + 1)])
        if not choices:
            f.add_clause([])
            return
        f.exactly_one(choices)

        for (p, d), act in acts.items():
            options = []
            for event in self._object_events(p, d, t):
                e = self._add_event(event, t, [act], move_agent=False)
                f.add_implies([e], [self.agent(event.agent_to, t + 1)])
                options.append(e)
            f.add_implies([act], options)

        targets = self._targets(acts, t)
        active = f.define_or(var_name('any_act', t=t), list(acts.values()))
        self._reach(t, gate={v: neg(self.occ(self.cells[v], t)) for v in range(len(self.cells))},
                    targets=targets, tag=f"t={t}", active=active)

    def _descend_rules(self) -> None:
        for t in range(self.T - 1):
            self.formula.add_implies([self.encoding.noops[t]], [self.encoding.noops[t + 1]])
        budget = self.config.action_budget
        if budget is not None and budget < self.T:
            self.formula.at_least_k([self.encoding.noops[t] for t in range(self.T)],
                                    self.T - budget)

    # PARALLEL

    def _parallel_step(self, t: int) -> None:
        f = self.formula
        acts = self._actions(t)
        jumps = {}
        for cell in self.cells:
            jumps[cell] = f.fresh_var(var_name('jump', **_cell_fields(cell), t=t))
            self.encoding.jumps[(t, cell)] = jumps[cell]
            f.add_implies([jumps[cell]], [neg(self.agent(cell, t))])
            f.add_implies([jumps[cell]], [self.agent(cell, t + 1)])
        f.add_clause(list(acts.values()) + list(jumps.values()))
        f.at_most_one(list(jumps.values()))
        any_jump = f.define_or(var_name('any_jump', t=t), list(jumps.values()))
        any_act = f.define_or(var_name('any_act', t=t), list(acts.values()))
        f.add_clause([neg(any_jump), neg(any_act)])
        for cell in self.cells:
            f.add_implies([neg(any_jump), self.agent(cell, t)], [self.agent(cell, t + 1)])

        affected: Dict[Cell, List[int]] = {}
        for (p, d), act in acts.items():
            options = [self._add_event(event, t, [act], move_agent=False)
                       for event in self._object_events(p, d, t)]
            f.add_implies([act], options)
            for cell in (d.apply(p), d.apply(p, 2)):
                affected.setdefault(cell, []).append(act)
        for group in affected.values():
            f.at_most_one(group)

        occupied_gate = {}
        for v, cell in enumerate(self.cells):
            occupied_gate[v] = f.define_and(
                var_name('gate', **_cell_fields(cell), t=t),
                [neg(self.occ(cell, t)), neg(self.occ(cell, t + 1))]
            )
        targets = self._targets(acts, t)
        if self.config.reach == 'path':
            self._parallel_paths(t, targets, occupied_gate)
        elif targets:
            self._reach(t, occupied_gate, targets, tag=f"t={t},g=occ")
        now_gate = {v: neg(self.occ(cell, t)) for v, cell in enumerate(self.cells)}
        self._reach(t, now_gate, {self.graph.vertex(c): j for c, j in jumps.items()},
                    tag=f"t={t},g=now", active=any_jump)

    def _parallel_paths(self, t: int, targets: Dict[int, Literal],
                        gate: Dict[int, Literal]) -> None:
        """One path copy per possible simultaneous action, released when unused."""
        f = self.formula
        if not targets:
            return
        copies = max(1, min(self.level.ball_count, len(targets)))
        chosen: Dict[int, List[int]] = {v: [] for v in targets}
        previous = None
        for k in range(copies):
            picks = {}
            for v in targets:
                pick = f.fresh_var(var_name('pick', **_cell_fields(self.cells[v]), k=k, t=t))
                f.add_implies([pick], [targets[v]])
                chosen[v].append(pick)
                picks[v] = pick
            f.at_most_one(list(picks.values()))
            active = f.define_or(var_name('copy', k=k, t=t), list(picks.values()))
            if previous is not None:
                f.add_implies([active], [previous])
            previous = active
            self._reach(t, gate, picks, tag=f"t={t},g=occ,k={k}", active=active)
        for v, need in targets.items():
            f.add_implies([need], chosen[v])

    # shared helpers

    def _actions(self, t: int) -> Dict[Tuple[Cell, Direction], int]:
        acts = {}
        for p in self.cells:
            for d in Direction:
                if not self._object_events(p, d, t):
                    continue
                act = self.formula.fresh_var(
                    var_name('act', **_cell_fields(p), d=d.name, t=t)
                )
                acts[(p, d)] = act
                self.encoding.actions[(t, p, d)] = act
        return acts

    def _targets(self, acts: Dict[Tuple[Cell, Direction], int], t: int) -> Dict[int, Literal]:
        by_cell: Dict[Cell, List[int]] = {}
        for (p, _), act in acts.items():
            by_cell.setdefault(p, []).append(act)
        return {
            self.graph.vertex(p): self.formula.define_or(
                var_name('need', **_cell_fields(p), t=t), group
            )
            for p, group in by_cell.items()
        }

    def _reach(self, t: int, gate: Dict[int, Literal], targets: Dict[int, Literal],
               tag: str, active: Literal = Const.TRUE) -> None:
        if not targets:
            return
        roots = {v: self.agent(cell, t) for v, cell in enumerate(self.cells)}
        fragment = self.reach_encoder.encode(
            self.formula, self.graph, roots, gate=gate, tag=tag,
            target=targets, active=active
        )
        self.encoding.fragments.append(fragment)


def encode(level: Level, config: EncodingConfig) -> PlanningEncoding:
    return PlanningEncoder(level, config).encode()


def encode_full(level: Level, T: int, **options) -> PlanningEncoding:
    return encode(level, EncodingConfig(Mode.FULL, T, **options))


def encode_collapsed(level: Level, T: int, reach: str = "tree", **options) -> PlanningEncoding:
    return encode(level, EncodingConfig(Mode.COLLAPSED, T, reach=reach, **options))


def encode_parallel(level: Level, T: int, reach: str = "tree", **options) -> PlanningEncoding:
    return encode(level, EncodingConfig(Mode.PARALLEL, T, reach=reach, **options))


def encode_descend(level: Level, T: int, reach: str = "path",
                   action_budget: Optional[int] = None, **options) -> PlanningEncoding:
    return encode(level, EncodingConfig(Mode.DESCEND, T, reach=reach,
                                        action_budget=action_budget, **options))
