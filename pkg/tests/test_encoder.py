import itertools
import random

import pytest
from pysat.solvers import Solver

from app.backends import SolveStatus, solve
from app.cnf import var_name
from app.encoder import (
    SIZE_KIND, EncodingConfig, Mode, encode, encode_collapsed, encode_descend, encode_full,
    encode_parallel
)
from app.exceptions import ContractError, SerializationError
from app.fixtures import CROSSING_PUSHES, SELF_BLOCKING_PUSH, gen_random_level, load_fixture
from app.game import reachable_cells, run_plan
from app.level import Direction, Game, parse_snowman
from app.plan_io import ObjectAction, decode_encoding
from app.planner import apply_actions, serialize

REACHES = ['path', 'dag', 'tree']
SNOWMAN = ['tiny1', 'snowman_done', 'walk_around', 'snow_growth', 'pop_restack', 'line3']
SOKOBAN = ['soko_line', 'soko_done', 'soko_pair', 'soko_down', 'soko_turn', 'soko_rows',
           'soko_long']


def status(encoding):
    return solve(encoding.formula, 30).status


def min_horizon(build, cap=14):
    for T in range(cap + 1):
        if status(build(T)) is SolveStatus.SAT:
            return T
    return None


def sat_with(encoding, units):
    for lit in units:
        encoding.formula.add_clause([lit])
    return solve(encoding.formula, 30)


def model_stacks(encoding, model, t):
    """Ball sizes per cell at ``t`` as read from a model."""
    stacks = {}
    for cell in encoding.graph.cells:
        sizes = set()
        for size, kind in SIZE_KIND.items():
            var = encoding.formula.lookup(var_name(kind, row=cell[0], col=cell[1], t=t))
            if var is not None and model[var]:
                sizes.add(size)
        if sizes:
            stacks[cell] = sizes
    return stacks


def test_config_validation():
    with pytest.raises(ContractError, match="negative"):
        EncodingConfig(Mode.FULL, -1)
    with pytest.raises(ContractError, match="Unknown reachability"):
        EncodingConfig(Mode.COLLAPSED, 1, reach='bfs')
    with pytest.raises(ContractError, match="budget"):
        EncodingConfig(Mode.DESCEND, 1, action_budget=-2)


def test_full_zero_horizon_at_goal():
    level, _ = load_fixture('snowman_done')
    assert status(encode_full(level, 0)) is SolveStatus.SAT


def test_full_zero_horizon_not_at_goal():
    level, _ = load_fixture('tiny1')
    assert status(encode_full(level, 0)) is SolveStatus.UNSAT


@pytest.mark.parametrize("name", ['tiny1', 'walk_around', 'line3', 'soko_line', 'soko_down',
                                  'soko_pair', 'soko_turn'])
def test_full_horizon_matches_move_optimum(name):
    level, meta = load_fixture(name)
    assert min_horizon(lambda T: encode_full(level, T)) == meta['moves']


@pytest.mark.parametrize("reach", REACHES)
@pytest.mark.parametrize("name", SNOWMAN + SOKOBAN)
def test_collapsed_horizon_matches_action_optimum(name, reach):
    level, meta = load_fixture(name)
    assert min_horizon(lambda T: encode_collapsed(level, T, reach)) == meta['object_actions']


@pytest.mark.parametrize("name", ['tiny1', 'snow_growth', 'pop_restack'])
def test_reach_encodings_agree(name):
    level, meta = load_fixture(name)
    for T in range(meta['object_actions'] + 1):
        for mode in (Mode.COLLAPSED, Mode.PARALLEL):
            results = {status(encode(level, EncodingConfig(mode, T, reach=reach)))
                       for reach in REACHES}
            assert len(results) == 1


@pytest.mark.parametrize("name", ['snow_growth', 'pop_restack'])
def test_invariants_do_not_change_status(name):
    level, meta = load_fixture(name)
    T = meta['object_actions']
    for horizon in (T - 1, T):
        with_inv = status(encode_collapsed(level, horizon, invariants=True))
        without = status(encode_collapsed(level, horizon, invariants=False))
        assert with_inv is without


def test_collapsed_zero_horizon_not_at_goal():
    level, _ = load_fixture('soko_line')
    assert status(encode_collapsed(level, 0)) is SolveStatus.UNSAT


def test_registry_names_and_lookups():
    level, _ = load_fixture('tiny1')
    encoding = encode_collapsed(level, 2)
    act = encoding.action_var((1, 1), Direction.E, 0)
    assert act == encoding.formula.var("act[row=1,col=1,d=E,t=0]")
    assert encoding.action_var((1, 1), Direction.W, 0) is None
    assert encoding.jump_var((1, 1), 0) is None
    assert encoding.noop_var(0) is None
    assert encoding.formula.lookup("c[row=1,col=1,t=2]") is not None
    assert encoding.stats() == encoding.formula.stats()


@pytest.mark.parametrize("reach", REACHES)
def test_collapsed_states_follow_simulator(reach):
    level, meta = load_fixture('snow_growth')
    encoding = encode_collapsed(level, meta['object_actions'], reach)
    outcome = solve(encoding.formula, 30)
    plan = decode_encoding(encoding, outcome.model)
    state = level.initial_state()
    for t, plan_step in enumerate(plan.steps):
        state, _ = apply_actions(level, state, plan_step.ordered())
        expected = {cell: set(stack) for cell, stack in state.stacks}
        assert model_stacks(encoding, outcome.model, t + 1) == expected
        for cell in level.snow:
            snow = encoding.formula.var(var_name('s', row=cell[0], col=cell[1], t=t + 1))
            assert outcome.model[snow] == (cell in state.snow)


@pytest.mark.parametrize("reach", REACHES)
def test_parallel_no_longer_than_collapsed(reach):
    level, meta = load_fixture('tiny1')
    assert min_horizon(lambda T: encode_parallel(level, T, reach)) <= meta['object_actions']


@pytest.mark.parametrize("reach", REACHES)
@pytest.mark.parametrize("name", ['soko_pair', 'soko_rows'])
def test_parallel_two_independent_pushes(name, reach):
    level, meta = load_fixture(name)
    assert min_horizon(lambda T: encode_parallel(level, T, reach)) == meta['parallel_horizon']
    encoding = encode_parallel(level, 1, reach)
    plan = decode_encoding(encoding, solve(encoding.formula, 30).model)
    assert len(plan.steps) == 1
    assert len(plan.steps[0].actions) == meta['parallel_upper_bound']


CROSS_A = ObjectAction((2, 5), Direction.W)
CROSS_B = ObjectAction((4, 4), Direction.E)


@pytest.mark.parametrize("reach", REACHES)
def test_crossing_pushes_individually_possible(reach):
    level = parse_snowman(CROSSING_PUSHES)
    for action in (CROSS_A, CROSS_B):
        encoding = encode_parallel(level, 1, reach, require_goal=False)
        var = encoding.action_var(action.cell, action.direction, 0)
        assert sat_with(encoding, [var]).is_sat


@pytest.mark.parametrize("reach", REACHES)
def test_crossing_pushes_not_parallel(reach):
    level = parse_snowman(CROSSING_PUSHES)
    encoding = encode_parallel(level, 1, reach, require_goal=False)
    units = [encoding.action_var(a.cell, a.direction, 0) for a in (CROSS_A, CROSS_B)]
    assert sat_with(encoding, units).status is SolveStatus.UNSAT


def test_crossing_pushes_not_serializable():
    level = parse_snowman(CROSSING_PUSHES)
    state = level.initial_state()
    for order in itertools.permutations([CROSS_A, CROSS_B]):
        with pytest.raises(SerializationError, match="Cannot walk"):
            apply_actions(level, state, list(order))
    for action in (CROSS_A, CROSS_B):
        apply_actions(level, state, [action])


SELF_BLOCK = ObjectAction((3, 1), Direction.E)


def test_self_blocking_push_cuts_the_way_back():
    level = parse_snowman(SELF_BLOCKING_PUSH)
    state = level.initial_state()
    assert SELF_BLOCK.cell in reachable_cells(level, state)
    after, _ = apply_actions(level, state, [SELF_BLOCK])
    assert level.agent not in reachable_cells(level, after)


@pytest.mark.parametrize("reach", REACHES)
def test_self_blocking_push_needs_a_jump(reach):
    level = parse_snowman(SELF_BLOCKING_PUSH)
    one = encode_parallel(level, 1, reach, require_goal=False)
    var = one.action_var(SELF_BLOCK.cell, SELF_BLOCK.direction, 0)
    assert sat_with(one, [var]).status is SolveStatus.UNSAT

    two = encode_parallel(level, 2, reach, require_goal=False)
    units = [two.jump_var(SELF_BLOCK.cell, 0),
             two.action_var(SELF_BLOCK.cell, SELF_BLOCK.direction, 1)]
    assert sat_with(two, units).is_sat


def test_jump_excludes_actions():
    level, _ = load_fixture('soko_pair')
    encoding = encode_parallel(level, 1, 'tree', require_goal=False)
    units = [encoding.jump_var((1, 2), 0), encoding.action_var((1, 3), Direction.W, 0)]
    assert sat_with(encoding, units).status is SolveStatus.UNSAT


def states_before_steps(level, plan):
    state = level.initial_state()
    for plan_step in plan.steps:
        yield state, plan_step
        if plan_step.jump is not None:
            continue
        state, _ = apply_actions(level, state, plan_step.ordered())


@pytest.mark.parametrize("reach", REACHES)
@pytest.mark.parametrize("name", ['soko_pair', 'soko_rows', 'tiny1', 'line3', 'pop_restack'])
def test_parallel_steps_replay_in_any_order(name, reach):
    level, _ = load_fixture(name)
    T = min_horizon(lambda h: encode_parallel(level, h, reach))
    encoding = encode_parallel(level, T, reach)
    plan = decode_encoding(encoding, solve(encoding.formula, 30).model)
    finals = set()
    for state, plan_step in states_before_steps(level, plan):
        if plan_step.jump is not None or len(plan_step.actions) > 3:
            continue
        results = set()
        for order in itertools.permutations(plan_step.actions):
            after, _ = apply_actions(level, state, list(order))
            results.add(after.with_agent((0, 0)))
        assert len(results) == 1
        finals |= results
    assert finals


@pytest.mark.parametrize("reach", REACHES)
def test_descend_at_optimum_has_no_noops(reach):
    level, meta = load_fixture('tiny1')
    encoding = encode_descend(level, meta['object_actions'], reach)
    plan = decode_encoding(encoding, solve(encoding.formula, 30).model)
    assert plan.noops == 0
    assert plan.object_actions == meta['object_actions']


@pytest.mark.parametrize("reach", REACHES)
def test_descend_below_optimum_unsat(reach):
    level, meta = load_fixture('tiny1')
    assert status(encode_descend(level, meta['object_actions'] - 1, reach)) is SolveStatus.UNSAT


@pytest.mark.parametrize("reach", REACHES)
def test_descend_padding_uses_trailing_noops(reach):
    level, meta = load_fixture('tiny1')
    T = meta['object_actions'] + 2
    encoding = encode_descend(level, T, reach)
    model = solve(encoding.formula, 30).model
    plan = decode_encoding(encoding, model)
    assert plan.noops >= 2
    noops = [model[encoding.noop_var(t)] for t in range(T)]
    assert noops == sorted(noops)


def test_descend_action_budget():
    level, meta = load_fixture('line3')
    T = meta['object_actions'] + 1
    assert status(encode_descend(level, T, action_budget=meta['object_actions'])) is SolveStatus.SAT
    assert status(encode_descend(
        level, T, action_budget=meta['object_actions'] - 1)) is SolveStatus.UNSAT


def test_require_goal_false_allows_idle_horizon():
    level, _ = load_fixture('tiny1')
    assert status(encode_collapsed(level, 0, require_goal=False)) is SolveStatus.SAT


def test_pop_event_keeps_agent():
    level, _ = load_fixture('pop_restack')
    encoding = encode_collapsed(level, 1, require_goal=False)
    var = encoding.action_var((1, 1), Direction.E, 0)
    assert var is not None
    model = sat_with(encoding, [var]).model
    assert model[encoding.formula.var("c[row=1,col=1,t=1]")]


@pytest.mark.slow
@pytest.mark.parametrize("mode", [Mode.COLLAPSED, Mode.PARALLEL, Mode.DESCEND])
def test_random_models_replay_in_simulator(mode):
    for seed in range(25):
        level = gen_random_level(seed, dims=(3, 4), density=0.15)
        encoding = encode(level, EncodingConfig(mode, 2, reach=REACHES[seed % 3],
                                                require_goal=False))
        outcome = solve(encoding.formula, 30)
        if not outcome.is_sat:
            continue
        plan = decode_encoding(encoding, outcome.model)
        run = run_plan(level, serialize(level, plan))
        assert run.ok
        assert run.object_actions == plan.object_actions


def forced_parallel_model(encoding, rng):
    """A model of ``encoding`` with two, one or zero forced actions at t=0."""
    first = [var for (t, _, _), var in encoding.actions.items() if t == 0]
    rng.shuffle(first)
    candidates = [list(pair) for pair in itertools.combinations(first, 2)][:6]
    candidates += [[var] for var in first[:3]] + [[]]
    with Solver(name='glucose4', bootstrap_with=encoding.formula.clauses) as solver:
        for assumptions in candidates:
            if solver.solve(assumptions=assumptions):
                return {abs(lit): lit > 0 for lit in solver.get_model()}
    return None


def step_orders(actions, rng, samples=6):
    if len(actions) <= 3:
        return [list(order) for order in itertools.permutations(actions)]
    orders = []
    for _ in range(samples):
        order = list(actions)
        rng.shuffle(order)
        orders.append(order)
    return orders


@pytest.mark.slow
def test_random_parallel_models_replay_under_permuted_steps():
    checked, multi = 0, 0
    for seed in range(800):
        if checked == 500:
            break
        rng = random.Random(seed)
        game = Game.SOKOBAN if seed % 4 == 3 else Game.SNOWMAN
        dims = rng.choice([(3, 3), (3, 4), (4, 4)])
        level = gen_random_level(seed, dims=dims, density=0.15, game=game)
        encoding = encode_parallel(level, 2, REACHES[seed % 3], require_goal=False)
        model = forced_parallel_model(encoding, rng)
        if model is None:
            # agent boxed in with nothing to push
            continue
        plan = decode_encoding(encoding, model)
        for state, plan_step in states_before_steps(level, plan):
            if plan_step.jump is not None:
                continue
            if len(plan_step.actions) > 1:
                multi += 1
            results = set()
            for order in step_orders(plan_step.actions, rng):
                after, _ = apply_actions(level, state, order)
                results.add(after.with_agent((0, 0)))
            assert len(results) == 1
        run = run_plan(level, serialize(level, plan))
        assert run.ok
        assert run.object_actions == plan.object_actions
        checked += 1
    assert checked == 500
    assert multi >= 10
