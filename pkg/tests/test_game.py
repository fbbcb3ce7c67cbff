import random

import pytest

from app.game import (
    REJECTED, Metric, MoveKind, grow, is_goal, oracle_optimal, reachable_cells,
    run_plan, step, walk
)
from app.fixtures import load_fixture
from app.level import BallSize, Direction, parse_snowman, parse_sokoban_xsb
from app.plan_io import lurd_moves

L, M, S = BallSize.LARGE, BallSize.MEDIUM, BallSize.SMALL
SO, E, W = Direction.S, Direction.E, Direction.W

FIXTURES = [
    'tiny1', 'snowman_done', 'walk_around', 'snow_growth', 'pop_restack', 'line3',
    'soko_line', 'soko_done', 'soko_pair', 'soko_down', 'soko_turn', 'soko_rows', 'soko_long',
]


def corridor(row):
    width = len(row) + 2
    return parse_snowman("\n".join(['#' * width, f"#{row}#", '#' * width]))


def test_move_into_free_cell():
    level = corridor("p--7")
    result = step(level, level.initial_state(), E)
    assert result.kind is MoveKind.MOVE
    assert result.state.agent == (1, 2)


def test_move_into_wall_rejected():
    level = corridor("p--7")
    assert step(level, level.initial_state(), W) is REJECTED


def test_small_rolls_onto_snow_and_grows():
    level = corridor("p1.42")
    result = step(level, level.initial_state(), E)
    assert result.kind is MoveKind.ROLL
    assert result.state.stack_map[(1, 3)] == (M,)
    assert (1, 3) not in result.state.snow
    assert result.state.agent == (1, 2)


def test_large_rolls_onto_snow_stays_large():
    level = corridor("p4.21")
    result = step(level, level.initial_state(), E)
    assert result.state.stack_map[(1, 3)] == (L,)
    assert (1, 3) not in result.state.snow


def test_roll_onto_plain_floor_keeps_size():
    level = corridor("p1-42")
    assert step(level, level.initial_state(), E).state.stack_map[(1, 3)] == (S,)


def test_pop_leaves_agent_in_place():
    level = corridor("p6-1")
    result = step(level, level.initial_state(), E)
    assert result.kind is MoveKind.POP
    assert result.state.agent == (1, 1)
    assert result.state.stack_map[(1, 2)] == (L,)
    assert result.state.stack_map[(1, 3)] == (M,)


def test_pop_onto_snow_grows():
    level = corridor("p5.2")
    result = step(level, level.initial_state(), E)
    assert result.kind is MoveKind.POP
    assert result.state.stack_map[(1, 3)] == (M,)


def test_pop_into_ball_rejected():
    level = corridor("p61")
    assert step(level, level.initial_state(), E) is REJECTED


def test_push_onto_bigger_ball():
    level = corridor("p16-")
    result = step(level, level.initial_state(), E)
    assert result.kind is MoveKind.PUSH
    assert result.state.stack_map[(1, 3)] == (L, M, S)
    assert result.state.agent == (1, 2)


def test_push_onto_snow_covered_stack_keeps_size():
    level = corridor("p1.4-1")
    rolled = step(level, level.initial_state(), E).state
    assert rolled.stack_map[(1, 3)] == (M,)
    pushed = step(level, rolled, E)
    assert pushed.kind is MoveKind.PUSH
    assert pushed.state.stack_map[(1, 4)] == (L, M)


def test_push_medium_onto_small_rejected():
    level = corridor("p214")
    assert step(level, level.initial_state(), E) is REJECTED


def test_push_onto_equal_size_rejected():
    level = corridor("p22-2")
    assert step(level, level.initial_state(), E) is REJECTED


def test_push_into_wall_rejected():
    level = corridor("p-6-1")
    state = level.initial_state().with_agent((1, 2))
    assert step(level, state, E).kind is MoveKind.POP
    assert step(level, level.initial_state().with_agent((1, 4)), E) is REJECTED


def test_sokoban_push_and_blocked_push():
    level = parse_sokoban_xsb("#######\n#@$$..#\n#######")
    assert step(level, level.initial_state(), E) is REJECTED
    level = parse_sokoban_xsb("#####\n#@$.#\n#####")
    result = step(level, level.initial_state(), E)
    assert result.kind is MoveKind.PUSH
    assert is_goal(level, result.state)


def test_sokoban_never_grows():
    level = parse_sokoban_xsb("######\n#@$ .#\n######")
    state = level.initial_state()
    result = step(level, state, E)
    assert result.state.stack_map == {(1, 3): (S,)}


def test_grow():
    assert grow(S) is M
    assert grow(M) is L
    assert grow(L) is L


def test_goal_full_snowman():
    level = corridor("p7-")
    assert is_goal(level, level.initial_state())


def test_goal_lone_ball():
    level = corridor("p1-6")
    assert not is_goal(level, level.initial_state())


def test_goal_sokoban_boxes_on_goals():
    level = parse_sokoban_xsb("#####\n#@*-#\n#####")
    assert is_goal(level, level.initial_state())


def test_run_plan_empty():
    level = corridor("p1-6")
    run = run_plan(level, [])
    assert run.ok
    assert run.state == level.initial_state()


def test_run_plan_reports_rejection():
    level = corridor("p1-6")
    run = run_plan(level, [E, E, E])
    assert run.rejected_at == 2
    assert run.object_actions == 2


def test_run_plan_tiny1_solution():
    level = corridor("p1-6")
    run = run_plan(level, [E, E])
    assert run.ok
    assert run.kinds == [MoveKind.ROLL, MoveKind.PUSH]
    assert is_goal(level, run.state)


def test_reachable_cells_blocked_by_balls():
    level = corridor("p-6--1")
    assert reachable_cells(level, level.initial_state()) == {(1, 1), (1, 2)}


def test_walk_shortest_and_blocked():
    level = parse_snowman("#####\n#6-p#\n#-1-#\n#---#\n#####")
    state = level.initial_state()
    assert walk(level, state, (3, 2)) in ([SO, SO, W], [SO, W, SO])
    assert walk(level, state, state.agent) == []
    blocked = corridor("p-6--1")
    assert walk(blocked, blocked.initial_state(), (1, 5)) is None


def random_walk_states(level, rng, steps):
    state = level.initial_state()
    for _ in range(steps):
        result = step(level, state, rng.choice(list(Direction)))
        if not result.rejected:
            yield state, result.state
            state = result.state


@pytest.mark.slow
def test_step_preserves_invariants():
    rng = random.Random(42)
    for name in ('snow_growth', 'pop_restack', 'walk_around', 'line3'):
        level, _ = load_fixture(name)
        count = level.ball_count
        for before, after in random_walk_states(level, rng, 300):
            assert sum(len(s) for _, s in after.stacks) == count
            assert after.snow <= before.snow
            assert not after.occupied(after.agent)
            for cell, stack in after.stacks:
                assert level.is_floor(cell)
                assert cell not in after.snow
                assert list(stack) == sorted(stack, reverse=True)
                assert len(set(stack)) == len(stack)
            before_sizes = sorted(b for _, s in before.stacks for b in s)
            after_sizes = sorted(b for _, s in after.stacks for b in s)
            assert all(a >= b for a, b in zip(after_sizes, before_sizes))


def test_oracle_at_goal():
    level = corridor("p7-")
    assert oracle_optimal(level, Metric.MOVES) == 0
    assert oracle_optimal(level, Metric.OBJECT_ACTIONS) == 0


def test_oracle_sokoban_corridor():
    level = parse_sokoban_xsb("#####\n#@$.#\n#####")
    assert oracle_optimal(level, Metric.MOVES) == 1
    assert oracle_optimal(level, Metric.OBJECT_ACTIONS) == 1


def test_oracle_unsolvable():
    level = parse_sokoban_xsb("#####\n#.@$#\n#####")
    assert oracle_optimal(level, Metric.MOVES) is None


def test_oracle_cap():
    level, _ = load_fixture('pop_restack')
    assert oracle_optimal(level, Metric.MOVES, cap=3) is None


@pytest.mark.parametrize("name", FIXTURES)
def test_oracle_matches_frozen_fixture(name):
    level, meta = load_fixture(name)
    assert oracle_optimal(level, Metric.MOVES) == meta['moves']
    assert oracle_optimal(level, Metric.OBJECT_ACTIONS) == meta['object_actions']


def test_lurd_replay_of_fixture():
    level, _ = load_fixture('walk_around')
    run = run_plan(level, lurd_moves("dLdlU"))
    assert run.ok
    assert is_goal(level, run.state)
    assert run.object_actions == 2
