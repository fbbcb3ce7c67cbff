import pytest

from app.cnf import Formula, var_name
from app.encoder import Mode
from app.exceptions import PlanValidationError, RegistryError, ValidationError
from app.fixtures import load_fixture
from app.level import Direction
from app.plan_io import (
    ObjectAction, Plan, PlanForm, Step, decode, lurd_moves, parse_lurd, to_lurd
)

N, S, E, W = Direction.N, Direction.S, Direction.E, Direction.W


def registry(*names):
    formula = Formula()
    for name in names:
        formula.fresh_var(name)
    return formula


def true_model(formula, *names):
    return {var: name in names for name, var in formula.registry.items()}


def test_decode_full_moves():
    names = [var_name('dir', d=d.name, t=t) for t in range(2) for d in Direction]
    formula = registry(*names)
    model = true_model(formula, "dir[d=E,t=0]", "dir[d=S,t=1]")
    plan = decode(formula, model, Mode.FULL)
    assert plan.form is PlanForm.SEQUENTIAL
    assert plan.moves == [E, S]
    assert plan.object_actions is None
    assert str(plan) == "rd"


def test_decode_full_rejects_two_directions():
    formula = registry("dir[d=E,t=0]", "dir[d=W,t=0]")
    with pytest.raises(RegistryError, match="2 directions"):
        decode(formula, true_model(formula, "dir[d=E,t=0]", "dir[d=W,t=0]"), Mode.FULL)


def test_decode_collapsed_steps():
    formula = registry("act[row=1,col=1,d=E,t=0]", "act[row=1,col=2,d=E,t=1]",
                       "act[row=1,col=2,d=W,t=1]")
    model = true_model(formula, "act[row=1,col=1,d=E,t=0]", "act[row=1,col=2,d=E,t=1]")
    plan = decode(formula, model, Mode.COLLAPSED)
    assert plan.steps == [Step((ObjectAction((1, 1), E),)), Step((ObjectAction((1, 2), E),))]
    assert plan.object_actions == 2
    assert plan.move_count == 2


def test_decode_collapsed_rejects_two_actions():
    formula = registry("act[row=1,col=1,d=E,t=0]", "act[row=2,col=1,d=E,t=0]")
    model = true_model(formula, "act[row=1,col=1,d=E,t=0]", "act[row=2,col=1,d=E,t=0]")
    with pytest.raises(RegistryError, match="2 actions"):
        decode(formula, model, Mode.COLLAPSED)
    assert decode(formula, model, Mode.PARALLEL).object_actions == 2


def test_decode_parallel_jump_and_sorted_actions():
    formula = registry("jump[row=2,col=1,t=0]", "act[row=2,col=1,d=E,t=1]",
                       "act[row=1,col=3,d=W,t=1]", "act[row=1,col=3,d=N,t=1]")
    model = true_model(formula, "jump[row=2,col=1,t=0]", "act[row=2,col=1,d=E,t=1]",
                       "act[row=1,col=3,d=W,t=1]", "act[row=1,col=3,d=N,t=1]")
    plan = decode(formula, model, Mode.PARALLEL)
    assert plan.steps[0] == Step(jump=(2, 1))
    assert [str(a) for a in plan.steps[1].actions] == ["N@1,3", "W@1,3", "E@2,1"]
    assert str(plan) == "jump@2,1 {N@1,3 W@1,3 E@2,1}"
    assert plan.object_actions == 3


def test_decode_counts_noops():
    formula = registry("act[row=1,col=1,d=E,t=0]", "noop[t=0]", "act[row=1,col=1,d=E,t=1]",
                       "noop[t=1]", "act[row=1,col=1,d=E,t=2]", "noop[t=2]")
    model = true_model(formula, "act[row=1,col=1,d=E,t=0]", "noop[t=1]", "noop[t=2]")
    plan = decode(formula, model, Mode.DESCEND)
    assert plan.noops == 2
    assert plan.object_actions == 1


def test_decode_empty_step_is_an_error():
    formula = registry("act[row=1,col=1,d=E,t=0]")
    with pytest.raises(RegistryError, match="no action"):
        decode(formula, true_model(formula), Mode.COLLAPSED)


def test_decode_ignores_auxiliary_names():
    formula = registry("act[row=1,col=1,d=E,t=0]", "r[v=0,t=0]", "ev[k=roll,row=1,col=1,d=E,x=S,t=0]")
    model = true_model(formula, "act[row=1,col=1,d=E,t=0]", "r[v=0,t=0]")
    assert decode(formula, model, Mode.COLLAPSED).object_actions == 1


def test_step_rules():
    with pytest.raises(ValidationError, match="jump"):
        Step((ObjectAction((1, 1), E),), jump=(1, 1))
    with pytest.raises(ValidationError, match="empty"):
        Step()


def test_to_lurd_marks_object_actions():
    level, _ = load_fixture('walk_around')
    assert to_lurd(level, [S, W, S, W, N]) == "dLdlU"
    assert to_lurd(level, Plan(PlanForm.SEQUENTIAL, moves=[S, W, S, W, N])) == "dLdlU"


def test_to_lurd_rejected_move():
    level, _ = load_fixture('tiny1')
    with pytest.raises(PlanValidationError, match="Move 2"):
        to_lurd(level, [E, E, E])


def test_parse_lurd():
    assert parse_lurd(" rRd\n") == [(E, False), (E, True), (S, False)]
    assert lurd_moves("LURD") == [W, N, E, S]
    assert lurd_moves("") == []


def test_parse_lurd_rejects_other_letters():
    with pytest.raises(ValidationError, match="position 1"):
        parse_lurd("lxu")
