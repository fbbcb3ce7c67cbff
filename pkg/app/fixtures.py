"""Frozen micro-levels with oracle optima, and random levels for fuzzing."""
from collections import deque
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from app.exceptions import FixtureError, ValidationError
from app.game import Metric, oracle_optimal
from app.level import Game, Level, parse_snowman, parse_sokoban_xsb, render
from app.planner_config import get_project_root

FIXTURES_DIR = get_project_root() / "tests" / "fixtures"
MAX_DIM = 6
SNOW_DENSITY = 0.3

# Two rolls that are each possible alone but cannot share a timestep.
#   small ball (2,4), rolled west from (2,5): lands on (2,3) and closes the
#     top corridor, the only way from the start to (4,4)
#   medium ball (4,5), rolled east from (4,4): lands on (4,6) and closes the
#     eastern column, the only way from the start to (2,5)
#   large ball (6,6): a base for the snowman, never moved by either roll
# Whichever roll goes first, the walk to the other acting cell is gone.
CROSSING_PUSHES = "\n".join([
    "########",
    "#----###",
    "#-#-1--#",
    "#-#-##-#",
    "#-#--2-#",
    "#-###--#",
    "#p----4#",
    "########",
])

# A roll whose ball lands on the agent's only way back.
#   medium ball (3,2), rolled east from (3,1): stops on (3,3), the single
#     corridor cell between the western room and the agent at (3,5)
#   small (5,1) and large (5,3): sealed pockets that complete the ball set
# Reaching (3,1) needs a walk through (3,3) first, so the roll cannot be
# the only step of a one-step parallel plan; it becomes possible after a
# jump step.
SELF_BLOCKING_PUSH = "\n".join([
    "#######",
    "#####-#",
    "#---#-#",
    "#-2--p#",
    "#####-#",
    "#1#4#-#",
    "#######",
])


def _component(cells, start):
    seen = {start}
    queue = deque([start])
    while queue:
        r, c = queue.popleft()
        for nxt in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if nxt in cells and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def gen_random_level(seed: int, dims: Tuple[int, int] = (4, 4), density: float = 0.2,
                     game: Game = Game.SNOWMAN) -> Level:
    """
    Random level with ``dims`` interior rows and columns inside a wall border.

    Floor the agent cannot walk to is walled in. Snowman levels get three
    single balls when there is room, Sokoban levels up to two boxes.
    """
    rows, cols = dims
    if not (1 <= rows <= MAX_DIM and 1 <= cols <= MAX_DIM):
        raise ValidationError(f"Random levels are limited to {MAX_DIM}x{MAX_DIM}, got {rows}x{cols}")
    if not 0.0 <= density < 1.0:
        raise ValidationError(f"Wall density {density} leaves no floor")
    rng = np.random.default_rng(seed)
    interior = [(r, c) for r in range(1, rows + 1) for c in range(1, cols + 1)]
    agent = interior[int(rng.integers(len(interior)))]
    walls = rng.random(len(interior)) < density
    floor = {cell for cell, wall in zip(interior, walls) if not wall} | {agent}
    floor = _component(floor, agent)
    others = sorted(floor - {agent})

    grid = [['#'] * (cols + 2) for _ in range(rows + 2)]
    for r, c in floor:
        grid[r][c] = '-'
    if game is Game.SNOWMAN:
        grid[agent[0]][agent[1]] = 'p'
        balls = set()
        if len(others) >= 3:
            for index in rng.permutation(len(others))[:3]:
                r, c = others[int(index)]
                grid[r][c] = str(int(rng.choice([1, 2, 4])))
                balls.add((r, c))
        for cell in others:
            if cell not in balls and rng.random() < SNOW_DENSITY:
                grid[cell[0]][cell[1]] = '.'
        text = "\n".join("".join(row) for row in grid)
        return parse_snowman(text, name=f"random-{seed}")

    count = min(2, len(others) // 2)
    boxes = {others[int(i)] for i in rng.permutation(len(others))[:count]}
    cells = sorted(floor)
    goals = {cells[int(i)] for i in rng.permutation(len(cells))[:count]}
    for r, c in floor:
        box, goal = (r, c) in boxes, (r, c) in goals
        if (r, c) == agent:
            grid[r][c] = '+' if goal else '@'
        elif box:
            grid[r][c] = '*' if goal else '$'
        elif goal:
            grid[r][c] = '.'
    text = "\n".join("".join(row) for row in grid)
    return parse_sokoban_xsb(text, name=f"random-{seed}")


def _level_path(directory: Path, name: str, game: Game) -> Path:
    return directory / f"{name}{'.xsb' if game is Game.SOKOBAN else '.txt'}"


def freeze_fixture(level: Level, name: str, directory: Union[str, Path, None] = None,
                   cap: int = 200000, flags: Optional[Dict[str, Any]] = None) -> Path:
    """
    Store a level next to a JSON sidecar holding both oracle optima.

    Raises:
        FixtureError: If the oracle cannot finish within ``cap`` states or
            the level has no solution.
    """
    directory = Path(directory or FIXTURES_DIR)
    optima = {}
    for metric in Metric:
        value = oracle_optimal(level, metric, cap)
        if value is None:
            logging.error(f"Fixture {name} rejected: no {metric.value} optimum within {cap} states")
            raise FixtureError(f"No {metric.value} optimum for {name} within {cap} states")
        optima[metric.value] = value
    directory.mkdir(parents=True, exist_ok=True)
    level_path = _level_path(directory, name, level.game)
    level_path.write_text(render(level), encoding='utf-8')
    metadata = {'name': name, 'game': level.game.value, **optima, **(flags or {})}
    sidecar = directory / f"{name}.json"
    sidecar.write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n", encoding='utf-8')
    logging.info(f"Froze fixture {name} with optima {optima}")
    return level_path


def load_fixture(name: str, directory: Union[str, Path, None] = None) -> Tuple[Level, Dict[str, Any]]:
    """Frozen level and its sidecar metadata."""
    directory = Path(directory or FIXTURES_DIR)
    sidecar = directory / f"{name}.json"
    if not sidecar.exists():
        raise FixtureError(f"No fixture named {name} in {directory}")
    try:
        metadata = json.loads(sidecar.read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise FixtureError(f"Broken sidecar for {name}: {e}")
    game = Game(metadata['game'])
    text = _level_path(directory, name, game).read_text(encoding='utf-8')
    parse = parse_sokoban_xsb if game is Game.SOKOBAN else parse_snowman
    return parse(text, name=name), metadata
