"""Puzzle levels for Snowman and Sokoban: parsing, rendering and the grid graph."""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import cached_property
import logging
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from app.exceptions import LevelParseError
from app.graph import Cell, Graph


class Game(Enum):
    SNOWMAN = "snowman"
    SOKOBAN = "sokoban"


class BallSize(IntEnum):
    """Ball sizes; a stack digit is the sum of the sizes it holds."""
    SMALL = 1
    MEDIUM = 2
    LARGE = 4


class Direction(Enum):
    N = (-1, 0, 'u')
    S = (1, 0, 'd')
    E = (0, 1, 'r')
    W = (0, -1, 'l')

    @property
    def delta(self) -> Tuple[int, int]:
        return self.value[0], self.value[1]

    @property
    def letter(self) -> str:
        return self.value[2]

    def apply(self, cell: Cell, times: int = 1) -> Cell:
        return cell[0] + self.value[0] * times, cell[1] + self.value[1] * times

    @classmethod
    def from_letter(cls, letter: str) -> 'Direction':
        for d in cls:
            if d.letter == letter.lower():
                return d
        raise ValueError(f"Unknown direction letter: {letter}")


Stack = Tuple[BallSize, ...]

# Sokoban boxes are single objects with no size.
BOX: Stack = (BallSize.SMALL,)


def stack_from_digit(digit: int) -> Stack:
    """Digit 1..7 to a bottom-to-top stack, e.g. 6 -> (LARGE, MEDIUM)."""
    if not 1 <= digit <= 7:
        raise LevelParseError(f"Invalid ball stack digit: {digit}")
    return tuple(size for size in sorted(BallSize, reverse=True) if digit & size)


def stack_digit(stack: Stack) -> int:
    return sum(stack)


@dataclass(frozen=True)
class Level:
    """
    Immutable puzzle. Cells are (row, col); the border is all wall.

    ``stacks`` holds the initial balls (Snowman, bottom to top) or boxes
    (Sokoban, each stored as BOX).
    """
    game: Game
    rows: int
    cols: int
    walls: FrozenSet[Cell]
    agent: Cell
    stacks: Tuple[Tuple[Cell, Stack], ...] = ()
    snow: FrozenSet[Cell] = frozenset()
    goals: FrozenSet[Cell] = frozenset()
    name: str = field(default="", compare=False)

    @cached_property
    def floor(self) -> FrozenSet[Cell]:
        return frozenset(
            (r, c) for r in range(self.rows) for c in range(self.cols)
            if (r, c) not in self.walls
        )

    def is_floor(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.rows and 0 <= c < self.cols and cell not in self.walls

    @property
    def stack_map(self) -> Dict[Cell, Stack]:
        return dict(self.stacks)

    @property
    def ball_count(self) -> int:
        return sum(len(stack) for _, stack in self.stacks)

    @property
    def snowmen(self) -> int:
        if self.game is Game.SNOWMAN:
            return self.ball_count // 3
        return 0

    def initial_state(self):
        from app.game import GameState
        return GameState.create(self.agent, self.snow, self.stack_map)

    def __str__(self) -> str:
        return render(self)


def _clean_lines(text: str) -> List[str]:
    lines = [line.rstrip('\r') for line in text.replace('\r\n', '\n').split('\n')]
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    return lines


def parse_snowman(text: str, name: str = "") -> Level:
    """
    Parse a Snowman level.

    '#' wall, '-' floor, '.' snow, '1'..'7' ball stacks on plain floor,
    'p' agent on floor, 'P' agent on snow.
    """
    lines = [line.strip() for line in _clean_lines(text)]
    if not lines:
        raise LevelParseError("Empty level")
    cols = len(lines[0])
    if any(len(line) != cols for line in lines):
        raise LevelParseError("Level is not rectangular")
    rows = len(lines)

    walls, snow, stacks, agents = set(), set(), {}, []
    for r, line in enumerate(lines):
        for c, ch in enumerate(line):
            cell = (r, c)
            if ch == '#':
                walls.add(cell)
            elif ch == '-':
                pass
            elif ch == '.':
                snow.add(cell)
            elif ch in '1234567':
                stacks[cell] = stack_from_digit(int(ch))
            elif ch == 'p':
                agents.append(cell)
            elif ch == 'P':
                agents.append(cell)
                snow.add(cell)
            else:
                raise LevelParseError(f"Unknown character {ch!r} at row {r}, column {c}")
            on_border = r in (0, rows - 1) or c in (0, cols - 1)
            if on_border and ch != '#':
                raise LevelParseError(f"Border cell ({r}, {c}) must be a wall")

    if not agents:
        raise LevelParseError("Level has no agent")
    if len(agents) > 1:
        raise LevelParseError("Level has more than one agent")
    balls = sum(len(stack) for stack in stacks.values())
    if balls % 3 != 0:
        raise LevelParseError(f"Ball count {balls} is not divisible by 3")

    return Level(
        game=Game.SNOWMAN, rows=rows, cols=cols, walls=frozenset(walls),
        agent=agents[0], stacks=tuple(sorted(stacks.items())),
        snow=frozenset(snow), name=name
    )


def parse_sokoban_xsb(text: str, name: str = "") -> Level:
    """
    Parse a level in XSB notation.

    Rows are padded to equal width. Everything the agent cannot reach by
    walking (ignoring boxes) becomes wall.
    """
    lines = [line for line in _clean_lines(text) if not line.lstrip().startswith(';')]
    if not lines:
        raise LevelParseError("Empty level")
    cols = max(len(line) for line in lines)
    lines = [line.ljust(cols) for line in lines]
    rows = len(lines)

    open_cells, boxes, goals, agents = set(), set(), set(), []
    for r, line in enumerate(lines):
        for c, ch in enumerate(line):
            cell = (r, c)
            if ch == '#':
                continue
            if ch not in ' -_@+$*.':
                raise LevelParseError(f"Unknown character {ch!r} at row {r}, column {c}")
            open_cells.add(cell)
            if ch in '@+':
                agents.append(cell)
            if ch in '$*':
                boxes.add(cell)
            if ch in '+*.':
                goals.add(cell)

    if not agents:
        raise LevelParseError("Level has no agent")
    if len(agents) > 1:
        raise LevelParseError("Level has more than one agent")
    if len(boxes) > len(goals):
        raise LevelParseError(f"{len(boxes)} boxes but only {len(goals)} goals")

    inside = {agents[0]}
    queue = deque([agents[0]])
    while queue:
        r, c = queue.popleft()
        if r in (0, rows - 1) or c in (0, cols - 1):
            raise LevelParseError("Level is not enclosed by walls")
        for d in Direction:
            nxt = d.apply((r, c))
            if nxt in open_cells and nxt not in inside:
                inside.add(nxt)
                queue.append(nxt)
    stray = (boxes | goals) - inside
    if stray:
        raise LevelParseError(f"Boxes or goals outside the playable area: {sorted(stray)}")

    walls = frozenset(
        (r, c) for r in range(rows) for c in range(cols) if (r, c) not in inside
    )
    return Level(
        game=Game.SOKOBAN, rows=rows, cols=cols, walls=walls, agent=agents[0],
        stacks=tuple((cell, BOX) for cell in sorted(boxes)),
        goals=frozenset(goals), name=name
    )


def render(level: Level, state=None) -> str:
    """Text of a level (or of ``state`` on that level) in its own notation."""
    agent = state.agent if state is not None else level.agent
    snow = state.snow if state is not None else level.snow
    stacks = state.stack_map if state is not None else level.stack_map
    lines = []
    for r in range(level.rows):
        row = []
        for c in range(level.cols):
            cell = (r, c)
            if cell in level.walls:
                row.append('#')
            elif level.game is Game.SNOWMAN:
                if cell == agent:
                    row.append('P' if cell in snow else 'p')
                elif cell in stacks:
                    row.append(str(stack_digit(stacks[cell])))
                else:
                    row.append('.' if cell in snow else '-')
            else:
                goal = cell in level.goals
                if cell == agent:
                    row.append('+' if goal else '@')
                elif cell in stacks:
                    row.append('*' if goal else '$')
                else:
                    row.append('.' if goal else '-')
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def grid_graph(level: Level) -> Graph:
    """One vertex per floor cell, edges between orthogonally adjacent floor cells."""
    return Graph.grid(level.floor)


def infer_game(path: Union[str, Path]) -> Game:
    if Path(path).suffix.lower() in ('.xsb', '.sok'):
        return Game.SOKOBAN
    return Game.SNOWMAN


def parse_level(text: str, game: Game, name: str = "") -> Level:
    if game is Game.SOKOBAN:
        return parse_sokoban_xsb(text, name)
    return parse_snowman(text, name)


def load_level(path: Union[str, Path], game: Optional[Game] = None) -> Level:
    path = Path(path)
    game = game or infer_game(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise LevelParseError(f"Cannot read level {path}: {e}")
    logging.info(f"Loading {game.value} level from {path}")
    return parse_level(text, game, name=path.stem)


def iter_level_files(directory: Union[str, Path]) -> Iterator[Path]:
    for path in sorted(Path(directory).iterdir()):
        if path.is_file() and path.suffix.lower() in ('.txt', '.lvl', '.xsb', '.sok'):
            yield path
