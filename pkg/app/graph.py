from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from app.exceptions import ContractError

Cell = Tuple[int, int]


@dataclass
class Graph:
    """
    Graph over vertices 0..n-1.

    Undirected graphs store each edge once as an unordered pair. Grid
    graphs carry the cell of every vertex, so each vertex has at most four
    neighbours.
    """
    n: int
    edges: List[Tuple[int, int]] = field(default_factory=list)
    directed: bool = False
    cells: Optional[List[Cell]] = None

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ContractError(f"Self-loop on vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ContractError(f"Edge ({u}, {v}) references an unknown vertex")
            key = (u, v) if self.directed else (min(u, v), max(u, v))
            if key in seen:
                raise ContractError(f"Duplicate edge ({u}, {v})")
            seen.add(key)
        if self.cells is not None and len(self.cells) != self.n:
            raise ContractError("Grid metadata must name one cell per vertex")
        self._succ: Dict[int, List[int]] = {v: [] for v in range(self.n)}
        self._pred: Dict[int, List[int]] = {v: [] for v in range(self.n)}
        for u, v in self.edges:
            self._succ[u].append(v)
            self._pred[v].append(u)
            if not self.directed:
                self._succ[v].append(u)
                self._pred[u].append(v)
        self._index = {cell: v for v, cell in enumerate(self.cells or [])}

    @property
    def is_grid(self) -> bool:
        return self.cells is not None

    def successors(self, v: int) -> List[int]:
        return self._succ[v]

    def predecessors(self, v: int) -> List[int]:
        return self._pred[v]

    def neighbours(self, v: int) -> List[int]:
        return sorted(set(self._succ[v]) | set(self._pred[v]))

    def arcs(self) -> List[Tuple[int, int]]:
        """Every edge direction as an ordered pair."""
        if self.directed:
            return list(self.edges)
        return [arc for u, v in self.edges for arc in ((u, v), (v, u))]

    def symmetrized(self) -> 'Graph':
        if self.directed:
            return self
        return Graph(self.n, self.arcs(), directed=True, cells=self.cells)

    def vertex(self, cell: Cell) -> int:
        return self._index[cell]

    def cell(self, v: int) -> Cell:
        if self.cells is None:
            raise ContractError("Graph has no grid metadata")
        return self.cells[v]

    @staticmethod
    def grid(cells: Iterable[Cell]) -> 'Graph':
        """Grid graph over the given cells with edges between orthogonal neighbours."""
        cells = sorted(set(cells))
        index = {cell: v for v, cell in enumerate(cells)}
        edges = []
        for (r, c), v in index.items():
            for other in ((r + 1, c), (r, c + 1)):
                if other in index:
                    edges.append((v, index[other]))
        return Graph(len(cells), edges, directed=False, cells=cells)


def bfs_reachable(graph: Graph, source: int, free: Optional[Set[int]] = None) -> Set[int]:
    """Vertices reachable from ``source`` through free vertices (all vertices if ``free`` is None)."""
    if free is not None and source not in free:
        raise ContractError(f"Source {source} is not free")
    seen = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in graph.successors(u):
            if v not in seen and (free is None or v in free):
                seen.add(v)
                queue.append(v)
    return seen
