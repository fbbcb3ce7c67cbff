import pytest

from app.exceptions import ContractError
from app.graph import Graph, bfs_reachable


def test_grid_graph_edges():
    graph = Graph.grid([(0, 0), (0, 1), (0, 2), (1, 1)])
    assert graph.is_grid
    middle = graph.vertex((0, 1))
    assert len(graph.neighbours(middle)) == 3
    assert graph.cell(middle) == (0, 1)


def test_grid_has_at_most_four_neighbours():
    cells = [(r, c) for r in range(3) for c in range(3)]
    graph = Graph.grid(cells)
    assert max(len(graph.neighbours(v)) for v in range(graph.n)) == 4


@pytest.mark.parametrize("edges, message", [
    ([(0, 0)], "Self-loop"),
    ([(0, 5)], "unknown vertex"),
    ([(0, 1), (1, 0)], "Duplicate"),
])
def test_invalid_edges(edges, message):
    with pytest.raises(ContractError, match=message):
        Graph(2, edges)


def test_directed_edges_both_ways_allowed():
    graph = Graph(2, [(0, 1), (1, 0)], directed=True)
    assert graph.successors(0) == [1]
    assert graph.predecessors(0) == [1]


def test_cells_must_match_vertices():
    with pytest.raises(ContractError, match="one cell per vertex"):
        Graph(2, [], cells=[(0, 0)])


def test_cell_without_grid():
    with pytest.raises(ContractError):
        Graph(1).cell(0)


def test_symmetrized_has_both_arcs():
    directed = Graph(3, [(0, 1), (1, 2)]).symmetrized()
    assert directed.directed
    assert sorted(directed.edges) == [(0, 1), (1, 0), (1, 2), (2, 1)]


def test_bfs_isolated_source():
    assert bfs_reachable(Graph(3), 1) == {1}


def test_bfs_corridor():
    graph = Graph.grid([(0, 0), (0, 1), (0, 2)])
    assert bfs_reachable(graph, 0) == {0, 1, 2}


def test_bfs_respects_free_set():
    graph = Graph.grid([(0, 0), (0, 1), (0, 2)])
    assert bfs_reachable(graph, 0, free={0, 2}) == {0}


def test_bfs_directed():
    graph = Graph(3, [(0, 1), (2, 1)], directed=True)
    assert bfs_reachable(graph, 0) == {0, 1}


def test_bfs_source_must_be_free():
    with pytest.raises(ContractError, match="not free"):
        bfs_reachable(Graph(2, [(0, 1)]), 0, free={1})
