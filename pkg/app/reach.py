"""
Reachability encodings over a (possibly gated) graph.

Each encoder appends clauses to a caller-owned Formula and returns a
ReachFragment naming one reach literal per vertex. The source is either a
fixed vertex or a map from vertex to literal (exactly one of which the
caller makes true, e.g. the agent position at some timestep). A gate maps
vertices to "free" literals; missing vertices are always free.
"""
from dataclasses import dataclass, field
from itertools import combinations
import logging
from typing import Dict, List, Mapping, Optional, Union

from app.cnf import Const, Formula, Literal, neg
from app.exceptions import ContractError
from app.graph import Graph, bfs_reachable

Roots = Union[int, Mapping[int, Literal]]


@dataclass
class ReachFragment:
    """Output of one reachability encoder call."""
    encoding: str
    tag: str
    reach: Dict[int, Literal]
    aux: List[int] = field(default_factory=list)
    variables: int = 0
    clauses: int = 0

    def __str__(self) -> str:
        return f"{self.encoding}[{self.tag}] vars={self.variables} clauses={self.clauses}"


def _name(kind: str, tag: str, **fields) -> str:
    body = ",".join(f"{key}={value}" for key, value in fields.items())
    if tag:
        body = f"{body},{tag}" if body else tag
    return f"{kind}[{body}]"


def _as_literals(graph: Graph, roots: Optional[Roots]) -> Dict[int, Literal]:
    if roots is None:
        return {}
    if isinstance(roots, int):
        if not 0 <= roots < graph.n:
            raise ContractError(f"Vertex {roots} is not in the graph")
        return {roots: Const.TRUE}
    return {v: lit for v, lit in roots.items() if lit is not Const.FALSE}


def _components(graph: Graph) -> Dict[int, frozenset]:
    component = {}
    for v in range(graph.n):
        if v not in component:
            members = frozenset(bfs_reachable(graph, v))
            for u in members:
                component[u] = members
    return component


class ReachEncoder:
    """Base class for all reachability encoders."""
    name = "reach"

    def encode(self, formula: Formula, graph: Graph, source: Roots,
               gate: Optional[Mapping[int, Literal]] = None, tag: str = "",
               target: Optional[Roots] = None, active: Literal = Const.TRUE) -> ReachFragment:
        roots = _as_literals(graph, source)
        if not roots:
            raise ContractError("Reachability needs a source")
        free = dict(gate or {})
        if isinstance(source, int):
            free[source] = Const.TRUE
        targets = _as_literals(graph, target)
        vars_before, clauses_before = formula.stats()
        fragment = self._encode(formula, graph, roots, free, tag, targets, active)
        vars_after, clauses_after = formula.stats()
        fragment.variables = vars_after - vars_before
        fragment.clauses = clauses_after - clauses_before
        logging.debug(f"Encoded reachability fragment {fragment}")
        return fragment

    def _encode(self, formula, graph, roots, free, tag, targets, active) -> ReachFragment:
        raise NotImplementedError

    @staticmethod
    def _free(free: Mapping[int, Literal], v: int) -> Literal:
        return free.get(v, Const.TRUE)

    def __str__(self) -> str:
        return self.name


class DagEncoder(ReachEncoder):
    """
    Justify each reachable vertex by a selected incoming edge from a
    reachable vertex, with a strict partial order forbidding cycles.
    Undirected graphs are symmetrized.
    """
    name = "dag"

    def _encode(self, formula, graph, roots, free, tag, targets, active):
        graph = graph.symmetrized() if not graph.directed else graph
        component = _components(graph)
        reach = {v: formula.fresh_var(_name('r', tag, v=v)) for v in range(graph.n)}
        aux: List[int] = []

        order: Dict[tuple, int] = {}
        for v in range(graph.n):
            for w in sorted(component[v]):
                if w != v:
                    order[(v, w)] = formula.fresh_var(_name('ord', tag, u=v, v=w))
        aux.extend(order.values())

        def before(u: int, w: int) -> Literal:
            return order.get((u, w), Const.FALSE)

        select = {}
        for u, v in graph.arcs():
            select[(u, v)] = formula.fresh_var(_name('sel', tag, u=u, v=v))
        aux.extend(select.values())

        for v in range(graph.n):
            root = roots.get(v, Const.FALSE)
            formula.add_implies([root], [reach[v]])
            formula.add_implies([root], [self._free(free, v)])
            formula.add_implies([reach[v]], [self._free(free, v)])
            incoming = [select[(u, v)] for u in graph.predecessors(v)]
            formula.add_clause([neg(reach[v]), root] + incoming)

        for (u, v), e in select.items():
            formula.add_implies([e], [reach[u]])
            formula.add_implies([e], [before(u, v)])
            formula.add_implies([e], [self._free(free, v)])
            formula.add_implies([e], [neg(before(v, u))])
            for w in sorted(component[v]):
                if w not in (u, v):
                    formula.add_implies([e, before(v, w)], [before(u, w)])

        for v, lit in targets.items():
            formula.add_implies([active, lit], [reach[v]])
        return ReachFragment(self.name, tag, reach, aux)


class TreeEncoder(ReachEncoder):
    """
    Spanning tree rooted at the source covering every reachable vertex.

    In every model r_v holds exactly for the vertices connected to the
    source through free vertices. t[u,v] means u is an ancestor of v.
    """
    name = "tree"

    def _encode(self, formula, graph, roots, free, tag, targets, active):
        if graph.directed:
            raise ContractError("Spanning tree encoding needs an undirected graph")
        component = _components(graph)
        reach = {v: formula.fresh_var(_name('r', tag, v=v)) for v in range(graph.n)}
        path: Dict[tuple, int] = {}
        for v in range(graph.n):
            for w in sorted(component[v]):
                if w != v:
                    path[(v, w)] = formula.fresh_var(_name('tree', tag, u=v, v=w))

        def t(u: int, w: int) -> Literal:
            return path.get((u, w), Const.FALSE)

        for v in range(graph.n):
            root = roots.get(v, Const.FALSE)
            formula.add_implies([root], [reach[v]])
            formula.add_implies([root], [self._free(free, v)])
            formula.add_implies([reach[v]], [self._free(free, v)])
            parents = [t(u, v) for u in graph.neighbours(v)]
            formula.add_clause([neg(reach[v]), root] + parents)
            formula.at_most_one(parents)
            for u in graph.neighbours(v):
                formula.add_implies([root], [neg(t(u, v))])
                formula.add_implies([root, self._free(free, u)], [t(v, u)])

        for v, w in path:
            formula.add_implies([path[(v, w)]], [self._free(free, w)])

        for v, v2 in graph.arcs():
            formula.add_implies([reach[v], self._free(free, v2)], [reach[v2]])
            formula.add_implies([t(v, v2)], [reach[v]])
            formula.add_implies([t(v2, v)], [reach[v]])
            for v3 in sorted(component[v]):
                if v3 == v2:
                    continue
                formula.add_implies([t(v, v2), t(v2, v3)], [t(v, v3)])
                formula.add_implies([t(v, v2), t(v2, v3)], [neg(t(v3, v))])

        for v, lit in targets.items():
            formula.add_implies([active, lit], [reach[v]])
        return ReachFragment(self.name, tag, reach, list(path.values()))


class PathEncoder(ReachEncoder):
    """
    Grid path from source to target built from per-cell membership.

    Source and target have one path neighbour each, interior path cells
    exactly two. All clauses are released when ``active`` is false.
    Unrelated cycles may appear in models; satisfiability is unaffected.
    """
    name = "path"

    def _encode(self, formula, graph, roots, free, tag, targets, active):
        if not graph.is_grid:
            raise ContractError("Path encoding needs a grid graph")
        if not targets:
            raise ContractError("Path encoding needs a target")
        member = {v: formula.fresh_var(_name('path', tag, v=v)) for v in range(graph.n)}
        off = neg(active)

        def clause(lits: List[Literal]) -> None:
            formula.add_clause([off] + lits)

        for v in range(graph.n):
            root = roots.get(v, Const.FALSE)
            goal = targets.get(v, Const.FALSE)
            clause([neg(root), member[v]])
            clause([neg(goal), member[v]])
            clause([neg(member[v]), self._free(free, v)])
            near = [member[u] for u in graph.neighbours(v)]
            self._exactly(clause, [root, neg(goal)], near, 1)
            self._exactly(clause, [goal, neg(root)], near, 1)
            self._exactly(clause, [member[v], neg(root), neg(goal)], near, 2)
        return ReachFragment(self.name, tag, member, [])

    @staticmethod
    def _exactly(clause, guard: List[Literal], lits: List[Literal], k: int) -> None:
        """guard -> exactly k of lits, by direct subset clauses (at most four neighbours)."""
        unless = [neg(g) for g in guard]
        n = len(lits)
        if n < k:
            clause(unless)
            return
        for subset in combinations(lits, n - k + 1):
            clause(unless + list(subset))
        for subset in combinations(lits, k + 1):
            clause(unless + [neg(lit) for lit in subset])


class ReachEncoderFactory:
    """Factory for creating reachability encoders by name."""
    _encoders = {
        'path': PathEncoder,
        'dag': DagEncoder,
        'tree': TreeEncoder,
    }

    @classmethod
    def create_encoder(cls, name: str) -> ReachEncoder:
        encoder_class = cls._encoders.get(name.lower())
        if not encoder_class:
            raise ValueError(f"Unknown reachability encoding: {name}")
        return encoder_class()

    @classmethod
    def names(cls) -> List[str]:
        return list(cls._encoders)


def encode_dag(formula: Formula, graph: Graph, source: Roots,
               gate: Optional[Mapping[int, Literal]] = None, tag: str = "") -> ReachFragment:
    return DagEncoder().encode(formula, graph, source, gate, tag)


def encode_spanning_tree(formula: Formula, graph: Graph, source: Roots,
                         gate: Optional[Mapping[int, Literal]] = None,
                         tag: str = "") -> ReachFragment:
    return TreeEncoder().encode(formula, graph, source, gate, tag)


def encode_path(formula: Formula, graph: Graph, source: Roots, target: Roots,
                gate: Optional[Mapping[int, Literal]] = None, tag: str = "",
                active: Literal = Const.TRUE) -> ReachFragment:
    return PathEncoder().encode(formula, graph, source, gate, tag, target, active)
