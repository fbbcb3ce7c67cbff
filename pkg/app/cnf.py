"""CNF construction: variable pool, named registry, cardinality helpers and DIMACS I/O."""
from enum import Enum
from itertools import combinations
import logging
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from pysat.card import CardEnc, EncType
from pysat.formula import IDPool

from app.exceptions import ContractError, RegistryError, ValidationError


class Const(Enum):
    """Literal with a fixed truth value, folded away when a clause is added."""
    TRUE = True
    FALSE = False

    def __neg__(self) -> 'Const':
        return Const.FALSE if self is Const.TRUE else Const.TRUE


Literal = Union[int, Const]


def neg(lit: Literal) -> Literal:
    return -lit


def var_name(kind: str, **fields) -> str:
    """Build a registry name such as ``r[cell=7,t=3]``."""
    if not fields:
        return kind
    body = ",".join(f"{key}={value}" for key, value in fields.items())
    return f"{kind}[{body}]"


def parse_name(name: str) -> Tuple[str, Dict[str, str]]:
    """Split a registry name back into its kind and fields."""
    if '[' not in name:
        return name, {}
    if not name.endswith(']'):
        raise RegistryError(f"Malformed variable name: {name}")
    kind, body = name[:-1].split('[', 1)
    fields = {}
    for part in body.split(','):
        if '=' not in part:
            raise RegistryError(f"Malformed variable name: {name}")
        key, value = part.split('=', 1)
        fields[key] = value
    return kind, fields


class Formula:
    """
    A CNF formula under construction.

    Variable ids come from a pysat ``IDPool`` and are dense from 1. Named
    variables are the pool's objects, so the registry stays injective and a
    model can be decoded back into actions and states. Auxiliary variables
    (cardinality counters) take anonymous ids from the same pool.
    """

    def __init__(self):
        self._pool = IDPool()
        self.clauses: List[List[int]] = []

    @property
    def num_vars(self) -> int:
        return self._pool.top

    @property
    def registry(self) -> Mapping[str, int]:
        return self._pool.obj2id

    def reserve(self, count: int) -> None:
        """Mark ids up to ``count`` as taken without naming them."""
        self._pool.top = max(self._pool.top, count)

    def fresh_var(self, name: str) -> int:
        if name in self._pool.obj2id:
            raise RegistryError(f"Variable already registered: {name}")
        return self._pool.id(name)

    def aux_var(self) -> int:
        return self._pool.id()

    def var(self, name: str) -> int:
        if name not in self._pool.obj2id:
            raise RegistryError(f"Unknown variable: {name}")
        return self._pool.obj2id[name]

    def lookup(self, name: str) -> Optional[int]:
        return self._pool.obj2id.get(name)

    def name_of(self, var: int) -> Optional[str]:
        return self._pool.id2obj.get(abs(var))

    def add_clause(self, literals: Iterable[Literal]) -> None:
        """
        Append a clause after folding constant literals.

        A clause holding Const.TRUE (or a literal and its negation) is dropped.
        Const.FALSE literals are removed; if nothing is left the empty clause
        is stored, which makes the formula unsatisfiable.
        """
        clause: List[int] = []
        seen = set()
        for lit in literals:
            if lit is Const.TRUE:
                return
            if lit is Const.FALSE:
                continue
            if lit == 0 or abs(lit) > self.num_vars:
                raise ContractError(f"Literal {lit} is not an allocated variable")
            if -lit in seen:
                return
            if lit not in seen:
                seen.add(lit)
                clause.append(lit)
        self.clauses.append(clause)

    def add_implies(self, antecedents: Sequence[Literal], consequents: Sequence[Literal]) -> None:
        """Add the clause (a1 and a2 ...) -> (c1 or c2 ...)."""
        self.add_clause([neg(a) for a in antecedents] + list(consequents))

    def define_or(self, name: str, literals: Sequence[Literal]) -> Literal:
        """Return a literal equivalent to the disjunction of ``literals``."""
        literals = [lit for lit in literals if lit is not Const.FALSE]
        if any(lit is Const.TRUE for lit in literals):
            return Const.TRUE
        if not literals:
            return Const.FALSE
        out = self.fresh_var(name)
        self.add_clause([-out] + literals)
        for lit in literals:
            self.add_clause([out, neg(lit)])
        return out

    def define_and(self, name: str, literals: Sequence[Literal]) -> Literal:
        """Return a literal equivalent to the conjunction of ``literals``."""
        return neg(self.define_or(name, [neg(lit) for lit in literals]))

    def add_equal(self, a: Literal, b: Literal) -> None:
        self.add_clause([neg(a), b])
        self.add_clause([a, neg(b)])

    def at_most_one(self, literals: Sequence[Literal]) -> None:
        for a, b in combinations(literals, 2):
            self.add_clause([neg(a), neg(b)])

    def exactly_one(self, literals: Sequence[Literal]) -> None:
        """One at-least-one clause plus the pairwise at-most-one clauses."""
        if not literals:
            raise ContractError("exactly_one needs at least one literal")
        self.add_clause(literals)
        self.at_most_one(literals)

    def at_most_k(self, literals: Sequence[Literal], k: int) -> None:
        """
        At most ``k`` of ``literals`` are true.

        k = 0 gives unit negations, k = 1 the pairwise encoding and larger
        bounds a sequential counter from pysat.
        """
        if k < 0:
            raise ContractError(f"Cardinality bound must not be negative, got {k}")
        free = []
        for lit in literals:
            if lit is Const.TRUE:
                k -= 1
            elif lit is not Const.FALSE:
                free.append(lit)
        if k < 0:
            self.add_clause([])
            return
        if k >= len(free):
            return
        if k == 0:
            for lit in free:
                self.add_clause([-lit])
            return
        if k == 1:
            self.at_most_one(free)
            return
        enc = CardEnc.atmost(lits=free, bound=k, vpool=self._pool,
                             encoding=EncType.seqcounter)
        for clause in enc.clauses:
            self.add_clause(clause)

    def at_least_k(self, literals: Sequence[Literal], k: int) -> None:
        """At least ``k`` of ``literals`` are true, as at-most on the negations."""
        if k < 0:
            raise ContractError(f"Cardinality bound must not be negative, got {k}")
        if k > len(literals):
            self.add_clause([])
            return
        self.at_most_k([neg(lit) for lit in literals], len(literals) - k)

    @property
    def has_empty_clause(self) -> bool:
        return any(not clause for clause in self.clauses)

    def stats(self) -> Tuple[int, int]:
        return self.num_vars, len(self.clauses)

    def first_violated(self, model: Dict[int, bool]) -> Optional[List[int]]:
        """Return the first clause the model falsifies, or None."""
        for clause in self.clauses:
            if not any(model.get(abs(lit), False) == (lit > 0) for lit in clause):
                return clause
        return None

    def evaluate(self, model: Dict[int, bool]) -> bool:
        return self.first_violated(model) is None

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for clause in self.clauses:
            lines.append(" ".join(str(lit) for lit in clause + [0]))
        return "\n".join(lines) + "\n"

    def __repr__(self) -> str:
        return f"Formula(vars={self.num_vars}, clauses={len(self.clauses)})"


def to_dimacs(formula: Formula) -> str:
    return formula.to_dimacs()


def parse_dimacs(text: str) -> Formula:
    """Read a DIMACS CNF text into an anonymous Formula."""
    formula = Formula()
    declared: Optional[Tuple[int, int]] = None
    current: List[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith('c') or line.startswith('%'):
            continue
        if line.startswith('p'):
            parts = line.split()
            if len(parts) != 4 or parts[1] != 'cnf':
                raise ValidationError(f"Malformed DIMACS header: {line}")
            declared = (int(parts[2]), int(parts[3]))
            formula.reserve(declared[0])
            continue
        if declared is None:
            raise ValidationError("DIMACS clause before header")
        for token in line.split():
            lit = int(token)
            if lit == 0:
                formula.clauses.append(current)
                current = []
            else:
                if abs(lit) > declared[0]:
                    raise ValidationError(f"Literal {lit} exceeds declared variable count")
                current.append(lit)
    if current:
        formula.clauses.append(current)
    if declared is None:
        raise ValidationError("Missing DIMACS header")
    if len(formula.clauses) != declared[1]:
        logging.warning(
            f"DIMACS header declares {declared[1]} clauses, found {len(formula.clauses)}"
        )
        raise ValidationError(
            f"DIMACS header declares {declared[1]} clauses, found {len(formula.clauses)}"
        )
    return formula
