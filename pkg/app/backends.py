"""SAT backends: an in-process pysat solver and an external solver process."""
from dataclasses import dataclass, field
from enum import Enum
import logging
import os
import shlex
import subprocess
import tempfile
import threading
import time
from typing import Dict, List, Optional

from pysat.solvers import Solver, SolverNames

from app.cnf import Formula
from app.exceptions import BackendError


class SolveStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass
class SolveOutcome:
    """Result of one solve call; the model is present iff the status is SAT."""
    status: SolveStatus
    model: Optional[Dict[int, bool]] = None
    elapsed: float = 0.0

    @property
    def is_sat(self) -> bool:
        return self.status is SolveStatus.SAT

    def value(self, var: int) -> bool:
        if self.model is None:
            raise BackendError("No model available")
        return self.model.get(var, False)

    def __str__(self) -> str:
        return f"{self.status.value} in {self.elapsed:.3f}s"


class SolverBackend:
    """Base class for all backends."""
    name = "backend"

    def run(self, formula: Formula, budget: float) -> SolveOutcome:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.name


class PysatBackend(SolverBackend):
    """
    In-process solver from python-sat, stopped by a timer on budget exhaustion.

    python-sat exposes no seed option, so runs are reproducible through the
    fixed clause order alone.
    """

    def __init__(self, solver_name: str = 'glucose4'):
        known = {alias for aliases in vars(SolverNames).values()
                 if isinstance(aliases, tuple) for alias in aliases}
        if known and solver_name not in known:
            raise BackendError(f"Unknown pysat solver: {solver_name}")
        self.solver_name = solver_name
        self.name = f"pysat:{solver_name}"

    def run(self, formula: Formula, budget: float) -> SolveOutcome:
        start = time.perf_counter()
        try:
            with Solver(name=self.solver_name, bootstrap_with=formula.clauses) as solver:
                timer = threading.Timer(budget, solver.interrupt)
                timer.start()
                try:
                    result = solver.solve_limited(expect_interrupt=True)
                finally:
                    timer.cancel()
                elapsed = time.perf_counter() - start
                if result is None:
                    return SolveOutcome(SolveStatus.UNKNOWN, elapsed=elapsed)
                if not result:
                    return SolveOutcome(SolveStatus.UNSAT, elapsed=elapsed)
                model = {abs(lit): lit > 0 for lit in solver.get_model() or []}
                return SolveOutcome(SolveStatus.SAT, model=model, elapsed=elapsed)
        except (RuntimeError, NotImplementedError) as e:
            logging.error(f"pysat backend failed: {e}")
            raise BackendError(f"pysat backend failed: {e}")


class ExternalBackend(SolverBackend):
    """
    Runs a solver binary on a temporary DIMACS file.

    The command template may use the placeholders {input}, {seed} and
    {timeout}. Output follows the competition format: an "s" status line
    and "v" value lines. Exit codes 10 and 20 must agree with the status line;
    20 alone is enough for UNSAT.
    """

    EXIT_CODES = {10: SolveStatus.SAT, 20: SolveStatus.UNSAT}

    def __init__(self, command: str, seed: int = 0):
        if '{input}' not in command:
            raise BackendError("Solver command needs an {input} placeholder")
        self.command = command
        self.seed = seed
        self.name = f"external:{shlex.split(command)[0]}"

    def build_command(self, path: str, budget: float) -> List[str]:
        return shlex.split(self.command.format(
            input=path, seed=self.seed, timeout=max(1, int(budget))
        ))

    def run(self, formula: Formula, budget: float) -> SolveOutcome:
        start = time.perf_counter()
        fd, path = tempfile.mkstemp(suffix='.cnf', prefix='snowplan_')
        try:
            with os.fdopen(fd, 'w') as handle:
                handle.write(formula.to_dimacs())
            args = self.build_command(path, budget)
            logging.debug(f"Running solver: {' '.join(args)}")
            try:
                proc = subprocess.run(args, capture_output=True, text=True, timeout=budget)
            except subprocess.TimeoutExpired:
                return SolveOutcome(SolveStatus.UNKNOWN, elapsed=time.perf_counter() - start)
            except (FileNotFoundError, PermissionError) as e:
                raise BackendError(f"Cannot start solver: {e}")
            outcome = self.parse_output(proc.stdout, proc.returncode)
            outcome.elapsed = time.perf_counter() - start
            return outcome
        finally:
            if os.path.exists(path):
                os.remove(path)

    @staticmethod
    def parse_output(stdout: str, returncode: int = 0) -> SolveOutcome:
        status = None
        model: Dict[int, bool] = {}
        for line in stdout.splitlines():
            if line.startswith('s '):
                text = line[2:].strip()
                if text == 'SATISFIABLE':
                    status = SolveStatus.SAT
                elif text == 'UNSATISFIABLE':
                    status = SolveStatus.UNSAT
                elif text == 'UNKNOWN':
                    status = SolveStatus.UNKNOWN
                else:
                    raise BackendError(f"Unrecognised status line: {line}")
            elif line.startswith('v '):
                for token in line[2:].split():
                    lit = int(token)
                    if lit != 0:
                        model[abs(lit)] = lit > 0
        by_exit = ExternalBackend.EXIT_CODES.get(returncode)
        if status is None and by_exit is SolveStatus.UNSAT:
            status = by_exit
        if status is None:
            raise BackendError(f"Solver produced no status line (exit code {returncode})")
        if by_exit is not None and by_exit is not status:
            raise BackendError(
                f"Exit code {returncode} disagrees with status {status.value}"
            )
        if status is SolveStatus.SAT:
            return SolveOutcome(status, model=model)
        return SolveOutcome(status)


class BackendFactory:
    """Factory for creating backends from configuration."""
    _backends = {
        'pysat': PysatBackend,
        'external': ExternalBackend,
    }

    @classmethod
    def create_backend(cls, config) -> SolverBackend:
        backend_class = cls._backends.get(config.backend.lower())
        if not backend_class:
            raise ValueError(f"Unknown backend: {config.backend}")
        if backend_class is ExternalBackend:
            return ExternalBackend(config.solver_cmd, seed=config.seed)
        return PysatBackend(config.pysat_solver)


def solve(formula: Formula, budget: float, backend: Optional[SolverBackend] = None) -> SolveOutcome:
    """
    Solve ``formula`` within ``budget`` seconds.

    A SAT model is completed over every allocated variable and checked
    against every clause before it is returned.
    """
    backend = backend or PysatBackend()
    if formula.has_empty_clause:
        return SolveOutcome(SolveStatus.UNSAT)
    if budget <= 0:
        return SolveOutcome(SolveStatus.UNKNOWN)
    outcome = backend.run(formula, budget)
    if outcome.status is SolveStatus.SAT:
        model = outcome.model or {}
        full = {var: model.get(var, False) for var in range(1, formula.num_vars + 1)}
        violated = formula.first_violated(full)
        if violated is not None:
            logging.error(f"{backend} returned a model violating clause {violated}")
            raise BackendError(f"Model violates clause {violated}")
        outcome.model = full
    return outcome
