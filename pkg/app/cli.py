import argparse
import logging
from pathlib import Path
import sys
from typing import List, Optional

from colorama import init, Fore

from app.bench import records_frame, run_bench, save_report, summarize
from app.cnf import to_dimacs
from app.encoder import EncodingConfig, Mode, encode
from app.exceptions import PlannerError
from app.game import is_goal, run_plan
from app.input_validators import InputValidator
from app.level import Game, load_level
from app.observers import ConsoleObserver, LoggingObserver
from app.plan_io import parse_lurd
from app.planner import Planner
from app.planner_config import BACKENDS, MODES, REACH_ENCODINGS, PlannerConfig, configure_logging
from app.run_record import read_records

# Initialize colorama
init(autoreset=True)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BOUNDED = 2


def _error(message: str) -> None:
    print(Fore.RED + f"Error: {message}", file=sys.stderr)


def _config(args: argparse.Namespace) -> PlannerConfig:
    """Flags override environment variables, which override defaults."""
    timeout = getattr(args, 'timeout', None)
    if timeout is not None:
        timeout = InputValidator.validate_positive(timeout, 'timeout')
    config = PlannerConfig(
        backend=getattr(args, 'backend', None),
        solver_cmd=getattr(args, 'solver_cmd', None),
        timeout=timeout,
        total_timeout=timeout,
        seed=getattr(args, 'seed', None),
        workers=getattr(args, 'workers', None),
        reach=getattr(args, 'reach', None) if isinstance(getattr(args, 'reach', None), str) else None,
        descend_reach=getattr(args, 'descend_reach', None),
        mode=getattr(args, 'mode', None) if getattr(args, 'command', '') == 'solve' else None,
        log_level='DEBUG' if getattr(args, 'verbose', False) else None,
    )
    config.validate()
    configure_logging(config)
    return config


def _game(args: argparse.Namespace) -> Optional[Game]:
    return Game(args.game) if getattr(args, 'game', None) else None


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        config = _config(args)
        level = load_level(args.path, _game(args))
        planner = Planner(config)
    except PlannerError as e:
        _error(str(e))
        return EXIT_ERROR
    planner.add_observer(LoggingObserver())
    if args.verbose:
        planner.add_observer(ConsoleObserver(sys.stderr))

    record = planner.run(level, instance=Path(args.path).name)
    if args.save:
        planner.save_record(record)
    if args.emit in ('lurd', 'both') and record.lurd is not None:
        print(record.lurd)
    if args.emit in ('record', 'both'):
        print(record.to_json())

    if record.status == 'error':
        _error(record.error)
        return EXIT_ERROR
    if record.solved:
        print(Fore.GREEN + f"{record}", file=sys.stderr)
        return EXIT_OK
    print(Fore.YELLOW + f"{record}", file=sys.stderr)
    return EXIT_BOUNDED


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        config = _config(args)
        reaches = [InputValidator.validate_choice(r, REACH_ENCODINGS, 'reach')
                   for r in (args.reach or REACH_ENCODINGS)]
        records = run_bench(args.directory, config, reaches)
    except (PlannerError, OSError) as e:
        _error(str(e))
        return EXIT_ERROR

    if args.save:
        planner = Planner(config)
        for record in records:
            planner.save_record(record)
    summary = summarize(records_frame(records), config.total_timeout)
    if summary.empty:
        print(Fore.YELLOW + "No instances found, PAR-2 = 0")
    else:
        print(summary.to_string(index=False))
    if args.out:
        save_report(summary, args.out)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        level = load_level(args.path, _game(args))
        annotated = parse_lurd(InputValidator.validate_lurd(args.lurd))
    except PlannerError as e:
        _error(str(e))
        return EXIT_ERROR

    run = run_plan(level, [d for d, _ in annotated])
    if not run.ok:
        _error(f"move {run.rejected_at} is rejected")
        return EXIT_ERROR
    mismatch = next(
        (i for i, ((_, upper), kind) in enumerate(zip(annotated, run.kinds))
         if upper != kind.is_object_action),
        None
    )
    goal = is_goal(level, run.state)
    print(f"goal reached: {'yes' if goal else 'no'}")
    print(f"moves: {len(run.kinds)}")
    print(f"object actions: {run.object_actions}")
    if mismatch is not None:
        _error(f"move {mismatch} is {run.kinds[mismatch].value} but the case says otherwise")
        return EXIT_ERROR
    if not goal:
        _error("goal not reached")
        return EXIT_ERROR
    print(Fore.GREEN + "Solution is valid")
    return EXIT_OK


def cmd_encode(args: argparse.Namespace) -> int:
    try:
        config = _config(args)
        level = load_level(args.path, _game(args))
        encoding = encode(level, EncodingConfig(
            Mode(args.mode), args.horizon, reach=args.reach or config.reach,
            invariants=config.invariants
        ))
    except (PlannerError, ValueError) as e:
        _error(str(e))
        return EXIT_ERROR
    variables, clauses = encoding.stats()
    text = to_dimacs(encoding.formula)
    if args.out:
        Path(args.out).write_text(text, encoding='utf-8')
        print(f"variables: {variables} clauses: {clauses}")
    else:
        sys.stdout.write(text)
        print(f"variables: {variables} clauses: {clauses}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        config = PlannerConfig()
        records = read_records(args.records or config.records_file)
    except PlannerError as e:
        _error(str(e))
        return EXIT_ERROR
    if not records:
        print(Fore.YELLOW + "No run records")
        return EXIT_OK
    frame = records_frame(records)[['instance', 'reach', 'lb', 'ub', 'status']]
    print(frame.to_string(index=False))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='snowplan', description='SAT planner for Snowman and Sokoban')
    sub = parser.add_subparsers(dest='command', required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument('--game', choices=[g.value for g in Game])
        p.add_argument('--timeout', type=float)
        p.add_argument('--seed', type=int)
        p.add_argument('--backend', choices=BACKENDS)
        p.add_argument('--solver-cmd', dest='solver_cmd')
        p.add_argument('--verbose', action='store_true')

    solve_p = sub.add_parser('solve', help='Solve one level')
    solve_p.add_argument('path')
    common(solve_p)
    solve_p.add_argument('--mode', choices=MODES)
    solve_p.add_argument('--reach', choices=REACH_ENCODINGS)
    solve_p.add_argument('--descend-reach', dest='descend_reach', choices=REACH_ENCODINGS)
    solve_p.add_argument('--emit', choices=('lurd', 'record', 'both'), default='both')
    solve_p.add_argument('--save', action='store_true', help='Append the run record to the records file')
    solve_p.set_defaults(handler=cmd_solve)

    bench_p = sub.add_parser('bench', help='Benchmark every level in a directory')
    bench_p.add_argument('directory')
    common(bench_p)
    bench_p.add_argument('--reach', action='append', help='Repeat to pick several encodings')
    bench_p.add_argument('--descend-reach', dest='descend_reach', choices=REACH_ENCODINGS)
    bench_p.add_argument('--workers', type=int)
    bench_p.add_argument('--out', help='CSV file for the summary')
    bench_p.add_argument('--save', action='store_true')
    bench_p.set_defaults(handler=cmd_bench)

    validate_p = sub.add_parser('validate', help='Replay a LURD solution')
    validate_p.add_argument('path')
    validate_p.add_argument('lurd')
    validate_p.add_argument('--game', choices=[g.value for g in Game])
    validate_p.set_defaults(handler=cmd_validate)

    encode_p = sub.add_parser('encode', help='Write the CNF for one horizon')
    encode_p.add_argument('path')
    common(encode_p)
    encode_p.add_argument('--mode', choices=[m.value for m in Mode], default='collapsed')
    encode_p.add_argument('--horizon', type=int, required=True)
    encode_p.add_argument('--reach', choices=REACH_ENCODINGS)
    encode_p.add_argument('--out')
    encode_p.set_defaults(handler=cmd_encode)

    report_p = sub.add_parser('report', help='Tabulate saved run records')
    report_p.add_argument('records', nargs='?')
    report_p.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Command-line interface for the planner.
    Exit status 0 on an optimal or valid result, 2 when only bounds are known, 1 on error.
    """
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        print(Fore.RED + "\nInterrupted", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        print(Fore.RED + f"Fatal error: {e}", file=sys.stderr)
        logging.error(f"Fatal error in command {args.command}: {e}")
        raise
