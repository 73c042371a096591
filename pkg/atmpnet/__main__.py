"""CLI interface for atmpnet."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from .benchmark import METHODS, BenchmarkSuite, generate_report, run_benchmark, save_results
from .classical import BackupSpec, CoverSpec, backup_lscp, lscp, mclp, p_center, p_median
from .config import config
from .encoding import decode, encode, solve_lp
from .errors import (
    AtmpnetError,
    EncodingError,
    InfeasibleSolutionError,
    InstanceValidationError,
    SchemaError,
    ShapeError,
)
from .evaluator import check_feasible, evaluate
from .exact import solve
from .heuristic import FRONT_SEARCH, SearchParams, front_heuristic, local_search
from .instance import GEOMETRIES, generate, validate
from .pareto import GridSpec, front_exact, write_front_csv, write_front_solutions
from .scalarization import OBJECTIVES, EpsilonConstraint, Scalarization, parse_weights
from .schema import SCHEMA_VERSION, canonical_json, read_instance, read_solution, write_instance, write_solution

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_BAD_INPUT = 2
EXIT_BUDGET = 3

DEFAULT_LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    """Argument parser for every subcommand."""
    parser = argparse.ArgumentParser(
        prog="atmpnet",
        description="atmpnet: design personalised-medicine supply chains (waiting time, cost, coverage)",
        epilog=(
            f"Instance and solution files are canonical JSON, schema version {SCHEMA_VERSION}.\n\n"
            "exit codes:\n"
            f"  {EXIT_OK}  success\n"
            f"  {EXIT_INFEASIBLE}  infeasible: violations, or nothing meets the bounds\n"
            f"  {EXIT_BAD_INPUT}  bad input: unreadable file, schema error, bad flags or no command\n"
            f"  {EXIT_BUDGET}  budget exhausted: partial results written and flagged"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=config.LOG_LEVEL, help="Logging level (default from ATMPNET_LOG_LEVEL)")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", help="Instance file")
    common.add_argument("--seed", type=int, default=0, help="Random seed")
    common.add_argument("--out", help="Output path (stdout when omitted)")

    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    # Gen command
    gen_parser = subparsers.add_parser("gen", parents=[common], help="Generate a random instance")
    gen_parser.add_argument("--orders", type=int, required=True, help="Number of orders")
    gen_parser.add_argument("--locations", type=int, required=True, help="Number of candidate locations")
    gen_parser.add_argument("--modes", type=int, required=True, help="Number of manufacturing modes")
    gen_parser.add_argument("--geometry", default="unit-square", choices=GEOMETRIES, help="Travel geometry")
    gen_parser.add_argument("--travel", help="Travel matrix file for the matrix-supplied geometry")

    # Validate command
    subparsers.add_parser("validate", parents=[common], help="Check an instance file")

    # Eval command
    eval_parser = subparsers.add_parser("eval", parents=[common], help="Score a solution file")
    eval_parser.add_argument("--solution", required=True, help="Solution file")

    # Solve command
    solve_parser = subparsers.add_parser("solve", parents=[common], help="Solve a scalarized problem")
    solve_parser.add_argument("--method", default="exact", choices=("exact", "heuristic", "milp"))
    _add_scalarization_flags(solve_parser)
    _add_budget_flags(solve_parser)
    _add_search_flags(solve_parser)

    # Front command
    front_parser = subparsers.add_parser("front", parents=[common], help="Compute the Pareto front")
    front_parser.add_argument("--method", default="exact", choices=METHODS)
    front_parser.add_argument("--cost-levels", type=int, default=None, help="Epsilon levels per coverage floor")
    front_parser.add_argument("--no-refine", action="store_true", help="Skip the refinement sweep")
    front_parser.add_argument("--solutions", help="Solutions sidecar path (default derived from --out)")
    front_parser.add_argument("--workers", type=int, default=None, help="Threads over coverage floors")
    front_parser.add_argument("--paper-strict", action="store_true", help="Allow frozen orders without cryo")
    _add_budget_flags(front_parser)
    _add_search_flags(front_parser)

    # Baseline command
    baseline_parser = subparsers.add_parser("baseline", parents=[common], help="Run a classical location model")
    baseline_parser.add_argument("--model", required=True, choices=("lscp", "mclp", "pmedian", "pcenter", "backup"))
    baseline_parser.add_argument("--radius", type=float, default=0.0, help="Coverage (or primary) radius in hours")
    baseline_parser.add_argument("--backup-radius", type=float, help="Backup radius in hours")
    baseline_parser.add_argument("--p", type=int, default=1, help="Number of facilities")
    baseline_parser.add_argument("--demand-weights", help="Comma-separated weight per order (default 1)")

    # Export-lp command
    export_parser = subparsers.add_parser("export-lp", parents=[common], help="Write the linear program")
    export_parser.add_argument("--format", default="mps", choices=("mps", "lp"), help="Output format")
    _add_scalarization_flags(export_parser)

    # Benchmark command
    bench_parser = subparsers.add_parser("benchmark", parents=[common], help="Compare front methods")
    bench_parser.add_argument("--sizes", default="3x2x1,3x3x2", help="Comma-separated IxJxK sizes")
    bench_parser.add_argument("--seeds", type=int, default=5, help="Seeds per size, starting at --seed")
    bench_parser.add_argument("--methods", default=",".join(METHODS), help="Comma-separated methods")
    bench_parser.add_argument("--paper-strict", action="store_true", help="Allow frozen orders without cryo")
    bench_parser.add_argument("--timings", action="store_true", help="Record runtimes and a timestamp")
    bench_parser.add_argument("--report", help="Text report path")

    return parser


def _add_scalarization_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--weights", help="Weighted sum: coefficients a,b,c of (W, C, V), c <= 0")
    parser.add_argument("--primary", choices=OBJECTIVES, help="Epsilon constraint: objective to optimise")
    parser.add_argument("--waiting-cap", type=float, help="Epsilon bound W <= cap")
    parser.add_argument("--cost-cap", type=float, help="Epsilon bound C <= cap")
    parser.add_argument("--coverage-floor", type=int, help="Epsilon bound V >= floor")
    parser.add_argument("--paper-strict", action="store_true", help="Allow frozen orders without cryo")


def _add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--node-limit", type=int, default=None, help="Exact search node budget")
    parser.add_argument("--time-limit", type=float, default=None, help="Wall-clock budget in seconds")


def _add_search_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--starts", type=int, default=None, help="Local search starts")
    parser.add_argument("--max-no-improve", type=int, default=None, help="Failed kicks before a start stops")


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point; returns the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format=config.LOG_FORMAT or DEFAULT_LOG_FORMAT,
    )

    if not args.command:
        parser.print_help()
        return EXIT_BAD_INPUT

    handlers = {
        "gen": cmd_gen,
        "validate": cmd_validate,
        "eval": cmd_eval,
        "solve": cmd_solve,
        "front": cmd_front,
        "baseline": cmd_baseline,
        "export-lp": cmd_export_lp,
        "benchmark": cmd_benchmark,
    }
    try:
        config.validate()
        return handlers[args.command](args)
    except (SchemaError, InstanceValidationError, ShapeError, ValueError, OSError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (InfeasibleSolutionError, EncodingError) as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except AtmpnetError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


def _read(path: Optional[str], what: str = "--instance") -> bytes:
    if not path:
        raise ValueError(f"{what} is required")
    return Path(path).read_bytes()


def _emit(data, out: Optional[str]) -> None:
    """Write bytes or text to --out, or print to stdout."""
    text = data.decode() if isinstance(data, bytes) else data
    if out:
        Path(out).write_text(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _scalarization(args) -> Scalarization:
    epsilon_flags = [args.primary, args.waiting_cap, args.cost_cap, args.coverage_floor]
    if args.weights is not None:
        if any(flag is not None for flag in epsilon_flags):
            raise ValueError("--weights cannot be combined with epsilon flags")
        return parse_weights(args.weights)
    return EpsilonConstraint(
        primary=args.primary or "waiting_time",
        waiting_cap=args.waiting_cap,
        cost_cap=args.cost_cap,
        coverage_floor=args.coverage_floor or 0,
    )


def _search_params(args, defaults: SearchParams = SearchParams()) -> SearchParams:
    return SearchParams(
        starts=args.starts if args.starts is not None else defaults.starts,
        max_no_improve=args.max_no_improve if args.max_no_improve is not None else defaults.max_no_improve,
        seed=args.seed,
        max_evaluations=defaults.max_evaluations,
    )


def cmd_gen(args) -> int:
    """Handle gen command."""
    travel = None
    if args.travel:
        travel = json.loads(_read(args.travel, "--travel"))
    instance = generate(
        args.orders, args.locations, args.modes, seed=args.seed, geometry=args.geometry, travel=travel
    )
    _emit(write_instance(instance), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    """Handle validate command."""
    instance = read_instance(_read(args.instance), check=False)
    violations = validate(instance)
    if violations:
        for violation in violations:
            print(violation)
        return EXIT_INFEASIBLE
    n_i, n_j, n_k = instance.sizes
    print(f"valid instance: {n_i} orders, {n_j} locations, {n_k} modes")
    return EXIT_OK


def cmd_eval(args) -> int:
    """Handle eval command."""
    instance = read_instance(_read(args.instance))
    solution = read_solution(_read(args.solution, "--solution"), instance)
    violations = check_feasible(instance, solution)
    for violation in violations:
        print(violation, file=sys.stderr)
    if any(v.severity == "error" for v in violations):
        return EXIT_INFEASIBLE
    _emit(canonical_json(evaluate(instance, solution).to_dict()), args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    """Handle solve command."""
    instance = read_instance(_read(args.instance))
    scalarization = _scalarization(args)
    exhausted = False

    if args.method == "exact":
        result = solve(
            instance,
            scalarization,
            paper_strict=args.paper_strict,
            node_limit=args.node_limit,
            time_limit=args.time_limit,
        )
        solution, objective = result.solution, result.objective
        exhausted = result.stats.budget_exhausted
        print(canonical_json(result.stats.to_dict(timings=False)).decode(), file=sys.stderr)
    elif args.method == "heuristic":
        result = local_search(instance, scalarization, _search_params(args), paper_strict=args.paper_strict)
        solution, objective = result.solution, result.objective
    else:
        lp = solve_lp(encode(instance, scalarization, paper_strict=args.paper_strict), time_limit=args.time_limit)
        if lp.status == "infeasible":
            solution = objective = None
        elif lp.assignment is None:
            raise EncodingError(f"milp solver finished with status {lp.status}")
        else:
            solution = decode(instance, lp.assignment)
            objective = evaluate(instance, solution)
        exhausted = lp.status == "limit"

    if solution is None:
        print(f"no solution satisfies {scalarization.describe()}", file=sys.stderr)
        return EXIT_BUDGET if exhausted else EXIT_INFEASIBLE
    _emit(write_solution(solution, objective), args.out)
    if exhausted:
        print("budget exhausted: solution is not proven optimal", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_front(args) -> int:
    """Handle front command."""
    instance = read_instance(_read(args.instance))
    grid = GridSpec(
        cost_levels=args.cost_levels if args.cost_levels is not None else config.COST_LEVELS,
        refine=not args.no_refine,
    )
    if args.method == "exact":
        front = front_exact(
            instance,
            grid,
            paper_strict=args.paper_strict,
            node_limit=args.node_limit,
            time_limit=args.time_limit,
            workers=args.workers,
        )
    else:
        heuristic_grid = None if args.cost_levels is None and not args.no_refine else grid
        front = front_heuristic(
            instance,
            heuristic_grid,
            _search_params(args, FRONT_SEARCH),
            paper_strict=args.paper_strict,
            workers=args.workers,
            time_limit=args.time_limit,
        )

    _emit(write_front_csv(front), args.out)
    sidecar = args.solutions or (str(Path(args.out).with_suffix(".solutions.json")) if args.out else None)
    if sidecar:
        Path(sidecar).write_bytes(write_front_solutions(front))
    if front.approximate:
        print("budget exhausted: front is approximate", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_baseline(args) -> int:
    """Handle baseline command."""
    instance = read_instance(_read(args.instance))
    if args.model == "backup":
        if args.backup_radius is None:
            raise ValueError("--backup-radius is required for the backup model")
        result = backup_lscp(instance, BackupSpec(args.radius, args.backup_radius))
    else:
        weights = None
        if args.demand_weights:
            weights = tuple(float(w) for w in args.demand_weights.split(","))
        spec = CoverSpec(coverage_radius_hours=args.radius, p=args.p, demand_weights=weights)
        model = {"lscp": lscp, "mclp": mclp, "pmedian": p_median, "pcenter": p_center}[args.model]
        result = model(instance, spec)
    _emit(canonical_json(result.to_dict()), args.out)
    return EXIT_OK


def cmd_export_lp(args) -> int:
    """Handle export-lp command."""
    instance = read_instance(_read(args.instance))
    program = encode(instance, _scalarization(args), paper_strict=args.paper_strict)
    text = program.to_mps_text() if args.format == "mps" else program.to_lp_text()
    _emit(text, args.out)
    return EXIT_OK


def _parse_sizes(text: str):
    sizes = []
    for part in text.split(","):
        try:
            n_i, n_j, n_k = (int(v) for v in part.lower().split("x"))
        except ValueError:
            raise ValueError(f"size must look like 3x3x2, got {part!r}")
        sizes.append((n_i, n_j, n_k))
    return sizes


def cmd_benchmark(args) -> int:
    """Handle benchmark command."""
    methods = [m for m in args.methods.split(",") if m]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise ValueError(f"methods must be among {', '.join(METHODS)}")
    suite = BenchmarkSuite.seeded("cli", _parse_sizes(args.sizes), range(args.seed, args.seed + args.seeds))
    results = run_benchmark(suite, methods, paper_strict=args.paper_strict, timings=args.timings)
    if args.out:
        save_results(results, args.out)
    print(generate_report(results, args.report))
    failed = any("error" in r for r in results["case_results"])
    return EXIT_INFEASIBLE if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
