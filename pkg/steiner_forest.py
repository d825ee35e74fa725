#!/usr/bin/env python3
"""
Steiner Forest approximation CLI

Main entry point for running the approximation pipeline on STP-F instances.
Subcommands:
  solve   run the pipeline and print the Report as JSON
  gen     write a random STP-F instance
  trace   dump the extended moat trace (or the chosen plan / collection)
  verify  re-check every ledger identity of the moat trace
  bench   run solve (and the exact oracle where in limits) over a directory
  exact   run the exact oracle

Configuration can be provided via YAML/TOML files (.steiner-forest.yaml or
.steiner-forest.toml) in the current directory or parent directories.
Machine output goes to stdout; log messages go to stderr.

Exit codes: 1 parse, validation or configuration error; 2 infeasible
instance; 3 oracle limits exceeded; 4 ledger violations found by verify.

Usage:
    python steiner_forest.py solve tests/data/matching_k10.stpf
    python steiner_forest.py verify tests/data/deactivation.stpf --epsilon 1/10
    python steiner_forest.py bench corpus/ --workers 4 --output summary.csv
"""
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, NoReturn, Optional

import click
from pydantic import ValidationError

from exceptions import (
    ConfigurationError,
    GenerationError,
    InfeasibleInstanceError,
    InstanceParseError,
    InstanceValidationError,
    OracleLimitError,
    SteinerForestError,
)
from pipeline.autarkic import enumerate_tuples, max_profit_collection
from pipeline.gain import enumerate_restricted_sets, maximize_profit
from pipeline.instance import GeneratorParams, Instance, ensure_valid, generate_random, read_instance, serialize_instance
from pipeline.moat import run_extended_moat
from pipeline.oracle import OracleLimits, exact_steiner_forest, verify_ledgers
from pipeline.solve import ForestSummary, PipelineParams, compare_with_exact, solve
from utils.config import Config
from utils.plugins import Document, get_default_registry
from utils.rational import approx, format_rational, parse_rational

logger: logging.Logger = logging.getLogger(__name__)

EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_ORACLE_LIMITS = 3
EXIT_VIOLATIONS = 4
INSTANCE_SUFFIX = ".stpf"


class RationalParam(click.ParamType):
    """Click parameter accepting ``p/q`` or exact decimal literals."""

    name = "rational"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> Fraction:
        try:
            return parse_rational(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)


RATIONAL = RationalParam()


def _fail(message: str, code: int) -> NoReturn:
    click.echo(f"❌ Error: {message}", err=True)
    click.get_current_context().exit(code)


@contextmanager
def _domain_errors() -> Iterator[None]:
    """Map domain exceptions onto the documented exit codes."""
    try:
        yield
    except InfeasibleInstanceError as e:
        _fail(str(e), EXIT_INFEASIBLE)
    except (InstanceParseError, InstanceValidationError, ConfigurationError, GenerationError) as e:
        _fail(str(e), EXIT_INPUT)
    except OracleLimitError as e:
        _fail(str(e), EXIT_ORACLE_LIMITS)
    except SteinerForestError as e:
        logger.debug("Exception details:", exc_info=True)
        _fail(str(e), EXIT_INPUT)


def _emit(document: Document, output: Optional[str], fmt: str = "json") -> None:
    writer = get_default_registry().require(fmt)
    if output:
        with open(output, "w", newline="") as f:
            writer.write(document, f)
        click.echo(f"✓ Wrote {output}", err=True)
    else:
        writer.write(document, sys.stdout)


def _load_instance(path: str) -> Instance:
    try:
        return read_instance(path)
    except InstanceParseError as e:
        _fail(f"{path}: {e}", EXIT_INPUT)


def pipeline_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Pipeline flags shared by solve, trace, verify, bench and exact."""
    options = [
        click.option("--epsilon", type=RATIONAL, help="Budget rate of the extended moat run (default 83/10000)"),
        click.option("--alpha", type=RATIONAL, help="Profit threshold of the contraction plan (default 9/100)"),
        click.option("--gamma", type=RATIONAL, help="Slack of the profit maximizer (default 1/100)"),
        click.option("--k", "k", type=int, help="Largest restricted set size (default 3)"),
        click.option("--no-triples", "no_triples", is_flag=True,
                     help="Only enumerate autarkic pairs"),
        click.option("--classic-gw", "classic_gw", is_flag=True,
                     help="Use epsilon 0 for the run on the autarkic-contracted instance"),
        click.option("--seed", type=int, help="Seed recorded in the report"),
        click.option("--enumeration-depth", type=int, help="Seed size cap of the partial enumeration (default ceil(1/gamma))"),
        click.option("--seed-budget", type=int, help="Largest number of seeded greedy runs (default 256)"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def oracle_options(func: Callable[..., Any]) -> Callable[..., Any]:
    options = [
        click.option("--max-terminals", type=int, help="Oracle terminal limit (default 10)"),
        click.option("--max-tuples", type=int, help="Oracle tuple limit (default 12)"),
        click.option("--time-budget", type=float, help="Oracle time budget in seconds (default 60)"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _params(ctx: click.Context, **flags: Any) -> PipelineParams:
    overrides = {
        "epsilon": flags.get("epsilon"),
        "alpha": flags.get("alpha"),
        "gamma": flags.get("gamma"),
        "k": flags.get("k"),
        "include_triples": False if flags.get("no_triples") else None,
        "classic_gw": True if flags.get("classic_gw") else None,
        "seed": flags.get("seed"),
        "enumeration_depth": flags.get("enumeration_depth"),
        "seed_budget": flags.get("seed_budget"),
    }
    return PipelineParams.create(**ctx.obj["config"].pipeline_values(overrides))


def _limits(ctx: click.Context, **flags: Any) -> OracleLimits:
    overrides = {key: flags.get(key) for key in ("max_terminals", "max_tuples", "time_budget")}
    return OracleLimits.create(**ctx.obj["config"].oracle_values(overrides))


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose debug output")
@click.option(
    "--config",
    type=click.Path(exists=True, dir_okay=False),
    help="Path to configuration file (YAML or TOML). If not specified, searches for .steiner-forest.yaml/.toml",
)
@click.pass_context
def main(ctx: click.Context, verbose: bool, config: Optional[str]) -> None:
    """Sub-2 approximation pipeline for Steiner Forest.

    Configuration files (.steiner-forest.yaml or .steiner-forest.toml) can
    provide default parameters. CLI arguments override config file values.

    Examples:

      Solve an instance:

        steiner-forest solve matching_k3.stpf --epsilon 83/10000

      Generate a random instance:

        steiner-forest gen --n 12 --density 0.3 --demands 3 --seed 7 -o random.stpf

      Check the dual ledgers of an instance:

        steiner-forest verify deactivation.stpf --epsilon 1/10
    """
    with _domain_errors():
        cfg = Config.load_from_file(Path(config)) if config else Config.discover()
    if config:
        click.echo(f"✓ Loaded config from {config}", err=True)
    cfg = cfg or Config()
    verbose = verbose or bool(cfg.get("verbose", False))

    log_level: int = logging.DEBUG if verbose else logging.WARNING
    logging.basicConfig(level=log_level, format="%(levelname)s: %(message)s", stream=sys.stderr)
    ctx.obj = {"config": cfg, "verbose": verbose}


@main.command("solve")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@pipeline_options
@click.option("--with-exact", is_flag=True, help="Add diagnostics against the exact optimum (oracle limits apply)")
@oracle_options
@click.option("--timings", is_flag=True, help="Include per-stage wall times in the report")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write the report here instead of stdout")
@click.pass_context
def solve_command(
    ctx: click.Context,
    instance_file: str,
    with_exact: bool,
    timings: bool,
    output: Optional[str],
    **flags: Any,
) -> None:
    """Run the pipeline on INSTANCE_FILE and print the Report as JSON."""
    with _domain_errors():
        params = _params(ctx, **flags)
        inst = _load_instance(instance_file)
        reference = None
        if with_exact:
            ensure_valid(inst)
            reference = exact_steiner_forest(inst, _limits(ctx, **flags))
        report = solve(inst, params, reference=reference)
    _emit(report.document(timings=timings), output)


@main.command("gen")
@click.option("--n", "n", type=int, required=True, help="Number of vertices")
@click.option("--density", type=float, default=0.3, show_default=True, help="Edge probability")
@click.option("--demands", type=int, default=3, show_default=True, help="Number of demand pairs")
@click.option("--max-cost", type=int, default=10, show_default=True, help="Largest edge cost")
@click.option("--metric", is_flag=True, help="Use Manhattan distances between random grid points")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write here instead of stdout")
def gen_command(
    n: int,
    density: float,
    demands: int,
    max_cost: int,
    metric: bool,
    seed: int,
    output: Optional[str],
) -> None:
    """Write a random, demand-feasible STP-F instance."""
    with _domain_errors():
        try:
            params = GeneratorParams(n=n, edge_density=density, demand_count=demands, max_cost=max_cost, metric=metric)
        except ValidationError as e:
            raise ConfigurationError(f"invalid generator parameters: {e}") from e
        text = serialize_instance(generate_random(params, seed))
    if output:
        Path(output).write_text(text)
        click.echo(f"✓ Wrote {output}", err=True)
    else:
        click.echo(text, nl=False)


@main.command("trace")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@pipeline_options
@click.option(
    "--export",
    type=click.Choice(["trace", "plan", "collection"]),
    default="trace",
    show_default=True,
    help="Which artifact of the run to dump",
)
@click.option("--output", "-o", type=click.Path(dir_okay=False))
@click.pass_context
def trace_command(ctx: click.Context, instance_file: str, export: str, output: Optional[str], **flags: Any) -> None:
    """Dump the extended moat trace of INSTANCE_FILE as JSON."""
    with _domain_errors():
        params = _params(ctx, **flags)
        inst = _load_instance(instance_file)
        ensure_valid(inst)
        trace = run_extended_moat(inst, params.epsilon)
        if export == "plan":
            candidates = enumerate_restricted_sets(trace, inst, params.k, candidate_cap=params.candidate_cap)
            artifact: Any = maximize_profit(
                candidates, trace, params.alpha, params.gamma, inst=inst,
                enumeration_depth=params.enumeration_depth, seed_budget=params.seed_budget,
            )
        elif export == "collection":
            tuples = enumerate_tuples(inst, trace, params.include_triples, triple_cap=params.triple_cap)
            artifact = max_profit_collection(tuples)
        else:
            artifact = trace
    _emit(artifact.model_dump(mode="json"), output)


@main.command("verify")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@pipeline_options
@click.pass_context
def verify_command(ctx: click.Context, instance_file: str, **flags: Any) -> None:
    """Re-check every ledger identity of the moat trace; exit 4 on violations."""
    with _domain_errors():
        params = _params(ctx, **flags)
        inst = _load_instance(instance_file)
        ensure_valid(inst)
        violations = verify_ledgers(inst, run_extended_moat(inst, params.epsilon))
    _emit({"instance": Path(instance_file).name, "violations": violations}, None)
    if violations:
        _fail(f"{len(violations)} ledger violation(s)", EXIT_VIOLATIONS)


def _bench_one(path: str, params: PipelineParams, limits: OracleLimits, with_exact: bool) -> Dict[str, Any]:
    """One bench row; runs in a worker process."""
    row: Dict[str, Any] = {"instance": Path(path).name, "status": "ok"}
    try:
        inst = read_instance(path)
        row.update(vertices=inst.vertex_count, edges=len(inst.edges), demands=len(inst.demands))
        ensure_valid(inst)
        reference = None
        if with_exact:
            try:
                reference = exact_steiner_forest(inst, limits)
            except OracleLimitError as e:
                logger.info(f"{path}: {e}")
                row["status"] = "limits-exceeded"
        report = solve(inst, params, reference=reference)
    except InfeasibleInstanceError:
        row["status"] = "infeasible"
        return row
    except (InstanceParseError, InstanceValidationError) as e:
        logger.warning(f"{path}: {e}")
        row["status"] = "invalid"
        return row
    except SteinerForestError as e:
        logger.warning(f"{path}: {e}")
        row["status"] = "error"
        return row
    for name, forest in report.forests.items():
        row[name] = format_rational(forest.cost)
    row["best"] = report.best
    row["best_cost"] = format_rational(report.best_cost)
    if report.reference is not None:
        row["exact"] = format_rational(report.reference.cost)
        row["ratio"] = format_rational(report.reference.ratio)
        row["ratio_approx"] = approx(report.reference.ratio)
    row.update({f"{stage}_s": f"{seconds:.6f}" for stage, seconds in report.timings.items()})
    row["_report"] = report.document(timings=True)
    return row


BENCH_COLUMNS = [
    "instance", "vertices", "edges", "demands", "F1", "F2", "F3", "best", "best_cost",
    "exact", "ratio", "ratio_approx", "status",
]
TIMING_COLUMNS = ["moat_s", "gain_s", "autarkic_s"]


@main.command("bench")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@pipeline_options
@oracle_options
@click.option("--exact/--no-exact", "with_exact", default=True, show_default=True,
              help="Compare with the exact oracle where the instance is within limits")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="Worker processes")
@click.option("--timings", is_flag=True, help="Add wall-time columns (breaks byte-identical reruns)")
@click.option("--json", "json_output", type=click.Path(dir_okay=False), help="Also write every report to this JSON file")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write the CSV here instead of stdout")
@click.pass_context
def bench_command(
    ctx: click.Context,
    directory: str,
    with_exact: bool,
    workers: int,
    timings: bool,
    json_output: Optional[str],
    output: Optional[str],
    **flags: Any,
) -> None:
    """Run solve over every *.stpf file in DIRECTORY and write a CSV summary."""
    with _domain_errors():
        params = _params(ctx, **flags)
        limits = _limits(ctx, **flags)
    paths = sorted(str(p) for p in Path(directory).glob(f"*{INSTANCE_SUFFIX}"))
    if not paths:
        _fail(f"no {INSTANCE_SUFFIX} files in {directory}", EXIT_INPUT)
    click.echo(f"Benchmarking {len(paths)} instance(s) with {workers} worker(s)", err=True)

    rows: List[Dict[str, Any]]
    if workers == 1:
        rows = [_bench_one(p, params, limits, with_exact) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, paths, [params] * len(paths), [limits] * len(paths), [with_exact] * len(paths)))

    columns = BENCH_COLUMNS + (TIMING_COLUMNS if timings else [])
    table = [{column: row.get(column, "") for column in columns} for row in rows]
    _emit(table, output, fmt="csv")
    if json_output:
        documents = []
        for row in rows:
            document = dict(row.get("_report") or {})
            if document and not timings:
                document.pop("timings", None)
            documents.append({"instance": row["instance"], "status": row["status"], "report": document or None})
        _emit(documents, json_output)


@main.command("exact")
@click.argument("instance_file", type=click.Path(exists=True, dir_okay=False))
@oracle_options
@pipeline_options
@click.option("--compare", is_flag=True, help="Also run the pipeline and report best/exact")
@click.pass_context
def exact_command(ctx: click.Context, instance_file: str, compare: bool, **flags: Any) -> None:
    """Run the exact oracle on INSTANCE_FILE; exit 3 when it is out of limits."""
    with _domain_errors():
        limits = _limits(ctx, **flags)
        inst = _load_instance(instance_file)
        ensure_valid(inst)
        if compare:
            comparison = compare_with_exact(inst, _params(ctx, **flags), limits)
            if comparison.status != "ok":
                raise OracleLimitError(comparison.detail or "oracle limits exceeded")
            document: Document = comparison.model_dump(mode="json")
        else:
            document = ForestSummary.of(exact_steiner_forest(inst, limits)).model_dump(mode="json")
    _emit(document, None)


if __name__ == "__main__":
    main()
