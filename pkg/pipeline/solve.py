"""
Pipeline module for the full approximation run.

Runs epsilon-extended moat growing once, builds the three candidate forests
(plain moat forest, contraction of profitable actively connected sets,
contraction of an autarkic collection) and returns the cheapest in a Report
carrying the dual totals and the bound ledgers of each stage.
"""
import logging
import time
from fractions import Fraction
from typing import Dict, Final, List, Optional, Tuple

from pydantic import Field, ValidationError, model_validator

from exceptions import ConfigurationError, InfeasibleForestError, OracleLimitError
from pipeline.autarkic import (
    DEFAULT_TRIPLE_CAP,
    AutarkicCollection,
    build_f3,
    contracted_extended_run,
    enumerate_tuples,
    max_profit_collection,
)
from pipeline.gain import (
    DEFAULT_CANDIDATE_CAP,
    DEFAULT_SEED_BUDGET,
    ContractionPlan,
    build_f2,
    enumerate_restricted_sets,
    maximize_profit,
)
from pipeline.instance import K_MAX_DEFAULT, Instance, SolutionForest, ensure_valid
from pipeline.moat import (
    MoatTrace,
    dual_summary,
    excess,
    extract_forest,
    lambda_diagnostic,
    run_extended_moat,
)
from pipeline.oracle import OracleLimits, exact_steiner_forest
from utils.models import FrozenModel
from utils.rational import DisplayRational, Rational

logger: logging.Logger = logging.getLogger(__name__)

EXCESS_CASE_THRESHOLD: Final[Fraction] = Fraction(116, 10000)
PROFIT_CASE_THRESHOLD: Final[Fraction] = Fraction(3, 100)
FOREST_NAMES: Final[Tuple[str, str, str]] = ("F1", "F2", "F3")


class PipelineParams(FrozenModel):
    """
    Parameters of one pipeline run.

    ``classic_gw`` runs the moat growing on the autarkic-contracted instance
    with epsilon 0. The profit maximizer seeds its greedy with up to
    ``ceil(1/gamma)`` candidates, capped by ``enumeration_depth`` when set and
    shrunk until the seeds fit in ``seed_budget`` greedy runs.
    """

    epsilon: Rational = Fraction(83, 10000)
    alpha: Rational = Fraction(9, 100)
    gamma: Rational = Fraction(1, 100)
    k: int = 3
    include_triples: bool = True
    classic_gw: bool = False
    seed: int = 0
    candidate_cap: int = DEFAULT_CANDIDATE_CAP
    triple_cap: int = DEFAULT_TRIPLE_CAP
    enumeration_depth: Optional[int] = None
    seed_budget: int = DEFAULT_SEED_BUDGET

    @model_validator(mode="after")
    def _check(self) -> "PipelineParams":
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 2 <= self.k <= K_MAX_DEFAULT:
            raise ValueError(f"k must lie in [2, {K_MAX_DEFAULT}], got {self.k}")
        if self.candidate_cap < 1 or self.triple_cap < 0 or self.seed_budget < 0:
            raise ValueError("candidate_cap must be positive, triple_cap and seed_budget nonnegative")
        if self.enumeration_depth is not None and self.enumeration_depth < 0:
            raise ValueError(f"enumeration_depth must be nonnegative, got {self.enumeration_depth}")
        return self

    @classmethod
    def create(cls, **values: object) -> "PipelineParams":
        """Build params, reporting invalid values as ConfigurationError."""
        try:
            return cls(**values)
        except ValidationError as e:
            logger.error(f"Invalid pipeline parameters: {e}")
            raise ConfigurationError(f"invalid pipeline parameters: {e}") from e

    @property
    def implied_alpha_delta(self) -> Fraction:
        """``(alpha + gamma) * (1 + 1/floor(log2 k))``."""
        return (self.alpha + self.gamma) * (1 + Fraction(1, self.k.bit_length() - 1))


class ForestSummary(FrozenModel):
    cost: DisplayRational
    feasible: bool
    edge_ids: Tuple[int, ...]

    @classmethod
    def of(cls, forest: SolutionForest) -> "ForestSummary":
        return cls(cost=forest.total_cost, feasible=forest.feasible, edge_ids=forest.edge_ids)


class PlanSummary(FrozenModel):
    candidates: int
    sets: List[Tuple[int, ...]]
    gain: DisplayRational
    cost: DisplayRational
    profit: DisplayRational

    @classmethod
    def of(cls, plan: ContractionPlan, candidates: int) -> "PlanSummary":
        return cls(
            candidates=candidates,
            sets=plan.vertex_sets,
            gain=plan.gain_value,
            cost=plan.cost_value,
            profit=plan.profit,
        )


class CollectionSummary(FrozenModel):
    tuples_found: int
    tuples: List[Tuple[int, ...]]
    coverage: DisplayRational
    cost: DisplayRational
    profit: DisplayRational

    @classmethod
    def of(cls, coll: AutarkicCollection, found: int) -> "CollectionSummary":
        return cls(
            tuples_found=found,
            tuples=[t.member_set_ids for t in coll.tuples],
            coverage=coll.total_coverage,
            cost=coll.total_cost,
            profit=coll.total_profit,
        )


class Ledgers(FrozenModel):
    """Upper bounds each forest is known to respect, plus the implied (alpha + delta)."""

    f1_bound: DisplayRational
    f2_bound: DisplayRational
    f3_bound: DisplayRational
    implied_alpha_delta: DisplayRational


class ReferenceDiagnostics(FrozenModel):
    """Quantities measured against a reference solution (usually the exact optimum)."""

    cost: DisplayRational
    excess: DisplayRational
    lambda_value: DisplayRational
    large_excess: bool
    large_profit: bool
    ratio: DisplayRational


class Report(FrozenModel):
    vertices: int
    edges: int
    demands: int
    params: PipelineParams
    forests: Dict[str, ForestSummary]
    best: str
    best_cost: DisplayRational
    y_sep_total: DisplayRational
    y_unsep_total: DisplayRational
    y_total: DisplayRational
    plan: PlanSummary
    collection: CollectionSummary
    ledgers: Ledgers
    reference: Optional[ReferenceDiagnostics] = None
    timings: Dict[str, float] = Field(default_factory=dict)

    def document(self, timings: bool = False) -> Dict[str, object]:
        """JSON-ready dict; wall times are left out unless asked for, so reruns compare equal."""
        return self.model_dump(mode="json", exclude=None if timings else {"timings"})


class ExactComparison(FrozenModel):
    status: str
    best_cost: DisplayRational
    exact_cost: Optional[DisplayRational] = None
    ratio: Optional[DisplayRational] = None
    detail: Optional[str] = None


def solve(
    inst: Instance,
    params: PipelineParams,
    reference: Optional[SolutionForest] = None,
) -> Report:
    """
    Run the whole pipeline and return the cheapest of the three forests.

    Args:
        inst: Instance to solve
        params: Pipeline parameters
        reference: Optional feasible forest (typically optimal) for diagnostics

    Returns:
        The Report; ``best`` names the cheapest forest, lowest index on ties

    Raises:
        InstanceValidationError: If the instance is invalid
        InfeasibleInstanceError: If some demand cannot be connected
    """
    ensure_valid(inst)
    timings: Dict[str, float] = {}
    clock = time.perf_counter()

    def lap(stage: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        timings[stage] = now - clock
        clock = now

    trace = run_extended_moat(inst, params.epsilon)
    f1 = extract_forest(inst, trace)
    lap("moat")

    candidates = enumerate_restricted_sets(trace, inst, params.k, candidate_cap=params.candidate_cap)
    plan = maximize_profit(
        candidates,
        trace,
        params.alpha,
        params.gamma,
        inst=inst,
        enumeration_depth=params.enumeration_depth,
        seed_budget=params.seed_budget,
    )
    f2 = build_f2(inst, trace, plan)
    lap("gain")

    tuples = enumerate_tuples(inst, trace, params.include_triples, triple_cap=params.triple_cap)
    coll = max_profit_collection(tuples)
    inner_epsilon = Fraction(0) if params.classic_gw else params.epsilon
    contracted, inner = contracted_extended_run(inst, coll, inner_epsilon)
    f3 = build_f3(inst, trace, coll, inner_epsilon, contracted_run=(contracted, inner))
    lap("autarkic")

    forests = (f1, f2, f3)
    for name, forest in zip(FOREST_NAMES, forests):
        if not forest.feasible:
            logger.error(f"{name} is infeasible")
            raise InfeasibleForestError(f"{name} does not satisfy every demand")
    best_index = min(range(3), key=lambda i: (forests[i].total_cost, i))

    duals = dual_summary(trace)
    ledgers = Ledgers(
        f1_bound=2 * duals.y_total,
        f2_bound=2 * duals.y_total - plan.gain_value + plan.cost_value,
        f3_bound=coll.total_cost + 2 * dual_summary(inner).y_total,
        implied_alpha_delta=params.implied_alpha_delta,
    )
    diagnostics = None
    if reference is not None:
        diagnostics = _reference_diagnostics(inst, trace, reference, coll, forests[best_index])

    report = Report(
        vertices=inst.vertex_count,
        edges=len(inst.edges),
        demands=len(inst.demands),
        params=params,
        forests={name: ForestSummary.of(f) for name, f in zip(FOREST_NAMES, forests)},
        best=FOREST_NAMES[best_index],
        best_cost=forests[best_index].total_cost,
        y_sep_total=duals.y_sep_total,
        y_unsep_total=duals.y_unsep_total,
        y_total=duals.y_total,
        plan=PlanSummary.of(plan, len(candidates)),
        collection=CollectionSummary.of(coll, len(tuples)),
        ledgers=ledgers,
        reference=diagnostics,
        timings=timings,
    )
    logger.info(
        f"Best forest {report.best} with cost {report.best_cost} "
        f"(F1 {f1.total_cost}, F2 {f2.total_cost}, F3 {f3.total_cost})"
    )
    return report


def _reference_diagnostics(
    inst: Instance,
    trace: MoatTrace,
    reference: SolutionForest,
    coll: AutarkicCollection,
    best: SolutionForest,
) -> ReferenceDiagnostics:
    ref_excess = excess(reference, trace)
    cost = reference.total_cost
    return ReferenceDiagnostics(
        cost=cost,
        excess=ref_excess,
        lambda_value=lambda_diagnostic(reference, trace, inst),
        large_excess=ref_excess >= EXCESS_CASE_THRESHOLD * cost,
        large_profit=coll.total_profit >= PROFIT_CASE_THRESHOLD * cost,
        ratio=best.total_cost / cost if cost else Fraction(1),
    )


def compare_with_exact(inst: Instance, params: PipelineParams, limits: OracleLimits) -> ExactComparison:
    """
    Ratio of the pipeline's best cost to the exact optimum.

    Exceeded oracle limits give ``status="limits-exceeded"`` instead of an error.
    A zero optimum gives ratio 1 (the pipeline then also pays 0).
    """
    try:
        exact = exact_steiner_forest(inst, limits)
    except OracleLimitError as e:
        logger.warning(f"Exact comparison skipped: {e}")
        report = solve(inst, params)
        return ExactComparison(status="limits-exceeded", best_cost=report.best_cost, detail=str(e))
    report = solve(inst, params, reference=exact)
    ratio = report.best_cost / exact.total_cost if exact.total_cost else Fraction(1)
    return ExactComparison(status="ok", best_cost=report.best_cost, exact_cost=exact.total_cost, ratio=ratio)
