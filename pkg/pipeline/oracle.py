"""
Pipeline module for desk-scale ground truth.

Exact Steiner Forest by partition enumeration, brute-force autarkic profit,
and an independent checker for every identity a moat trace must satisfy.
"""
import bisect
import logging
import time
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Set, Tuple

from pydantic import ValidationError, model_validator

from exceptions import ConfigurationError, NotActivelyConnectedError, OracleLimitError
from pipeline.autarkic import AutarkicCollection, AutarkicTuple
from pipeline.gain import GainEvaluator, contracted_timed_run
from pipeline.instance import Instance, SolutionForest
from pipeline.moat import (
    MoatTrace,
    SetKind,
    actively_connected_classes,
    dual_summary,
    load_at,
    run_timed_moat,
)
from utils.disjoint_set import DisjointSet
from utils.models import FrozenModel

logger: logging.Logger = logging.getLogger(__name__)


class OracleLimits(FrozenModel):
    """Size and time limits for the exact oracles; ``time_budget`` is in seconds."""

    max_terminals: int = 10
    max_tuples: int = 12
    time_budget: float = 60.0

    @model_validator(mode="after")
    def _check(self) -> "OracleLimits":
        if self.max_terminals < 1 or self.max_tuples < 1 or self.time_budget <= 0:
            raise ValueError("oracle limits must be positive")
        return self

    @classmethod
    def create(cls, **values: object) -> "OracleLimits":
        try:
            return cls(**values)
        except ValidationError as e:
            logger.error(f"Invalid oracle limits: {e}")
            raise ConfigurationError(f"invalid oracle limits: {e}") from e


class _Deadline:
    def __init__(self, budget: float) -> None:
        self.budget = budget
        self.expires = time.monotonic() + budget

    def check(self) -> None:
        if time.monotonic() > self.expires:
            logger.error(f"Oracle time budget of {self.budget}s exhausted")
            raise OracleLimitError(f"time budget of {self.budget}s exhausted")


def _partitions(count: int):
    """Restricted growth strings of length ``count``."""
    labels = [0] * count

    def extend(position: int, blocks: int):
        if position == count:
            yield list(labels)
            return
        for label in range(blocks + 1):
            labels[position] = label
            yield from extend(position + 1, max(blocks, label + 1))

    if count == 0:
        yield []
        return
    yield from extend(1, 1)


def exact_steiner_forest(inst: Instance, limits: OracleLimits) -> SolutionForest:
    """
    Minimum-cost feasible forest, inclusionwise minimal.

    Demand endpoints that must share a tree are grouped first; every partition
    of the groups is priced as the sum of exact Steiner trees of its blocks.
    Zero-cost edges that are not needed are dropped afterwards.

    Raises:
        OracleLimitError: If there are more than ``max_terminals`` terminals or
            the time budget runs out
    """
    terminals = inst.terminals()
    if len(terminals) > limits.max_terminals:
        logger.error(f"{len(terminals)} terminals exceed the oracle limit {limits.max_terminals}")
        raise OracleLimitError(f"{len(terminals)} terminals exceed the oracle limit {limits.max_terminals}")
    if not terminals:
        return SolutionForest.from_edges(inst, ())
    deadline = _Deadline(limits.time_budget)

    grouping: DisjointSet[int] = DisjointSet(terminals)
    for d in inst.demands:
        grouping.union(d.a, d.b)
    groups = grouping.groups()
    table = inst.graph().steiner_table(terminals)
    group_masks = [table.mask_of(g) for g in groups]

    best_cost: Optional[Fraction] = None
    best_blocks: List[int] = []
    for labels in _partitions(len(groups)):
        deadline.check()
        masks: Dict[int, int] = {}
        for group, label in enumerate(labels):
            masks[label] = masks.get(label, 0) | group_masks[group]
        total = Fraction(0)
        for mask in masks.values():
            cost = table.cost(mask)
            if cost is None:
                break
            total += cost
            if best_cost is not None and total >= best_cost:
                break
        else:
            if best_cost is None or total < best_cost:
                best_cost, best_blocks = total, list(masks.values())
    if best_cost is None:
        logger.error("No feasible forest exists")
        raise OracleLimitError("instance has no feasible forest; validate it first")

    edges: Set[int] = set()
    for mask in best_blocks:
        edges.update(table.tree(mask))
    for eid in sorted((e for e in edges if inst.edges[e].cost == 0), reverse=True):
        trial = edges - {eid}
        if SolutionForest.from_edges(inst, trial).feasible:
            edges = trial
    forest = SolutionForest.from_edges(inst, edges)
    logger.info(f"Exact forest: cost {forest.total_cost} over {len(groups)} demand group(s)")
    return forest


def brute_force_max_profit(tuples: Sequence[AutarkicTuple], limits: OracleLimits) -> AutarkicCollection:
    """Best crossing-free subset by exhaustive search (fewest tuples on ties)."""
    if len(tuples) > limits.max_tuples:
        logger.error(f"{len(tuples)} tuples exceed the oracle limit {limits.max_tuples}")
        raise OracleLimitError(f"{len(tuples)} tuples exceed the oracle limit {limits.max_tuples}")
    deadline = _Deadline(limits.time_budget)
    seps = [set(t.sep_union) for t in tuples]
    best_profit = Fraction(0)
    best_subset: Tuple[int, ...] = ()
    for size in range(1, len(tuples) + 1):
        deadline.check()
        for subset in combinations(range(len(tuples)), size):
            if any(seps[i] & seps[j] for i, j in combinations(subset, 2)):
                continue
            profit = sum((tuples[i].profit for i in subset), Fraction(0))
            if profit > best_profit:
                best_profit, best_subset = profit, subset
    return AutarkicCollection.of([tuples[i] for i in best_subset])


def verify_ledgers(
    inst: Instance,
    trace: MoatTrace,
    plan_sets: Optional[Sequence[Sequence[int]]] = None,
) -> List[str]:
    """
    Independently re-check a trace.

    Checks the timeline partition, the dual and epsilon identities, budgets,
    per-set consistency, laminarity, dual feasibility, deactivation
    consistency and the timed-run fixpoint. For extended traces it also
    contracts a sample plan (default: the lowest-index demand pair) and
    compares the contracted timed run against the original, edge by edge.

    Returns:
        Violation messages, empty when every check passes
    """
    violations: List[str] = []
    support = trace.support

    t = Fraction(0)
    integral = Fraction(0)
    grown: Dict[int, Fraction] = {s.id: Fraction(0) for s in support}
    for position, interval in enumerate(trace.timeline):
        if interval.start != t:
            violations.append(f"timeline: interval {position} starts at {interval.start}, expected {t}")
        if interval.end <= interval.start:
            violations.append(f"timeline: interval {position} is empty or reversed")
        for set_id in interval.active:
            if set_id not in grown:
                violations.append(f"timeline: interval {position} lists unknown set {set_id}")
            else:
                grown[set_id] += interval.length
        integral += len(interval.active) * interval.length
        t = interval.end

    duals = dual_summary(trace)
    if duals.y_total != integral:
        violations.append(f"dual-identity: sum of y is {duals.y_total}, timeline integral is {integral}")
    if trace.epsilon is not None:
        if duals.y_unsep_total != trace.epsilon * duals.y_sep_total:
            violations.append(
                f"epsilon-ledger: y_unsep {duals.y_unsep_total} != {trace.epsilon} * y_sep {duals.y_sep_total}"
            )
        for set_id, budget in trace.budgets_final.items():
            if budget != 0:
                violations.append(f"budget: set {set_id} ends with budget {budget}")

    for s in support:
        if s.y < 0 or s.y != s.growth_end - s.birth:
            violations.append(f"set {s.id}: y {s.y} does not match its lifetime [{s.birth}, {s.growth_end})")
        if grown.get(s.id) != s.y:
            violations.append(f"dual-identity: set {s.id} has y {s.y} but is active for {grown.get(s.id)}")
        expected = tuple(
            i for i, d in enumerate(inst.demands) if (d.a in s.vertex_set) != (d.b in s.vertex_set)
        )
        if s.sep_fingerprint != expected:
            violations.append(f"set {s.id}: fingerprint {list(s.sep_fingerprint)} should be {list(expected)}")
        if (s.y == 0) != (s.kind is SetKind.ZERO_GROWTH):
            violations.append(f"set {s.id}: kind {s.kind.value} inconsistent with y {s.y}")
        elif s.y > 0 and (s.kind is SetKind.SEP) != bool(s.sep_fingerprint):
            violations.append(f"set {s.id}: kind {s.kind.value} inconsistent with its fingerprint")

    for a, b in combinations(trace.grown_sets, 2):
        common = a.vertex_set & b.vertex_set
        if common and common != a.vertex_set and common != b.vertex_set:
            violations.append(f"laminarity: sets {a.id} and {b.id} cross")

    canonical = set(inst.graph().canonical_edge_ids())
    tight = {te.edge_id for te in trace.tight_edges}
    for eid, edge in enumerate(inst.edges):
        if edge.u == edge.v:
            continue
        load = load_at(trace, edge.u, edge.v, trace.end_time)
        if load > edge.cost:
            violations.append(f"dual-feasibility: edge {eid} carries {load} > cost {edge.cost}")
        elif eid in canonical and (load == edge.cost) != (eid in tight):
            state = "tight" if eid in tight else "not tight"
            violations.append(f"dual-feasibility: edge {eid} is recorded {state} with load {load} and cost {edge.cost}")

    for cls in actively_connected_classes(trace):
        times = {trace.deactivation.get(v) for v in cls}
        if len(times) > 1:
            violations.append(f"deactivation: class {sorted(cls)} has differing times {sorted(times)}")
    for index, d in enumerate(inst.demands if trace.epsilon is not None else ()):
        joined = [s.birth for s in support if d.a in s.vertex_set and d.b in s.vertex_set]
        if joined and min(trace.deactivation.get(d.a, Fraction(0)), trace.deactivation.get(d.b, Fraction(0))) < min(joined):
            violations.append(f"deactivation: demand {index} endpoints deactivate before being connected")

    rerun = run_timed_moat(inst, trace.deactivation)
    if sorted((s.vertices, s.y) for s in rerun.grown_sets) != sorted((s.vertices, s.y) for s in trace.grown_sets):
        violations.append("fixpoint: timed re-run with the deactivation times gives a different dual vector")

    if trace.epsilon is not None and inst.demands:
        if plan_sets is None:
            plan_sets = [(inst.demands[0].a, inst.demands[0].b)]
        violations.extend(_contraction_ledger(inst, trace, plan_sets))

    if violations:
        logger.warning(f"Ledger check found {len(violations)} violation(s)")
    return violations


def _contraction_ledger(
    inst: Instance,
    trace: MoatTrace,
    plan_sets: Sequence[Sequence[int]],
) -> List[str]:
    """Contracted timed run versus the original: total dual and per-edge loads."""
    evaluator = GainEvaluator(trace)
    try:
        gain = evaluator.gain(plan_sets)
    except NotActivelyConnectedError as e:
        return [f"contraction: {e}"]
    contracted, timed = contracted_timed_run(inst, trace, plan_sets)
    violations: List[str] = []
    expected = 2 * dual_summary(trace).y_total - gain
    if 2 * dual_summary(timed).y_total != expected:
        violations.append(
            f"contraction: contracted dual total {dual_summary(timed).y_total} should be half of {expected}"
        )

    mapping = contracted.vertex_map
    starts = [interval.start for interval in trace.timeline]
    checkpoints = sorted(
        {i.start for i in trace.timeline} | {i.start for i in timed.timeline} | {trace.end_time, timed.end_time}
    )
    excluded: Set[int] = {
        eid for eid, e in enumerate(inst.edges) if mapping[e.u] == mapping[e.v]
    }
    edges = inst.graph().canonical_edge_ids()
    for point in checkpoints:
        position = bisect.bisect_right(starts, point) - 1
        active = []
        if position >= 0 and point < trace.timeline[position].end:
            active = [trace.set_by_id(i).vertex_set for i in trace.timeline[position].active]
        block = _blocks(active, plan_sets)
        for eid in edges:
            e = inst.edges[eid]
            if eid not in excluded and block.get(e.u, -1) == block.get(e.v, -2):
                excluded.add(eid)
        for eid in edges:
            if eid in excluded:
                continue
            e = inst.edges[eid]
            original = load_at(trace, e.u, e.v, point)
            shrunk = load_at(timed, mapping[e.u], mapping[e.v], point)
            if original != shrunk:
                violations.append(f"contraction: edge {eid} load {original} vs {shrunk} in the contracted run at t={point}")
    return violations


def _blocks(active: Sequence[frozenset], plan_sets: Sequence[Sequence[int]]) -> Dict[int, int]:
    """Vertex -> block label of the active family merged through the plan sets."""
    labels: DisjointSet[int] = DisjointSet(range(len(active) + len(plan_sets)))
    owner: Dict[int, int] = {}
    for index, vertices in enumerate(active):
        for v in vertices:
            owner[v] = index
    for offset, vertices in enumerate(plan_sets):
        label = len(active) + offset
        for v in vertices:
            if v in owner:
                labels.union(label, owner[v])
    block: Dict[int, int] = {v: labels.find(i) for v, i in owner.items()}
    for offset, vertices in enumerate(plan_sets):
        for v in vertices:
            block.setdefault(v, labels.find(len(active) + offset))
    return block
