"""
Pipeline module for moat growing.

Runs the event-driven primal-dual engine in two flavours sharing one event
loop: the epsilon-extended run (components carry budgets) and the timed run
(components are active until a per-vertex deadline). Both produce an immutable
``MoatTrace`` from which forests, duals and actively connected classes are read.
"""
import logging
from abc import ABC, abstractmethod
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from exceptions import InfeasibleForestError, MoatEngineError
from pipeline.instance import ContractedInstance, Instance, SolutionForest
from utils.disjoint_set import DisjointSet
from utils.models import FrozenModel
from utils.rational import Rational

logger: logging.Logger = logging.getLogger(__name__)


class SetKind(str, Enum):
    SEP = "sep"
    UNSEP = "unsep"
    ZERO_GROWTH = "zero-growth"


class SupportSet(FrozenModel):
    """
    One component of a moat run, with its dual value.

    Attributes:
        id: Creation index (singletons first, in vertex order)
        vertices: Sorted member vertices
        birth: Time the component was formed
        growth_end: Time it stopped growing (``birth`` if it never grew)
        y: Dual value, ``growth_end - birth``
        parent: Id of the set it merged into, if any
        merged_at: Time of that merge
        kind: ``sep``, ``unsep`` or ``zero-growth``
        sep_fingerprint: Sorted indices of the demands the set separates
    """

    id: int
    vertices: Tuple[int, ...]
    birth: Rational
    growth_end: Rational
    y: Rational
    parent: Optional[int] = None
    merged_at: Optional[Rational] = None
    kind: SetKind
    sep_fingerprint: Tuple[int, ...] = ()

    @cached_property
    def vertex_set(self) -> FrozenSet[int]:
        return frozenset(self.vertices)

    def grown_by(self, t: Fraction) -> Fraction:
        """Dual grown strictly before time ``t``."""
        return max(Fraction(0), min(t, self.growth_end) - self.birth)


class Interval(FrozenModel):
    """Half-open time interval with a constant active family."""

    start: Rational
    end: Rational
    active: Tuple[int, ...]

    @property
    def length(self) -> Fraction:
        return self.end - self.start


class MergeEvent(FrozenModel):
    time: Rational
    merged: Tuple[int, ...]
    new_set: int


class TightEdge(FrozenModel):
    """An edge that went tight; ``merged`` marks the ones that joined two components."""

    edge_id: int
    time: Rational
    merged: bool


class MoatTrace(FrozenModel):
    """
    Complete history of one moat run.

    ``epsilon`` is ``None`` for timed runs, which have no budgets.
    """

    epsilon: Optional[Rational]
    vertex_count: int
    support: Tuple[SupportSet, ...]
    timeline: Tuple[Interval, ...]
    deactivation: Dict[int, Rational]
    merge_events: Tuple[MergeEvent, ...]
    budgets_final: Dict[int, Rational]
    tight_edges: Tuple[TightEdge, ...]

    @property
    def end_time(self) -> Fraction:
        return self.timeline[-1].end if self.timeline else Fraction(0)

    @property
    def forest_edges(self) -> List[int]:
        return [te.edge_id for te in self.tight_edges if te.merged]

    @property
    def grown_sets(self) -> List[SupportSet]:
        """Sets in the support of y."""
        return [s for s in self.support if s.kind is not SetKind.ZERO_GROWTH]

    def set_by_id(self, set_id: int) -> SupportSet:
        return self.support[set_id]


class DualSummary(FrozenModel):
    y_sep_total: Rational
    y_unsep_total: Rational
    y_total: Rational


class _Component:
    """Mutable engine-side record of a live component."""

    def __init__(self, set_id: int, vertices: FrozenSet[int], birth: Fraction, fingerprint: Tuple[int, ...]) -> None:
        self.set_id = set_id
        self.vertices = vertices
        self.birth = birth
        self.fingerprint = fingerprint
        self.budget = Fraction(0)
        self.y = Fraction(0)
        self.active = False
        self.parent: Optional[int] = None
        self.merged_at: Optional[Fraction] = None


class ActivityRule(ABC):
    """
    Decides which components grow.

    Activity may only change at merges or at the instants announced by
    :meth:`next_change`.
    """

    @abstractmethod
    def is_active(self, comp: _Component, t: Fraction) -> bool:
        pass

    @abstractmethod
    def next_change(self, comp: _Component, t: Fraction) -> Optional[Fraction]:
        """Time left until the active ``comp`` may stop growing without a merge."""
        pass

    def advance(self, comp: _Component, delta: Fraction) -> None:
        pass


class BudgetActivity(ActivityRule):
    """
    Epsilon-extended rule.

    Demand-active components grow and earn budget at rate epsilon; components
    without an unsatisfied demand keep growing while their budget lasts.
    """

    def __init__(self, epsilon: Fraction) -> None:
        self.epsilon = epsilon

    def is_active(self, comp: _Component, t: Fraction) -> bool:
        return bool(comp.fingerprint) or comp.budget > 0

    def next_change(self, comp: _Component, t: Fraction) -> Optional[Fraction]:
        return None if comp.fingerprint else comp.budget

    def advance(self, comp: _Component, delta: Fraction) -> None:
        if comp.fingerprint:
            comp.budget += self.epsilon * delta
        else:
            comp.budget -= delta


class DeadlineActivity(ActivityRule):
    """Timed rule: a component is active while ``t < deac[v]`` for some member v."""

    def __init__(self, deac: Mapping[int, Fraction]) -> None:
        self.deac = deac

    def _deadline(self, comp: _Component) -> Fraction:
        return max((self.deac.get(v, Fraction(0)) for v in comp.vertices), default=Fraction(0))

    def is_active(self, comp: _Component, t: Fraction) -> bool:
        return t < self._deadline(comp)

    def next_change(self, comp: _Component, t: Fraction) -> Optional[Fraction]:
        return self._deadline(comp) - t


def _fingerprint(inst: Instance, vertices: FrozenSet[int]) -> Tuple[int, ...]:
    return tuple(
        index for index, d in enumerate(inst.demands) if (d.a in vertices) != (d.b in vertices)
    )


def _run(inst: Instance, rule: ActivityRule, epsilon: Optional[Fraction]) -> MoatTrace:
    edges = [(eid, inst.edges[eid]) for eid in inst.graph().canonical_edge_ids()]
    load: Dict[int, Fraction] = {eid: Fraction(0) for eid, _ in edges}
    tight: Set[int] = set()
    tight_log: List[TightEdge] = []
    records: List[_Component] = []
    owner: Dict[int, _Component] = {}
    timeline: List[Interval] = []
    merges: List[MergeEvent] = []
    deac: Dict[int, Fraction] = {}

    for v in inst.vertices:
        comp = _Component(len(records), frozenset((v,)), Fraction(0), _fingerprint(inst, frozenset((v,))))
        records.append(comp)
        owner[v] = comp

    def live() -> List[_Component]:
        return [c for c in records if c.parent is None]

    def crossing() -> List[Tuple[int, _Component, _Component, Fraction]]:
        out = []
        for eid, edge in edges:
            cu, cv = owner[edge.u], owner[edge.v]
            if cu is not cv and eid not in tight:
                out.append((eid, cu, cv, edge.cost))
        return out

    def settle(t: Fraction) -> None:
        # tightenings first, then merges, then reclassification
        pieces: DisjointSet[int] = DisjointSet(c.set_id for c in live())
        for eid, cu, cv, cost in crossing():
            if load[eid] == cost:
                tight.add(eid)
                joined = pieces.union(cu.set_id, cv.set_id)
                tight_log.append(TightEdge(edge_id=eid, time=t, merged=joined))
                logger.debug(f"t={t}: edge {eid} tight{' (merge)' if joined else ''}")
        for group in pieces.groups():
            if len(group) < 2:
                continue
            parts = [records[i] for i in sorted(group)]
            vertices = frozenset().union(*(p.vertices for p in parts))
            comp = _Component(len(records), vertices, t, _fingerprint(inst, vertices))
            comp.budget = sum((p.budget for p in parts), Fraction(0))
            records.append(comp)
            for part in parts:
                part.parent = comp.set_id
                part.merged_at = t
                part.active = False
            for v in vertices:
                owner[v] = comp
            merges.append(MergeEvent(time=t, merged=tuple(p.set_id for p in parts), new_set=comp.set_id))
        for comp in live():
            comp.active = rule.is_active(comp, t)
            if not comp.active:
                for v in comp.vertices:
                    deac.setdefault(v, t)

    t = Fraction(0)
    settle(t)
    guard = 4 * (inst.vertex_count + len(edges)) + 8
    iterations = 0
    while True:
        active = [c for c in live() if c.active]
        if not active:
            break
        iterations += 1
        if iterations > guard:
            logger.error(f"Moat engine exceeded {guard} iterations")
            raise MoatEngineError(f"event loop did not terminate within {guard} iterations")
        steps: List[Fraction] = []
        pending = crossing()
        for eid, cu, cv, cost in pending:
            rate = int(cu.active) + int(cv.active)
            if rate:
                steps.append((cost - load[eid]) / rate)
        for comp in active:
            change = rule.next_change(comp, t)
            if change is not None:
                steps.append(change)
        if not steps:
            logger.error(f"Moat engine stalled at t={t} with {len(active)} active component(s)")
            raise MoatEngineError(f"no event reachable at t={t} while components are active")
        delta = min(steps)
        if delta < 0:
            logger.error(f"Moat engine computed negative step {delta} at t={t}")
            raise MoatEngineError(f"negative step {delta} at t={t}")
        if delta > 0:
            timeline.append(Interval(start=t, end=t + delta, active=tuple(c.set_id for c in active)))
            for eid, cu, cv, _ in pending:
                load[eid] += (int(cu.active) + int(cv.active)) * delta
            for comp in active:
                comp.y += delta
                rule.advance(comp, delta)
            t += delta
        settle(t)

    support = []
    for comp in records:
        if comp.y == 0:
            kind = SetKind.ZERO_GROWTH
        elif comp.fingerprint:
            kind = SetKind.SEP
        else:
            kind = SetKind.UNSEP
        support.append(
            SupportSet(
                id=comp.set_id,
                vertices=tuple(sorted(comp.vertices)),
                birth=comp.birth,
                growth_end=comp.birth + comp.y,
                y=comp.y,
                parent=comp.parent,
                merged_at=comp.merged_at,
                kind=kind,
                sep_fingerprint=comp.fingerprint,
            )
        )
    trace = MoatTrace(
        epsilon=epsilon,
        vertex_count=inst.vertex_count,
        support=tuple(support),
        timeline=tuple(timeline),
        deactivation={v: deac[v] for v in sorted(deac)},
        merge_events=tuple(merges),
        budgets_final={c.set_id: c.budget for c in live()},
        tight_edges=tuple(tight_log),
    )
    logger.info(
        f"Moat run finished at t={trace.end_time}: {len(trace.grown_sets)} grown set(s), "
        f"{len(merges)} merge(s)"
    )
    return trace


def run_extended_moat(inst: Instance, epsilon: Fraction) -> MoatTrace:
    """
    Epsilon-extended moat growing.

    Args:
        inst: A valid instance
        epsilon: Budget rate, ``0`` gives the classical primal-dual run

    Returns:
        The run's trace

    Example:
        >>> trace = run_extended_moat(inst, Fraction(1, 100))
        >>> dual_summary(trace).y_unsep_total == trace.epsilon * dual_summary(trace).y_sep_total
        True
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    return _run(inst, BudgetActivity(Fraction(epsilon)), Fraction(epsilon))


def run_timed_moat(inst: Instance, deac: Mapping[int, Fraction]) -> MoatTrace:
    """Moat growing where a component is active iff ``t < deac[v]`` for some member v."""
    return _run(inst, DeadlineActivity(deac), None)


def extract_forest(inst: Instance, trace: MoatTrace) -> SolutionForest:
    """
    Forest of merging tight edges, pruned by reverse delete.

    Edges are scanned by decreasing tightening time (ties by decreasing edge
    id) and dropped whenever every demand stays connected without them.
    """
    kept = {te.edge_id: te.time for te in trace.tight_edges if te.merged}
    order = sorted(kept, key=lambda eid: (kept[eid], eid), reverse=True)
    current = set(kept)
    for eid in order:
        current.discard(eid)
        if not _connects_demands(inst, current):
            current.add(eid)
    forest = SolutionForest.from_edges(inst, current)
    logger.debug(f"Extracted forest: {len(forest.edge_ids)} edge(s), cost {forest.total_cost}")
    return forest


def _connects_demands(inst: Instance, edge_ids: Iterable[int]) -> bool:
    components: DisjointSet[int] = DisjointSet(inst.vertices)
    for eid in edge_ids:
        components.union(inst.edges[eid].u, inst.edges[eid].v)
    return all(components.connected(d.a, d.b) for d in inst.demands)


def actively_connected_classes(trace: MoatTrace) -> List[FrozenSet[int]]:
    """
    Classes of the actively-connected relation, ordered by smallest vertex.

    Two vertices are related when some component holds both at a time t no
    later than either deactivation time.
    """
    classes: DisjointSet[int] = DisjointSet(range(1, trace.vertex_count + 1))
    for event in trace.merge_events:
        members = [
            v for v in trace.set_by_id(event.new_set).vertices
            if trace.deactivation.get(v, Fraction(0)) >= event.time
        ]
        for v in members[1:]:
            classes.union(members[0], v)
    return sorted((frozenset(group) for group in classes.groups()), key=min)


def dual_summary(trace: MoatTrace) -> DualSummary:
    y_sep = sum((s.y for s in trace.support if s.kind is SetKind.SEP), Fraction(0))
    y_unsep = sum((s.y for s in trace.support if s.kind is SetKind.UNSEP), Fraction(0))
    return DualSummary(y_sep_total=y_sep, y_unsep_total=y_unsep, y_total=y_sep + y_unsep)


def excess(forest: SolutionForest, trace: MoatTrace) -> Fraction:
    """``c(F) - y_sep`` for a feasible forest."""
    if not forest.feasible:
        unmet = sorted(i for i, ok in forest.satisfied.items() if not ok)
        logger.error(f"Excess requested for an infeasible forest (unmet demands {unmet})")
        raise InfeasibleForestError(f"forest does not satisfy demands {unmet}")
    return forest.total_cost - dual_summary(trace).y_sep_total


def crossings(inst: Instance, edge_ids: Iterable[int], vertices: FrozenSet[int]) -> int:
    """Number of the given edges with exactly one endpoint in ``vertices``."""
    return sum(
        1 for eid in edge_ids if (inst.edges[eid].u in vertices) != (inst.edges[eid].v in vertices)
    )


def lambda_diagnostic(forest: SolutionForest, trace: MoatTrace, inst: Instance) -> Fraction:
    """Total y over support sets crossed at least twice by ``forest``."""
    return sum(
        (s.y for s in trace.grown_sets if crossings(inst, forest.edge_ids, s.vertex_set) >= 2),
        Fraction(0),
    )


def load_at(trace: MoatTrace, u: int, v: int, t: Fraction) -> Fraction:
    """Dual load on the pair {u, v} accumulated before time ``t``."""
    return sum(
        (s.grown_by(t) for s in trace.grown_sets if (u in s.vertex_set) != (v in s.vertex_set)),
        Fraction(0),
    )


def components_at(trace: MoatTrace, t: Fraction) -> List[FrozenSet[int]]:
    """Component vertex sets right after the instant ``t`` has been processed."""
    alive = [
        s.vertex_set for s in trace.support
        if s.birth <= t and (s.merged_at is None or s.merged_at > t)
    ]
    return sorted(alive, key=min)


def active_families(trace: MoatTrace) -> List[Tuple[Interval, List[FrozenSet[int]]]]:
    """Each timeline interval with the vertex sets of its active components."""
    return [
        (interval, [trace.set_by_id(i).vertex_set for i in interval.active])
        for interval in trace.timeline
    ]


def lifted_forest(
    inst: Instance,
    contracted: ContractedInstance,
    contracted_trace: MoatTrace,
    extra_edges: Iterable[int] = (),
) -> SolutionForest:
    """Forest of a run on a contracted instance, mapped back and joined with ``extra_edges``."""
    edges: Set[int] = contracted.lift_edges(extract_forest(contracted.instance, contracted_trace).edge_ids)
    edges.update(extra_edges)
    return SolutionForest.from_edges(inst, edges)
