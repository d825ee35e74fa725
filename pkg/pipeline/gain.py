"""
Pipeline module for improving components.

Enumerates small actively connected vertex sets, evaluates how much dual
growth contracting them would save (the gain functional), picks a profitable
collection with a density greedy plus partial enumeration, and builds the
second candidate forest from a timed re-run on the contracted instance.

Only sets inside one actively connected class are ever evaluated; a set that
merely shares a component with another at some time can merge active moats
that a restriction to small sets would not, and the gain bound breaks.
"""
import heapq
import logging
import math
from fractions import Fraction
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from exceptions import CandidateLimitError, NotActivelyConnectedError, TerminalLimitError
from pipeline.instance import (
    K_MAX_DEFAULT,
    ContractedInstance,
    Instance,
    SolutionForest,
    contract_instance,
    steiner_tree_exact,
)
from pipeline.moat import MoatTrace, actively_connected_classes, lifted_forest, run_timed_moat
from utils.disjoint_set import DisjointSet
from utils.models import FrozenModel
from utils.rational import Rational

logger: logging.Logger = logging.getLogger(__name__)

DEFAULT_CANDIDATE_CAP = 200_000
# Seeded greedy runs per profit maximization, summed over thresholds.
DEFAULT_SEED_BUDGET = 256


class CandidateSet(FrozenModel):
    """Actively connected vertex set with a cheapest Steiner tree on it."""

    vertices: Tuple[int, ...]
    steiner_cost: Rational
    steiner_tree: Tuple[int, ...]
    class_witness: int


class ContractionPlan(FrozenModel):
    """Pairwise disjoint candidate sets chosen for contraction."""

    selected: Tuple[CandidateSet, ...] = ()
    gain_value: Rational = Fraction(0)
    cost_value: Rational = Fraction(0)

    @property
    def profit(self) -> Fraction:
        return self.gain_value - self.cost_value

    @property
    def vertex_sets(self) -> List[Tuple[int, ...]]:
        return [c.vertices for c in self.selected]


class GainState:
    """Per-interval union-find over the active sets, for one collection."""

    def __init__(self, blocks: List[DisjointSet[int]]) -> None:
        self.blocks = blocks
        self.value = Fraction(0)

    def copy(self) -> "GainState":
        clone = GainState([ds.copy() for ds in self.blocks])
        clone.value = self.value
        return clone


class GainEvaluator:
    """
    Evaluates the gain functional on one trace.

    ``gain(S) = 2 * sum over intervals of (|A| - |A/S|) * length``, where
    ``A/S`` merges the active sets hit by a common member of S.
    """

    def __init__(self, trace: MoatTrace, classes: Optional[Sequence[FrozenSet[int]]] = None) -> None:
        self.trace = trace
        self.classes: List[FrozenSet[int]] = list(classes) if classes is not None else actively_connected_classes(trace)
        self._class_of: Dict[int, int] = {v: i for i, cls in enumerate(self.classes) for v in cls}
        self._intervals: List[Tuple[Fraction, Dict[int, int], int]] = []
        for interval in trace.timeline:
            owner: Dict[int, int] = {}
            for local, set_id in enumerate(interval.active):
                for v in trace.set_by_id(set_id).vertices:
                    owner[v] = local
            self._intervals.append((interval.length, owner, len(interval.active)))

    def class_of(self, vertices: Iterable[int]) -> int:
        """Class index holding every vertex; raises if they span several classes."""
        found = {self._class_of.get(v, -1) for v in vertices}
        if len(found) != 1 or -1 in found:
            members = sorted(vertices)
            logger.error(f"Vertex set {members} is not actively connected")
            raise NotActivelyConnectedError(f"vertex set {members} spans several actively connected classes")
        return found.pop()

    def empty_state(self) -> GainState:
        return GainState([DisjointSet(range(count)) for _, _, count in self._intervals])

    def max_gain(self) -> Fraction:
        """Gain of merging every active set of every interval into one."""
        return sum((2 * (count - 1) * length for length, _, count in self._intervals if count), Fraction(0))

    def marginal(self, state: GainState, vertices: Iterable[int]) -> Fraction:
        members = list(vertices)
        total = Fraction(0)
        for (length, owner, _), blocks in zip(self._intervals, state.blocks):
            roots = {blocks.find(owner[v]) for v in members if v in owner}
            if len(roots) > 1:
                total += 2 * (len(roots) - 1) * length
        return total

    def commit(self, state: GainState, vertices: Iterable[int]) -> None:
        members = list(vertices)
        state.value += self.marginal(state, members)
        for (_, owner, _), blocks in zip(self._intervals, state.blocks):
            hits = [owner[v] for v in members if v in owner]
            for local in hits[1:]:
                blocks.union(hits[0], local)

    def gain(self, sets: Iterable[Iterable[int]]) -> Fraction:
        state = self.empty_state()
        for vertices in sets:
            members = list(vertices)
            self.class_of(members)
            self.commit(state, members)
        return state.value


def enumerate_restricted_sets(
    trace: MoatTrace,
    inst: Instance,
    k: int,
    candidate_cap: int = DEFAULT_CANDIDATE_CAP,
    k_max: int = K_MAX_DEFAULT,
) -> List[CandidateSet]:
    """
    All actively connected sets of 2..k vertices that have a Steiner tree.

    Args:
        trace: Extended run on ``inst``
        inst: The instance
        k: Largest set size
        candidate_cap: Refuse to enumerate more subsets than this
        k_max: Exact Steiner tree terminal limit

    Raises:
        TerminalLimitError: If ``k`` exceeds ``k_max``
        CandidateLimitError: If the subset count exceeds ``candidate_cap``
    """
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > k_max:
        logger.error(f"Restricted set size {k} exceeds the Steiner tree limit {k_max}")
        raise TerminalLimitError(f"k={k} exceeds the exact Steiner tree limit {k_max}")
    classes = actively_connected_classes(trace)
    count = sum(math.comb(len(cls), size) for cls in classes for size in range(2, k + 1))
    if count > candidate_cap:
        sizes = sorted((len(cls) for cls in classes), reverse=True)[:5]
        logger.error(f"{count} restricted sets exceed the cap {candidate_cap} (largest classes {sizes})")
        raise CandidateLimitError(
            f"{count} candidate sets exceed the cap {candidate_cap}; largest classes have sizes {sizes}"
        )

    candidates: List[CandidateSet] = []
    for index, cls in enumerate(classes):
        members = sorted(cls)
        for size in range(2, min(k, len(members)) + 1):
            for combo in combinations(members, size):
                tree = steiner_tree_exact(inst, combo, k_max=k_max)
                if tree is None:
                    continue
                candidates.append(
                    CandidateSet(
                        vertices=combo,
                        steiner_cost=tree.total_cost,
                        steiner_tree=tree.edge_ids,
                        class_witness=index,
                    )
                )
    logger.info(f"Enumerated {len(candidates)} candidate set(s) from {len(classes)} class(es) with k={k}")
    return candidates


def gain_of(trace: MoatTrace, sets: Sequence[CandidateSet]) -> Fraction:
    """
    Gain of contracting ``sets`` against ``trace``.

    Raises:
        NotActivelyConnectedError: If a set spans several actively connected classes
    """
    return GainEvaluator(trace).gain(c.vertices for c in sets)


class _Selection:
    """Running greedy selection, kept pairwise disjoint by merging overlaps."""

    def __init__(self, evaluator: GainEvaluator, merge_set: "_MergeSet") -> None:
        self.evaluator = evaluator
        self.merge_set = merge_set
        self.sets: List[CandidateSet] = []
        self.state = evaluator.empty_state()

    def copy(self) -> "_Selection":
        clone = _Selection(self.evaluator, self.merge_set)
        clone.sets = list(self.sets)
        clone.state = self.state.copy()
        return clone

    @property
    def cost(self) -> Fraction:
        return sum((c.steiner_cost for c in self.sets), Fraction(0))

    @property
    def profit(self) -> Fraction:
        return self.state.value - self.cost

    def add(self, candidate: CandidateSet) -> bool:
        incoming = set(candidate.vertices)
        overlapping = [c for c in self.sets if incoming.intersection(c.vertices)]
        if not overlapping:
            self.sets.append(candidate)
            self.evaluator.commit(self.state, candidate.vertices)
            return True
        union = incoming.union(*(c.vertices for c in overlapping))
        merged = self.merge_set(frozenset(union), candidate.class_witness)
        if merged is None:
            return False
        self.sets = [c for c in self.sets if c not in overlapping] + [merged]
        self.evaluator.commit(self.state, merged.vertices)
        return True

    def plan(self) -> ContractionPlan:
        ordered = tuple(sorted(self.sets, key=lambda c: c.vertices))
        return ContractionPlan(selected=ordered, gain_value=self.state.value, cost_value=self.cost)


class _MergeSet:
    """Builds (and caches) the candidate for a union of overlapping picks."""

    def __init__(self, inst: Optional[Instance], k_max: int) -> None:
        self.inst = inst
        self.k_max = k_max
        self._cache: Dict[FrozenSet[int], Optional[CandidateSet]] = {}

    def __call__(self, vertices: FrozenSet[int], class_witness: int) -> Optional[CandidateSet]:
        if self.inst is None or len(vertices) > self.k_max:
            return None
        if vertices not in self._cache:
            tree = steiner_tree_exact(self.inst, vertices, k_max=self.k_max)
            self._cache[vertices] = None if tree is None else CandidateSet(
                vertices=tuple(sorted(vertices)),
                steiner_cost=tree.total_cost,
                steiner_tree=tree.edge_ids,
                class_witness=class_witness,
            )
        return self._cache[vertices]


def _density_key(marginal: Fraction, cost: Fraction, index: int) -> Tuple[int, Fraction, int]:
    # zero-cost candidates outrank every finite density
    if cost == 0:
        return (1, marginal, -index)
    return (0, marginal / cost, -index)


def _heap_entry(key: Tuple[int, Fraction, int]) -> Tuple[int, Fraction, int]:
    tier, density, negated_index = key
    return (-tier, -density, -negated_index)


def _greedy(
    start: _Selection,
    candidates: Sequence[CandidateSet],
    pool: Sequence[int],
) -> _Selection:
    """
    Density greedy from ``start``; returns the best prefix by profit.

    Marginals never grow as the selection coarsens the active blocks, so
    stale heap keys are upper bounds and the lazy pop yields the exact argmax.
    """
    current = start.copy()
    best = current.copy()
    heap: List[Tuple[Tuple[int, Fraction, int], int]] = []
    for index in pool:
        cand = candidates[index]
        marginal = current.evaluator.marginal(current.state, cand.vertices)
        if marginal > 0:
            heap.append((_heap_entry(_density_key(marginal, cand.steiner_cost, index)), index))
    heapq.heapify(heap)
    while heap:
        _, index = heapq.heappop(heap)
        cand = candidates[index]
        marginal = current.evaluator.marginal(current.state, cand.vertices)
        if marginal <= 0:
            continue
        entry = _heap_entry(_density_key(marginal, cand.steiner_cost, index))
        if heap and heap[0][0] < entry:
            heapq.heappush(heap, (entry, index))
            continue
        if not current.add(cand):
            logger.debug(f"Skipping candidate {cand.vertices}: overlap union too large")
            continue
        if current.profit > best.profit:
            best = current.copy()
    return best


def _seed_depth(highs: Sequence[Sequence[int]], target: int, seed_budget: int) -> int:
    """Largest depth <= target whose seeds over all thresholds fit in ``seed_budget``."""
    depth = 0
    widest = max((len(h) for h in highs), default=0)
    for d in range(1, min(target, widest) + 1):
        needed = sum(math.comb(len(h), s) for h in highs for s in range(1, d + 1))
        if needed > seed_budget:
            break
        depth = d
    return depth


def maximize_profit(
    candidates: Sequence[CandidateSet],
    trace: MoatTrace,
    alpha: Fraction,
    gamma: Fraction,
    inst: Optional[Instance] = None,
    k_max: int = K_MAX_DEFAULT,
    enumeration_depth: Optional[int] = None,
    seed_budget: int = DEFAULT_SEED_BUDGET,
) -> ContractionPlan:
    """
    Pick candidates maximizing gain minus cost.

    For every cost threshold e0 and every seed of at most ``ceil(1/gamma)``
    candidates costlier than e0, run the density greedy over the candidates
    no costlier than e0 and keep the best prefix. Every single candidate is
    tried on its own as well, so the result is never worse than the empty plan
    or any one candidate.

    The seed size is the largest depth, up to ``ceil(1/gamma)`` and
    ``enumeration_depth``, for which the seeds of all thresholds together
    number at most ``seed_budget``. Depth 0 is the plain threshold greedy.

    ``alpha`` only enters the approximation guarantee, not the computation.

    Args:
        candidates: Output of :func:`enumerate_restricted_sets`
        trace: The extended run the candidates came from
        alpha: Greedy budget fraction in [0, 1]
        gamma: Partial-enumeration granularity, > 0
        inst: Instance, needed to merge overlapping picks
        k_max: Largest merged set
        enumeration_depth: Optional cap on the seed size
        seed_budget: Largest number of seeded greedy runs

    Returns:
        The best ContractionPlan found
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if seed_budget < 0 or (enumeration_depth is not None and enumeration_depth < 0):
        raise ValueError("seed_budget and enumeration_depth must be nonnegative")
    evaluator = GainEvaluator(trace)
    blank = _Selection(evaluator, _MergeSet(inst, k_max))
    if not candidates:
        return blank.plan()

    empty = evaluator.empty_state()
    useful = [i for i, c in enumerate(candidates) if evaluator.marginal(empty, c.vertices) > 0]
    thresholds = sorted({candidates[i].steiner_cost for i in useful})
    lows = [[i for i in useful if candidates[i].steiner_cost <= t] for t in thresholds]
    highs = [[i for i in useful if candidates[i].steiner_cost > t] for t in thresholds]
    target = math.ceil(1 / gamma)
    if enumeration_depth is not None:
        target = min(target, enumeration_depth)
    depth = _seed_depth(highs, target, seed_budget)
    if depth < min(target, max((len(h) for h in highs), default=0)):
        logger.info(f"Partial enumeration limited to depth {depth} of {target} by seed budget {seed_budget}")
    ceiling = evaluator.max_gain()
    logger.debug(f"{len(useful)} candidate(s) with positive gain, {len(thresholds)} threshold(s), seed depth {depth}")

    best = blank
    for index in useful:
        single = blank.copy()
        single.add(candidates[index])
        if single.profit > best.profit:
            best = single
    for low, high in zip(lows, highs):
        for size in range(0, min(depth, len(high)) + 1):
            for seed in combinations(high, size):
                start = blank.copy()
                if not all(start.add(candidates[i]) for i in seed):
                    continue
                # each seed set ends inside one final set; Steiner cost is monotone
                floor = max((c.steiner_cost for c in start.sets), default=Fraction(0))
                if ceiling - floor <= best.profit:
                    continue
                result = _greedy(start, candidates, low)
                if start.profit > result.profit:
                    result = start
                if result.profit > best.profit:
                    best = result

    plan = best.plan()
    logger.info(
        f"Contraction plan: {len(plan.selected)} set(s), gain {plan.gain_value}, "
        f"cost {plan.cost_value}, profit {plan.profit}"
    )
    return plan


def contracted_timed_run(
    inst: Instance,
    trace: MoatTrace,
    vertex_sets: Sequence[Iterable[int]],
) -> Tuple[ContractedInstance, MoatTrace]:
    """
    Contract ``vertex_sets`` and re-run timed growth with inherited deadlines.

    A contracted vertex takes the largest deactivation time of its members;
    for actively connected sets all members share it.
    """
    contracted = contract_instance(inst, vertex_sets)
    deac: Dict[int, Fraction] = {}
    for v, w in contracted.vertex_map.items():
        deac[w] = max(deac.get(w, Fraction(0)), trace.deactivation.get(v, Fraction(0)))
    return contracted, run_timed_moat(contracted.instance, deac)


def build_f2(inst: Instance, trace: MoatTrace, plan: ContractionPlan) -> SolutionForest:
    """
    Forest from contracting the plan's sets.

    The contracted instance is solved by a timed re-run plus reverse delete,
    lifted back, and joined with the plan's Steiner trees.
    """
    contracted, timed = contracted_timed_run(inst, trace, plan.vertex_sets)
    trees = [eid for cand in plan.selected for eid in cand.steiner_tree]
    forest = lifted_forest(inst, contracted, timed, trees)
    logger.info(f"F2: {len(forest.edge_ids)} edge(s), cost {forest.total_cost}")
    return forest
