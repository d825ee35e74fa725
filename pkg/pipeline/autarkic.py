"""
Pipeline module for autarkic tuples.

An autarkic pair is two disjoint support sets, active at a common time, that
separate exactly the same nonempty demand set. An autarkic triple is three
such sets, each separating something, whose union separates nothing. Each
tuple gets a connector (a cheapest tree on designated demand endpoints);
a crossing-free collection of maximum profit is found by a dynamic program
over the laminar containment order of tuples, and the third candidate forest
contracts the chosen connectors and solves the rest with moat growing.
"""
import logging
from collections import defaultdict
from enum import Enum
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from exceptions import LaminarityError
from pipeline.instance import (
    ContractedInstance,
    Instance,
    SolutionForest,
    contract_instance,
    shortest_path,
    steiner_tree_exact,
)
from pipeline.moat import MoatTrace, SetKind, SupportSet, lifted_forest, run_extended_moat
from utils.models import FrozenModel
from utils.rational import Rational

logger: logging.Logger = logging.getLogger(__name__)

DEFAULT_TRIPLE_CAP = 20_000
# cheapest demands tried per member pair of a triple
REPRESENTATIVES_PER_PAIR = 8
MAX_REPRESENTATIVE_COMBINATIONS = 64


class Order(str, Enum):
    SUBSET = "subset"
    SUPERSET = "superset"
    DISJOINT = "disjoint"


class Representative(FrozenModel):
    """Designated demand of a tuple; ``role`` is ``pair`` or the member positions, e.g. ``1-3``."""

    demand_index: int
    a: int
    b: int
    role: str


class AutarkicTuple(FrozenModel):
    member_set_ids: Tuple[int, ...]
    members: Tuple[Tuple[int, ...], ...]
    witness_time: Rational
    sep_union: Tuple[int, ...]
    representatives: Tuple[Representative, ...]
    connector: Tuple[int, ...]
    cost: Rational
    coverage: Rational
    profit: Rational

    @property
    def is_triple(self) -> bool:
        return len(self.member_set_ids) == 3

    @property
    def size(self) -> int:
        return sum(len(m) for m in self.members)

    def connector_vertices(self, inst: Instance) -> Set[int]:
        vertices = {x for rep in self.representatives for x in (rep.a, rep.b)}
        for eid in self.connector:
            vertices.update((inst.edges[eid].u, inst.edges[eid].v))
        return vertices


class AutarkicCollection(FrozenModel):
    """Crossing-free tuples; totals are sums over members."""

    tuples: Tuple[AutarkicTuple, ...] = ()
    total_coverage: Rational = Fraction(0)
    total_cost: Rational = Fraction(0)
    total_profit: Rational = Fraction(0)

    @classmethod
    def of(cls, tuples: Sequence[AutarkicTuple]) -> "AutarkicCollection":
        ordered = tuple(sorted(tuples, key=lambda t: t.member_set_ids))
        return cls(
            tuples=ordered,
            total_coverage=sum((t.coverage for t in ordered), Fraction(0)),
            total_cost=sum((t.cost for t in ordered), Fraction(0)),
            total_profit=sum((t.profit for t in ordered), Fraction(0)),
        )

    @property
    def connector_edges(self) -> Set[int]:
        return {eid for t in self.tuples for eid in t.connector}


def _common_start(sets: Sequence[SupportSet]) -> Optional[Fraction]:
    """Earliest instant where all sets are active, or None."""
    start = max(s.birth for s in sets)
    if start < min(s.growth_end for s in sets):
        return start
    return None


def _disjoint(sets: Sequence[SupportSet]) -> bool:
    return all(not (a.vertex_set & b.vertex_set) for a, b in combinations(sets, 2))


class _TupleBuilder:
    """Computes representatives, connectors and coverage for one trace."""

    def __init__(self, inst: Instance, trace: MoatTrace) -> None:
        self.inst = inst
        self.coverage_of: Dict[Tuple[int, ...], Fraction] = defaultdict(Fraction)
        for s in trace.grown_sets:
            self.coverage_of[s.sep_fingerprint] += s.y
        self._distance: Dict[int, Tuple[Fraction, Tuple[int, ...]]] = {}

    def demand_path(self, index: int) -> Tuple[Fraction, Tuple[int, ...]]:
        if index not in self._distance:
            demand = self.inst.demands[index]
            path = shortest_path(self.inst, demand.a, demand.b)
            if path is None:
                raise ValueError(f"demand {index} has no path; validate the instance first")
            self._distance[index] = (path.distance, path.edge_ids)
        return self._distance[index]

    def cheapest(self, demands: Set[int], limit: int) -> List[int]:
        return sorted(demands, key=lambda i: (self.demand_path(i)[0], i))[:limit]

    def pair(self, sets: Sequence[SupportSet], witness: Fraction) -> AutarkicTuple:
        fingerprint = sets[0].sep_fingerprint
        index = self.cheapest(set(fingerprint), 1)[0]
        distance, edges = self.demand_path(index)
        demand = self.inst.demands[index]
        reps = (Representative(demand_index=index, a=demand.a, b=demand.b, role="pair"),)
        return self._finish(sets, witness, reps, edges, distance)

    def triple(self, sets: Sequence[SupportSet], witness: Fraction) -> Optional[AutarkicTuple]:
        roles: List[str] = []
        choices: List[List[int]] = []
        for i, j in combinations(range(3), 2):
            shared = set(sets[i].sep_fingerprint) & set(sets[j].sep_fingerprint)
            if shared:
                roles.append(f"{i + 1}-{j + 1}")
                choices.append(self.cheapest(shared, REPRESENTATIVES_PER_PAIR))
        combos = 1
        for options in choices:
            combos *= len(options)
        if combos > MAX_REPRESENTATIVE_COMBINATIONS:
            logger.debug(f"Triple {[s.id for s in sets]}: {combos} representative choices, using cheapest per pair")
            choices = [options[:1] for options in choices]

        best: Optional[Tuple[Fraction, Tuple[int, ...], Tuple[int, ...]]] = None
        for chosen in product(*choices):
            terminals = {x for i in chosen for x in (self.inst.demands[i].a, self.inst.demands[i].b)}
            tree = steiner_tree_exact(self.inst, terminals)
            if tree is None:
                continue
            if best is None or tree.total_cost < best[0]:
                best = (tree.total_cost, tree.edge_ids, chosen)
        if best is None:
            return None
        cost, edges, chosen = best
        reps = tuple(
            Representative(demand_index=i, a=self.inst.demands[i].a, b=self.inst.demands[i].b, role=role)
            for i, role in zip(chosen, roles)
        )
        return self._finish(sets, witness, reps, edges, cost)

    def _finish(
        self,
        sets: Sequence[SupportSet],
        witness: Fraction,
        reps: Tuple[Representative, ...],
        connector: Tuple[int, ...],
        cost: Fraction,
    ) -> AutarkicTuple:
        fingerprints = {s.sep_fingerprint for s in sets}
        coverage = sum((self.coverage_of[fp] for fp in fingerprints), Fraction(0))
        return AutarkicTuple(
            member_set_ids=tuple(s.id for s in sets),
            members=tuple(s.vertices for s in sets),
            witness_time=witness,
            sep_union=tuple(sorted({d for s in sets for d in s.sep_fingerprint})),
            representatives=reps,
            connector=tuple(sorted(connector)),
            cost=cost,
            coverage=coverage,
            profit=2 * coverage - cost,
        )


def enumerate_tuples(
    inst: Instance,
    trace: MoatTrace,
    include_triples: bool = True,
    triple_cap: int = DEFAULT_TRIPLE_CAP,
) -> List[AutarkicTuple]:
    """
    All autarkic pairs (and triples) over the grown sets of ``trace``.

    Args:
        inst: Instance the trace was run on
        trace: Extended run
        include_triples: Also enumerate triples
        triple_cap: Stop collecting triples after this many (a warning is logged)

    Returns:
        Pairs first, then triples, each ordered by member set ids
    """
    builder = _TupleBuilder(inst, trace)
    separating = [s for s in trace.grown_sets if s.kind is SetKind.SEP]

    by_fingerprint: Dict[Tuple[int, ...], List[SupportSet]] = defaultdict(list)
    for s in separating:
        by_fingerprint[s.sep_fingerprint].append(s)
    pairs: List[AutarkicTuple] = []
    for group in by_fingerprint.values():
        for a, b in combinations(group, 2):
            witness = _common_start((a, b))
            if witness is not None and _disjoint((a, b)):
                pairs.append(builder.pair((a, b), witness))
    pairs.sort(key=lambda t: t.member_set_ids)

    triples: List[AutarkicTuple] = []
    if include_triples:
        triples = _enumerate_triples(inst, separating, builder, triple_cap)
    logger.info(f"Enumerated {len(pairs)} autarkic pair(s) and {len(triples)} triple(s)")
    return pairs + triples


def _enumerate_triples(
    inst: Instance,
    separating: Sequence[SupportSet],
    builder: _TupleBuilder,
    triple_cap: int,
) -> List[AutarkicTuple]:
    triples: List[AutarkicTuple] = []
    for first, second in combinations(range(len(separating)), 2):
        a, b = separating[first], separating[second]
        if _common_start((a, b)) is None or not _disjoint((a, b)):
            continue
        for third in range(second + 1, len(separating)):
            c = separating[third]
            members = (a, b, c)
            witness = _common_start(members)
            if witness is None or not _disjoint(members):
                continue
            union = a.vertex_set | b.vertex_set | c.vertex_set
            seps = set(a.sep_fingerprint) | set(b.sep_fingerprint) | set(c.sep_fingerprint)
            if any((inst.demands[d].a in union) != (inst.demands[d].b in union) for d in seps):
                continue
            if len(triples) >= triple_cap:
                logger.warning(f"Triple cap {triple_cap} reached; remaining triples are skipped")
                return triples
            built = builder.triple(members, witness)
            if built is not None:
                triples.append(built)
    return triples


def laminar_order(p: AutarkicTuple, q: AutarkicTuple) -> Order:
    """
    Containment relation between two distinct tuples.

    Raises:
        LaminarityError: If the tuples are neither nested nor disjoint
    """
    p_sets = [frozenset(m) for m in p.members]
    q_sets = [frozenset(m) for m in q.members]

    def inside(small: List[FrozenSet[int]], large: List[FrozenSet[int]]) -> bool:
        return all(any(s <= big for big in large) for s in small)

    if inside(p_sets, q_sets):
        return Order.SUBSET
    if inside(q_sets, p_sets):
        return Order.SUPERSET
    if all(not (s & t) for s in p_sets for t in q_sets):
        return Order.DISJOINT
    logger.error(f"Tuples {p.member_set_ids} and {q.member_set_ids} are neither nested nor disjoint")
    raise LaminarityError(f"tuples {p.member_set_ids} and {q.member_set_ids} violate the laminar trichotomy")


def _crossing(p: AutarkicTuple, q: AutarkicTuple) -> bool:
    return bool(set(p.sep_union) & set(q.sep_union))


def _maximal(indices: Sequence[int], below: Dict[int, Set[int]]) -> List[int]:
    """Members of ``indices`` not strictly below another member."""
    chosen = set(indices)
    return [i for i in indices if not any(i in below[j] for j in chosen if j != i)]


def max_profit_collection(tuples: Sequence[AutarkicTuple]) -> AutarkicCollection:
    """
    Crossing-free collection of maximum total profit.

    Tuples are processed so that every tuple comes after all tuples it
    contains. For each tuple Q the best collection below Q either skips Q
    (union of the answers of its maximal children) or takes Q together with
    the answers of its maximal children that do not cross Q; Q is taken only
    when that is strictly better.
    """
    order = sorted(range(len(tuples)), key=lambda i: (tuples[i].size, -len(tuples[i].members), i))
    below: Dict[int, Set[int]] = {i: set() for i in order}
    for x, y in combinations(order, 2):
        relation = laminar_order(tuples[x], tuples[y])
        if relation is Order.SUBSET:
            below[y].add(x)
        elif relation is Order.SUPERSET:
            below[x].add(y)

    value: Dict[int, Fraction] = {}
    chosen: Dict[int, List[int]] = {}
    for q in order:
        children = _maximal(sorted(below[q]), below)
        skip_value = sum((value[c] for c in children), Fraction(0))
        skip = [i for c in children for i in chosen[c]]
        compatible = _maximal(sorted(c for c in below[q] if not _crossing(tuples[c], tuples[q])), below)
        take_value = tuples[q].profit + sum((value[c] for c in compatible), Fraction(0))
        if take_value > skip_value:
            value[q] = take_value
            chosen[q] = [q] + [i for c in compatible for i in chosen[c]]
        else:
            value[q] = skip_value
            chosen[q] = skip

    above: Set[int] = {i for q in order for i in below[q]}
    roots = [i for i in order if i not in above]
    picked = [tuples[i] for r in roots for i in chosen[r]]
    collection = AutarkicCollection.of(picked)
    logger.info(
        f"Autarkic collection: {len(collection.tuples)} tuple(s), coverage {collection.total_coverage}, "
        f"cost {collection.total_cost}, profit {collection.total_profit}"
    )
    return collection


def contracted_extended_run(
    inst: Instance,
    coll: AutarkicCollection,
    epsilon: Fraction,
) -> Tuple[ContractedInstance, MoatTrace]:
    """Contract every connector of ``coll`` and run extended moat growing on the rest."""
    contracted = contract_instance(inst, [t.connector_vertices(inst) for t in coll.tuples])
    return contracted, run_extended_moat(contracted.instance, epsilon)


def build_f3(
    inst: Instance,
    trace: MoatTrace,
    coll: AutarkicCollection,
    epsilon: Optional[Fraction] = None,
    contracted_run: Optional[Tuple[ContractedInstance, MoatTrace]] = None,
) -> SolutionForest:
    """
    Forest buying every connector of ``coll`` plus a moat-growing solution of the contracted rest.

    ``epsilon`` defaults to the trace's own epsilon (0 for timed traces).
    ``contracted_run`` reuses a result of :func:`contracted_extended_run` for
    the same collection, so callers that also need its dual total run it once.
    """
    if contracted_run is None:
        rate = epsilon if epsilon is not None else (trace.epsilon or Fraction(0))
        contracted_run = contracted_extended_run(inst, coll, rate)
    contracted, run = contracted_run
    forest = lifted_forest(inst, contracted, run, coll.connector_edges)
    logger.info(f"F3: {len(forest.edge_ids)} edge(s), cost {forest.total_cost}")
    return forest
