"""
Unit tests for the gain functional, candidate enumeration and the contraction plan.
"""
from fractions import Fraction
from itertools import islice, permutations
from typing import Callable

import pytest
from conftest import A1, A2, A3, B1, B2

from exceptions import CandidateLimitError, NotActivelyConnectedError, TerminalLimitError
from pipeline.gain import (
    CandidateSet,
    GainEvaluator,
    build_f2,
    contracted_timed_run,
    enumerate_restricted_sets,
    gain_of,
    maximize_profit,
)
from pipeline.instance import Instance
from pipeline.moat import Interval, MoatTrace, SetKind, SupportSet, dual_summary, extract_forest, run_extended_moat


@pytest.mark.unit
class TestGainFunctional:
    def test_middle_pair_saves_its_shared_growth(self, deactivation: Instance) -> None:
        """Test the gain of each demand pair in the deactivation example."""
        evaluator = GainEvaluator(run_extended_moat(deactivation, Fraction(1, 10)))
        assert evaluator.gain([[A2, B2]]) == 2
        assert evaluator.gain([[A1, B1]]) == 100

    def test_shared_component_is_not_enough(self, deactivation: Instance) -> None:
        """Test that a set spanning two classes raises NotActivelyConnectedError."""
        trace = run_extended_moat(deactivation, Fraction(1, 10))
        with pytest.raises(NotActivelyConnectedError):
            GainEvaluator(trace).gain([[A1, A2, B2, A3]])

    def test_gain_of_candidate_sets(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test gain_of on candidate sets."""
        trace = run_extended_moat(matching_k3, epsilon)
        candidate = CandidateSet(vertices=(1, 2), steiner_cost=2, steiner_tree=(7,), class_witness=0)
        assert gain_of(trace, [candidate]) == 1
        assert gain_of(trace, []) == 0

    def test_max_gain_merges_every_interval(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test that the whole vertex set reaches the maximum gain."""
        evaluator = GainEvaluator(run_extended_moat(matching_k3, epsilon))
        assert evaluator.max_gain() == 7
        assert evaluator.gain([range(1, 9)]) == 7

    def test_marginal_does_not_change_the_state(self, deactivation: Instance) -> None:
        """Test marginal against commit."""
        evaluator = GainEvaluator(run_extended_moat(deactivation, Fraction(1, 10)))
        state = evaluator.empty_state()
        assert evaluator.marginal(state, [A2, B2]) == 2
        assert state.value == 0
        evaluator.commit(state, [A2, B2])
        assert state.value == 2
        assert evaluator.marginal(state, [A2, B2]) == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_gain_is_monotone_and_submodular(self, seed: int, random_instance: Callable[..., Instance]) -> None:
        """Test monotonicity and submodularity on permuted triples."""
        inst = random_instance(seed, n=7, demands=3)
        trace = run_extended_moat(inst, Fraction(1, 10))
        evaluator = GainEvaluator(trace)
        sets = [c.vertices for c in enumerate_restricted_sets(trace, inst, 2)][:6]
        for x, y, z in islice(permutations(sets, 3), 60):
            assert evaluator.gain([x, y]) >= evaluator.gain([x])
            assert evaluator.gain([x, z]) - evaluator.gain([x]) >= evaluator.gain([x, y, z]) - evaluator.gain([x, y])


@pytest.mark.unit
class TestContractedTimedRun:
    @pytest.mark.parametrize("vertex_set", [[A1, B1], [A2, B2]])
    def test_dual_drops_by_half_the_gain(self, deactivation: Instance, vertex_set) -> None:
        """Test the dual identity after contracting one pair."""
        trace = run_extended_moat(deactivation, Fraction(1, 10))
        _, timed = contracted_timed_run(deactivation, trace, [vertex_set])
        gain = GainEvaluator(trace).gain([vertex_set])
        assert 2 * dual_summary(timed).y_total == 2 * dual_summary(trace).y_total - gain

    def test_matching_terminal_pair(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test contracting one terminal pair of the matching gadget."""
        trace = run_extended_moat(matching_k3, epsilon)
        contracted, timed = contracted_timed_run(matching_k3, trace, [[1, 2]])
        assert contracted.instance.vertex_count == 7
        assert dual_summary(timed).y_total == dual_summary(trace).y_total - Fraction(1, 2)


@pytest.mark.unit
class TestEnumerateRestrictedSets:
    def test_pairs_of_one_class(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test the pairs of the single class of the matching gadget."""
        candidates = enumerate_restricted_sets(run_extended_moat(matching_k3, epsilon), matching_k3, 2)
        assert len(candidates) == 28
        st = next(c for c in candidates if c.vertices == (1, 2))
        assert st.steiner_cost == 2
        assert st.steiner_tree == (7,)

    def test_sets_stay_inside_classes(self, deactivation: Instance) -> None:
        """Test that candidates never span two classes."""
        candidates = enumerate_restricted_sets(run_extended_moat(deactivation, Fraction(1, 10)), deactivation, 3)
        assert (A2, B2) in [c.vertices for c in candidates]
        assert all(not ({A2, B2} & set(c.vertices)) or set(c.vertices) == {A2, B2} for c in candidates)
        # one class of four gives 6 pairs and 4 triples, the other one pair
        assert len(candidates) == 11

    def test_candidate_cap(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test that too many candidates raise CandidateLimitError."""
        with pytest.raises(CandidateLimitError):
            enumerate_restricted_sets(run_extended_moat(matching_k3, epsilon), matching_k3, 2, candidate_cap=10)

    def test_size_limits(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test the bounds on the set size."""
        trace = run_extended_moat(matching_k3, epsilon)
        with pytest.raises(TerminalLimitError):
            enumerate_restricted_sets(trace, matching_k3, 7)
        with pytest.raises(ValueError):
            enumerate_restricted_sets(trace, matching_k3, 1)


@pytest.mark.unit
class TestMaximizeProfit:
    def test_no_profitable_set_in_the_matching_gadget(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test that no candidate pays for itself on the matching gadget."""
        trace = run_extended_moat(matching_k3, epsilon)
        candidates = enumerate_restricted_sets(trace, matching_k3, 2)
        plan = maximize_profit(candidates, trace, Fraction(1, 2), Fraction(1, 2), inst=matching_k3)
        assert plan.selected == ()
        assert plan.profit == 0

    def test_empty_candidates(self, deactivation: Instance) -> None:
        """Test that no candidates give the empty plan."""
        plan = maximize_profit([], run_extended_moat(deactivation, Fraction(1, 10)), Fraction(1, 2), Fraction(1, 2))
        assert plan.selected == ()

    def test_parameter_ranges(self, deactivation: Instance) -> None:
        """Test that alpha and gamma are range checked."""
        trace = run_extended_moat(deactivation, Fraction(1, 10))
        with pytest.raises(ValueError):
            maximize_profit([], trace, Fraction(3, 2), Fraction(1, 2))
        with pytest.raises(ValueError):
            maximize_profit([], trace, Fraction(1, 2), Fraction(0))

    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("depth", [0, 1])
    def test_plan_beats_every_single_candidate(
        self, seed: int, depth: int, random_instance: Callable[..., Instance]
    ) -> None:
        """Test that the disjoint plan beats every single candidate."""
        inst = random_instance(seed, n=8, demands=3)
        trace = run_extended_moat(inst, Fraction(1, 20))
        candidates = enumerate_restricted_sets(trace, inst, 3 - depth)
        plan = maximize_profit(
            candidates, trace, Fraction(1, 2), Fraction(1, 2), inst=inst, enumeration_depth=depth
        )
        evaluator = GainEvaluator(trace)
        assert plan.profit >= 0
        assert plan.gain_value == evaluator.gain(plan.vertex_sets)
        assert plan.cost_value == sum((c.steiner_cost for c in plan.selected), Fraction(0))
        for c in candidates:
            assert plan.profit >= evaluator.gain([c.vertices]) - c.steiner_cost
        seen = set()
        for vertices in plan.vertex_sets:
            assert not seen & set(vertices)
            seen.update(vertices)

    def test_is_deterministic(self, random_instance: Callable[..., Instance]) -> None:
        """Test that two runs pick the same plan."""
        inst = random_instance(4, n=8, demands=3)
        trace = run_extended_moat(inst, Fraction(1, 20))
        candidates = enumerate_restricted_sets(trace, inst, 3)
        first = maximize_profit(candidates, trace, Fraction(1, 2), Fraction(1, 2), inst=inst)
        second = maximize_profit(candidates, trace, Fraction(1, 2), Fraction(1, 2), inst=inst)
        assert first.vertex_sets == second.vertex_sets
        assert first.profit == second.profit


def _coverage_trace() -> MoatTrace:
    """
    Hand-built trace whose gain is a weighted coverage.

    Sets A = {1, 2}, B = {3, 4} and C = {5, 6}: A and B both merge the two
    active sets of [0, 2), A and C those of [2, 4); B alone merges [4, 11/2)
    and C alone [11/2, 7). So gain(A) = 8, gain(B) = gain(C) = 7,
    gain(A, B) = 11 and gain(B, C) = 14.
    """
    groups = [(1, 3), (2, 4), (1, 5), (2, 6), (3,), (4,), (5,), (6,)]
    support = tuple(
        SupportSet(id=i, vertices=v, birth=0, growth_end=0, y=0, kind=SetKind.SEP) for i, v in enumerate(groups)
    )
    bounds = [Fraction(0), Fraction(2), Fraction(4), Fraction(11, 2), Fraction(7)]
    timeline = tuple(
        Interval(start=bounds[i], end=bounds[i + 1], active=(2 * i, 2 * i + 1)) for i in range(4)
    )
    return MoatTrace(
        epsilon=Fraction(0),
        vertex_count=6,
        support=support,
        timeline=timeline,
        deactivation={},
        merge_events=(),
        budgets_final={},
        tight_edges=(),
    )


COVERAGE_CANDIDATES = [
    CandidateSet(vertices=(1, 2), steiner_cost=3, steiner_tree=(), class_witness=0),
    CandidateSet(vertices=(3, 4), steiner_cost=4, steiner_tree=(), class_witness=0),
    CandidateSet(vertices=(5, 6), steiner_cost=4, steiner_tree=(), class_witness=0),
]


@pytest.mark.unit
class TestSeededEnumeration:
    """A is densest (8/3) but B and C together beat it by one."""

    def test_coverage_gains(self) -> None:
        """The hand-built trace has the advertised gains."""
        evaluator = GainEvaluator(_coverage_trace(), classes=[frozenset(range(1, 7))])
        assert evaluator.max_gain() == 14
        assert [evaluator.marginal(evaluator.empty_state(), c.vertices) for c in COVERAGE_CANDIDATES] == [8, 7, 7]
        assert evaluator.gain([(1, 2), (3, 4)]) == 11
        assert evaluator.gain([(3, 4), (5, 6)]) == 14

    @pytest.mark.parametrize(
        "options",
        [
            {"enumeration_depth": 0},
            {"enumeration_depth": 1},
            {"seed_budget": 2},
            {"seed_budget": 0},
        ],
    )
    def test_threshold_greedy_stops_at_the_densest_set(self, options) -> None:
        """Without two-element seeds the plan is A alone, profit 5."""
        plan = maximize_profit(COVERAGE_CANDIDATES, _coverage_trace(), Fraction(1, 2), Fraction(1, 2), **options)
        assert plan.vertex_sets == [(1, 2)]
        assert plan.profit == 5

    def test_default_depth_recovers_the_optimum(self) -> None:
        """ceil(1/gamma) = 2 seeds {B, C}, profit 6."""
        plan = maximize_profit(COVERAGE_CANDIDATES, _coverage_trace(), Fraction(1, 2), Fraction(1, 2))
        assert plan.vertex_sets == [(3, 4), (5, 6)]
        assert plan.gain_value == 14
        assert plan.cost_value == 8
        assert plan.profit == 6

    def test_small_gamma_is_capped_by_the_candidates(self) -> None:
        """A depth of 100 still only seeds the two costlier sets."""
        plan = maximize_profit(COVERAGE_CANDIDATES, _coverage_trace(), Fraction(9, 100), Fraction(1, 100))
        assert plan.profit == 6

    def test_negative_budget_is_rejected(self) -> None:
        """seed_budget and enumeration_depth must be nonnegative."""
        with pytest.raises(ValueError):
            maximize_profit(COVERAGE_CANDIDATES, _coverage_trace(), Fraction(1, 2), Fraction(1, 2), seed_budget=-1)
        with pytest.raises(ValueError):
            maximize_profit(
                COVERAGE_CANDIDATES, _coverage_trace(), Fraction(1, 2), Fraction(1, 2), enumeration_depth=-1
            )


@pytest.mark.unit
def test_empty_plan_reproduces_the_moat_forest(matching_k3: Instance, epsilon: Fraction) -> None:
    """Test that the empty plan gives back the moat forest."""
    trace = run_extended_moat(matching_k3, epsilon)
    plan = maximize_profit([], trace, Fraction(1, 2), Fraction(1, 2))
    f2 = build_f2(matching_k3, trace, plan)
    assert f2.feasible
    assert f2.edge_ids == extract_forest(matching_k3, trace).edge_ids
    assert f2.total_cost == 7
