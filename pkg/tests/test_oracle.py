"""
Unit tests for the exact oracles and the trace checker.
"""
import itertools
from fractions import Fraction
from typing import Callable

import pytest
from conftest import A1, A2, A3, B2

from exceptions import ConfigurationError, OracleLimitError
from pipeline.autarkic import enumerate_tuples
from pipeline.instance import Instance
from pipeline.moat import run_extended_moat, run_timed_moat
from pipeline.oracle import OracleLimits, brute_force_max_profit, exact_steiner_forest, verify_ledgers


@pytest.mark.unit
class TestOracleLimits:
    def test_defaults(self) -> None:
        """Test the default oracle limits."""
        limits = OracleLimits()
        assert (limits.max_terminals, limits.max_tuples, limits.time_budget) == (10, 12, 60.0)

    @pytest.mark.parametrize("values", [{"max_terminals": 0}, {"max_tuples": -1}, {"time_budget": 0}])
    def test_invalid_limits(self, values) -> None:
        """Test that invalid limits raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            OracleLimits.create(**values)


@pytest.mark.unit
class TestExactSteinerForest:
    def test_matching_uses_the_direct_edge(self, matching_k3: Instance) -> None:
        """Test the exact forest of the matching gadget."""
        forest = exact_steiner_forest(matching_k3, OracleLimits())
        assert forest.feasible
        assert forest.total_cost == 5
        assert forest.edge_ids == (0, 1, 2, 7)

    def test_deactivation_needs_the_whole_path(self, deactivation: Instance) -> None:
        """Test the exact cost of the deactivation example."""
        assert exact_steiner_forest(deactivation, OracleLimits()).total_cost == 109

    def test_single_edge(self, single_edge: Instance) -> None:
        """Test the exact cost of a single edge."""
        assert exact_steiner_forest(single_edge, OracleLimits()).total_cost == Fraction(5, 2)

    def test_no_demands(self) -> None:
        """Test that no demands give the empty forest."""
        forest = exact_steiner_forest(Instance(vertex_count=3), OracleLimits())
        assert forest.edge_ids == ()

    def test_terminal_limit(self, matching_k3: Instance) -> None:
        """Test the terminal limit."""
        with pytest.raises(OracleLimitError):
            exact_steiner_forest(matching_k3, OracleLimits(max_terminals=7))

    def test_time_budget(self, matching_k3: Instance, mocker) -> None:
        """Test that an exhausted time budget raises OracleLimitError."""
        mocker.patch("pipeline.oracle.time.monotonic", side_effect=itertools.count(0.0, 100.0))
        with pytest.raises(OracleLimitError, match="time budget"):
            exact_steiner_forest(matching_k3, OracleLimits(time_budget=60.0))

    @pytest.mark.parametrize("seed", range(6))
    def test_never_worse_than_the_pipeline_forests(self, seed: int, random_instance: Callable[..., Instance]) -> None:
        """Test that the exact forest never costs more than F1, F2 or F3."""
        from pipeline.moat import extract_forest

        inst = random_instance(seed, n=7, demands=2)
        exact = exact_steiner_forest(inst, OracleLimits())
        assert exact.feasible
        assert exact.total_cost <= extract_forest(inst, run_extended_moat(inst, Fraction(0))).total_cost


@pytest.mark.unit
class TestBruteForceMaxProfit:
    def test_matching_skips_the_zero_profit_pair(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test exhaustive search on the matching gadget."""
        tuples = enumerate_tuples(matching_k3, run_extended_moat(matching_k3, epsilon))
        coll = brute_force_max_profit(tuples, OracleLimits())
        assert [t.member_set_ids for t in coll.tuples] == [(2, 5), (3, 6), (4, 7)]
        assert coll.total_profit == 3

    def test_tuple_limit(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test the tuple limit of the exhaustive search."""
        tuples = enumerate_tuples(matching_k3, run_extended_moat(matching_k3, epsilon))
        with pytest.raises(OracleLimitError):
            brute_force_max_profit(tuples, OracleLimits(max_tuples=2))


@pytest.mark.unit
class TestVerifyLedgers:
    def test_matching(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test a clean ledger on the matching gadget."""
        assert verify_ledgers(matching_k3, run_extended_moat(matching_k3, epsilon)) == []

    def test_deactivation_with_plans(self, deactivation: Instance) -> None:
        """Test the contraction checks on the deactivation example."""
        trace = run_extended_moat(deactivation, Fraction(1, 10))
        assert verify_ledgers(deactivation, trace) == []
        assert verify_ledgers(deactivation, trace, plan_sets=[[A2, B2]]) == []

    def test_plan_across_classes_is_reported(self, deactivation: Instance) -> None:
        """Test that a plan spanning two classes is reported."""
        trace = run_extended_moat(deactivation, Fraction(1, 10))
        violations = verify_ledgers(deactivation, trace, plan_sets=[[A1, A2, B2, A3]])
        assert len(violations) == 1
        assert violations[0].startswith("contraction:")

    def test_timed_trace(self, deactivation: Instance) -> None:
        """Test the checks on a timed trace."""
        trace = run_extended_moat(deactivation, Fraction(1, 10))
        assert verify_ledgers(deactivation, run_timed_moat(deactivation, trace.deactivation)) == []

    def test_corrupted_dual_is_caught(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test that a tampered dual value is reported."""
        trace = run_extended_moat(matching_k3, epsilon)
        bad = trace.support[0].model_copy(update={"y": Fraction(1)})
        corrupted = trace.model_copy(update={"support": (bad,) + trace.support[1:]})
        violations = verify_ledgers(matching_k3, corrupted)
        assert any(v.startswith("set 0") for v in violations)
        assert any(v.startswith("dual-identity") for v in violations)

    def test_corrupted_budget_is_caught(self, matching_k3: Instance, epsilon: Fraction) -> None:
        """Test that a tampered budget is reported."""
        trace = run_extended_moat(matching_k3, epsilon)
        corrupted = trace.model_copy(update={"budgets_final": {8: Fraction(1, 3)}})
        assert verify_ledgers(matching_k3, corrupted) == ["budget: set 8 ends with budget 1/3"]

    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("epsilon", [Fraction(0), Fraction(1, 10)])
    def test_random_traces(self, seed: int, epsilon: Fraction, random_instance: Callable[..., Instance]) -> None:
        """Test clean ledgers on random instances."""
        inst = random_instance(seed, n=8, demands=3, metric=seed % 2 == 0)
        assert verify_ledgers(inst, run_extended_moat(inst, epsilon)) == []
