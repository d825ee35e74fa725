"""
Unit tests for the instance module.

Covers STP-F parsing and serialization, validation, random generation,
shortest paths, exact Steiner trees and contraction.
"""
import random
from fractions import Fraction

import pytest

from exceptions import (
    GenerationError,
    InfeasibleInstanceError,
    InstanceParseError,
    InstanceValidationError,
    TerminalLimitError,
)
from pipeline.instance import (
    Demand,
    Edge,
    GeneratorParams,
    Instance,
    SolutionForest,
    contract_instance,
    ensure_valid,
    generate_random,
    parse_instance,
    serialize_instance,
    shortest_path,
    steiner_tree_exact,
    validate,
)


@pytest.mark.unit
class TestParse:
    def test_parses_fractional_and_decimal_costs(self) -> None:
        """Test fraction and decimal edge costs."""
        inst = parse_instance("STPF 1\nSECTION Graph\nV 3\nE 1 2 3/4\nE 2 3 0.5\nEND\nEOF\n")
        assert inst.vertex_count == 3
        assert [e.cost for e in inst.edges] == [Fraction(3, 4), Fraction(1, 2)]
        assert inst.demands == ()

    def test_comments_and_missing_eof_are_accepted(self, deactivation: Instance) -> None:
        """Test comments and a missing EOF line."""
        assert deactivation.vertex_count == 6
        assert len(deactivation.edges) == 5
        assert deactivation.demands[1] == Demand(a=2, b=5)

    def test_dangling_vertex_reports_line_and_column(self, data_dir) -> None:
        """Test the position reported for an out-of-range vertex."""
        with pytest.raises(InstanceParseError) as excinfo:
            parse_instance((data_dir / "dangling.stpf").read_text())
        assert excinfo.value.line == 5
        assert excinfo.value.column == 5
        assert "dangling vertex reference 7" in excinfo.value.reason

    def test_negative_cost_is_rejected(self) -> None:
        """Test that a negative cost is a parse error."""
        with pytest.raises(InstanceParseError) as excinfo:
            parse_instance("STPF 1\nSECTION Graph\nV 2\nE 1 2 -1\nEND\n")
        assert (excinfo.value.line, excinfo.value.column) == (4, 7)
        assert "negative cost" in excinfo.value.reason

    @pytest.mark.parametrize(
        "text, line",
        [
            ("", 1),
            ("STPF 2\n", 1),
            ("STPF 1\nSECTION Demands\nD 1 2\nEND\n", 2),
            ("STPF 1\nSECTION Graph\nV 2\nE 1 2\nEND\n", 4),
            ("STPF 1\nSECTION Graph\nV 2\nE 1 2 1\n", 4),
            ("STPF 1\nSECTION Graph\nV 2\nX 1\nEND\n", 4),
        ],
    )
    def test_malformed_documents(self, text: str, line: int) -> None:
        """Test the line reported for malformed documents."""
        with pytest.raises(InstanceParseError) as excinfo:
            parse_instance(text)
        assert excinfo.value.line == line

    def test_serialize_is_canonical(self) -> None:
        """Test the canonical serialized form."""
        inst = Instance(
            vertex_count=3,
            edges=(Edge(u=3, v=2, cost=Fraction(2, 4)), Edge(u=1, v=2, cost=1)),
            demands=(Demand(a=3, b=1),),
        )
        text = serialize_instance(inst)
        assert text == (
            "STPF 1\nSECTION Graph\nV 3\nE 1 2 1\nE 2 3 1/2\nEND\n"
            "SECTION Demands\nD 1 3\nEND\nEOF\n"
        )
        assert parse_instance(text) == inst.canonical()

    def test_serialize_then_parse_is_identity_on_canonical_input(self, matching_k3: Instance) -> None:
        """Test that canonical instances survive serialization."""
        canonical = matching_k3.canonical()
        assert parse_instance(serialize_instance(canonical)) == canonical


@pytest.mark.unit
class TestValidate:
    def test_valid_instance_has_no_violations(self, matching_k3: Instance) -> None:
        """Test that a valid instance has no violations."""
        assert validate(matching_k3) == []
        ensure_valid(matching_k3)

    def test_each_violation_is_coded(self) -> None:
        """Test the code of each violation."""
        inst = Instance(
            vertex_count=3,
            edges=(Edge(u=1, v=1, cost=1), Edge(u=2, v=5, cost=1), Edge(u=2, v=3, cost=-1)),
            demands=(Demand(a=2, b=2),),
        )
        codes = sorted(v.split(":")[0] for v in validate(inst))
        assert codes == ["dangling-vertex", "negative-cost", "self-loop", "trivial-demand"]
        with pytest.raises(InstanceValidationError) as excinfo:
            ensure_valid(inst)
        assert not isinstance(excinfo.value, InfeasibleInstanceError)

    def test_demand_across_components_is_infeasible(self, data_dir) -> None:
        """Test the infeasible-demand violation."""
        inst = parse_instance((data_dir / "infeasible.stpf").read_text())
        violations = validate(inst)
        assert len(violations) == 1
        assert violations[0].startswith("infeasible-demand")
        with pytest.raises(InfeasibleInstanceError):
            ensure_valid(inst)


@pytest.mark.unit
class TestGenerate:
    def test_same_seed_same_instance(self) -> None:
        """Test that a seed fixes the generated instance."""
        params = GeneratorParams(n=10, edge_density=0.3, demand_count=4)
        assert serialize_instance(generate_random(params, 11)) == serialize_instance(generate_random(params, 11))

    @pytest.mark.parametrize("seed", range(8))
    def test_generated_instances_are_feasible(self, seed: int) -> None:
        """Test that generated instances validate."""
        params = GeneratorParams(n=9, edge_density=0.15, demand_count=3, metric=seed % 2 == 1)
        inst = generate_random(params, seed)
        assert validate(inst) == []
        assert len(inst.demands) == 3
        assert all(e.cost >= 0 for e in inst.edges)

    def test_zero_density_cannot_satisfy_demands(self) -> None:
        """Test that an edgeless graph raises GenerationError."""
        with pytest.raises(GenerationError):
            generate_random(GeneratorParams(n=4, edge_density=0.0, demand_count=1), 0)

    def test_params_are_checked(self) -> None:
        """Test generator parameter checks."""
        with pytest.raises(ValueError):
            GeneratorParams(n=1, edge_density=0.5, demand_count=1)


@pytest.mark.unit
class TestShortestPaths:
    def test_prefers_cheaper_route(self, matching_k3: Instance) -> None:
        """Test that the cheaper route wins."""
        path = shortest_path(matching_k3, 1, 2)
        assert path is not None
        assert path.distance == 2
        assert path.edge_ids == (7,)

    def test_same_vertex_is_empty_path(self, matching_k3: Instance) -> None:
        """Test the path from a vertex to itself."""
        path = shortest_path(matching_k3, 3, 3)
        assert path is not None
        assert path.distance == 0
        assert path.edge_ids == ()

    def test_unreachable_gives_none(self, data_dir) -> None:
        """Test that unreachable vertices have no path."""
        inst = parse_instance((data_dir / "infeasible.stpf").read_text())
        assert shortest_path(inst, 1, 3) is None

    def test_parallel_edges_use_the_cheapest(self) -> None:
        """Test parallel edges."""
        inst = Instance(vertex_count=2, edges=(Edge(u=1, v=2, cost=3), Edge(u=2, v=1, cost=1)))
        path = shortest_path(inst, 1, 2)
        assert path is not None and path.edge_ids == (1,)


@pytest.mark.unit
class TestSteinerTreeExact:
    def test_single_terminal_is_empty(self, matching_k3: Instance) -> None:
        """Test that one terminal needs no edges."""
        tree = steiner_tree_exact(matching_k3, [4])
        assert tree is not None
        assert tree.edge_ids == ()
        assert tree.total_cost == 0

    def test_three_terminals(self, matching_k3: Instance) -> None:
        """Test a three-terminal tree."""
        tree = steiner_tree_exact(matching_k3, [3, 6, 7])
        assert tree is not None
        assert tree.total_cost == 2
        assert tree.edge_ids == (0, 4)

    def test_four_terminals_use_the_direct_edge(self, matching_k3: Instance) -> None:
        """Test that four terminals use the direct edge."""
        tree = steiner_tree_exact(matching_k3, [1, 2, 3, 6])
        assert tree is not None
        assert tree.total_cost == 4
        assert set(tree.edge_ids) == {0, 3, 7}

    def test_steiner_vertex_is_used(self) -> None:
        """Test that a Steiner vertex is used when cheaper."""
        # star with centre 4 beats any tree on the leaves alone
        inst = Instance(
            vertex_count=4,
            edges=(
                Edge(u=1, v=4, cost=1),
                Edge(u=2, v=4, cost=1),
                Edge(u=3, v=4, cost=1),
                Edge(u=1, v=2, cost=2),
                Edge(u=2, v=3, cost=2),
            ),
        )
        tree = steiner_tree_exact(inst, [1, 2, 3])
        assert tree is not None
        assert tree.total_cost == 3
        assert tree.edge_ids == (0, 1, 2)

    def test_disconnected_terminals_give_none(self, data_dir) -> None:
        """Test that disconnected terminals have no tree."""
        inst = parse_instance((data_dir / "infeasible.stpf").read_text())
        assert steiner_tree_exact(inst, [1, 2, 3]) is None

    def test_terminal_limit(self, matching_k3: Instance) -> None:
        """Test the terminal limit."""
        with pytest.raises(TerminalLimitError):
            steiner_tree_exact(matching_k3, range(1, 8))


@pytest.mark.unit
class TestContraction:
    def test_contract_drops_internal_edges_and_trivial_demands(self, deactivation: Instance) -> None:
        """Test contraction of one vertex group."""
        contracted = contract_instance(deactivation, [[2, 5]])
        assert contracted.vertex_map == {1: 1, 2: 2, 3: 3, 4: 4, 5: 2, 6: 5}
        assert contracted.edge_map == (0, 2, 3, 4)
        assert contracted.instance.vertex_count == 5
        assert contracted.instance.demands == (Demand(a=1, b=4), Demand(a=3, b=5))
        assert contracted.lift_edges([0, 3]) == {0, 4}

    def test_overlapping_groups_merge(self, deactivation: Instance) -> None:
        """Test that overlapping groups contract together."""
        contracted = contract_instance(deactivation, [[1, 2], [2, 5]])
        assert contracted.instance.vertex_count == 4
        assert contracted.vertex_map[1] == contracted.vertex_map[5]


@pytest.mark.unit
def test_forest_certificate(matching_k3: Instance) -> None:
    """Test the per-demand certificate of a forest."""
    forest = SolutionForest.from_edges(matching_k3, [7, 0, 1, 2])
    assert forest.feasible
    assert forest.total_cost == 5
    partial = SolutionForest.from_edges(matching_k3, [0, 1])
    assert not partial.feasible
    assert partial.satisfied == {0: False, 1: True, 2: True, 3: False}


@pytest.mark.unit
@pytest.mark.parametrize("word", ["²", "٣", "1²"])
def test_non_ascii_digits_are_parse_errors(word: str) -> None:
    """Unicode digits in vertex ids and the V line raise InstanceParseError, not ValueError."""
    with pytest.raises(InstanceParseError) as excinfo:
        parse_instance(f"STPF 1\nSECTION Graph\nV 3\nE 1 {word} 1\nEND\n")
    assert (excinfo.value.line, excinfo.value.column) == (4, 5)
    with pytest.raises(InstanceParseError, match="expected 'V <n>'"):
        parse_instance(f"STPF 1\nSECTION Graph\nV {word}\nEND\n")


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(12))
def test_shortest_path_distances_form_a_metric(seed: int, random_instance) -> None:
    """Distances are symmetric, obey the triangle inequality and match their edge ids."""
    inst = random_instance(seed, n=7, density=0.4, metric=seed % 3 == 0)
    vertices = range(1, inst.vertex_count + 1)
    dist = {}
    for u in vertices:
        for v in vertices:
            path = shortest_path(inst, u, v)
            dist[u, v] = None if path is None else path.distance
            if path is not None:
                assert sum((inst.edges[i].cost for i in path.edge_ids), Fraction(0)) == path.distance
    for u in vertices:
        assert dist[u, u] == 0
        for v in vertices:
            assert dist[u, v] == dist[v, u]
            for w in vertices:
                if dist[u, v] is not None and dist[v, w] is not None:
                    assert dist[u, w] is not None
                    assert dist[u, w] <= dist[u, v] + dist[v, w]


@pytest.mark.unit
@pytest.mark.parametrize("seed", range(12))
def test_steiner_cost_is_monotone_in_the_terminal_set(seed: int, random_instance) -> None:
    """Adding a terminal never makes the cheapest Steiner tree cheaper."""
    inst = random_instance(seed, n=8, density=0.5)
    rng = random.Random(seed)
    for _ in range(6):
        terminals = rng.sample(range(1, inst.vertex_count + 1), 5)
        costs = []
        for size in range(1, 6):
            tree = steiner_tree_exact(inst, terminals[:size])
            costs.append(None if tree is None else tree.total_cost)
        reachable = [c for c in costs if c is not None]
        # once disconnected, every superset stays disconnected
        assert costs[: len(reachable)] == reachable
        assert reachable == sorted(reachable)
        pair = shortest_path(inst, terminals[0], terminals[1])
        assert (pair is None) == (costs[1] is None)
        if pair is not None:
            assert costs[1] == pair.distance
