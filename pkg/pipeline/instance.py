"""
Pipeline module for Steiner Forest instances.

This module owns the instance model and everything that only needs the graph:
parsing and serializing the STP-F text format, validation, random generation,
shortest paths, exact Steiner trees on small terminal sets (Dreyfus-Wagner),
and contraction of vertex groups into single vertices.

Vertex ids are 1-based as in the STP-F file. Edge ids are positions in
``Instance.edges`` (0-based); demand indices are positions in ``Instance.demands``.
"""
import logging
import random
import re
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Any, Dict, Final, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

import networkx as nx
from pydantic import PrivateAttr, model_validator

from exceptions import (
    GenerationError,
    InfeasibleInstanceError,
    InstanceParseError,
    InstanceValidationError,
    TerminalLimitError,
)
from utils.disjoint_set import DisjointSet
from utils.models import FrozenModel
from utils.rational import Rational, format_rational, parse_rational

logger: logging.Logger = logging.getLogger(__name__)

# Triple connectors join at most six representative endpoints.
K_MAX_DEFAULT: Final[int] = 6
FORMAT_HEADER: Final[str] = "STPF"
FORMAT_VERSION: Final[str] = "1"
# Virtual source for the Dreyfus-Wagner relaxation; real vertices start at 1.
_ROOT: Final[int] = 0
# ASCII digits only ("²" is a digit to str.isdigit but not to int).
_UINT_PATTERN: Final[re.Pattern[str]] = re.compile(r"[0-9]+")


class Edge(FrozenModel):
    """Undirected edge {u, v} with a nonnegative exact cost."""

    u: int
    v: int
    cost: Rational

    @property
    def endpoints(self) -> Tuple[int, int]:
        return (self.u, self.v) if self.u <= self.v else (self.v, self.u)


class Demand(FrozenModel):
    """Unordered demand pair {a, b}."""

    a: int
    b: int

    @property
    def endpoints(self) -> Tuple[int, int]:
        return (self.a, self.b) if self.a <= self.b else (self.b, self.a)


class Instance(FrozenModel):
    """
    Steiner Forest instance: graph with rational edge costs plus demand pairs.

    Parallel edges are allowed; only the cheapest edge of each vertex pair is
    used by the algorithms (ties broken by lowest edge id).

    Example:
        >>> inst = Instance(vertex_count=2, edges=[Edge(u=1, v=2, cost=3)], demands=[Demand(a=1, b=2)])
        >>> validate(inst)
        []
    """

    vertex_count: int
    edges: Tuple[Edge, ...] = ()
    demands: Tuple[Demand, ...] = ()

    _graph: Optional["InstanceGraph"] = PrivateAttr(default=None)

    @property
    def vertices(self) -> range:
        return range(1, self.vertex_count + 1)

    def graph(self) -> "InstanceGraph":
        """Cached graph view (cheapest edge per vertex pair)."""
        if self._graph is None:
            self._graph = InstanceGraph(self)
        return self._graph

    def terminals(self) -> List[int]:
        """Sorted vertices that appear in some demand pair."""
        return sorted({x for d in self.demands for x in (d.a, d.b)})

    def canonical(self) -> "Instance":
        """Copy with endpoints ordered, edges sorted by (u, v, cost) and demands sorted."""
        edges = sorted(
            (Edge(u=e.endpoints[0], v=e.endpoints[1], cost=e.cost) for e in self.edges),
            key=lambda e: (e.u, e.v, e.cost),
        )
        demands = sorted(
            (Demand(a=d.endpoints[0], b=d.endpoints[1]) for d in self.demands),
            key=lambda d: (d.a, d.b),
        )
        return Instance(vertex_count=self.vertex_count, edges=tuple(edges), demands=tuple(demands))


class SolutionForest(FrozenModel):
    """Edge subset with its exact cost and a per-demand connectivity certificate."""

    edge_ids: Tuple[int, ...]
    total_cost: Rational
    satisfied: Dict[int, bool]

    @property
    def feasible(self) -> bool:
        return all(self.satisfied.values())

    @classmethod
    def from_edges(cls, inst: Instance, edge_ids: Iterable[int]) -> "SolutionForest":
        """Build the forest certificate for ``edge_ids`` on ``inst``."""
        ids = tuple(sorted(set(edge_ids)))
        components: DisjointSet[int] = DisjointSet(inst.vertices)
        total = Fraction(0)
        for eid in ids:
            edge = inst.edges[eid]
            components.union(edge.u, edge.v)
            total += edge.cost
        satisfied = {
            index: components.connected(d.a, d.b) for index, d in enumerate(inst.demands)
        }
        return cls(edge_ids=ids, total_cost=total, satisfied=satisfied)


class ShortestPath(NamedTuple):
    """Distance and realizing edge ids of a shortest path."""

    distance: Fraction
    edge_ids: Tuple[int, ...]


class GeneratorParams(FrozenModel):
    """Parameters for :func:`generate_random`."""

    n: int
    edge_density: float
    demand_count: int
    max_cost: int = 10
    metric: bool = False

    @model_validator(mode="after")
    def _check(self) -> "GeneratorParams":
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.demand_count < 1:
            raise ValueError("demand_count must be at least 1")
        if not 0.0 <= self.edge_density <= 1.0:
            raise ValueError("edge_density must lie in [0, 1]")
        if self.max_cost < 1:
            raise ValueError("max_cost must be at least 1")
        return self


class InstanceGraph:
    """
    networkx view of an instance with per-instance caches.

    Holds the cheapest edge of each vertex pair as a ``cost``/``id`` attributed
    ``nx.Graph`` and memoizes shortest paths and Steiner tables.
    """

    def __init__(self, inst: Instance) -> None:
        self.instance: Instance = inst
        self.nx_graph: nx.Graph = nx.Graph()
        self.nx_graph.add_nodes_from(inst.vertices)
        for eid, edge in enumerate(inst.edges):
            if edge.u == edge.v:
                continue
            current = self.nx_graph.get_edge_data(edge.u, edge.v)
            if current is None or edge.cost < current["cost"]:
                self.nx_graph.add_edge(edge.u, edge.v, cost=edge.cost, id=eid)
        self._paths: Dict[int, Tuple[Dict[int, Fraction], Dict[int, List[int]]]] = {}
        self._tables: Dict[FrozenSet[int], "SteinerTable"] = {}

    def canonical_edge_ids(self) -> List[int]:
        """Ids of the edges the algorithms use, ascending."""
        return sorted(data["id"] for _, _, data in self.nx_graph.edges(data=True))

    def path_edge_ids(self, nodes: Sequence[int]) -> List[int]:
        return [self.nx_graph[a][b]["id"] for a, b in zip(nodes, nodes[1:])]

    def single_source(self, source: int) -> Tuple[Dict[int, Fraction], Dict[int, List[int]]]:
        if source not in self._paths:
            self._paths[source] = nx.single_source_dijkstra(self.nx_graph, source, weight="cost")
        return self._paths[source]

    def shortest_path(self, s: int, t: int) -> Optional[ShortestPath]:
        distances, paths = self.single_source(s)
        if t not in distances:
            return None
        return ShortestPath(Fraction(distances[t]), tuple(self.path_edge_ids(paths[t])))

    def steiner_table(self, terminals: Iterable[int]) -> "SteinerTable":
        key = frozenset(terminals)
        if key not in self._tables:
            self._tables[key] = SteinerTable(self, sorted(key))
        return self._tables[key]


class SteinerTable:
    """
    Dreyfus-Wagner table over a terminal list.

    ``cost(mask)`` is the cost of a cheapest Steiner tree for the terminals in
    ``mask`` (bit i stands for ``terminals[i]``), ``None`` when they are not
    connected. The relaxation step of each mask is a single networkx Dijkstra
    from a virtual root whose edges carry the merged sub-tree costs.
    """

    def __init__(self, graph: InstanceGraph, terminals: Sequence[int]) -> None:
        self.graph: InstanceGraph = graph
        self.terminals: List[int] = list(terminals)
        self._dist: Dict[int, Dict[int, Fraction]] = {}
        self._paths: Dict[int, Dict[int, List[int]]] = {}
        self._split: Dict[int, Dict[int, int]] = {}
        self._build()

    def _build(self) -> None:
        q = len(self.terminals)
        for i, terminal in enumerate(self.terminals):
            distances, paths = self.graph.single_source(terminal)
            self._dist[1 << i] = dict(distances)
            self._paths[1 << i] = paths
        if q < 2:
            return
        relax_graph = self.graph.nx_graph.copy()
        relax_graph.add_node(_ROOT)
        for v in self.graph.instance.vertices:
            relax_graph.add_edge(_ROOT, v, cost=None, id=None)
        for mask in sorted(range(1, 1 << q), key=lambda m: (bin(m).count("1"), m)):
            if mask & (mask - 1) == 0:
                continue
            low = mask & -mask
            merged: Dict[int, Fraction] = {}
            choice: Dict[int, int] = {}
            sub = (mask - 1) & mask
            while sub:
                if sub & low:
                    left, right = self._dist[sub], self._dist[mask ^ sub]
                    for v, value in left.items():
                        other = right.get(v)
                        if other is None:
                            continue
                        total = value + other
                        if v not in merged or total < merged[v]:
                            merged[v] = total
                            choice[v] = sub
                sub = (sub - 1) & mask
            self._split[mask] = choice

            def weight(a: int, b: int, data: Dict[str, Any], seed: Dict[int, Fraction] = merged) -> Any:
                if b == _ROOT:
                    return None
                if a == _ROOT:
                    return seed.get(b)
                return data["cost"]

            distances, paths = nx.single_source_dijkstra(relax_graph, _ROOT, weight=weight)
            distances.pop(_ROOT, None)
            paths.pop(_ROOT, None)
            self._dist[mask] = {v: Fraction(d) for v, d in distances.items()}
            self._paths[mask] = paths

    def mask_of(self, vertices: Iterable[int]) -> int:
        index = {t: i for i, t in enumerate(self.terminals)}
        mask = 0
        for v in vertices:
            mask |= 1 << index[v]
        return mask

    def cost(self, mask: int) -> Optional[Fraction]:
        anchor = self.terminals[(mask & -mask).bit_length() - 1]
        return self._dist[mask].get(anchor)

    def tree(self, mask: int) -> Set[int]:
        """Edge ids of a cheapest Steiner tree for ``mask`` (must be connected)."""
        anchor = self.terminals[(mask & -mask).bit_length() - 1]
        edges: Set[int] = set()
        self._collect(mask, anchor, edges)
        return edges

    def _collect(self, mask: int, v: int, edges: Set[int]) -> None:
        nodes = self._paths[mask][v]
        if mask & (mask - 1) == 0:
            edges.update(self.graph.path_edge_ids(nodes))
            return
        # nodes = [root, x, ..., v]; the sub-trees meet at x
        x = nodes[1]
        edges.update(self.graph.path_edge_ids(nodes[1:]))
        sub = self._split[mask][x]
        self._collect(sub, x, edges)
        self._collect(mask ^ sub, x, edges)


class ContractedInstance(FrozenModel):
    """
    Instance obtained by contracting vertex groups, with maps back to the original.

    Attributes:
        instance: The contracted instance (vertices relabelled 1..n')
        vertex_map: Original vertex -> contracted vertex
        edge_map: Contracted edge id -> original edge id
    """

    instance: Instance
    vertex_map: Dict[int, int]
    edge_map: Tuple[int, ...]

    def lift_edges(self, edge_ids: Iterable[int]) -> Set[int]:
        return {self.edge_map[eid] for eid in edge_ids}


# ---------------------------------------------------------------------------
# STP-F text format
# ---------------------------------------------------------------------------

def _tokens(line: str) -> List[Tuple[str, int]]:
    return [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", line)]


def parse_instance(text: str) -> Instance:
    """
    Parse an STP-F document.

    Format (line oriented, ``#`` starts a comment line)::

        STPF 1
        SECTION Graph
        V <n>
        E <u> <v> <cost>
        END
        SECTION Demands
        D <u> <v>
        END
        EOF

    Costs are nonnegative decimals or fractions ``p/q`` and are converted exactly.

    Args:
        text: Document contents

    Returns:
        The parsed Instance (edges and demands in file order)

    Raises:
        InstanceParseError: On syntax errors, dangling vertex references or negative costs

    Example:
        >>> parse_instance("STPF 1\\nSECTION Graph\\nV 2\\nE 1 2 1/2\\nEND\\n").edges[0].cost
        Fraction(1, 2)
    """
    vertex_count: Optional[int] = None
    edges: List[Edge] = []
    demands: List[Demand] = []
    section: Optional[str] = None
    seen_header = False
    seen_sections: Set[str] = set()

    def fail(line_no: int, column: int, reason: str) -> InstanceParseError:
        logger.error(f"STP-F parse error at line {line_no}, column {column}: {reason}")
        return InstanceParseError(line_no, column, reason)

    def vertex(token: Tuple[str, int], line_no: int) -> int:
        word, column = token
        if not _UINT_PATTERN.fullmatch(word):
            raise fail(line_no, column, f"expected vertex id, got {word!r}")
        value = int(word)
        if vertex_count is None:
            raise fail(line_no, column, "vertex reference before 'V' line")
        if not 1 <= value <= vertex_count:
            raise fail(line_no, column, f"dangling vertex reference {value} (graph has {vertex_count} vertices)")
        return value

    last_line = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        last_line = line_no
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = _tokens(raw)
        keyword = tokens[0][0].upper()

        if not seen_header:
            if keyword != FORMAT_HEADER or len(tokens) != 2 or tokens[1][0] != FORMAT_VERSION:
                raise fail(line_no, tokens[0][1], f"expected header '{FORMAT_HEADER} {FORMAT_VERSION}'")
            seen_header = True
            continue

        if section is None:
            if keyword == "EOF":
                break
            if keyword != "SECTION" or len(tokens) != 2:
                raise fail(line_no, tokens[0][1], "expected 'SECTION <name>'")
            name = tokens[1][0].capitalize()
            if name not in ("Graph", "Demands"):
                raise fail(line_no, tokens[1][1], f"unknown section {tokens[1][0]!r}")
            if name in seen_sections:
                raise fail(line_no, tokens[1][1], f"duplicate section {name!r}")
            if name == "Demands" and "Graph" not in seen_sections:
                raise fail(line_no, tokens[1][1], "section Demands before section Graph")
            section = name
            seen_sections.add(name)
            continue

        if keyword == "END":
            if len(tokens) != 1:
                raise fail(line_no, tokens[1][1], "unexpected token after END")
            if section == "Graph" and vertex_count is None:
                raise fail(line_no, tokens[0][1], "section Graph has no 'V' line")
            section = None
            continue

        if section == "Graph":
            if keyword == "V":
                if vertex_count is not None:
                    raise fail(line_no, tokens[0][1], "duplicate 'V' line")
                if len(tokens) != 2 or not _UINT_PATTERN.fullmatch(tokens[1][0]):
                    raise fail(line_no, tokens[0][1], "expected 'V <n>'")
                vertex_count = int(tokens[1][0])
            elif keyword == "E":
                if len(tokens) != 4:
                    raise fail(line_no, tokens[0][1], "expected 'E <u> <v> <cost>'")
                u = vertex(tokens[1], line_no)
                v = vertex(tokens[2], line_no)
                cost_word, cost_column = tokens[3]
                try:
                    cost = parse_rational(cost_word)
                except ValueError as e:
                    raise fail(line_no, cost_column, str(e))
                if cost < 0:
                    raise fail(line_no, cost_column, f"negative cost {cost_word}")
                edges.append(Edge(u=u, v=v, cost=cost))
            else:
                raise fail(line_no, tokens[0][1], f"unexpected keyword {tokens[0][0]!r} in section Graph")
        else:
            if keyword != "D" or len(tokens) != 3:
                raise fail(line_no, tokens[0][1], "expected 'D <u> <v>'")
            demands.append(Demand(a=vertex(tokens[1], line_no), b=vertex(tokens[2], line_no)))

    if not seen_header:
        raise fail(max(last_line, 1), 1, "empty document")
    if section is not None:
        raise fail(last_line, 1, f"section {section} is not terminated by END")
    if vertex_count is None:
        raise fail(last_line, 1, "missing section Graph")

    inst = Instance(vertex_count=vertex_count, edges=tuple(edges), demands=tuple(demands))
    logger.debug(f"Parsed instance: {vertex_count} vertices, {len(edges)} edges, {len(demands)} demands")
    return inst


def read_instance(path: Union[str, Path]) -> Instance:
    """
    Read and parse an STP-F file as UTF-8.

    Raises:
        InstanceParseError: On syntax errors or bytes that are not valid UTF-8
        OSError: If the file cannot be read
    """
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        column = e.start - (data.rfind(b"\n", 0, e.start) + 1) + 1
        logger.error(f"{path}: not valid UTF-8 at byte {e.start}")
        raise InstanceParseError(line, column, f"invalid UTF-8 byte 0x{data[e.start]:02x}") from e
    return parse_instance(text)


def serialize_instance(inst: Instance) -> str:
    """Canonical STP-F text (sorted edges and demands, fractions in lowest terms)."""
    canonical = inst.canonical()
    lines = [f"{FORMAT_HEADER} {FORMAT_VERSION}", "SECTION Graph", f"V {canonical.vertex_count}"]
    lines.extend(f"E {e.u} {e.v} {format_rational(e.cost)}" for e in canonical.edges)
    lines.extend(["END", "SECTION Demands"])
    lines.extend(f"D {d.a} {d.b}" for d in canonical.demands)
    lines.extend(["END", "EOF"])
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(inst: Instance) -> List[str]:
    """
    Check every instance invariant.

    Returns:
        Violation messages, each prefixed by a code (``vertex-count``,
        ``dangling-vertex``, ``self-loop``, ``negative-cost``,
        ``trivial-demand``, ``infeasible-demand``); empty iff valid
    """
    violations: List[str] = []
    n = inst.vertex_count
    if n < 0:
        violations.append(f"vertex-count: negative vertex count {n}")

    def valid(v: int) -> bool:
        return 1 <= v <= n

    for eid, edge in enumerate(inst.edges):
        if not (valid(edge.u) and valid(edge.v)):
            violations.append(f"dangling-vertex: edge {eid} ({edge.u}, {edge.v})")
        elif edge.u == edge.v:
            violations.append(f"self-loop: edge {eid} at vertex {edge.u}")
        if edge.cost < 0:
            violations.append(f"negative-cost: edge {eid} has cost {format_rational(edge.cost)}")
    for index, demand in enumerate(inst.demands):
        if not (valid(demand.a) and valid(demand.b)):
            violations.append(f"dangling-vertex: demand {index} ({demand.a}, {demand.b})")
        elif demand.a == demand.b:
            violations.append(f"trivial-demand: demand {index} repeats vertex {demand.a}")

    if not violations:
        graph = inst.graph().nx_graph
        component_of: Dict[int, int] = {}
        for number, component in enumerate(nx.connected_components(graph)):
            for v in component:
                component_of[v] = number
        for index, demand in enumerate(inst.demands):
            if component_of[demand.a] != component_of[demand.b]:
                violations.append(
                    f"infeasible-demand: demand {index} {{{demand.a}, {demand.b}}} spans two graph components"
                )
    return violations


def ensure_valid(inst: Instance) -> None:
    """Raise the matching validation error unless ``validate(inst)`` is empty."""
    violations = validate(inst)
    if not violations:
        return
    logger.error(f"Instance validation failed: {len(violations)} violation(s)")
    if all(v.startswith("infeasible-demand") for v in violations):
        raise InfeasibleInstanceError(violations)
    raise InstanceValidationError(violations)


# ---------------------------------------------------------------------------
# Shortest paths and Steiner trees
# ---------------------------------------------------------------------------

def shortest_path(inst: Instance, s: int, t: int) -> Optional[ShortestPath]:
    """
    Exact shortest s-t path.

    Returns:
        ``ShortestPath(distance, edge_ids)``, or ``None`` when t is unreachable

    Example:
        >>> shortest_path(inst, 3, 3)
        ShortestPath(distance=Fraction(0, 1), edge_ids=())
    """
    return inst.graph().shortest_path(s, t)


def steiner_tree_exact(
    inst: Instance,
    terminals: Iterable[int],
    k_max: int = K_MAX_DEFAULT,
) -> Optional[SolutionForest]:
    """
    Minimum-cost edge set connecting all ``terminals`` (Dreyfus-Wagner).

    Args:
        inst: Instance
        terminals: Terminal vertices, at most ``k_max`` of them
        k_max: Largest accepted terminal count

    Returns:
        The tree as a SolutionForest, or ``None`` when the terminals lie in
        different graph components. A single terminal gives the empty tree.

    Raises:
        TerminalLimitError: If more than ``k_max`` terminals are given
    """
    terms = sorted(set(terminals))
    if len(terms) > k_max:
        raise TerminalLimitError(f"{len(terms)} terminals exceed the exact Steiner tree limit {k_max}")
    if len(terms) <= 1:
        return SolutionForest.from_edges(inst, ())
    if len(terms) == 2:
        path = shortest_path(inst, terms[0], terms[1])
        return None if path is None else SolutionForest.from_edges(inst, path.edge_ids)
    table = inst.graph().steiner_table(terms)
    full = (1 << len(terms)) - 1
    if table.cost(full) is None:
        return None
    return SolutionForest.from_edges(inst, table.tree(full))


# ---------------------------------------------------------------------------
# Contraction
# ---------------------------------------------------------------------------

def contract_instance(inst: Instance, groups: Iterable[Iterable[int]]) -> ContractedInstance:
    """
    Contract each vertex group to a single vertex.

    Overlapping groups are merged. Edges inside a contracted vertex are dropped,
    and so are demands whose endpoints end up in the same vertex.
    """
    classes: DisjointSet[int] = DisjointSet(inst.vertices)
    for group in groups:
        members = list(group)
        for v in members[1:]:
            classes.union(members[0], v)
    # groups() lists classes by their smallest vertex, since vertices are inserted in order
    vertex_map: Dict[int, int] = {}
    for new_id, members in enumerate(classes.groups(), start=1):
        for v in members:
            vertex_map[v] = new_id

    edges: List[Edge] = []
    edge_map: List[int] = []
    for eid, edge in enumerate(inst.edges):
        u, v = vertex_map[edge.u], vertex_map[edge.v]
        if u == v:
            continue
        edges.append(Edge(u=u, v=v, cost=edge.cost))
        edge_map.append(eid)
    demands = [
        Demand(a=vertex_map[d.a], b=vertex_map[d.b])
        for d in inst.demands
        if vertex_map[d.a] != vertex_map[d.b]
    ]
    contracted = Instance(
        vertex_count=len(set(vertex_map.values())), edges=tuple(edges), demands=tuple(demands)
    )
    logger.debug(
        f"Contracted {inst.vertex_count} -> {contracted.vertex_count} vertices, "
        f"{len(inst.demands)} -> {len(demands)} demands"
    )
    return ContractedInstance(instance=contracted, vertex_map=vertex_map, edge_map=tuple(edge_map))


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

def generate_random(params: GeneratorParams, seed: int) -> Instance:
    """
    Deterministic random instance that is always demand-feasible.

    Edges come from ``networkx.gnp_random_graph``; disconnected pieces are
    joined by extra edges so every demand is satisfiable. Non-metric costs
    are random halves in ``(0, max_cost]``; metric costs are Manhattan
    distances between random grid points.

    Raises:
        GenerationError: If demands are requested on a graph with density 0
    """
    if params.edge_density == 0 and params.demand_count > 0:
        raise GenerationError("edge density 0 cannot satisfy any demand")
    rng = random.Random(seed)
    graph = nx.gnp_random_graph(params.n, params.edge_density, seed=rng.randrange(2**32))
    components = [sorted(c) for c in nx.connected_components(graph)]
    components.sort(key=lambda c: c[0])
    for left, right in zip(components, components[1:]):
        graph.add_edge(rng.choice(left), rng.choice(right))

    if params.metric:
        side = max(1, params.max_cost // 2)
        points = {v: (rng.randint(0, side), rng.randint(0, side)) for v in graph.nodes}

        def cost_of(a: int, b: int) -> Fraction:
            (x1, y1), (x2, y2) = points[a], points[b]
            return Fraction(abs(x1 - x2) + abs(y1 - y2))
    else:
        def cost_of(a: int, b: int) -> Fraction:
            return Fraction(rng.randint(1, 2 * params.max_cost), 2)

    edges = [
        Edge(u=a + 1, v=b + 1, cost=cost_of(a, b))
        for a, b in sorted((min(a, b), max(a, b)) for a, b in graph.edges)
    ]
    pairs = list(combinations(range(1, params.n + 1), 2))
    if params.demand_count <= len(pairs):
        chosen = rng.sample(pairs, params.demand_count)
    else:
        chosen = [rng.choice(pairs) for _ in range(params.demand_count)]
    demands = [Demand(a=a, b=b) for a, b in chosen]
    inst = Instance(vertex_count=params.n, edges=tuple(edges), demands=tuple(demands))
    logger.debug(f"Generated instance (seed {seed}): {params.n} vertices, {len(edges)} edges")
    return inst
