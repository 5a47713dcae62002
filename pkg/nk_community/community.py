"""
Correlation networks and modularity-based community detection.

`louvain` is the usual two-phase heuristic (local moves, then aggregation) with every open choice
pinned down: nodes are swept in a seeded shuffled order, the best candidate community is the one
with the largest gain and the lowest id among equals, and a move must beat staying put by more
than GAIN_TOLERANCE. `brute_force_max_modularity` enumerates every partition of small graphs and
serves as the oracle for the heuristic.
"""

from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import Self

import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .constants import BRUTE_FORCE_MAX_NODES, DEFAULT_EDGE_THRESHOLD
from .errors import CapacityError, ParameterError
from .splitmix import shuffled_order
from .trait_stats import CorrelationMatrix

log = structlog.get_logger(logger_name=__name__)

GAIN_TOLERANCE = 1e-12
"a node only moves when the gain beats staying by more than this"

Edge = tuple[int, int, float]


class WeightMode(StrEnum):
    ABS = "abs"
    SQUARED = "squared"
    CLIP_POSITIVE = "clip_positive"

    def weight(self, rho: float) -> float:
        match self:
            case WeightMode.ABS:
                return abs(rho)
            case WeightMode.SQUARED:
                return rho * rho
            case WeightMode.CLIP_POSITIVE:
                return max(rho, 0.0)


class WeightedGraph(BaseModel):
    """
    Undirected graph on nodes 0..n-1 with strictly positive edge weights, each edge stored once as
    (i, j, w) with i < j. Labels default to the trait names F_1..F_n.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=0)
    edges: tuple[Edge, ...] = ()
    labels: tuple[str, ...] = ()

    @model_validator(mode="after")
    def check_edges(self) -> Self:
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"F_{i + 1}" for i in range(self.n)))
        elif len(self.labels) != self.n:
            raise ValueError(f"expected {self.n} labels, got {len(self.labels)}")

        seen: set[tuple[int, int]] = set()

        for i, j, w in self.edges:
            if not 0 <= i < j < self.n:
                raise ValueError(f"edge ({i}, {j}) needs 0 ≤ i < j < n")

            if not w > 0:
                raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")

            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")

            seen.add((i, j))

        return self

    @classmethod
    def from_edges(cls, n: int, edges: Sequence[tuple[int, int, float]]) -> Self:
        "accepts endpoints in either order"
        return cls(n=n, edges=tuple((min(i, j), max(i, j), float(w)) for i, j, w in edges))

    @property
    def total_weight(self) -> float:
        return sum(w for _, _, w in self.edges)

    def degrees(self) -> list[float]:
        degree = [0.0] * self.n

        for i, j, w in self.edges:
            degree[i] += w
            degree[j] += w

        return degree


def canonical_labels(assignment: Sequence[int]) -> tuple[int, ...]:
    "relabel community ids densely in order of first appearance"
    mapping: dict[int, int] = {}
    return tuple(mapping.setdefault(c, len(mapping)) for c in assignment)


class Partition(BaseModel):
    "node to community assignment with dense ids 0..nc-1, and its modularity"

    model_config = ConfigDict(frozen=True)

    assignment: tuple[int, ...]
    q: float

    @model_validator(mode="after")
    def check_dense(self) -> Self:
        if set(self.assignment) != set(range(self.nc)):
            raise ValueError(f"community ids are not dense: {self.assignment}")

        if not -1.0 - 1e-12 <= self.q <= 1.0 + 1e-12:
            raise ValueError(f"modularity {self.q} is outside [-1, 1]")

        return self

    @classmethod
    def of(cls, graph: WeightedGraph, assignment: Sequence[int]) -> Self:
        labels = canonical_labels(assignment)
        return cls(assignment=labels, q=modularity(graph, labels))

    @property
    def nc(self) -> int:
        return len(set(self.assignment))

    def communities(self) -> list[list[int]]:
        members: list[list[int]] = [[] for _ in range(self.nc)]

        for node, community in enumerate(self.assignment):
            members[community].append(node)

        return members


def graph_from_correlation(
    matrix: CorrelationMatrix,
    weight_mode: WeightMode | str = WeightMode.ABS,
    threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> WeightedGraph:
    if threshold < 0:
        raise ParameterError("threshold must be ≥ 0")

    weight_mode = WeightMode(weight_mode)
    edges: list[Edge] = []

    for i in range(matrix.n):
        for j in range(i + 1, matrix.n):
            w = weight_mode.weight(float(matrix.rho[i, j]))

            if w > threshold:
                edges.append((i, j, w))

    return WeightedGraph(n=matrix.n, edges=tuple(edges))


def modularity(graph: WeightedGraph, assignment: Sequence[int]) -> float:
    """
    Newman modularity of a weighted graph, as a sum over communities of
    intra_weight / m - (total_degree / 2m) ** 2. Q is 0 for graphs without edges.
    """
    if len(assignment) != graph.n:
        raise ParameterError(f"assignment covers {len(assignment)} nodes, graph has {graph.n}")

    m = graph.total_weight

    if m == 0:
        return 0.0

    inside: dict[int, float] = {}
    total: dict[int, float] = {}

    for i, j, w in graph.edges:
        if assignment[i] == assignment[j]:
            inside[assignment[i]] = inside.get(assignment[i], 0.0) + w

    for node, degree in enumerate(graph.degrees()):
        total[assignment[node]] = total.get(assignment[node], 0.0) + degree

    q = 0.0
    for community, degree_sum in total.items():
        q += inside.get(community, 0.0) / m - (degree_sum / (2 * m)) ** 2

    return q


@dataclass
class _Level:
    "graph at one aggregation level: adjacency without self-loops plus per-node loop weight"

    adjacency: list[dict[int, float]]
    loops: list[float]

    @property
    def size(self) -> int:
        return len(self.loops)

    @classmethod
    def from_graph(cls, graph: WeightedGraph) -> Self:
        adjacency: list[dict[int, float]] = [{} for _ in range(graph.n)]

        for i, j, w in graph.edges:
            adjacency[i][j] = w
            adjacency[j][i] = w

        return cls(adjacency=adjacency, loops=[0.0] * graph.n)

    def total_weight(self) -> float:
        m = sum(self.loops)

        for i, neighbours in enumerate(self.adjacency):
            for j, w in neighbours.items():
                if i < j:
                    m += w

        return m

    def aggregate(self, community: Sequence[int], count: int) -> "_Level":
        adjacency: list[dict[int, float]] = [{} for _ in range(count)]
        loops = [0.0] * count

        for node, w in enumerate(self.loops):
            loops[community[node]] += w

        for i, neighbours in enumerate(self.adjacency):
            for j, w in neighbours.items():
                if i >= j:
                    continue

                ci, cj = community[i], community[j]

                if ci == cj:
                    loops[ci] += w
                else:
                    adjacency[ci][cj] = adjacency[ci].get(cj, 0.0) + w
                    adjacency[cj][ci] = adjacency[cj].get(ci, 0.0) + w

        return _Level(adjacency=adjacency, loops=loops)


def _move_nodes(level: _Level, seed: int, depth: int) -> list[int]:
    m = level.total_weight()
    degree = [2 * level.loops[i] + sum(level.adjacency[i].values()) for i in range(level.size)]

    community = list(range(level.size))
    community_degree = list(degree)
    order = shuffled_order(level.size, seed, depth)

    improved = True
    while improved:
        improved = False

        for node in order:
            own = community[node]
            links_to: dict[int, float] = {}

            for neighbour, w in level.adjacency[node].items():
                links_to[community[neighbour]] = links_to.get(community[neighbour], 0.0) + w

            community_degree[own] -= degree[node]

            def gain(target: int) -> float:
                return links_to.get(target, 0.0) - community_degree[target] * degree[node] / (2 * m)

            own_gain = gain(own)
            best: int | None = None
            best_gain = 0.0

            for candidate in sorted(links_to):
                if candidate == own:
                    continue

                candidate_gain = gain(candidate)
                if best is None or candidate_gain > best_gain:
                    best, best_gain = candidate, candidate_gain

            target = own
            if best is not None and best_gain - own_gain > GAIN_TOLERANCE:
                target = best
                improved = True

            community_degree[target] += degree[node]
            community[node] = target

    return community


def louvain(graph: WeightedGraph, seed: int = 0) -> Partition:
    if graph.total_weight == 0:
        return Partition(assignment=tuple(range(graph.n)), q=0.0)

    level = _Level.from_graph(graph)
    membership = list(range(graph.n))
    depth = 0

    while True:
        community = canonical_labels(_move_nodes(level, seed, depth))
        count = max(community) + 1

        if count == level.size:
            break

        membership = [community[c] for c in membership]
        level = level.aggregate(community, count)
        depth += 1

    partition = Partition.of(graph, membership)

    log.debug("louvain finished", n=graph.n, levels=depth, nc=partition.nc, q=partition.q)
    return partition


def restricted_growth_strings(n: int) -> Iterator[tuple[int, ...]]:
    "every set partition of range(n), as restricted growth strings in lexicographic order"
    if n == 0:
        yield ()
        return

    labels = [0] * n
    # ceiling[i] is the largest label allowed at position i, i.e. 1 + max(labels[:i])
    ceiling = [0] + [1] * (n - 1)

    while True:
        yield tuple(labels)

        position = n - 1
        while position > 0 and labels[position] == ceiling[position]:
            position -= 1

        if position == 0:
            return

        labels[position] += 1

        for later in range(position + 1, n):
            labels[later] = 0
            ceiling[later] = max(ceiling[later - 1], labels[later - 1] + 1)


def brute_force_max_modularity(graph: WeightedGraph) -> Partition:
    if graph.n > BRUTE_FORCE_MAX_NODES:
        raise CapacityError(f"n={graph.n} is too large for exhaustive partition search", cap=BRUTE_FORCE_MAX_NODES)

    if graph.total_weight == 0:
        return Partition(assignment=tuple(range(graph.n)), q=0.0)

    best: tuple[int, ...] | None = None
    best_q = 0.0

    for labels in restricted_growth_strings(graph.n):
        q = modularity(graph, labels)

        if best is None or q > best_q + GAIN_TOLERANCE:
            best, best_q = labels, q

    assert best is not None
    return Partition(assignment=best, q=best_q)
