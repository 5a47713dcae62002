import json
import os
from contextlib import contextmanager
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np

from nk_community import CorrelationMatrix, NkModel, TraitMoments, WeightedGraph
from nk_community.nk_model import EpistasisMatrix, genotype_from_index, goedel_index
from nk_community.splitmix import mix64, unit_from_bits

FIXTURES = Path(__file__).parent / "fixtures"


@contextmanager
def temp_env_var(env_vars: dict[str, str]):
    """
    Context manager for temporarily setting environment variables.

    Example:
        with temp_env_var({"NKCOMM_THREADS": "2"}):
            ...
    """
    original_values = {}

    for name, value in env_vars.items():
        if name in os.environ:
            original_values[name] = os.environ[name]
        os.environ[name] = value

    try:
        yield
    finally:
        for name in env_vars:
            if name in original_values:
                os.environ[name] = original_values[name]
            else:
                del os.environ[name]


def read_jsonl(text: str) -> list[dict]:
    """Parse multi-line log output as JSONL, returning all parsed objects."""
    return [json.loads(line) for line in text.splitlines() if line.strip().startswith("{")]


def naive_moments(model: NkModel) -> TraitMoments:
    "one genotype at a time, straight from the exact table integers"
    bits = model.table_bits()
    unit = Fraction(1, 2**model.scale)
    moments = TraitMoments(n_traits=model.n)

    for index in range(2**model.n):
        x = genotype_from_index(index, model.n)
        values = [
            bits[gene, goedel_index(x, gene, model.epistasis)] * unit for gene in range(model.n)
        ]
        moments.accumulate(values)

    return moments


def triangle_pair_graph() -> WeightedGraph:
    "two disjoint unit-weight triangles"
    return WeightedGraph.from_edges(
        6, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0), (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)]
    )


def clique_pair_graph() -> WeightedGraph:
    "two unit-weight 4-cliques joined by the single edge 3-4"
    edges = [(i, j, 1.0) for i, j in combinations(range(4), 2)]
    edges += [(i, j, 1.0) for i, j in combinations(range(4, 8), 2)]
    edges.append((3, 4, 1.0))

    return WeightedGraph.from_edges(8, edges)


def two_block_correlation(n: int = 10, rho: float = 0.9) -> CorrelationMatrix:
    "two equal blocks, correlated at rho inside and uncorrelated across"
    half = n // 2
    matrix = np.eye(n)

    for i in range(n):
        for j in range(n):
            if i != j and (i < half) == (j < half):
                matrix[i, j] = rho

    return CorrelationMatrix(rho=matrix, degenerate=(False,) * n)


def random_graph(index: int) -> WeightedGraph:
    "a reproducible family of small weighted graphs with 4 to 8 nodes"
    n = 4 + index % 5
    seed = mix64(index)
    edges = []

    for t, (i, j) in enumerate(combinations(range(n), 2)):
        present = unit_from_bits(mix64(seed ^ (2 * t)))
        weight = unit_from_bits(mix64(seed ^ (2 * t + 1)))

        if present < 0.6:
            edges.append((i, j, 0.05 + weight))

    return WeightedGraph.from_edges(n, edges)


def permuted_graph(graph: WeightedGraph, permutation: list[int]) -> WeightedGraph:
    "node i becomes node permutation[i]"
    return WeightedGraph.from_edges(graph.n, [(permutation[i], permutation[j], w) for i, j, w in graph.edges])


def influencers(epistasis: EpistasisMatrix, gene: int) -> frozenset[int]:
    "the genes trait `gene` reads: itself plus its links"
    return frozenset((gene, *epistasis.links[gene]))
