"""
Pajek exports of a correlation network and its communities.

    *Vertices 3
    1 "F_1"
    2 "F_2"
    3 "F_3"
    *Edges
    1 2 0.800000

The `.clu` partition file is `*Vertices N` followed by one 1-based community id per line. Lines end
with `\\n` and both files end with a newline.
"""

from pathlib import Path

from .community import Partition, WeightedGraph
from .errors import ParameterError


def render_net(graph: WeightedGraph) -> str:
    lines = [f"*Vertices {graph.n}"]
    lines += [f'{i + 1} "{label}"' for i, label in enumerate(graph.labels)]
    lines.append("*Edges")
    lines += [f"{i + 1} {j + 1} {w:.6f}" for i, j, w in graph.edges]

    return "\n".join(lines) + "\n"


def render_clu(partition: Partition) -> str:
    lines = [f"*Vertices {len(partition.assignment)}"]
    lines += [str(community + 1) for community in partition.assignment]

    return "\n".join(lines) + "\n"


def write_pajek_net(graph: WeightedGraph, path: Path) -> Path:
    path.write_text(render_net(graph), newline="\n")
    return path


def write_pajek_clu(partition: Partition, path: Path, *, graph: WeightedGraph | None = None) -> Path:
    if graph is not None and graph.n != len(partition.assignment):
        raise ParameterError(f"partition covers {len(partition.assignment)} nodes, graph has {graph.n}")

    path.write_text(render_clu(partition), newline="\n")
    return path
