#!/usr/bin/env -S uv run ipython -i
from nk_community import (
    NkModel,
    configure_logger,
    correlation,
    enumerate_moments,
    graph_from_correlation,
    louvain,
)

log = configure_logger(log_level="DEBUG")

model = NkModel.build(n=10, k=2, mode="random", seed=7)
matrix = correlation(enumerate_moments(model))
partition = louvain(graph_from_correlation(matrix), seed=0)
