import pytest
import structlog

from nk_community import configure_logger
from tests.utils import (
    clique_pair_graph,
    triangle_pair_graph,
    two_block_correlation,
)


@pytest.fixture(autouse=True)
def disable_color_output(monkeypatch):
    """Force colorized output off so string assertions stay stable."""
    monkeypatch.setenv("NO_COLOR", "1")
    monkeypatch.setattr("nk_community.constants.NO_COLOR", True)
    yield


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """A developer's NKCOMM_* variables must not leak into results."""
    for name in ("THREADS", "ENUMERATION_CAP", "CHUNK_BITS", "LOG_LEVEL", "JSON_LOGS"):
        monkeypatch.delenv(f"NKCOMM_{name}", raising=False)

    monkeypatch.delenv("LOG_LEVEL", raising=False)
    yield


@pytest.fixture(autouse=True)
def reset_structlog():
    yield

    structlog.reset_defaults()
    structlog.contextvars.clear_contextvars()


@pytest.fixture
def log():
    return configure_logger()


@pytest.fixture
def triangles():
    return triangle_pair_graph()


@pytest.fixture
def cliques():
    return clique_pair_graph()


@pytest.fixture
def two_blocks():
    return two_block_correlation()
