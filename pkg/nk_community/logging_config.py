"""
structlog setup for the library and the CLI.

Logs always go to stderr: stdout belongs to command output (summary lines, generated files
echoed with `-`), so mixing the two would corrupt pipelines like `nk-community detect ... | cut`.
"""

import logging
import sys
from contextlib import _GeneratorContextManager
from typing import BinaryIO, Protocol, TextIO, cast

import orjson
import structlog
import structlog.dev
from structlog.typing import FilteringBoundLogger

from . import constants
from .errors import ParameterError
from .formatters import PathPrettifier, logger_name, simplify_numeric_values
from .settings import get_settings


# pytest swaps sys.stderr per test phase, so the stream must be resolved at write time
class LazyStream:
    """Defers resolution of sys.stdout/stderr to write time."""

    def __init__(self, name: str):
        self.name = name

    def write(self, data):
        getattr(sys, self.name).write(data)

    def flush(self):
        getattr(sys, self.name).flush()

    def isatty(self):
        return getattr(sys, self.name).isatty()


class LazyBuffer:
    """Binary version of LazyStream for BytesLoggerFactory."""

    def __init__(self, name: str):
        self.name = name

    def write(self, data):
        getattr(sys, self.name).buffer.write(data)

    def flush(self):
        getattr(sys, self.name).buffer.flush()


def get_logger_factory(json_logger: bool):
    # json_logger requires a BytesLoggerFactory since orjson renders bytes
    if json_logger:
        return structlog.BytesLoggerFactory(file=cast(BinaryIO, LazyBuffer("stderr")))

    return structlog.PrintLoggerFactory(file=cast(TextIO, LazyStream("stderr")))


def log_processors_for_mode(json_logger: bool) -> list[structlog.types.Processor]:
    """
    Determine what the "final" processes in the pipeline should be to render the log to the output device.

    - If JSON, then structure exceptions as dicts and render as JSON
    - If not JSON, then use the ConsoleRenderer
    """
    if json_logger:

        def orjson_dumps_sorted(value, *args, **kwargs):
            "sort_keys=True is not supported, so we do it manually"
            return orjson.dumps(value, option=orjson.OPT_SORT_KEYS, **kwargs)

        return [
            structlog.processors.dict_tracebacks,
            structlog.processors.JSONRenderer(serializer=orjson_dumps_sorted),
        ]

    return [structlog.dev.ConsoleRenderer(colors=not constants.NO_COLOR)]


def get_default_processors(json_logger: bool) -> list[structlog.types.Processor]:
    return [
        structlog.stdlib.add_log_level,
        structlog.contextvars.merge_contextvars,
        logger_name,
        simplify_numeric_values,
        PathPrettifier(),
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        # add `stack_info=True` to a log and get a `stack` attached to the log
        structlog.processors.StackInfoRenderer(),
        *log_processors_for_mode(json_logger),
    ]


class LoggerWithContext(FilteringBoundLogger, Protocol):
    """
    A customized bound logger class that adds easy-to-remember methods for adding context.
    """

    def context(self, *args, **kwargs) -> _GeneratorContextManager[None, None, None]:
        "context manager to temporarily set and clear logging context"
        ...

    def local(self, *args, **kwargs) -> None:
        "set thread-local context"
        ...

    def clear(self) -> None:
        "clear thread-local context"
        ...


def add_simple_context_aliases(log) -> LoggerWithContext:
    log.context = structlog.contextvars.bound_contextvars
    log.local = structlog.contextvars.bind_contextvars
    log.clear = structlog.contextvars.clear_contextvars

    return log


def get_logger(*args, **kwargs) -> LoggerWithContext:
    """
    Get a structlog logger with the same context alias methods as the logger returned by `configure_logger`.
    """
    log = structlog.get_logger(*args, **kwargs)
    return add_simple_context_aliases(log)


def configure_logger(
    *,
    json_logger: bool | None = None,
    log_level: str | None = None,
    logger_factory=None,
) -> LoggerWithContext:
    """
    Configure structlog for nk_community and return a logger:

    >>> with log.context(mode="random", k=2):
    >>>    log.info("cell finished", nc=3)

    Args:
        json_logger: render JSON lines instead of console output. Defaults to NKCOMM_JSON_LOGS.
        log_level: minimum level name. Defaults to NKCOMM_LOG_LEVEL / LOG_LEVEL.
        logger_factory: optional logger factory to override the stderr default.
    """
    settings = get_settings()

    if json_logger is None:
        json_logger = settings.json_logs

    level_name = (log_level or settings.log_level or "INFO").strip().upper() or "INFO"
    level = logging.getLevelNamesMapping().get(level_name)

    if level is None:
        raise ParameterError(f"unknown log level {level_name}")

    structlog.reset_defaults()

    resolved_logging_factory = logger_factory or get_logger_factory(json_logger)

    # BytesLoggerFactory always requires bytes from the processor chain
    if isinstance(resolved_logging_factory, structlog.BytesLoggerFactory):
        json_logger = True

    structlog.configure(
        cache_logger_on_first_use=False,
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=resolved_logging_factory,
        processors=get_default_processors(json_logger),
    )

    return get_logger()
