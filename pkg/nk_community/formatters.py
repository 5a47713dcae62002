import enum
from fractions import Fraction
from pathlib import Path

import numpy as np
from structlog.typing import EventDict, WrappedLogger


def logger_name(logger: WrappedLogger, method_name: str, event_dict: EventDict) -> EventDict:
    """
    structlog does not have named loggers, so we roll our own

    >>> structlog.get_logger(logger_name="my_logger_name")
    """

    if logger_name := event_dict.pop("logger_name", None):
        # `logger` is a special key that structlog treats as the logger name
        event_dict.setdefault("logger", logger_name)

    return event_dict


def simplify_numeric_values(logger: WrappedLogger, method_name: str, event_dict: EventDict) -> EventDict:
    """
    Make the following transformations to the logs:

    - numpy scalars become plain python numbers
    - small numpy arrays become lists, large ones a shape summary
    - Fractions (exact moments) become floats
    - string enums (Mode, WeightMode, ...) become their value

    orjson refuses most of these, and the console renderer prints noisy reprs for the rest.
    """
    for key, value in list(event_dict.items()):
        if isinstance(value, np.generic):
            event_dict[key] = value.item()

        elif isinstance(value, np.ndarray):
            event_dict[key] = value.tolist() if value.size <= 16 else f"ndarray{value.shape}"

        elif isinstance(value, Fraction):
            event_dict[key] = float(value)

        elif isinstance(value, enum.Enum):
            event_dict[key] = value.value

    return event_dict


# lifted from:
# https://github.com/underyx/structlog-pretty/blob/a6a4abbb1f6e4a879f9f5a95ba067577cea65a08/structlog_pretty/processors.py#L226C1-L252C26
class PathPrettifier:
    """A processor for printing paths.

    Changes all pathlib.Path objects.

    1. Remove PosixPath(...) wrapper by calling str() on the path.
    2. If path is relative to current working directory,
       print it relative to working directory.

    Note that working directory is determined when configuring structlog.
    """

    def __init__(self, base_dir: Path | None = None):
        self.base_dir = base_dir or Path.cwd()

    def __call__(self, _, __, event_dict):
        for key, path in event_dict.items():
            if not isinstance(path, Path):
                continue

            # paths outside the working directory stay absolute
            if path.is_relative_to(self.base_dir):
                path = path.relative_to(self.base_dir)

            event_dict[key] = str(path)

        return event_dict
