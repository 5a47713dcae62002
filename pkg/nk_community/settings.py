"""
Environment-driven configuration, read fresh on every call so tests can mutate the environment.
"""

from pydantic import AliasChoices, Field, PositiveInt, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import DEFAULT_CHUNK_BITS, DEFAULT_ENUMERATION_CAP, ENUMERATION_HARD_CAP
from .errors import ParameterError


class Settings(BaseSettings):
    """Configuration settings for the nk_community package."""

    threads: PositiveInt | None = None
    "caps the worker count of enumeration and sweeps; never changes results"

    enumeration_cap: int = Field(default=DEFAULT_ENUMERATION_CAP, ge=1, le=ENUMERATION_HARD_CAP)

    chunk_bits: int = Field(default=DEFAULT_CHUNK_BITS, ge=1, le=12)
    "the exact kernel needs every chunk sum below 2**53, which holds up to 2**12 genotypes"

    log_level: str = Field(
        default="INFO",
        validation_alias=AliasChoices("NKCOMM_LOG_LEVEL", "LOG_LEVEL"),
    )

    json_logs: bool = False

    model_config = SettingsConfigDict(
        env_prefix="NKCOMM_",
        case_sensitive=False,
        populate_by_name=True,
    )


def get_settings() -> Settings:
    try:
        return Settings()
    except ValidationError as error:
        names = ["_".join(str(part) for part in issue["loc"]).upper() for issue in error.errors()]
        variables = ", ".join(
            name if name.startswith("NKCOMM_") else f"NKCOMM_{name}" for name in names
        )
        raise ParameterError(f"invalid environment configuration: {variables}") from error


def worker_count(requested: int | None = None) -> int:
    """
    Resolve how many workers to use. NKCOMM_THREADS caps whatever the caller asks for, and the
    default is a single worker since results never depend on it.
    """
    cap = get_settings().threads
    workers = requested or cap or 1

    if cap is not None:
        workers = min(workers, cap)

    return max(workers, 1)
