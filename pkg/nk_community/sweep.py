"""
Parameter sweeps over epistasis mode, k and replicate.

Every cell derives its own seed from (base_seed, mode, k, replicate), so a cell computes the same
record whether it runs alone, in a different grid, or on another worker.
"""

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Self

import numpy as np
import orjson
import structlog
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .community import WeightMode, graph_from_correlation, louvain
from .constants import DEFAULT_BASE_SEED, DEFAULT_EDGE_THRESHOLD, DEFAULT_REPLICATES
from .errors import InvariantViolation, NkCommunityError, ParameterError, ParseError
from .nk_model import Mode, NkModel
from .settings import worker_count
from .splitmix import MASK64, mix64
from .trait_stats import correlation, enumerate_moments, mean_squared_correlation

log = structlog.get_logger(logger_name=__name__)

MODE_TAGS = {Mode.ADJACENT: 1, Mode.RANDOM: 2}

RECORD_FIELDS = ("mode", "k", "replicate", "seed", "nc", "q", "msc", "wall_ms")

METRICS = ("nc", "q", "msc")


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(ge=1)
    k_values: tuple[int, ...] = ()
    "defaults to every k in [0, n-1]"
    modes: tuple[Mode, ...] = (Mode.ADJACENT, Mode.RANDOM)
    replicates: int = Field(default=DEFAULT_REPLICATES, ge=1)
    base_seed: int = Field(default=DEFAULT_BASE_SEED, ge=0, lt=2**64)
    weight_mode: WeightMode = WeightMode.ABS
    threshold: float = Field(default=DEFAULT_EDGE_THRESHOLD, ge=0)

    @model_validator(mode="after")
    def check_grid(self) -> Self:
        if not self.k_values:
            object.__setattr__(self, "k_values", tuple(range(self.n)))

        if list(self.k_values) != sorted(set(self.k_values)):
            raise ValueError("k_values must be sorted and distinct")

        if self.k_values[0] < 0 or self.k_values[-1] > self.n - 1:
            raise ValueError("k must be ≤ n-1")

        if not self.modes or len(set(self.modes)) != len(self.modes):
            raise ValueError("modes must be a non-empty list without repeats")

        return self

    @classmethod
    def load(cls, path: Path | None = None, **overrides) -> Self:
        """
        Build a config from an optional JSON file, with non-None keyword overrides (CLI flags)
        taking precedence over the file's fields.
        """
        data: dict = {}

        if path is not None:
            try:
                data = orjson.loads(path.read_bytes())
            except orjson.JSONDecodeError as error:
                raise ParseError(f"{path}: config is not valid JSON: {error}") from error

            if not isinstance(data, dict):
                raise ParseError(f"{path}: config must be a JSON object")

        data |= {key: value for key, value in overrides.items() if value is not None}

        try:
            return cls.model_validate(data)
        except ValidationError as error:
            problems = "; ".join(
                f"{'.'.join(str(part) for part in issue['loc']) or 'config'}: {issue['msg']}"
                for issue in error.errors()
            )
            raise ParameterError(problems) from error

    def cells(self) -> list[tuple[Mode, int, int]]:
        "grid positions in output order: mode, then k, then replicate"
        return [(mode, k, rep) for mode in self.modes for k in self.k_values for rep in range(self.replicates)]


def derive_seed(base_seed: int, mode: Mode | str, k: int, replicate: int) -> int:
    tag = MODE_TAGS[Mode(mode)]
    return mix64((base_seed & MASK64) ^ mix64((tag << 48) + (k << 32) + replicate))


class SweepRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Mode
    k: int
    replicate: int
    seed: int
    nc: int
    q: float
    msc: float
    wall_ms: float = 0.0

    def check(self, n: int) -> None:
        if not 1 <= self.nc <= n:
            raise InvariantViolation(f"nc={self.nc} is outside [1, {n}]")

        if not -1.0 <= self.q <= 1.0:
            raise InvariantViolation(f"q={self.q} is outside [-1, 1]")

        if not 0.0 <= self.msc <= 1.0:
            raise InvariantViolation(f"msc={self.msc} is outside [0, 1]")

    def values(self) -> tuple:
        "every field except the timing, for determinism comparisons"
        return (self.mode, self.k, self.replicate, self.seed, self.nc, self.q, self.msc)


class CellFailure(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: Mode
    k: int
    replicate: int
    seed: int
    error_type: str
    message: str
    exit_code: int


class MetricStats(BaseModel):
    model_config = ConfigDict(frozen=True)

    median: float
    mean: float
    min: float
    max: float
    iqr: float

    @classmethod
    def of(cls, values: list[float]) -> Self:
        data = np.asarray(values, dtype=np.float64)
        q1, median, q3 = np.percentile(data, [25, 50, 75])

        return cls(
            median=float(median),
            mean=float(data.mean()),
            min=float(data.min()),
            max=float(data.max()),
            iqr=float(q3 - q1),
        )


class SweepSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    cells: dict[tuple[Mode, int], dict[str, MetricStats]]

    @classmethod
    def of(cls, records: list[SweepRecord]) -> Self:
        grouped: dict[tuple[Mode, int], list[SweepRecord]] = {}

        for record in records:
            grouped.setdefault((record.mode, record.k), []).append(record)

        return cls(
            cells={
                key: {metric: MetricStats.of([getattr(r, metric) for r in group]) for metric in METRICS}
                for key, group in grouped.items()
            }
        )

    def median(self, mode: Mode, k: int, metric: str) -> float:
        return self.cells[(mode, k)][metric].median

    def as_dict(self) -> dict:
        result: dict[str, dict[str, dict]] = {}

        for (mode, k), metrics in self.cells.items():
            result.setdefault(mode.value, {})[str(k)] = {name: stats.model_dump() for name, stats in metrics.items()}

        return result


class SweepResult(BaseModel):
    records: list[SweepRecord]
    failures: list[CellFailure] = []
    summary: SweepSummary = SweepSummary(cells={})

    @property
    def ok(self) -> bool:
        return not self.failures


def run_cell(
    n: int,
    k: int,
    mode: Mode | str,
    seed: int,
    weight_mode: WeightMode | str = WeightMode.ABS,
    threshold: float = DEFAULT_EDGE_THRESHOLD,
    *,
    replicate: int = 0,
    threads: int | None = None,
) -> SweepRecord:
    start = time.perf_counter()

    model = NkModel.build(n, k, mode, seed)
    matrix = correlation(enumerate_moments(model, threads=threads))
    msc = mean_squared_correlation(matrix) if n >= 2 else 0.0
    partition = louvain(graph_from_correlation(matrix, weight_mode, threshold), seed)

    record = SweepRecord(
        mode=Mode(mode),
        k=k,
        replicate=replicate,
        seed=seed,
        nc=partition.nc,
        q=partition.q,
        msc=msc,
        wall_ms=(time.perf_counter() - start) * 1000,
    )
    record.check(n)

    return record


def run_sweep(config: SweepConfig, *, threads: int | None = None) -> SweepResult:
    cells = config.cells()
    workers = min(worker_count(threads), len(cells))

    def run(cell: tuple[Mode, int, int]) -> SweepRecord | CellFailure:
        mode, k, replicate = cell
        seed = derive_seed(config.base_seed, mode, k, replicate)

        with structlog.contextvars.bound_contextvars(mode=mode, k=k, replicate=replicate):
            try:
                record = run_cell(
                    config.n,
                    k,
                    mode,
                    seed,
                    config.weight_mode,
                    config.threshold,
                    replicate=replicate,
                    threads=1 if workers > 1 else threads,
                )
            except NkCommunityError as error:
                log.error("cell failed", error=str(error), error_type=type(error).__name__)
                return CellFailure(
                    mode=mode,
                    k=k,
                    replicate=replicate,
                    seed=seed,
                    error_type=type(error).__name__,
                    message=str(error),
                    exit_code=error.exit_code,
                )

            log.debug("cell finished", nc=record.nc, q=record.q, msc=record.msc)
            return record

    with ThreadPoolExecutor(max_workers=workers) as executor:
        outcomes = list(executor.map(run, cells))

    records = [outcome for outcome in outcomes if isinstance(outcome, SweepRecord)]
    failures = [outcome for outcome in outcomes if isinstance(outcome, CellFailure)]

    log.info("sweep finished", n=config.n, cells=len(cells), failures=len(failures), workers=workers)

    return SweepResult(records=records, failures=failures, summary=SweepSummary.of(records))


def render_records_csv(records: list[SweepRecord], *, timing: bool = True) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)

    for r in records:
        wall_ms = f"{r.wall_ms:.3f}" if timing else "0"
        writer.writerow([r.mode.value, r.k, r.replicate, r.seed, r.nc, f"{r.q:.10g}", f"{r.msc:.10g}", wall_ms])

    return buffer.getvalue()


def write_records_csv(records: list[SweepRecord], path: Path, *, timing: bool = True) -> Path:
    path.write_text(render_records_csv(records, timing=timing))
    return path


def parse_records_csv(text: str) -> list[SweepRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)

    if header is None:
        return []

    if tuple(header) != RECORD_FIELDS:
        raise ParseError(f"expected header {','.join(RECORD_FIELDS)}", line=1)

    records = []

    for row in reader:
        if not row:
            continue

        if len(row) != len(RECORD_FIELDS):
            raise ParseError(f"expected {len(RECORD_FIELDS)} fields, got {len(row)}", line=reader.line_num)

        mode, k, replicate, seed, nc, q, msc, wall_ms = row

        try:
            records.append(
                SweepRecord(
                    mode=Mode(mode),
                    k=int(k),
                    replicate=int(replicate),
                    seed=int(seed),
                    nc=int(nc),
                    q=float(q),
                    msc=float(msc),
                    wall_ms=float(wall_ms),
                )
            )
        except ValueError as error:
            raise ParseError(str(error), line=reader.line_num) from error

    return records


def read_records_csv(path: Path) -> list[SweepRecord]:
    return parse_records_csv(path.read_text())


def summary_json(summary: SweepSummary) -> bytes:
    return orjson.dumps(summary.as_dict(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n"


def write_summary_json(summary: SweepSummary, path: Path) -> Path:
    path.write_bytes(summary_json(summary))
    return path
