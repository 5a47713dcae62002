"""
Moments of the trait functions over the genotype space, and the correlation matrix built from them.

Enumeration is exact. Table values are integers in units of 2**-scale; each is split into 14-bit
limbs held in float64, so a chunk of up to 2**12 genotypes reduces to sums and a BLAS product
whose every partial result is an integer below 2**53. Chunk results are added as int64 and turned
into Fractions at the end, which makes the moments independent of chunk size, worker count and
summation order.
"""

import io
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Self

import numpy as np
import numpy.typing as npt
import orjson
import structlog
from pydantic import BaseModel, ConfigDict, Field

from .constants import ENUMERATION_HARD_CAP, SAMPLING_MAX_BITS
from .errors import CapacityError, InsufficientDataError, ParameterError, ParseError
from .nk_model import LIMB_BITS, NkModel
from .settings import get_settings, worker_count

log = structlog.get_logger(logger_name=__name__)

DEGENERATE_VARIANCE = 1e-15
"a trait whose summed squared deviation is at most this times count is treated as constant"

CSV_DECIMALS = 10


def _zeros(shape) -> npt.NDArray[np.object_]:
    array = np.empty(shape, dtype=object)
    array.fill(Fraction(0))
    return array


class TraitMoments(BaseModel):
    """
    count, per-trait sums and the upper triangle (diagonal included) of the co-sums. Values are
    Fractions, so accumulating and merging are exact and order-insensitive.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n_traits: int = Field(ge=0)
    count: int = Field(default=0, ge=0)
    sums: np.ndarray = Field(default_factory=lambda data: _zeros(data["n_traits"]))
    co: np.ndarray = Field(default_factory=lambda data: _zeros((data["n_traits"], data["n_traits"])))
    exact: bool = True
    "False when built from a sample of the genotype space"

    def accumulate(self, traits: Sequence[float]) -> Self:
        if len(traits) != self.n_traits:
            raise ParameterError(f"expected {self.n_traits} trait values, got {len(traits)}")

        values = [Fraction(v) for v in traits]
        self.count += 1

        for i, vi in enumerate(values):
            self.sums[i] += vi

            for j in range(i, self.n_traits):
                self.co[i, j] += vi * values[j]

        return self

    def merge(self, other: "TraitMoments") -> "TraitMoments":
        if other.n_traits != self.n_traits:
            raise ParameterError(f"cannot merge moments over {self.n_traits} and {other.n_traits} traits")

        return TraitMoments(
            n_traits=self.n_traits,
            count=self.count + other.count,
            sums=self.sums + other.sums,
            co=self.co + other.co,
            exact=self.exact and other.exact,
        )

    def covariance_sums(self) -> npt.NDArray[np.object_]:
        "full symmetric matrix of Σ(Fi - mean_i)(Fj - mean_j)"
        n = self.n_traits
        result = _zeros((n, n))

        for i in range(n):
            for j in range(i, n):
                value = Fraction(self.co[i, j]) - Fraction(self.sums[i]) * Fraction(self.sums[j]) / self.count
                result[i, j] = result[j, i] = value

        return result


def weight_matrix(model: NkModel) -> npt.NDArray[np.int64]:
    "row i holds the power of two each gene contributes to trait i's Goedel index"
    weights = np.zeros((model.n, model.n), dtype=np.int64)

    for gene, links in enumerate(model.epistasis.links):
        weights[gene, gene] = 1

        for position, other in enumerate(links, start=1):
            weights[gene, other] = 1 << position

    return weights


@dataclass(frozen=True)
class _Kernel:
    limbs: npt.NDArray[np.float64]
    weights: npt.NDArray[np.int64]
    n: int

    @property
    def limb_count(self) -> int:
        return self.limbs.shape[2]

    def moments(self, genotypes: npt.NDArray[np.int64]) -> tuple[npt.NDArray[np.int64], npt.NDArray[np.int64]]:
        "limb-level sums and co-sums over a block of at most 2**12 genotypes"
        bits = (genotypes[:, None] >> np.arange(self.n, dtype=np.int64)) & 1
        index = bits @ self.weights.T
        values = self.limbs[np.arange(self.n)[None, :], index].reshape(len(genotypes), -1)

        return values.sum(axis=0).astype(np.int64), (values.T @ values).astype(np.int64)


Block = range | npt.NDArray[np.int64]
"a run of canonical genotype indices, or an explicit array of sampled ones"


def _genotypes(block: Block) -> npt.NDArray[np.int64]:
    if isinstance(block, range):
        return np.arange(block.start, block.stop, dtype=np.int64)

    return block


def _block_moments(kernel: _Kernel, blocks: Sequence[Block]):
    width = kernel.n * kernel.limb_count
    sums = np.zeros(width, dtype=np.int64)
    co = np.zeros((width, width), dtype=np.int64)

    for block in blocks:
        chunk_sums, chunk_co = kernel.moments(_genotypes(block))
        sums += chunk_sums
        co += chunk_co

    return sums, co


def _to_moments(
    sums: npt.NDArray[np.int64],
    co: npt.NDArray[np.int64],
    *,
    n: int,
    limb_count: int,
    scale: int,
    count: int,
    exact: bool,
) -> TraitMoments:
    place = np.array([1 << (LIMB_BITS * a) for a in range(limb_count)], dtype=object)

    int_sums = (sums.reshape(n, limb_count).astype(object) * place).sum(axis=1)
    int_co = (
        co.reshape(n, limb_count, n, limb_count).astype(object)
        * place[None, :, None, None]
        * place[None, None, None, :]
    ).sum(axis=(1, 3))

    moments = TraitMoments(n_traits=n, count=count, exact=exact)

    for i in range(n):
        moments.sums[i] = Fraction(int(int_sums[i]), 1 << scale)

        for j in range(i, n):
            moments.co[i, j] = Fraction(int(int_co[i, j]), 1 << (2 * scale))

    return moments


def _run_blocks(kernel: _Kernel, blocks: Sequence[Block], workers: int):
    # contiguous runs of blocks per worker; integer partials make the merge order irrelevant
    # but they are still merged in ascending order
    width = kernel.n * kernel.limb_count
    sums = np.zeros(width, dtype=np.int64)
    co = np.zeros((width, width), dtype=np.int64)

    runs = [run.tolist() for run in np.array_split(np.arange(len(blocks)), workers) if len(run)]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        partials = executor.map(lambda run: _block_moments(kernel, [blocks[i] for i in run]), runs)

        for run_sums, run_co in partials:
            sums += run_sums
            co += run_co

    return sums, co


def enumerate_moments(
    model: NkModel,
    *,
    threads: int | None = None,
    chunk_bits: int | None = None,
) -> TraitMoments:
    """
    Exact moments over all 2**n genotypes in canonical order.

    Raises CapacityError above the enumeration cap (NKCOMM_ENUMERATION_CAP, default 28).
    """
    settings = get_settings()
    cap = min(settings.enumeration_cap, ENUMERATION_HARD_CAP)

    if model.n > cap:
        raise CapacityError(f"n={model.n} is too large to enumerate exhaustively", cap=cap)

    chunk_bits = min(chunk_bits or settings.chunk_bits, 12, model.n)
    chunk_size = 1 << chunk_bits
    total = 1 << model.n

    limbs, scale = model.limb_tables()
    kernel = _Kernel(limbs=limbs, weights=weight_matrix(model), n=model.n)

    blocks = [range(start, start + chunk_size) for start in range(0, total, chunk_size)]
    workers = min(worker_count(threads), len(blocks))

    sums, co = _run_blocks(kernel, blocks, workers)

    log.debug("moments enumerated", n=model.n, k=model.k, chunks=len(blocks), workers=workers)

    return _to_moments(
        sums,
        co,
        n=model.n,
        limb_count=kernel.limb_count,
        scale=scale,
        count=total,
        exact=True,
    )


def sample_moments(
    model: NkModel,
    samples: int,
    seed: int = 0,
    *,
    threads: int | None = None,
) -> TraitMoments:
    """
    Approximate moments over a uniform sample of distinct genotypes, for landscapes too large to
    enumerate. The arithmetic is still exact; only the genotype set is partial.
    """
    if model.n > SAMPLING_MAX_BITS:
        raise CapacityError(f"n={model.n} is too large to sample", cap=SAMPLING_MAX_BITS)

    if samples < 2:
        raise ParameterError("samples must be ≥ 2")

    if samples > min(2**model.n, 2**ENUMERATION_HARD_CAP):
        raise ParameterError(f"samples must be ≤ {min(2**model.n, 2**ENUMERATION_HARD_CAP)}")

    generator = np.random.Generator(np.random.PCG64(seed))
    genotypes = np.sort(generator.choice(2**model.n, size=samples, replace=False).astype(np.int64))

    limbs, scale = model.limb_tables()
    kernel = _Kernel(limbs=limbs, weights=weight_matrix(model), n=model.n)

    blocks = [genotypes[start : start + 4096] for start in range(0, samples, 4096)]
    workers = min(worker_count(threads), len(blocks))

    sums, co = _run_blocks(kernel, blocks, workers)

    log.warning("moments are approximate", n=model.n, samples=samples, fraction=samples / 2**model.n)

    return _to_moments(
        sums,
        co,
        n=model.n,
        limb_count=kernel.limb_count,
        scale=scale,
        count=samples,
        exact=False,
    )


def _format_entry(value: float) -> str:
    text = f"{value:.{CSV_DECIMALS}f}"

    if text.startswith("-") and not text.strip("-0."):
        return text[1:]

    return text


class CorrelationMatrix(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rho: np.ndarray
    degenerate: tuple[bool, ...]

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    def to_csv(self) -> str:
        "N lines of N comma-separated values with 10 decimals, no header"
        return "".join(",".join(_format_entry(v) for v in row) + "\n" for row in self.rho)

    def write_csv(self, path: Path) -> Path:
        path.write_text(self.to_csv())
        return path

    @classmethod
    def from_csv(cls, text: str) -> Self:
        rows: list[list[float]] = []

        for line_number, line in enumerate(io.StringIO(text), start=1):
            if not line.strip():
                continue

            try:
                row = [float(cell) for cell in line.strip().split(",")]
            except ValueError as error:
                raise ParseError(f"not a number: {error}", line=line_number) from error

            if rows and len(row) != len(rows[0]):
                raise ParseError(f"expected {len(rows[0])} columns, got {len(row)}", line=line_number)

            if any(not math.isfinite(v) or abs(v) > 1 + 1e-9 for v in row):
                raise ParseError("correlations must lie in [-1, 1]", line=line_number)

            rows.append(row)

        if not rows:
            raise ParseError("correlation CSV is empty", line=1)

        if len(rows) != len(rows[0]):
            raise ParseError(f"matrix is {len(rows)}x{len(rows[0])}, expected square", line=len(rows))

        rho = np.clip(np.array(rows, dtype=np.float64), -1.0, 1.0)

        for i in range(len(rows)):
            for j in range(i + 1, len(rows)):
                if abs(rho[i, j] - rho[j, i]) > 1e-9:
                    raise ParseError(f"matrix is not symmetric at ({i + 1}, {j + 1})", line=i + 1)

        return cls(rho=rho, degenerate=(False,) * len(rows))

    @classmethod
    def read_csv(cls, path: Path) -> Self:
        return cls.from_csv(path.read_text())

    def to_json(self) -> bytes:
        return orjson.dumps(
            {"n": self.n, "rho": self.rho, "degenerate": list(self.degenerate)},
            option=orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_SORT_KEYS,
        )


def _signed_sqrt_ratio(numerator: Fraction, denominator: Fraction) -> float:
    "numerator / sqrt(denominator), squared exactly before the only rounding steps"
    if numerator == 0:
        return 0.0

    magnitude = math.sqrt(float(numerator * numerator / denominator))
    return math.copysign(min(magnitude, 1.0), numerator)


def correlation(moments: TraitMoments) -> CorrelationMatrix:
    if moments.count < 2:
        raise InsufficientDataError(f"correlation needs at least 2 observations, got {moments.count}")

    n = moments.n_traits
    covariance = moments.covariance_sums()

    degenerate = tuple(bool(covariance[i, i] <= DEGENERATE_VARIANCE * moments.count) for i in range(n))
    rho = np.eye(n, dtype=np.float64)

    for i in range(n):
        for j in range(i + 1, n):
            if degenerate[i] or degenerate[j]:
                continue

            value = _signed_sqrt_ratio(covariance[i, j], covariance[i, i] * covariance[j, j])
            rho[i, j] = rho[j, i] = value

    return CorrelationMatrix(rho=rho, degenerate=degenerate)


def mean_squared_correlation(matrix: CorrelationMatrix) -> float:
    if matrix.n < 2:
        raise InsufficientDataError("mean squared correlation needs at least 2 traits")

    upper = matrix.rho[np.triu_indices(matrix.n, k=1)]
    return float(np.mean(upper**2))
