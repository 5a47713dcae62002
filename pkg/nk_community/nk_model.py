"""
Binary NK landscapes.

Genes are 0-indexed everywhere in the Python API. Documentation-facing output (the CLI, Pajek
labels, `links_as_one_based`) shifts to 1-based indices, so gene 0 here is gene 1 in the docs.

A genotype is a tuple of 0/1 ints. Its canonical integer encoding puts gene i at bit i, so
`genotype_from_index(g, n)` enumerates {0,1}^n in the order trait_stats walks it.
"""

import math
from collections.abc import Sequence
from enum import StrEnum
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Self

import numpy as np
import numpy.typing as npt
import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ParameterError, ParseError
from .splitmix import (
    LINK_TAG,
    UNIT_SCALE,
    mix64,
    mix64_array,
    stream_draw,
    unit_bits,
    unit_from_bits,
)

LIMB_BITS = 14
"table values are split into 14-bit integer limbs for the exact enumeration kernel"

TABLE_KEY_SHIFT = 40

Genotype = tuple[int, ...]


class Mode(StrEnum):
    ADJACENT = "adjacent"
    RANDOM = "random"


class TableMode(StrEnum):
    MATERIALIZED = "materialized"
    ON_THE_FLY = "on_the_fly"


class TablesFormat(StrEnum):
    JSON = "json"
    BINARY = "binary"


def genotype_from_index(index: int, n: int) -> Genotype:
    if not 0 <= index < 2**n:
        raise ParameterError(f"genotype index {index} is outside [0, 2**{n})")

    return tuple((index >> i) & 1 for i in range(n))


def genotype_index(bits: Sequence[int]) -> int:
    index = 0

    for i, bit in enumerate(bits):
        if bit not in (0, 1):
            raise ParameterError(f"gene {i} is {bit!r}, genotypes are binary")

        index |= bit << i

    return index


def check_parameters(n: int, k: int) -> None:
    if n < 1:
        raise ParameterError("n must be ≥ 1")

    if k < 0:
        raise ParameterError("k must be ≥ 0")

    if k > n - 1:
        raise ParameterError("k must be ≤ n-1")


def adjacent_links(n: int, k: int, gene: int) -> tuple[int, ...]:
    "cyclic neighbours by increasing radius, left before right"
    links: list[int] = []
    radius = 1

    while len(links) < k:
        for candidate in ((gene - radius) % n, (gene + radius) % n):
            if len(links) < k and candidate != gene and candidate not in links:
                links.append(candidate)

        radius += 1

    return tuple(links)


def random_links(n: int, k: int, gene: int, seed: int) -> tuple[int, ...]:
    # partial Fisher-Yates; the draw order is the stored order e(i, 1..k)
    pool = [other for other in range(n) if other != gene]

    for t in range(k):
        r = stream_draw(seed, LINK_TAG, gene + 1, t)
        j = t + r % (len(pool) - t)
        pool[t], pool[j] = pool[j], pool[t]

    return tuple(pool[:k])


class EpistasisMatrix(BaseModel):
    """
    For each gene, the ordered genes its trait depends on besides itself.
    """

    model_config = ConfigDict(frozen=True)

    n: int
    k: int
    mode: Mode
    links: tuple[tuple[int, ...], ...]


def check_links(n: int, k: int, links: Sequence[Sequence[int]]) -> None:
    if len(links) != n:
        raise ParameterError(f"expected {n} link lists, got {len(links)}")

    for gene, row in enumerate(links):
        if len(row) != k:
            raise ParameterError(f"gene {gene} has {len(row)} links, expected {k}")

        if len(set(row)) != len(row) or gene in row:
            raise ParameterError(f"gene {gene} links must be distinct and exclude itself")

        if any(not 0 <= other < n for other in row):
            raise ParameterError(f"gene {gene} links outside [0, {n})")


def build_epistasis(n: int, k: int, mode: Mode | str, seed: int = 0) -> EpistasisMatrix:
    check_parameters(n, k)
    mode = Mode(mode)

    if mode is Mode.ADJACENT:
        links = tuple(adjacent_links(n, k, gene) for gene in range(n))
    else:
        links = tuple(random_links(n, k, gene, seed) for gene in range(n))

    return EpistasisMatrix(n=n, k=k, mode=mode, links=links)


def seeded_table_bits(seed: int, n: int, k: int) -> npt.NDArray[np.uint64]:
    "the 53-bit integers behind every table value, shape (n, 2**(k+1))"
    genes = np.arange(1, n + 1, dtype=np.uint64)[:, None]
    entries = np.arange(2 ** (k + 1), dtype=np.uint64)[None, :]
    keys = (genes << np.uint64(TABLE_KEY_SHIFT)) + entries

    words = mix64_array(np.uint64(seed) ^ mix64_array(keys))
    return words >> np.uint64(64 - UNIT_SCALE)


def _value_scale(value: float) -> int:
    _, denominator = value.as_integer_ratio()
    return denominator.bit_length() - 1


class NkModel(BaseModel):
    """
    A landscape is fully determined by (n, k, mode, seed); tables are generated from those on
    first use. `with_tables` builds a model around hand-written tables instead, which is how the
    small worked examples are expressed.
    """

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    k: int = Field(ge=0)
    mode: Mode = Mode.RANDOM
    seed: int = Field(default=0, ge=0, lt=2**64)
    table_mode: TableMode = TableMode.MATERIALIZED

    custom_tables: tuple[tuple[float, ...], ...] | None = Field(default=None, exclude=True, repr=False)
    custom_links: tuple[tuple[int, ...], ...] | None = Field(default=None, exclude=True, repr=False)

    @model_validator(mode="after")
    def check_k_range(self) -> Self:
        if self.k > self.n - 1:
            raise ValueError("k must be ≤ n-1")

        return self

    @classmethod
    def build(
        cls,
        n: int,
        k: int,
        mode: Mode | str = Mode.RANDOM,
        seed: int = 0,
        table_mode: TableMode | str = TableMode.MATERIALIZED,
    ) -> Self:
        check_parameters(n, k)

        if not 0 <= seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")

        return cls(n=n, k=k, mode=Mode(mode), seed=seed, table_mode=TableMode(table_mode))

    @classmethod
    def with_tables(
        cls,
        tables: Sequence[Sequence[float]],
        links: Sequence[Sequence[int]] | None = None,
        mode: Mode | str = Mode.ADJACENT,
    ) -> Self:
        """
        Model over injected tables: gene i uses tables[i], indexed by the Goedel index. Without
        explicit links the genes get the links `build_epistasis` assigns for `mode` and seed 0.
        """
        n = len(tables)

        if n < 1:
            raise ParameterError("at least one table is required")

        width = len(tables[0])
        k = width.bit_length() - 2

        if width < 2 or width != 2 ** (k + 1) or any(len(row) != width for row in tables):
            raise ParameterError("every table needs the same power-of-two length 2**(k+1)")

        check_parameters(n, k)

        for row in tables:
            for value in row:
                if not (math.isfinite(value) and 0.0 <= value < 1.0):
                    raise ParameterError(f"table value {value!r} is outside [0, 1)")

        if links is None:
            links = build_epistasis(n, k, mode).links
        else:
            check_links(n, k, links)

        return cls(
            n=n,
            k=k,
            mode=Mode(mode),
            custom_tables=tuple(tuple(float(v) for v in row) for row in tables),
            custom_links=tuple(tuple(int(g) for g in row) for row in links),
        )

    @cached_property
    def epistasis(self) -> EpistasisMatrix:
        if self.custom_links is not None:
            return EpistasisMatrix(n=self.n, k=self.k, mode=self.mode, links=self.custom_links)

        return build_epistasis(self.n, self.k, self.mode, self.seed)

    @property
    def table_size(self) -> int:
        return 2 ** (self.k + 1)

    @property
    def scale(self) -> int:
        "every table value is an integer multiple of 2**-scale"
        if self.custom_tables is None:
            return UNIT_SCALE

        return max(_value_scale(v) for row in self.custom_tables for v in row)

    @cached_property
    def materialized_bits(self) -> npt.NDArray[np.uint64]:
        return seeded_table_bits(self.seed, self.n, self.k)

    def seeded_bits(self) -> npt.NDArray[np.uint64]:
        if self.table_mode is TableMode.MATERIALIZED:
            return self.materialized_bits

        return seeded_table_bits(self.seed, self.n, self.k)

    def table_bits(self) -> npt.NDArray[np.object_]:
        """
        Exact table values as integers u with value == u / 2**scale, as an object array of
        python ints shaped (n, 2**(k+1)).
        """
        if self.custom_tables is None:
            return self.seeded_bits().astype(object)

        scale = self.scale
        rows = [[(Fraction(v) * 2**scale).numerator for v in row] for row in self.custom_tables]
        return np.array(rows, dtype=object)

    def tables(self) -> npt.NDArray[np.float64]:
        "table values as float64, shape (n, 2**(k+1))"
        if self.custom_tables is None:
            return self.seeded_bits().astype(np.float64) / 2.0**UNIT_SCALE

        return np.array(self.custom_tables, dtype=np.float64)

    def limb_tables(self) -> tuple[npt.NDArray[np.float64], int]:
        """
        Split every table integer into 14-bit limbs, least significant first. Returns the limbs
        as float64 shaped (n, 2**(k+1), limbs) and the scale. Products of two limbs stay below
        2**28, so sums of up to 2**12 of them are exact in float64.
        """
        scale = self.scale
        limbs = max(1, -(-scale // LIMB_BITS))
        mask = (1 << LIMB_BITS) - 1

        if self.custom_tables is None:
            shifts = np.arange(limbs, dtype=np.uint64) * np.uint64(LIMB_BITS)
            split = (self.seeded_bits()[..., None] >> shifts) & np.uint64(mask)
            return split.astype(np.float64), scale

        exact = self.table_bits()
        split = np.empty((*exact.shape, limbs), dtype=np.float64)

        for index, value in np.ndenumerate(exact):
            for limb in range(limbs):
                split[(*index, limb)] = (value >> (LIMB_BITS * limb)) & mask

        return split, scale

    def descriptor(self) -> dict:
        if self.custom_tables is not None:
            raise ParameterError("models over injected tables have no seed descriptor")

        return self.model_dump(mode="json")

    def descriptor_json(self) -> bytes:
        "byte-stable JSON descriptor: sorted keys, 2-space indent, trailing newline"
        return orjson.dumps(self.descriptor(), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS) + b"\n"

    @classmethod
    def from_descriptor(cls, document: bytes | str) -> Self:
        try:
            data = orjson.loads(document)
        except orjson.JSONDecodeError as error:
            raise ParseError(f"model descriptor is not valid JSON: {error}") from error

        if not isinstance(data, dict):
            raise ParseError("model descriptor must be a JSON object")

        unknown = set(data) - {"n", "k", "mode", "seed", "table_mode"}
        if unknown:
            raise ParseError(f"unknown model descriptor fields: {', '.join(sorted(unknown))}")

        try:
            model = cls.model_validate(data)
        except ValidationError as error:
            raise ParseError(f"invalid model descriptor: {error}") from error

        return model


def _check_gene(model: NkModel, gene: int) -> None:
    if not 0 <= gene < model.n:
        raise ParameterError(f"gene {gene} is outside [0, {model.n})")


def _check_genotype(model: NkModel, x: Sequence[int]) -> None:
    if len(x) != model.n:
        raise ParameterError(f"genotype has {len(x)} genes, model has {model.n}")

    if any(bit not in (0, 1) for bit in x):
        raise ParameterError("genotypes are binary")


def table_value(model: NkModel, gene: int, entry: int) -> float:
    _check_gene(model, gene)

    if not 0 <= entry < model.table_size:
        raise ParameterError(f"table entry {entry} is outside [0, {model.table_size})")

    if model.custom_tables is not None:
        return model.custom_tables[gene][entry]

    if model.table_mode is TableMode.MATERIALIZED:
        return float(model.materialized_bits[gene, entry]) / 2.0**UNIT_SCALE

    key = ((gene + 1) << TABLE_KEY_SHIFT) + entry
    return unit_from_bits(mix64(model.seed ^ mix64(key)))


def table_entry_bits(model: NkModel, gene: int, entry: int) -> int:
    "the exact integer behind table_value, in units of 2**-model.scale"
    value = table_value(model, gene, entry)

    if model.custom_tables is not None:
        return (Fraction(value) * 2**model.scale).numerator

    key = ((gene + 1) << TABLE_KEY_SHIFT) + entry
    return unit_bits(mix64(model.seed ^ mix64(key)))


def goedel_index(x: Sequence[int], gene: int, epistasis: EpistasisMatrix) -> int:
    index = x[gene]

    for position, other in enumerate(epistasis.links[gene], start=1):
        index |= x[other] << position

    return index


def trait_value(model: NkModel, gene: int, x: Sequence[int]) -> float:
    _check_genotype(model, x)
    return table_value(model, gene, goedel_index(x, gene, model.epistasis))


def trait_values(model: NkModel, x: Sequence[int]) -> tuple[float, ...]:
    _check_genotype(model, x)
    return tuple(table_value(model, gene, goedel_index(x, gene, model.epistasis)) for gene in range(model.n))


def fitness(model: NkModel, x: Sequence[int]) -> float:
    return math.fsum(trait_values(model, x))


def links_as_one_based(model: NkModel) -> list[list[int]]:
    return [[other + 1 for other in row] for row in model.epistasis.links]


def export_tables(model: NkModel, path: Path, fmt: TablesFormat | str = TablesFormat.JSON) -> Path:
    """
    Dump every table for auditing. JSON is a list of per-gene lists; binary is little-endian
    float64, gene-major, 2**(k+1) values per gene.
    """
    fmt = TablesFormat(fmt)
    values = model.tables()

    if fmt is TablesFormat.JSON:
        path.write_bytes(orjson.dumps(values, option=orjson.OPT_SERIALIZE_NUMPY) + b"\n")
    else:
        path.write_bytes(values.astype("<f8").tobytes())

    return path
