import numpy as np
import orjson
import pytest
from pydantic import ValidationError

from nk_community import (
    Mode,
    NkModel,
    ParameterError,
    ParseError,
    TableMode,
    build_epistasis,
    fitness,
    goedel_index,
    table_value,
    trait_value,
)
from nk_community.nk_model import (
    adjacent_links,
    export_tables,
    genotype_from_index,
    genotype_index,
    links_as_one_based,
    random_links,
    table_entry_bits,
    trait_values,
)
from tests.utils import influencers

SEED_7_GENE_0 = [
    0.16787768199872455,
    0.018032421253142306,
    0.536260308236077,
    0.17507624133133948,
]


def test_adjacent_links_alternate_left_and_right():
    assert adjacent_links(10, 5, 0) == (9, 1, 8, 2, 7)
    assert adjacent_links(4, 2, 0) == (3, 1)
    assert adjacent_links(5, 4, 2) == (1, 3, 0, 4)
    assert adjacent_links(3, 0, 1) == ()


def test_random_links_reference_values():
    assert random_links(10, 3, 0, seed=7) == (7, 5, 6)
    assert random_links(10, 3, 4, seed=7) == (3, 5, 0)


@pytest.mark.parametrize("mode", list(Mode))
def test_epistasis_links_are_distinct_and_exclude_self(mode):
    for n in range(1, 9):
        for k in range(n):
            matrix = build_epistasis(n, k, mode, seed=11)

            for gene, links in enumerate(matrix.links):
                assert len(links) == k
                assert len(set(links)) == k
                assert gene not in links
                assert all(0 <= other < n for other in links)
                assert influencers(matrix, gene) == {gene, *links}


def test_full_epistasis_links_every_other_gene():
    for mode in Mode:
        matrix = build_epistasis(6, 5, mode, seed=3)
        assert all(set(links) == set(range(6)) - {gene} for gene, links in enumerate(matrix.links))


def test_links_as_one_based():
    model = NkModel.build(4, 2, Mode.ADJACENT)

    assert links_as_one_based(model) == [[4, 2], [1, 3], [2, 4], [3, 1]]


@pytest.mark.parametrize("table_mode", list(TableMode))
def test_table_value_reference_values(table_mode):
    model = NkModel.build(4, 1, Mode.RANDOM, seed=7, table_mode=table_mode)

    assert [table_value(model, 0, entry) for entry in range(4)] == SEED_7_GENE_0


def test_tables_do_not_depend_on_mode_or_storage():
    materialized = NkModel.build(6, 3, Mode.RANDOM, seed=42)
    on_the_fly = NkModel.build(6, 3, Mode.ADJACENT, seed=42, table_mode=TableMode.ON_THE_FLY)

    for gene in range(6):
        for entry in range(16):
            assert table_value(materialized, gene, entry) == table_value(on_the_fly, gene, entry)
            assert table_entry_bits(materialized, gene, entry) == table_entry_bits(on_the_fly, gene, entry)

    assert (materialized.tables() == on_the_fly.tables()).all()


def test_table_values_are_exact_multiples_of_the_scale():
    model = NkModel.build(5, 2, seed=9)

    for gene in range(5):
        for entry in range(8):
            value = table_value(model, gene, entry)
            assert 0.0 <= value < 1.0
            assert value * 2**53 == table_entry_bits(model, gene, entry)


def test_table_value_rejects_out_of_range_entries():
    model = NkModel.build(3, 1)

    with pytest.raises(ParameterError):
        table_value(model, 3, 0)

    with pytest.raises(ParameterError):
        table_value(model, 0, 4)


def test_goedel_index_reads_own_gene_then_links():
    epistasis = build_epistasis(4, 2, Mode.ADJACENT)

    assert goedel_index((1, 0, 1, 1), 0, epistasis) == 3
    assert goedel_index((0, 0, 0, 0), 0, epistasis) == 0
    assert goedel_index((1, 1, 1, 1), 2, epistasis) == 7


def test_genotype_encoding_puts_gene_i_at_bit_i():
    assert genotype_from_index(0b1101, 4) == (1, 0, 1, 1)
    assert genotype_index((1, 0, 1, 1)) == 0b1101

    with pytest.raises(ParameterError):
        genotype_from_index(16, 4)

    with pytest.raises(ParameterError):
        genotype_index((0, 2))


def test_worked_example_with_injected_tables():
    model = NkModel.with_tables([[0.0, 0.5, 0.25, 0.75], [0.5, 0.0, 0.25, 0.125]])

    assert model.epistasis.links == ((1,), (0,))
    assert trait_values(model, (1, 0)) == (0.5, 0.25)
    assert trait_value(model, 1, (1, 1)) == 0.125
    assert fitness(model, (1, 0)) == 0.75
    assert fitness(model, (0, 0)) == 0.5


def test_worked_example_without_epistasis():
    model = NkModel.with_tables([[0.2, 0.7], [0.5, 0.1]])

    assert model.k == 0
    assert model.epistasis.links == ((), ())
    assert trait_values(model, (0, 1)) == (0.2, 0.1)
    assert fitness(model, (0, 1)) == pytest.approx(0.3, abs=1e-15)
    assert fitness(model, (1, 0)) == pytest.approx(1.2, abs=1e-15)


def test_with_tables_validation():
    with pytest.raises(ParameterError):
        NkModel.with_tables([[0.0, 0.5, 0.25]])

    with pytest.raises(ParameterError):
        NkModel.with_tables([[0.0, 1.0], [0.0, 0.5]])

    with pytest.raises(ParameterError):
        NkModel.with_tables([[0.0, 0.5, 0.25, 0.75], [0.5, 0.0, 0.25, 0.125]], links=[[0], [0]])

    with pytest.raises(ParameterError, match="no seed descriptor"):
        NkModel.with_tables([[0.0, 0.5], [0.5, 0.0]]).descriptor()


def test_fitness_checks_the_genotype():
    model = NkModel.build(3, 1)

    with pytest.raises(ParameterError):
        fitness(model, (0, 1))

    with pytest.raises(ParameterError):
        fitness(model, (0, 1, 2))


def test_k_must_not_exceed_n_minus_one():
    with pytest.raises(ParameterError, match="k must be ≤ n-1"):
        NkModel.build(3, 3)

    with pytest.raises(ValidationError):
        NkModel(n=3, k=3)

    with pytest.raises(ParameterError):
        build_epistasis(0, 0, Mode.RANDOM)


def test_descriptor_is_byte_stable():
    model = NkModel.build(5, 2, Mode.RANDOM, seed=7)

    assert model.descriptor_json() == (
        b'{\n  "k": 2,\n  "mode": "random",\n  "n": 5,\n  "seed": 7,\n  "table_mode": "materialized"\n}\n'
    )

    restored = NkModel.from_descriptor(model.descriptor_json())
    assert restored.descriptor() == model.descriptor()
    assert (restored.tables() == model.tables()).all()
    assert restored.epistasis.links == model.epistasis.links


@pytest.mark.parametrize(
    "document",
    [
        b"not json",
        b"[1, 2]",
        b'{"n": 3, "k": 1, "colour": "red"}',
        b'{"n": 3, "k": 5}',
    ],
)
def test_bad_descriptors(document):
    with pytest.raises(ParseError):
        NkModel.from_descriptor(document)


def test_export_tables(tmp_path):
    model = NkModel.build(3, 1, seed=7)

    json_path = export_tables(model, tmp_path / "tables.json")
    assert orjson.loads(json_path.read_bytes()) == model.tables().tolist()

    binary_path = export_tables(model, tmp_path / "tables.bin", "binary")
    assert binary_path.stat().st_size == 3 * 4 * 8


@pytest.mark.parametrize("mode", list(Mode))
def test_traits_only_read_their_influencers(mode):
    model = NkModel.build(10, 3, mode, seed=5)
    rng = np.random.default_rng(5)

    for x in rng.integers(0, 2, size=(20, 10)).tolist():
        for gene in range(10):
            before = trait_value(model, gene, x)

            for other in set(range(10)) - influencers(model.epistasis, gene):
                flipped = list(x)
                flipped[other] ^= 1

                assert trait_value(model, gene, flipped) == before


def test_table_values_average_one_half():
    tables = NkModel.build(10, 9, seed=3).tables()

    assert tables.shape == (10, 1024)
    assert tables.mean() == pytest.approx(0.5, abs=0.02)
    assert ((tables >= 0.0) & (tables < 1.0)).all()


@pytest.mark.parametrize("mode", list(Mode))
def test_fitness_stays_below_n(mode):
    model = NkModel.build(10, 4, mode, seed=12)

    for x in np.random.default_rng(12).integers(0, 2, size=(1000, 10)).tolist():
        assert 0.0 <= fitness(model, x) < 10


def test_on_the_fly_tables_match_materialized_for_every_shape():
    for n in range(1, 13):
        for k in range(n):
            materialized = NkModel.build(n, k, seed=n * 100 + k).tables()
            on_the_fly = NkModel.build(n, k, seed=n * 100 + k, table_mode=TableMode.ON_THE_FLY)

            assert materialized.shape == (n, 2 ** (k + 1))
            assert [
                [table_value(on_the_fly, gene, entry) for entry in range(2 ** (k + 1))] for gene in range(n)
            ] == materialized.tolist()
