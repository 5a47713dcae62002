import xml.etree.ElementTree as ET

import orjson
import pytest

from nk_community import (
    Mode,
    ParameterError,
    ParseError,
    SweepConfig,
    WeightMode,
    derive_seed,
    run_cell,
    run_sweep,
)
from nk_community.plot import SVG_NAMESPACE, render_svg
from nk_community.sweep import (
    RECORD_FIELDS,
    parse_records_csv,
    read_records_csv,
    render_records_csv,
    summary_json,
    write_records_csv,
    write_summary_json,
)
from tests.utils import FIXTURES

# weak-link floor under which the community-count trend across k becomes visible
TREND_EDGE_THRESHOLD = 0.1


@pytest.fixture(scope="module")
def small_sweep():
    return run_sweep(SweepConfig(n=5, replicates=3, base_seed=11))


@pytest.fixture(scope="module")
def trend_sweep():
    "the full grid at n = 10 with 20 replicates and a weak-link floor"
    return run_sweep(
        SweepConfig(n=10, replicates=20, base_seed=0, threshold=TREND_EDGE_THRESHOLD),
        threads=4,
    )


def test_derive_seed_reference_values():
    assert derive_seed(0, Mode.RANDOM, 2, 0) == 15591496406467338102
    assert derive_seed(0, Mode.ADJACENT, 2, 0) == 1870579760749167442
    assert derive_seed(0, "random", 2, 0) == derive_seed(0, Mode.RANDOM, 2, 0)
    assert derive_seed(0, Mode.RANDOM, 2, 1) != derive_seed(0, Mode.RANDOM, 2, 0)


def test_config_defaults():
    config = SweepConfig(n=4)

    assert config.k_values == (0, 1, 2, 3)
    assert config.modes == (Mode.ADJACENT, Mode.RANDOM)
    assert config.replicates == 20
    assert config.weight_mode is WeightMode.ABS
    assert len(config.cells()) == 2 * 4 * 20
    assert config.cells()[:2] == [(Mode.ADJACENT, 0, 0), (Mode.ADJACENT, 0, 1)]


def test_config_load_merges_file_and_overrides(tmp_path):
    path = tmp_path / "sweep.json"
    path.write_bytes(orjson.dumps({"n": 6, "k_values": [1, 2], "replicates": 4, "modes": ["random"]}))

    config = SweepConfig.load(path, replicates=2, base_seed=None)

    assert config.n == 6
    assert config.k_values == (1, 2)
    assert config.replicates == 2
    assert config.modes == (Mode.RANDOM,)


@pytest.mark.parametrize(
    "overrides",
    [
        {"n": 4, "k_values": [4]},
        {"n": 4, "k_values": [2, 1]},
        {"n": 4, "modes": []},
        {"n": 4, "replicates": 0},
        {"n": 4, "speed": "fast"},
        {},
    ],
)
def test_config_load_rejects_bad_grids(overrides):
    with pytest.raises(ParameterError):
        SweepConfig.load(None, **overrides)


def test_config_load_rejects_bad_json(tmp_path):
    path = tmp_path / "sweep.json"
    path.write_text("{not json")

    with pytest.raises(ParseError):
        SweepConfig.load(path)


def test_run_cell_is_deterministic():
    first = run_cell(6, 2, Mode.RANDOM, seed=99, threads=1)
    second = run_cell(6, 2, Mode.RANDOM, seed=99, threads=3)

    assert first.values() == second.values()
    assert 1 <= first.nc <= 6
    assert 0.0 <= first.msc <= 1.0


def test_independent_traits_stay_singletons():
    record = run_cell(7, 0, Mode.ADJACENT, seed=3)

    assert record.nc == 7
    assert record.q == 0.0
    assert record.msc == 0.0


def test_single_gene_cell():
    record = run_cell(1, 0, Mode.RANDOM, seed=0)

    assert record.nc == 1
    assert record.msc == 0.0


def test_sweep_covers_the_grid_in_order(small_sweep):
    assert small_sweep.ok
    assert len(small_sweep.records) == 2 * 5 * 3
    assert [(r.mode, r.k, r.replicate) for r in small_sweep.records] == SweepConfig(
        n=5, replicates=3, base_seed=11
    ).cells()

    for record in small_sweep.records:
        assert record.seed == derive_seed(11, record.mode, record.k, record.replicate)


def test_sweep_ignores_worker_count(small_sweep):
    threaded = run_sweep(SweepConfig(n=5, replicates=3, base_seed=11), threads=4)

    assert [r.values() for r in threaded.records] == [r.values() for r in small_sweep.records]


def test_cells_do_not_depend_on_the_grid(small_sweep):
    alone = run_sweep(SweepConfig(n=5, k_values=[3], modes=["random"], replicates=3, base_seed=11))
    expected = [r.values() for r in small_sweep.records if r.mode is Mode.RANDOM and r.k == 3]

    assert [r.values() for r in alone.records] == expected


def test_summary(small_sweep):
    summary = small_sweep.summary

    assert summary.median(Mode.ADJACENT, 0, "nc") == 5
    assert sorted(k for mode, k in summary.cells if mode is Mode.RANDOM) == [0, 1, 2, 3, 4]

    document = orjson.loads(summary_json(summary))
    assert set(document) == {"adjacent", "random"}
    assert set(document["random"]["2"]) == {"nc", "q", "msc"}
    assert set(document["random"]["2"]["msc"]) == {"median", "mean", "min", "max", "iqr"}


def test_small_sweep_matches_golden_files():
    "n = 4, 2 replicates, base seed 0, timing off"
    result = run_sweep(SweepConfig(n=4, replicates=2))

    assert result.ok
    assert render_records_csv(result.records, timing=False) == (FIXTURES / "records.csv").read_text()
    assert summary_json(result.summary) == (FIXTURES / "summary.json").read_bytes()


def test_records_csv_round_trip(small_sweep, tmp_path):
    path = write_records_csv(small_sweep.records, tmp_path / "records.csv", timing=False)
    text = path.read_text()

    assert text.splitlines()[0] == ",".join(RECORD_FIELDS)
    assert all(line.endswith(",0") for line in text.splitlines()[1:])
    assert render_records_csv(small_sweep.records, timing=False) == text

    restored = read_records_csv(path)
    assert [(r.mode, r.k, r.replicate, r.seed, r.nc) for r in restored] == [
        (r.mode, r.k, r.replicate, r.seed, r.nc) for r in small_sweep.records
    ]

    write_summary_json(small_sweep.summary, tmp_path / "summary.json")
    assert orjson.loads((tmp_path / "summary.json").read_bytes())


@pytest.mark.parametrize(
    ("text", "line"),
    [
        ("mode,k\n", 1),
        (",".join(RECORD_FIELDS) + "\nrandom,1,0\n", 2),
        (",".join(RECORD_FIELDS) + "\nrandom,1,0,5,2,0.1,0.2,1.0\nsideways,1,0,5,2,0.1,0.2,1.0\n", 3),
        (",".join(RECORD_FIELDS) + "\nrandom,one,0,5,2,0.1,0.2,1.0\n", 2),
    ],
)
def test_records_csv_parse_errors(text, line):
    with pytest.raises(ParseError) as error:
        parse_records_csv(text)

    assert error.value.line == line


def test_failed_cells_are_reported(monkeypatch):
    monkeypatch.setenv("NKCOMM_ENUMERATION_CAP", "3")

    result = run_sweep(SweepConfig(n=5, k_values=[1, 2], replicates=2))

    assert not result.ok
    assert result.records == []
    assert len(result.failures) == 2 * 2 * 2
    assert {failure.error_type for failure in result.failures} == {"CapacityError"}
    assert {failure.exit_code for failure in result.failures} == {3}


@pytest.mark.slow
@pytest.mark.parametrize("mode", list(Mode))
def test_community_count_dips_at_intermediate_k(trend_sweep, mode):
    medians = [trend_sweep.summary.median(mode, k, "nc") for k in range(10)]
    lowest = medians.index(min(medians))

    assert trend_sweep.ok
    assert medians[0] == 10
    assert medians[-1] >= 9
    assert min(medians) <= 4
    assert 1 <= lowest <= 4


@pytest.mark.slow
def test_random_links_bring_the_fewest_communities_at_small_k(trend_sweep):
    medians = [trend_sweep.summary.median(Mode.RANDOM, k, "nc") for k in range(10)]
    lowest = medians.index(min(medians))

    assert lowest in {1, 2, 3}
    assert medians[lowest] < medians[0]
    assert medians[lowest] < medians[9]


@pytest.mark.slow
@pytest.mark.parametrize("mode", list(Mode))
def test_correlation_strength_peaks_at_low_k(trend_sweep, mode):
    medians = [trend_sweep.summary.median(mode, k, "msc") for k in range(10)]

    assert medians[0] == 0.0
    assert medians.index(max(medians)) == 1
    assert medians[1] > medians[-1]


@pytest.mark.slow
def test_correlation_decays_faster_with_random_links(trend_sweep):
    def decay(mode: Mode) -> float:
        medians = [trend_sweep.summary.median(mode, k, "msc") for k in range(10)]
        top = medians.index(max(medians))
        return medians[top] / medians[top + 2]

    assert decay(Mode.RANDOM) > decay(Mode.ADJACENT)


@pytest.mark.slow
def test_correlation_chart_marks_the_peak_at_low_k(trend_sweep):
    root = ET.fromstring(render_svg(trend_sweep.records, "msc"))
    peaks = root.findall("svg:g[@class='series']/svg:circle[@class='peak']", {"svg": SVG_NAMESPACE})

    assert len(peaks) == 2
    assert {circle.get("data-k") for circle in peaks} <= {"1", "2"}
