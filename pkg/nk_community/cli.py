"""
`nk-community` command line.

Exit codes: 0 success, 2 usage or parse errors, 3 capacity limits, 4 internal invariant failures.
Outputs default to stdout (`-`); logs always go to stderr.
"""

from functools import wraps
from pathlib import Path

import click

from .community import WeightMode, graph_from_correlation, louvain
from .constants import DEFAULT_EDGE_THRESHOLD
from .errors import NkCommunityError
from .logging_config import configure_logger
from .nk_model import Mode, NkModel, TableMode, TablesFormat, export_tables
from .pajek import write_pajek_clu, write_pajek_net
from .plot import render_svg
from .sweep import SweepConfig, read_records_csv, render_records_csv, run_sweep, write_summary_json
from .trait_stats import CorrelationMatrix, correlation, enumerate_moments, sample_moments

OUTPUT = click.Path(dir_okay=False, writable=True, allow_dash=True, path_type=Path)
INPUT = click.Path(exists=True, dir_okay=False, readable=True, path_type=Path)


class DomainError(click.ClickException):
    "carries a library error to click, keeping the library's exit code"

    def __init__(self, error: NkCommunityError):
        super().__init__(str(error))
        self.exit_code = error.exit_code


class NkGroup(click.Group):
    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except NkCommunityError as error:
            raise DomainError(error) from error


def emit(content: str | bytes, destination: Path) -> None:
    if str(destination) == "-":
        click.echo(content, nl=False)
        return

    if isinstance(content, bytes):
        destination.write_bytes(content)
    else:
        destination.write_text(content)

    click.secho(f"wrote {destination}", fg="green", err=True)


def model_options(command):
    @click.option("--n", "n", type=click.IntRange(min=1), required=True, help="number of genes")
    @click.option("--k", "k", type=click.IntRange(min=0), required=True, help="epistatic genes per trait")
    @click.option(
        "--mode",
        type=click.Choice([mode.value for mode in Mode]),
        default=Mode.RANDOM.value,
        show_default=True,
    )
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
    @click.option(
        "--table-mode",
        type=click.Choice([mode.value for mode in TableMode]),
        default=TableMode.MATERIALIZED.value,
        show_default=True,
    )
    @wraps(command)
    def wrapper(n: int, k: int, mode: str, seed: int, table_mode: str, **kwargs):
        if k > n - 1:
            raise click.BadParameter("k must be ≤ n-1", param_hint="'--k'")

        return command(model=NkModel.build(n, k, mode, seed, table_mode), **kwargs)

    return wrapper


@click.group(cls=NkGroup)
@click.option("--json-logs", is_flag=True, default=None, help="render logs as JSON lines on stderr")
@click.option("--log-level", default=None, help="minimum log level, defaults to NKCOMM_LOG_LEVEL")
def cli(json_logs: bool | None, log_level: str | None):
    "NK landscapes, trait correlation networks and their communities."
    configure_logger(json_logger=json_logs or None, log_level=log_level)


@cli.command()
@model_options
@click.option("--out", type=OUTPUT, default="-", show_default=True, help="model descriptor JSON")
@click.option("--export-tables", "tables_path", type=OUTPUT, default=None, help="also dump every lookup table")
@click.option(
    "--tables-format",
    type=click.Choice([fmt.value for fmt in TablesFormat]),
    default=TablesFormat.JSON.value,
    show_default=True,
)
def model(model: NkModel, out: Path, tables_path: Path | None, tables_format: str):
    "Write the descriptor of a seeded landscape."
    emit(model.descriptor_json(), out)

    if tables_path is not None:
        export_tables(model, tables_path, TablesFormat(tables_format))
        click.secho(f"wrote {tables_path}", fg="green", err=True)


@cli.command()
@model_options
@click.option("--out-csv", type=OUTPUT, default="-", show_default=True)
@click.option("--out-json", type=OUTPUT, default=None)
@click.option(
    "--samples",
    type=click.IntRange(min=2),
    default=None,
    help="estimate from this many distinct random genotypes instead of enumerating all of them",
)
@click.option("--sample-seed", type=click.IntRange(min=0), default=0, show_default=True)
def correlate(model: NkModel, out_csv: Path, out_json: Path | None, samples: int | None, sample_seed: int):
    "Correlation matrix of the trait functions."
    if samples is None:
        moments = enumerate_moments(model)
    else:
        moments = sample_moments(model, samples, sample_seed)
        click.secho(f"approximate: {samples} of 2**{model.n} genotypes", fg="yellow", err=True)

    matrix = correlation(moments)
    emit(matrix.to_csv(), out_csv)

    if out_json is not None:
        emit(matrix.to_json(), out_json)


@cli.command()
@click.option("--in-csv", type=INPUT, required=True, help="correlation matrix CSV")
@click.option(
    "--weight",
    type=click.Choice([mode.value for mode in WeightMode]),
    default=WeightMode.ABS.value,
    show_default=True,
)
@click.option("--epsilon", type=click.FloatRange(min=0), default=DEFAULT_EDGE_THRESHOLD, show_default=True)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True)
@click.option("--out-net", type=OUTPUT, default=None)
@click.option("--out-clu", type=OUTPUT, default=None)
def detect(in_csv: Path, weight: str, epsilon: float, seed: int, out_net: Path | None, out_clu: Path | None):
    "Detect communities in a correlation network."
    graph = graph_from_correlation(CorrelationMatrix.read_csv(in_csv), WeightMode(weight), epsilon)
    partition = louvain(graph, seed)

    if out_net is not None:
        write_pajek_net(graph, out_net)

    if out_clu is not None:
        write_pajek_clu(partition, out_clu, graph=graph)

    click.echo(f"nc={partition.nc} q={partition.q:.10g}")


def _k_values(text: str | None) -> list[int] | None:
    if text is None:
        return None

    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.BadParameter("expected comma separated integers, like 0,1,2", param_hint="'--k-values'") from None


@cli.command()
@click.option("--config", "config_path", type=INPUT, default=None, help="JSON sweep config; flags override its fields")
@click.option("--n", "n", type=click.IntRange(min=1), default=None)
@click.option("--k-values", default=None, help="comma separated, defaults to 0..n-1")
@click.option("--mode", "modes", type=click.Choice([mode.value for mode in Mode]), multiple=True)
@click.option("--replicates", type=click.IntRange(min=1), default=None)
@click.option("--base-seed", type=click.IntRange(0, 2**64 - 1), default=None)
@click.option("--weight", type=click.Choice([mode.value for mode in WeightMode]), default=None)
@click.option("--threshold", type=click.FloatRange(min=0), default=None)
@click.option("--out-csv", type=OUTPUT, default="-", show_default=True)
@click.option("--out-summary", type=OUTPUT, default=None)
@click.option("--no-timing", is_flag=True, help="write wall_ms as 0 so repeated runs are byte-identical")
def sweep(
    config_path: Path | None,
    n: int | None,
    k_values: str | None,
    modes: tuple[str, ...],
    replicates: int | None,
    base_seed: int | None,
    weight: str | None,
    threshold: float | None,
    out_csv: Path,
    out_summary: Path | None,
    no_timing: bool,
):
    "Run the (mode, k, replicate) grid."
    config = SweepConfig.load(
        config_path,
        n=n,
        k_values=_k_values(k_values),
        modes=list(modes) or None,
        replicates=replicates,
        base_seed=base_seed,
        weight_mode=weight,
        threshold=threshold,
    )

    result = run_sweep(config)
    emit(render_records_csv(result.records, timing=not no_timing), out_csv)

    if out_summary is not None:
        write_summary_json(result.summary, out_summary)

    if not result.ok:
        for failure in result.failures:
            click.secho(
                f"failed: mode={failure.mode.value} k={failure.k} replicate={failure.replicate}: {failure.message}",
                fg="red",
                err=True,
            )

        raise click.exceptions.Exit(max(failure.exit_code for failure in result.failures))


@cli.command()
@click.option("--in-csv", type=INPUT, required=True, help="sweep records CSV")
@click.option("--metric", type=click.Choice(["nc", "q", "msc"]), default="nc", show_default=True)
@click.option("--out-svg", type=OUTPUT, default="-", show_default=True)
def plot(in_csv: Path, metric: str, out_svg: Path):
    "Plot a sweep metric against k."
    emit(render_svg(read_records_csv(in_csv), metric), out_svg)

