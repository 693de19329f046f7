"""Command-line interface for hybrid RAN slicing experiments."""

from __future__ import annotations

import functools
import logging
import math
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import click
import numpy as np
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from hybrid_slicing.channel.model import SeTrace, write_se_csv
from hybrid_slicing.mip.builder import FormulationKind, build
from hybrid_slicing.mip.lp_format import export_lp, parse_lp
from hybrid_slicing.optimizer.experiments import MODE_ORDER, compare_strategies
from hybrid_slicing.optimizer.search import OptResult, minimize_allocation
from hybrid_slicing.queueing.simulator import simulate, sla_satisfied
from hybrid_slicing.runner.config import ScenarioConfig, apply_overrides, load_config
from hybrid_slicing.runner.experiment import run_experiment, run_sweep
from hybrid_slicing.runner.scenario import build_samples
from hybrid_slicing.runner.verify import SUITES, run_suites
from hybrid_slicing.scheduler.waterfilling import Allocation, schedule_slot
from hybrid_slicing.traffic.generator import ArrivalTrace, write_arrivals_csv

console = Console()

F = TypeVar("F", bound=Callable[..., Any])

MODE_CHOICES = [m.value for m in FormulationKind]


def reports_errors(func: F) -> F:
    """Turn library errors into a red message and exit code 2."""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except (ValueError, ArithmeticError, LookupError, OSError) as e:
            console.print(f"[red]Error:[/red] {e}")
            sys.exit(2)

    return wrapper  # type: ignore[return-value]


def _floats(ctx: click.Context, param: click.Parameter, value: str | None) -> tuple[float, ...] | None:
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value!r}") from None


def _ints(ctx: click.Context, param: click.Parameter, value: str | None) -> tuple[int, ...] | None:
    if value is None:
        return None
    try:
        return tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from None


def _setup_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _level(value: float) -> str:
    return "empty" if math.isinf(value) else f"{value:.6g}"


def _height(level: float) -> str:
    return "empty" if math.isinf(level) else f"{1.0 / level:.6g}"


def _prbs(value: float) -> str:
    return "-" if math.isnan(value) else f"{value:g}"


def _load(config_path: str, seed: int | None) -> tuple[ScenarioConfig, int]:
    config = load_config(config_path)
    return config, config.seeds[0] if seed is None else seed


def _result_table(results: list[OptResult], slice_count: int, title: str) -> Table:
    table = Table(title=title)
    table.add_column("Mode", style="cyan")
    for s in range(slice_count):
        table.add_column(f"x_ded_{s + 1}", style="green")
    table.add_column("x_sh", style="green")
    table.add_column("Total", style="yellow")
    table.add_column("Relaxed", style="yellow")
    table.add_column("Evals", style="blue")
    for result in results:
        vector = result.best.as_vector() if result.best is not None else [math.nan] * (slice_count + 1)
        status = "" if result.feasible else " [red](infeasible)[/red]"
        table.add_row(
            result.mode.value + status,
            *[_prbs(v) for v in vector],
            _prbs(result.total_prbs),
            _prbs(result.relaxed_total),
            str(result.evaluations),
        )
    return table


config_option = click.option(
    "--config", "-c", "config_path", required=True, type=click.Path(exists=True, dir_okay=False),
    help="Scenario YAML file",
)
seed_option = click.option("--seed", type=int, help="Master seed (default: first seed of the scenario)")


@click.group()
@click.option("--verbose", "-v", count=True, help="Verbose output (-vv for debug)")
@click.pass_context
def cli(ctx: click.Context, verbose: int) -> None:
    """Hybrid dedicated/shared PRB allocation for RAN slices."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    _setup_logging(verbose)


@cli.command("gen-traces")
@config_option
@seed_option
@click.option("--out", "-o", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory")
@reports_errors
def gen_traces(config_path: str, seed: int | None, out_dir: str) -> None:
    """Write the arrival and SE traces of one seed as CSV."""
    config, seed = _load(config_path, seed)
    samples = build_samples(config, seed)
    out = Path(out_dir)
    arrivals = write_arrivals_csv(ArrivalTrace(samples.arrivals), out / "arrivals.csv")
    se = write_se_csv(SeTrace(samples.etas, eta_max=config.eta_max), out / "se.csv")
    console.print(f"[green]Wrote[/green] {arrivals} and {se} "
                  f"({samples.ue_count} UEs, K={samples.samples}, T={samples.horizon}, seed {seed})")


@cli.command()
@click.option("--etas", required=True, callback=_floats, help="SE per UE, e.g. 2,1,3.5,0.8")
@click.option("--slices", "slice_list", required=True, callback=_ints, help="Slice of each UE, e.g. 0,0,1,1")
@click.option("--x-ded", required=True, callback=_floats, help="Dedicated PRBs per slice")
@click.option("--x-sh", type=float, default=0.0, show_default=True, help="Shared PRBs")
@reports_errors
def schedule(etas: tuple[float, ...], slice_list: tuple[int, ...], x_ded: tuple[float, ...], x_sh: float) -> None:
    """Water-fill one slot and print the per-UE split."""
    if len(etas) != len(slice_list):
        raise click.BadParameter(f"{len(etas)} etas but {len(slice_list)} slice labels")
    allocation = Allocation(x_ded, x_sh)
    result = schedule_slot(allocation, etas, slice_list)

    table = Table(title="Slot Schedule")
    table.add_column("UE", style="cyan")
    table.add_column("Slice", style="cyan")
    table.add_column("eta", style="white")
    table.add_column("y_ded", style="green")
    table.add_column("y_sh", style="green")
    table.add_column("Total", style="yellow")
    for i, eta in enumerate(etas):
        table.add_row(
            str(i), str(slice_list[i]), f"{eta:g}",
            f"{result.y_ded[i]:.6g}", f"{result.y_sh[i]:.6g}", f"{result.y_total[i]:.6g}",
        )
    console.print(table)

    levels = [f"slice {s}: beta={_level(b)}, height={_height(b)}" for s, b in enumerate(result.beta)]
    levels.append(f"shared: nu={_level(result.nu)}, height={_height(result.nu)}")
    console.print(Panel("\n".join(levels), title="Water levels", border_style="blue"))


@cli.command("simulate")
@config_option
@seed_option
@click.option("--allocation", required=True, callback=_floats, help="x_ded_1,...,x_ded_S,x_sh")
@click.option("--out", "-o", type=click.Path(dir_okay=False), help="Write per-UE delays as CSV")
@reports_errors
def simulate_cmd(config_path: str, seed: int | None, allocation: tuple[float, ...], out: str | None) -> None:
    """Queue simulation of one allocation against the scenario's SLA."""
    config, seed = _load(config_path, seed)
    samples = build_samples(config, seed)
    alloc = Allocation.from_vector(allocation)
    _, report = simulate(alloc, samples)
    sla = config.sla_spec()
    verdict = sla_satisfied(report, sla)

    table = Table(title=f"Delays (seed {seed})")
    table.add_column("Slice", style="cyan")
    table.add_column("Budget (ms)", style="white")
    table.add_column("Mean delay (ms)", style="green")
    table.add_column("Worst UE (ms)", style="yellow")
    for s, budget in enumerate(sla.budgets):
        members = samples.members(s)
        worst = float(report.mean[members].max()) if members.size else math.nan
        table.add_row(str(s), f"{budget:g}", f"{report.per_slice[s]:.4g}", f"{worst:.4g}")
    console.print(table)
    if verdict.satisfied:
        console.print(f"[green]✓ SLA met[/green] (worst margin {verdict.worst_margin:.4g} ms)")
    else:
        console.print(f"[red]✗ SLA violated[/red] (worst margin {verdict.worst_margin:.4g} ms)")
    if out:
        console.print(f"[green]Saved to:[/green] {report.write_csv(out)}")


@cli.command()
@config_option
@seed_option
@click.option("--mode", type=click.Choice([*MODE_CHOICES, "all"]), default="all", show_default=True)
@click.option("--grid-step", type=float, help="Coarse grid step in PRBs")
@click.option("--x-max", type=float, help="Upper bound per pool in PRBs")
@reports_errors
def optimize(config_path: str, seed: int | None, mode: str, grid_step: float | None, x_max: float | None) -> None:
    """Smallest SLA-feasible allocation for one or all strategies."""
    config, seed = _load(config_path, seed)
    config = apply_overrides(config, grid_step=grid_step, x_max=x_max)
    samples = build_samples(config, seed)
    sla = config.sla_spec()
    spec = config.search_spec()

    with console.status("[bold green]Searching..."):
        if mode == "all":
            comparison = compare_strategies(samples, sla, spec)
            results = [comparison[m] for m in MODE_ORDER]
        else:
            comparison = None
            results = [minimize_allocation(spec.with_mode(FormulationKind(mode)), samples, sla)]

    console.print(_result_table(results, len(config.slices), f"Optimal allocation (seed {seed})"))
    if comparison is not None and not math.isnan(comparison.savings):
        console.print(f"HyRA savings vs. baseline mean: [bold]{comparison.savings:.1%}[/bold]")


@cli.command("export-mip")
@config_option
@seed_option
@click.option("--kind", type=click.Choice(MODE_CHOICES), default="hyra", show_default=True)
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False), help="LP file to write")
@click.option("--big-m", type=float, help="Big-M constant (default: derived from the instance)")
@click.option("--epsilon", type=float, help="Lower bound on the reciprocal duals")
@reports_errors
def export_mip(
    config_path: str,
    seed: int | None,
    kind: str,
    out: str,
    big_m: float | None,
    epsilon: float | None,
) -> None:
    """Build the single-level MIP of one seed and write it in LP format."""
    config, seed = _load(config_path, seed)
    config = apply_overrides(config, big_m=big_m, epsilon=epsilon)
    samples = build_samples(config, seed)
    model = build(kind, samples, config.sla_spec(), big_m=config.mip.big_m, epsilon=config.mip.epsilon)
    path = export_lp(model, out)
    parsed = parse_lp(path)
    counts = model.counts

    table = Table(title=f"{kind} model")
    table.add_column("Item", style="cyan")
    table.add_column("Built", style="green")
    table.add_column("Re-parsed", style="yellow")
    table.add_row("Variables", str(counts.variables), str(len(parsed.variables)))
    table.add_row("Binaries", str(counts.binaries), str(len(parsed.binaries)))
    table.add_row("Constraints", str(counts.constraints), str(len(parsed.constraints)))
    console.print(table)
    console.print(f"Big-M = {model.big_m:.6g}, epsilon = {model.epsilon:g}")

    if len(parsed.constraints) != counts.constraints or len(parsed.binaries) != counts.binaries:
        console.print("[red]✗ Re-parsed counts differ from the built model[/red]")
        sys.exit(1)
    console.print(f"[green]Saved to:[/green] {path}")


@cli.command()
@click.option("--trials", type=int, default=1000, show_default=True, help="Random instances per suite")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--suite", "suites", multiple=True, type=click.Choice(list(SUITES)), help="Run only these suites")
@reports_errors
def verify(trials: int, seed: int, suites: tuple[str, ...]) -> None:
    """Run the property suites; exits 1 if any fails."""
    with console.status("[bold green]Verifying..."):
        results = run_suites(list(suites), trials=trials, seed=seed)

    table = Table(title="Verification")
    table.add_column("Suite", style="cyan")
    table.add_column("Result")
    table.add_column("Checked", style="blue")
    table.add_column("Worst", style="yellow")
    table.add_column("Detail", style="dim")
    for result in results:
        outcome = "[green]pass[/green]" if result.passed else "[red]FAIL[/red]"
        table.add_row(result.name, outcome, str(result.checked), f"{result.worst:.3e}",
                      "" if result.passed else result.detail)
    console.print(table)
    if not all(r.passed for r in results):
        sys.exit(1)


@cli.command()
@config_option
@click.option("--out", "-o", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory")
@click.option("--seeds", callback=_ints, help="Comma-separated seeds overriding the scenario")
@click.option("--grid-step", type=float, help="Coarse grid step in PRBs")
@click.option("--big-m", type=float, help="Big-M constant recorded in the resolved config")
@click.option("--epsilon", type=float, help="Reciprocal-dual lower bound recorded in the resolved config")
@reports_errors
def run(
    config_path: str,
    out_dir: str,
    seeds: tuple[int, ...] | None,
    grid_step: float | None,
    big_m: float | None,
    epsilon: float | None,
) -> None:
    """Full experiment: every seed, all three strategies, CSV reports."""
    config = apply_overrides(
        load_config(config_path), seeds=seeds, grid_step=grid_step, big_m=big_m, epsilon=epsilon
    )
    with console.status(f"[bold green]Running {len(config.seeds)} seeds..."):
        result = run_experiment(config, out_dir)

    table = Table(title=f"Summary of {config.name}")
    table.add_column("Mode", style="cyan")
    table.add_column("Runs", style="blue")
    table.add_column("Mean", style="green")
    table.add_column("Median", style="green")
    table.add_column("IQR", style="yellow")
    for row in result.summary.itertuples(index=False):
        fmt = "{:.1%}" if row.mode == "savings" else "{:.4g}"
        table.add_row(
            row.mode, f"{row.feasible}/{row.runs}",
            *["-" if np.isnan(v) else fmt.format(v) for v in (row.mean, row.median, row.iqr)],
        )
    console.print(table)
    console.print(f"[green]Reports in:[/green] {out_dir}")


@cli.command()
@config_option
@click.option("--kind", type=click.Choice(["alpha", "slices"]), default="alpha", show_default=True)
@click.option("--values", required=True, callback=_floats, help="Comma-separated sweep values")
@seed_option
@click.option("--out", "-o", type=click.Path(dir_okay=False), help="Write the sweep table as CSV")
@reports_errors
def sweep(config_path: str, kind: str, values: tuple[float, ...], seed: int | None, out: str | None) -> None:
    """Savings versus burstiness or number of slices."""
    with console.status("[bold green]Sweeping..."):
        frame = run_sweep(config_path, kind, list(values), seed)

    table = Table(title=f"{kind} sweep")
    for column in frame.columns:
        table.add_column(str(column))
    for row in frame.itertuples(index=False):
        table.add_row(*[f"{v:.4g}" if isinstance(v, float) else str(v) for v in row])
    console.print(table)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False)
        console.print(f"[green]Saved to:[/green] {out}")


@cli.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False), help="PNG file to write")
@reports_errors
def plot(source: str, out: str) -> None:
    """Chart a summary.csv or sweep CSV."""
    try:
        from hybrid_slicing.runner.plots import plot_csv

        path = plot_csv(source, out)
    except ImportError:
        console.print("[red]matplotlib not installed. Install with: pip install 'hybrid-slicing[plot]'[/red]")
        sys.exit(1)
    console.print(f"[green]Saved to:[/green] {path}")


def main() -> None:
    """Entry point."""
    cli()


if __name__ == "__main__":
    main()
