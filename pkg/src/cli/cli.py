"""Command-line interface for the mmWave WLAN coordination simulator"""

import dataclasses
import sys
from pathlib import Path
from typing import Optional

import click
import pandas as pd
from rich.console import Console
from rich.progress import BarColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from src import __version__
from src.cli.config import RunConfig, load_config, serialize_config, write_resolved_config
from src.cli.sweep import SweepPoint, all_ok, run_sweep, sweep_points, write_results
from src.environment.layout import build_environment
from src.learning.clustering import build_all_exemplars, summarize
from src.learning.databases import build_databases
from src.learning.storage import save_databases
from src.utils.errors import ConfigurationError
from src.utils.logger import get_logger, setup_logger

console = Console()

DEFAULT_CONFIG = "config/config.yaml"

config_option = click.option(
    '--config', 'config_path', type=click.Path(dir_okay=False),
    help=f'Configuration file (defaults to {DEFAULT_CONFIG} when present)',
)


def _load(ctx: click.Context, config_path: Optional[str]) -> RunConfig:
    """Load the configuration and reconfigure logging from its logging section"""
    try:
        if config_path is None:
            config = load_config(DEFAULT_CONFIG) if Path(DEFAULT_CONFIG).exists() else RunConfig()
        else:
            config = load_config(config_path)
    except (ConfigurationError, FileNotFoundError) as e:
        console.print(f"[red]✗[/red] {e}")
        sys.exit(2)
    setup_logger(config.logging.as_dict(), debug=ctx.obj.get('debug', False))
    return config


def _results_table(results, title: str) -> Table:
    table = Table(title=title)
    table.add_column("Scenario", style="cyan", no_wrap=True)
    table.add_column("APs", justify="right")
    table.add_column("Seed", justify="right")
    table.add_column("Throughput (Gbps)", justify="right", style="green")
    table.add_column("Delay (ms)", justify="right")
    table.add_column("Collisions", justify="right")
    table.add_column("Dropped", justify="right")
    table.add_column("BHI", justify="right")
    table.add_column("Status")

    for row in results.itertuples(index=False):
        ok = row.status == "ok"
        table.add_row(
            row.scenario_id,
            str(row.num_aps),
            str(row.seed),
            f"{row.throughput_gbps:.3f}" if ok else "-",
            f"{row.avg_delay_ms:.3f}" if ok and pd.notna(row.avg_delay_ms) else "-",
            f"{int(row.collisions)}" if ok else "-",
            f"{int(row.dropped)}" if ok else "-",
            f"{row.bhi_overhead:.2%}" if ok else "-",
            "[green]ok[/green]" if ok else f"[red]{row.status}[/red]",
        )
    return table


@click.group()
@click.option('--debug', is_flag=True, help='Enable debug logging')
@click.pass_context
def cli(ctx, debug):
    """mmWave WLAN simulator - Wi-Fi-assisted beam training coordination for 60 GHz APs"""
    ctx.ensure_object(dict)
    ctx.obj['debug'] = debug
    setup_logger(debug=debug)


@cli.command('build-db')
@config_option
@click.option('--seed', type=int, help='Seed for the scenario (defaults to the first configured seed)')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Output directory')
@click.pass_context
def build_db(ctx, config_path, seed, out_dir):
    """Build the offline fingerprint databases and exemplar sets"""
    config = _load(ctx, config_path)
    seed = config.run.seeds[0] if seed is None else seed
    out_dir = Path(out_dir or config.run.out_dir)

    with console.status("[bold green]Building fingerprint databases..."):
        env = build_environment(config.environment, seed, config.radio.tx_power_mmw_dbm, config.radio.tx_power_wifi_dbm)
        dbs = build_databases(env, config.radio, config.mcs.build_table())
        exemplars = build_all_exemplars(dbs, config.learning)
        try:
            path = save_databases(dbs, out_dir / config.run.db_file)
        except OSError as e:
            console.print(f"[red]✗[/red] {e}")
            sys.exit(1)

    table = Table(title=f"Fingerprint databases: {dbs.num_lps} learning points, {dbs.num_aps} APs")
    table.add_column("AP", style="cyan", justify="right")
    table.add_column("Covered LPs", justify="right")
    table.add_column("Null LPs", justify="right")
    table.add_column("Groups", justify="right")
    table.add_column("Exemplars", justify="right", style="magenta")
    for row in summarize(dbs, exemplars):
        table.add_row(
            str(row['ap_id']),
            str(row['covered_lps']),
            str(row['null_lps']),
            str(row['groups']),
            str(row['exemplars']),
        )
    console.print(table)
    console.print(f"[green]✓[/green] Databases written to {path}")


@cli.command('run')
@config_option
@click.option('--protocol', 'protocols', multiple=True, help='Protocol to run (repeatable; defaults to run.protocols)')
@click.option('--seed', type=int, help='Seed (defaults to the first configured seed)')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Output directory')
@click.option('--trace', is_flag=True, help='Write a per-frame trace per run')
@click.pass_context
def run(ctx, config_path, protocols, seed, out_dir, trace):
    """Run the configured protocols once at environment.num_aps"""
    config = _load(ctx, config_path)
    if seed is not None:
        config = dataclasses.replace(config, run=dataclasses.replace(config.run, seeds=(seed,)))
    seed = config.run.seeds[0]
    out_dir = Path(out_dir or config.run.out_dir)
    points = [
        SweepPoint(protocol, config.environment.num_aps, seed)
        for protocol in (protocols or config.run.protocols)
    ]

    write_resolved_config(config, out_dir)
    with console.status(f"[bold green]Simulating {len(points)} run(s)..."):
        results = run_sweep(config, points, out_dir=out_dir, trace=trace or config.run.trace)
    path = write_results(results, out_dir)

    console.print(_results_table(results, f"Results ({config.run.horizon_s}s simulated)"))
    console.print(f"[green]✓[/green] Results written to {path}")
    if not all_ok(results):
        sys.exit(1)


@cli.command('sweep')
@config_option
@click.option('--seed', type=int, help='Run a single seed instead of run.seeds')
@click.option('--out', 'out_dir', type=click.Path(file_okay=False), help='Output directory')
@click.option('--trace', is_flag=True, help='Write a per-frame trace per run')
@click.option('--workers', type=int, help='Override run.workers')
@click.pass_context
def sweep(ctx, config_path, seed, out_dir, trace, workers):
    """Run protocol x AP count x seed and write results.csv"""
    config = _load(ctx, config_path)
    if workers is not None:
        if workers < 1:
            raise click.BadParameter("must be >= 1", param_hint='--workers')
        config = dataclasses.replace(config, run=dataclasses.replace(config.run, workers=workers))
    if seed is not None:
        config = dataclasses.replace(config, run=dataclasses.replace(config.run, seeds=(seed,)))
    out_dir = Path(out_dir or config.run.out_dir)
    points = sweep_points(config)

    write_resolved_config(config, out_dir)
    console.print(f"\n[bold cyan]Sweep: {len(points)} runs, {config.run.workers} worker(s)[/bold cyan]\n")

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        console=console
    ) as progress:
        task = progress.add_task("[cyan]Simulating...", total=len(points))
        results = run_sweep(
            config, points, out_dir=out_dir, trace=trace or config.run.trace,
            on_row=lambda row: progress.advance(task),
        )
    path = write_results(results, out_dir)

    console.print(_results_table(results, "Sweep results"))
    summary = results[results["status"] == "ok"].groupby(["protocol", "num_aps"])["throughput_gbps"].mean()
    if not summary.empty:
        table = Table(title="Mean throughput (Gbps)")
        table.add_column("Protocol", style="cyan")
        table.add_column("APs", justify="right")
        table.add_column("Gbps", justify="right", style="green")
        for (protocol, num_aps), value in summary.items():
            table.add_row(protocol, str(num_aps), f"{value:.3f}")
        console.print(table)
    console.print(f"[green]✓[/green] Results written to {path}")
    if not all_ok(results):
        get_logger().warning(f"{int((results['status'] != 'ok').sum())} run(s) failed")
        sys.exit(1)


@cli.command('show-config')
@config_option
@click.pass_context
def show_config(ctx, config_path):
    """Print the resolved configuration"""
    config = _load(ctx, config_path)
    console.print(serialize_config(config), markup=False, highlight=False)


@cli.command('version')
def version():
    """Print the simulator version"""
    console.print(f"mmwave-sim {__version__}")


if __name__ == '__main__':
    cli()
