import logging
from functools import wraps
from pathlib import Path
from typing import Callable, Optional

import typer
from rich.console import Console
from rich.table import Table

from cli import runs
from cli.config import resolve
from core.errors import OrderFlowError
from core.logs import setup_logging

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="orderflow",
    help="Splitting vs herding decomposition of order-flow persistence.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console(stderr=True)

ConfigOption = typer.Option(None, "--config", help="key=value file; flags override its entries")
InputOption = typer.Option(None, "--input", "--in", help="event log CSV")
OutOption = typer.Option(None, "--out", help="output path")
TauOption = typer.Option(None, "--tau-max", help="largest lag")
SeedOption = typer.Option(None, "--seed", help="RNG seed")
WorkersOption = typer.Option(None, "--workers", help="threads; results do not depend on it")
MinEventsOption = typer.Option(None, "--min-events", help="drop agents with fewer events")


@app.callback()
def main(log_level: str = typer.Option("INFO", "--log-level", help="DEBUG, INFO, WARNING or ERROR")) -> None:
    setup_logging(log_level.upper())


def guarded(command: Callable) -> Callable:
    """Map library errors to their exit codes; anything unexpected exits 1."""

    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except OrderFlowError as e:
            console.print(f"[bold red]{type(e).__name__}[/]: {e.message}")
            raise typer.Exit(code=e.exit_code)
        except typer.Exit:
            raise
        except Exception:
            logger.exception("unexpected failure")
            raise typer.Exit(code=1)

    return wrapper


@app.command("ingest-check")
@guarded
def ingest_check(
    input: Optional[Path] = InputOption,
    min_events: Optional[int] = MinEventsOption,
    out: Optional[Path] = typer.Option(None, "--out", help="optional JSON report"),
    config: Optional[Path] = ConfigOption,
) -> None:
    """Parse a log and print its agent summary."""
    run = resolve("ingest-check", {"input": input, "min_events": min_events, "out": out}, config)
    report = runs.run_ingest_check(run)
    table = Table(title=str(run.input))
    table.add_column("quantity")
    table.add_column("value", justify="right")
    for key in ("N", "M", "has_price_flags", "gini", "activity_share_top5"):
        value = report[key]
        table.add_row(key, f"{value:.4f}" if isinstance(value, float) else str(value))
    Console().print(table)


@app.command()
@guarded
def decompose(
    input: Optional[Path] = InputOption,
    tau_max: Optional[int] = TauOption,
    out: Optional[Path] = OutOption,
    min_events: Optional[int] = MinEventsOption,
    top_k: Optional[int] = typer.Option(None, "--top-k", help="agents in diagonal.csv"),
    conditional: Optional[bool] = typer.Option(None, "--conditional/--no-conditional", help="also decompose by price flag"),
    workers: Optional[int] = WorkersOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Splitting/herding decomposition of C(tau) with per-agent curves."""
    run = resolve(
        "decompose",
        {
            "input": input,
            "tau_max": tau_max,
            "out": out,
            "min_events": min_events,
            "top_k": top_k,
            "conditional": conditional,
            "workers": workers,
        },
        config,
    )
    for path in runs.run_decompose(run):
        console.print(f"wrote {path}")


@app.command()
@guarded
def simulate(
    model: Optional[str] = typer.Option(None, "--model", help="splitting, public-info or imitation"),
    n: Optional[int] = typer.Option(None, "--n", help="events"),
    m: Optional[int] = typer.Option(None, "--m", help="investors"),
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    beta: Optional[float] = typer.Option(None, "--beta", help="metaorder size tail exponent"),
    v_min: Optional[int] = typer.Option(None, "--v-min"),
    pool_size: Optional[int] = typer.Option(None, "--pool-size", help="concurrent metaorders"),
    run_tail: Optional[float] = typer.Option(None, "--run-tail", help="run-length tail exponent"),
    n_min: Optional[int] = typer.Option(None, "--n-min"),
    p: Optional[float] = typer.Option(None, "--p", help="imitation probability"),
    zipf_investors: Optional[float] = typer.Option(None, "--zipf-investors", help="Zipf exponent of P"),
    network_seed: Optional[int] = typer.Option(None, "--network-seed"),
    config: Optional[Path] = ConfigOption,
) -> None:
    """Generate an investor-level log."""
    run = resolve(
        "simulate",
        {
            "model": model,
            "n": n,
            "m": m,
            "seed": seed,
            "out": out,
            "beta": beta,
            "v_min": v_min,
            "pool_size": pool_size,
            "run_tail": run_tail,
            "n_min": n_min,
            "p": p,
            "zipf_investors": zipf_investors,
            "network_seed": network_seed,
        },
        config,
    )
    console.print(f"wrote {runs.run_simulate(run)}")


@app.command("map")
@guarded
def map_brokers(
    kind: Optional[str] = typer.Option(None, "--kind", help="fixed, dynamic or correlated"),
    profile: Optional[Path] = typer.Option(None, "--profile", help="broker,frequency CSV"),
    phi: Optional[float] = typer.Option(None, "--phi", help="broker inheritance probability"),
    input: Optional[Path] = InputOption,
    out: Optional[Path] = OutOption,
    seed: Optional[int] = SeedOption,
    map_out: Optional[Path] = typer.Option(None, "--map-out", help="investor,broker audit CSV"),
    network_seed: Optional[int] = typer.Option(None, "--network-seed"),
    workers: Optional[int] = WorkersOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Route an investor-level log through brokers."""
    run = resolve(
        "map",
        {
            "kind": kind,
            "profile": profile,
            "phi": phi,
            "input": input,
            "out": out,
            "seed": seed,
            "map_out": map_out,
            "network_seed": network_seed,
            "workers": workers,
        },
        config,
    )
    console.print(f"wrote {runs.run_map(run)}")


@app.command()
@guarded
def nulltest(
    input: Optional[Path] = InputOption,
    replicates: Optional[int] = typer.Option(None, "--replicates", help="shuffled realisations R"),
    alpha: Optional[float] = typer.Option(None, "--alpha"),
    tau_max: Optional[int] = TauOption,
    seed: Optional[int] = SeedOption,
    scheme: Optional[str] = typer.Option(None, "--scheme", help="independent or joint"),
    out: Optional[Path] = OutOption,
    min_events: Optional[int] = MinEventsOption,
    workers: Optional[int] = WorkersOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Shuffle test for a negative herding component."""
    run = resolve(
        "nulltest",
        {
            "input": input,
            "replicates": replicates,
            "alpha": alpha,
            "tau_max": tau_max,
            "seed": seed,
            "scheme": scheme,
            "out": out,
            "min_events": min_events,
            "workers": workers,
        },
        config,
    )
    console.print(f"wrote {runs.run_nulltest(run)}")


@app.command()
@guarded
def condprob(
    input: Optional[Path] = InputOption,
    tau_max: Optional[int] = TauOption,
    out: Optional[Path] = OutOption,
    min_events: Optional[int] = MinEventsOption,
    workers: Optional[int] = WorkersOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Same-sign probabilities conditioned on price changes."""
    run = resolve(
        "condprob",
        {"input": input, "tau_max": tau_max, "out": out, "min_events": min_events, "workers": workers},
        config,
    )
    console.print(f"wrote {runs.run_condprob(run)}")


@app.command()
@guarded
def scenario(
    name: Optional[str] = typer.Option(None, "--name", help="public-info+FRB, imitation+FRB, any+DRB or splitting+FRB"),
    sweep: Optional[str] = typer.Option(None, "--sweep", help="v1,v2,... or lo:hi:count"),
    seeds: Optional[str] = typer.Option(None, "--seeds", help="s1,s2,... or lo:hi:count"),
    out: Optional[Path] = OutOption,
    n: Optional[int] = typer.Option(None, "--n", help="events per point"),
    m: Optional[int] = typer.Option(None, "--m", help="investors"),
    n_brokers: Optional[int] = typer.Option(None, "--n-brokers"),
    tau_max: Optional[int] = TauOption,
    investor_model: Optional[str] = typer.Option(None, "--investor-model", help="investor model for any+DRB"),
    zipf_exponent: Optional[float] = typer.Option(None, "--zipf-exponent", help="broker profile for imitation+FRB"),
    p: Optional[float] = typer.Option(None, "--p"),
    workers: Optional[int] = WorkersOption,
    config: Optional[Path] = ConfigOption,
) -> None:
    """Sweep a null-hypothesis scenario and tabulate S-bar against Var[P']."""
    run = resolve(
        "scenario",
        {
            "name": name,
            "sweep": sweep,
            "seeds": seeds,
            "out": out,
            "n": n,
            "m": m,
            "n_brokers": n_brokers,
            "tau_max": tau_max,
            "investor_model": investor_model,
            "zipf_exponent": zipf_exponent,
            "p": p,
            "workers": workers,
        },
        config,
    )
    console.print(f"wrote {runs.run_scenario_command(run)}")
