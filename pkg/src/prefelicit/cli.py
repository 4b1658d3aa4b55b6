"""Command-line entry point (`elicit`)."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .belief import PriorSpec, sample_prior
from .catalog import SynthSpec, load_catalog, save_catalog, synth_catalog
from .errors import PrefElicitError
from .harness import (ExperimentConfig, aggregate_csv, benchmark, run_experiment,
                      trace_csv)
from .partial import PartialConfig, cont_partial, partial_evoi
from .report import (read_aggregate_csv, render_aggregate_figures,
                     render_benchmark_figure)


@click.group()
def main():
    """Bayesian preference elicitation toolkit."""


@main.group()
def catalog():
    """Catalog creation and validation."""


@catalog.command("synth")
@click.option("--n", type=int, required=True, help="number of items")
@click.option("--d", type=int, required=True, help="attribute dimension")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def catalog_synth(n, d, seed, out):
    """Sample a standard-normal synthetic catalog and write it as CSV."""
    cat = synth_catalog(SynthSpec(n_items=n, dim=d, seed=seed))
    save_catalog(cat, out)
    click.echo(f"wrote {cat.n_items} x {cat.dim} catalog to {out}")


@catalog.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def catalog_validate(path):
    """Parse a catalog CSV and report its shape, or fail with the parse error."""
    try:
        cat = load_catalog(path)
    except PrefElicitError as exc:
        click.echo(f"INVALID: {exc}", err=True)
        sys.exit(1)
    partial_ok = "yes" if cat.is_partial_ready() else "no"
    click.echo(
        f"OK: {cat.n_items} items, dim {cat.dim}, "
        f"max norm {cat.max_norm:.6g}, partial-query ready: {partial_ok}"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--preset", type=str, default=None,
              help="named hyperparameter preset (synthetic, movielens, goodreads)")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="results")
@click.option("--timings/--no-timings", default=False,
              help="record wall-clock per query (breaks byte-determinism of CSVs)")
@click.option("--figures/--no-figures", default=False,
              help="also render regret/EVOI figures next to the CSVs")
def simulate(config_path, preset, out_dir, timings, figures):
    """Run simulated elicitation trials and write per-trial and aggregate CSVs."""
    config = ExperimentConfig.from_json(Path(config_path).read_text(), preset=preset)
    traces, agg = run_experiment(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.csv").write_text(trace_csv(traces, record_timings=timings))
    (out / "aggregate.csv").write_text(aggregate_csv(agg))
    click.echo(f"wrote {out / 'trials.csv'} and {out / 'aggregate.csv'}")
    if figures:
        paths = render_aggregate_figures(
            read_aggregate_csv(out / "aggregate.csv"), out)
        click.echo("rendered " + ", ".join(str(p) for p in paths))
    for row in agg:
        click.echo(
            f"q={row['query_idx']} regret={row['mean_regret']:.4f}"
            f"±{row['se_regret']:.4f} evoi={row['mean_evoi']:.4f}"
        )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True,
              help="JSON: {cells: [{n,m,k,d,strategy,...}], n_trials, n_queries, seed}")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="bench")
@click.option("--figures/--no-figures", default=True)
def bench(config_path, out_dir, figures):
    """Benchmark per-query strategy wall time over a config matrix."""
    spec = json.loads(Path(config_path).read_text())
    results = benchmark(
        spec["cells"], n_trials=spec.get("n_trials", 10),
        n_queries=spec.get("n_queries", 10), seed=spec.get("seed", 0),
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["n,m,k,d,strategy,mean_s,std_s"]
    for r in results:
        lines.append(
            f"{r['n']},{r['m']},{r['k']},{r['d']},{r['strategy']},"
            f"{r['mean_s']:.6g},{r['std_s']:.6g}"
        )
        click.echo(lines[-1])
    (out / "bench.csv").write_text("\n".join(lines) + "\n")
    if figures:
        render_benchmark_figure(results, out / "bench.png")


@main.command()
@click.argument("aggregate", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".")
def report(aggregate, out_dir):
    """Render regret/EVOI figures from an aggregate CSV."""
    paths = render_aggregate_figures(read_aggregate_csv(aggregate), out_dir)
    click.echo("rendered " + ", ".join(str(p) for p in paths))


@main.group()
def partial():
    """Partial (attribute-subset) comparison queries."""


@partial.command("optimize")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=2)
@click.option("--p", type=int, default=1)
@click.option("--restarts", type=int, default=100)
@click.option("--m", type=int, default=100, help="prior particles")
@click.option("--seed", type=int, default=0)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON overrides for the optimizer (lr, steps, tau, ...)")
def partial_optimize(catalog_path, k, p, restarts, m, seed, config_path):
    """Find a partial-attribute query slate by continuous EVOI optimization."""
    cat = load_catalog(catalog_path)
    overrides = json.loads(Path(config_path).read_text()) if config_path else {}
    cfg = PartialConfig(restarts=restarts, seed=seed, **overrides)
    belief = sample_prior(PriorSpec(kind="standard_normal", dim=cat.dim), m, seed)
    slate = cont_partial(cfg, belief, cat, k, p)
    value = partial_evoi(slate, belief, cat, cfg.tau)
    click.echo(f"partial EVOI: {value:.6g}")
    for i, attrs in enumerate(slate.selected_attributes()):
        click.echo(f"item {i}: " + " ∧ ".join(attrs))


@main.command()
@click.option("--port", type=int, default=None, help="defaults to $ELICIT_PORT or 8080")
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--sessions-dir", type=click.Path(file_okay=False), default=None)
@click.option("--static-dir", type=click.Path(file_okay=False), default=None,
              help="built web UI assets to serve at /")
def serve(port, host, sessions_dir, static_dir):
    """Start the live elicitation HTTP service."""
    from .service import run_server

    run_server(port=port, host=host, sessions_dir=sessions_dir,
               static_dir=static_dir)


if __name__ == "__main__":
    main()
