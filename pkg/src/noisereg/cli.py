"""Command-line front end: run / summarize / grid / fourier-audit."""
from __future__ import annotations

import click

from .circuit import load_circuit
from .experiments import ExperimentConfig, fourier_audit, run_experiment, run_grid, summarize


@click.group()
def main():
    """Noise-injection regularization experiments for quantum loss landscapes."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--out", type=click.Path(file_okay=False), default="results")
@click.option("--parallel", type=int, default=1, help="Concurrent runs.")
def run(config_path, seed, out, parallel):
    """Run the paired baseline/regularized experiment in CONFIG_PATH."""
    config = ExperimentConfig.from_toml(config_path)
    if seed is not None:
        config.master_seed = seed
    outdir = run_experiment(config, out, parallel=parallel)
    click.echo(f"results written to {outdir}")


@main.command("summarize")
@click.argument("results_dir", type=click.Path(exists=True, file_okay=False))
def summarize_cmd(results_dir):
    """Percentile statistics and improvement ratios for a results tree."""
    try:
        stats = summarize(results_dir)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    for p, ratio in sorted(stats.mean_ratio.items()):
        click.echo(f"{p}%-improvement ratio: {ratio:.3f}")
    click.echo(f"best baseline loss:    {stats.best_baseline!r}")
    click.echo(f"best regularized loss: {stats.best_regularized!r}")


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--out", type=click.Path(file_okay=False), default="results")
def grid(config_path, seed, out):
    """Export a 2D loss-landscape grid for the configured model."""
    config = ExperimentConfig.from_toml(config_path)
    if seed is not None:
        config.master_seed = seed
    path = run_grid(config, out)
    click.echo(f"grid written to {path}")


@main.command("fourier-audit")
@click.argument("circuit_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(file_okay=False), default="results")
def fourier_audit_cmd(circuit_json, seed, out):
    """Verify the noise-suppression law for a serialized circuit."""
    circuit, hamiltonian = load_circuit(circuit_json)
    if hamiltonian is None:
        raise click.ClickException("circuit file carries no hamiltonian")
    try:
        report = fourier_audit(circuit, hamiltonian, out, seed=seed)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"max deviation: {report['max_deviation']:.3e}")
    if not report["passed"]:
        raise click.ClickException("suppression-law deviation above tolerance")
    click.echo("suppression law holds")


if __name__ == "__main__":
    main()
