"""Command line interface: simulation harness, single fits, bound
evaluation, and covariance estimation."""

import json
import pathlib
import sys as _sys

import click
import numpy as np

from . import io, synth, theory
from .covariance import sample_covariance, sideinfo_covariance
from .graph import build_graph, incidence
from .harness import (
    ALL_METHODS,
    default_grids,
    estimate_covariance_thresholded,
    run_experiment,
)
from .solver import GtvConfig, fit_gtv


@click.group()
def main():
    """Graph total variation regression toolkit."""


def _scenario_from_options(family, p, K, r, n, s, sigma_noise, beta_noise_sd,
                           split_blocks, seed):
    return synth.Scenario(family=family, p=p, K=K, r=r, n=n, s=s,
                          sigma_noise=sigma_noise, beta_noise_sd=beta_noise_sd,
                          split_blocks=split_blocks, seed=seed)


@main.command()
@click.option("--family", type=click.Choice(synth.FAMILIES), required=True)
@click.option("--p", type=int, required=True)
@click.option("--K", "K", type=int, default=None)
@click.option("--r", type=float, required=True)
@click.option("--n", type=int, required=True)
@click.option("--s", type=int, default=None)
@click.option("--trials", type=int, default=30, show_default=True)
@click.option("--methods", default="gtv-esti,lasso", show_default=True,
              help="comma-separated subset of " + ",".join(ALL_METHODS))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sigma-noise", type=float, default=0.01, show_default=True)
@click.option("--beta-noise-sd", type=float, default=0.01, show_default=True)
@click.option("--split-blocks", type=int, default=None)
@click.option("--fix-support", is_flag=True, help="freeze the active region across trials")
@click.option("--boot-b", type=int, default=500, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def simulate(family, p, K, r, n, s, trials, methods, seed, sigma_noise,
             beta_noise_sd, split_blocks, fix_support, boot_b, out):
    """Run a method comparison and write per-trial + summary tables."""
    scenario = _scenario_from_options(family, p, K, r, n, s, sigma_noise,
                                      beta_noise_sd, split_blocks, seed)
    result = run_experiment(scenario, methods.split(","), trials,
                            boot_b=boot_b, fix_support=fix_support)
    out = pathlib.Path(out)
    io.write_experiment_csv(out, result)
    out.with_suffix(".json").write_text(io.experiment_summary_json(result))
    io.write_plot_csv(out.with_name(out.stem + "_long.csv"), result)
    for m in result.methods:
        click.echo(f"{m}: median MSE {result.median_mse[m]:.6g} "
                   f"(boot sd {result.boot_sd[m]:.3g})")


@main.command()
@click.option("--x", "x_path", type=click.Path(exists=True), required=True)
@click.option("--y", "y_path", type=click.Path(exists=True), required=True)
@click.option("--sigma", "sigma_path", type=click.Path(exists=True), default=None,
              help="covariance CSV; defaults to CV-thresholded sample covariance of X")
@click.option("--lambda1", type=float, required=True)
@click.option("--lambda-tv", type=float, default=0.0, show_default=True)
@click.option("--lambda-s", type=float, default=0.0, show_default=True)
@click.option("--center-y", is_flag=True, help="subtract the response mean")
@click.option("--eps-edge", type=float, default=0.0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def fit(x_path, y_path, sigma_path, lambda1, lambda_tv, lambda_s, center_y,
        eps_edge, out):
    """Fit the graph-total-variation estimator on CSV data."""
    X = io.read_matrix_csv(x_path)
    y = io.read_vector_csv(y_path)
    if center_y:
        y = y - y.mean()
    if sigma_path is not None:
        from .covariance import CovarianceEstimate

        sigma_hat = CovarianceEstimate(io.read_matrix_csv(sigma_path))
    else:
        sigma_hat = estimate_covariance_thresholded(X)
    sys = incidence(build_graph(sigma_hat, eps_edge=eps_edge), lambda_tv)
    cfg = GtvConfig(lambda_1=lambda1, lambda_tv=lambda_tv, lambda_s=lambda_s)
    result = fit_gtv(X, y, sys, cfg)
    payload = io.fit_to_json(result)
    if out:
        pathlib.Path(out).write_text(payload)
    else:
        click.echo(payload)
    if not result.converged:
        click.echo("warning: solver did not reach its certificate tolerance",
                   err=True)
        _sys.exit(0)


@main.command(name="theory")
@click.option("--family", type=click.Choice(synth.FAMILIES), required=True)
@click.option("--p", type=int, required=True)
@click.option("--K", "K", type=int, default=None)
@click.option("--r", type=float, required=True)
@click.option("--n", type=int, default=100, show_default=True)
@click.option("--s", type=int, default=None)
@click.option("--sigma-noise", type=float, default=0.01, show_default=True)
@click.option("--lambda1", type=float, default=None,
              help="defaults to the admissible floor")
@click.option("--lambda-tv", type=float, default=1.0, show_default=True)
@click.option("--lambda-s", type=float, default=0.5, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--json", "json_out", type=click.Path(), default=None)
def theory_cmd(family, p, K, r, n, s, sigma_noise, lambda1, lambda_tv, lambda_s,
               seed, json_out):
    """Evaluate the error bounds on a synthetic family instance."""
    if s is None:
        s = p // (K or 4) if family == "block" else max(1, p // 4)
        if family == "lattice":
            side = int(np.sqrt(p))
            s = (side // 2) ** 2
        if family == "block":
            s = (p // K) * max(1, K // 4)
    scenario = synth.Scenario(family=family, p=p, K=K, r=r, n=n, s=s,
                              sigma_noise=sigma_noise, seed=seed)
    report = theory.mse_bound_family(scenario, lambda_tv, lambda_s, lambda_1=lambda1)
    click.echo(f"{'quantity':<22}{'exact':>14}{'bound':>14}{'slack':>14}")
    for name, exact, bound, slack in report.rows():
        click.echo(f"{name:<22}{exact:>14.6g}{bound:>14.6g}{slack:>14.6g}")
    for note in report.notes:
        click.echo(f"note: {note}")
    if json_out:
        payload = {
            "rho_exact": report.rho_exact, "rho_bound": report.rho_bound,
            "kt_inv_bound": report.kt_inv_bound,
            "min_eig_exact": report.min_eig_exact,
            "min_eig_lower": report.min_eig_lower,
            "lambda1_floor": report.lambda1_floor, "lambda_1": report.lambda_1,
            "mse_bound": report.mse_bound,
            "prediction_bound": report.prediction_bound,
            "consistency_proviso": report.consistency_proviso,
            "graph_family": report.graph_family,
            "inputs": report.inputs_echo, "notes": report.notes,
        }
        pathlib.Path(json_out).write_text(json.dumps(payload, indent=2))


@main.command(name="cov-estimate")
@click.option("--x", "x_path", type=click.Path(exists=True), required=True)
@click.option("--method", type=click.Choice(["sample", "threshold", "sideinfo"]),
              default="threshold", show_default=True)
@click.option("--sfeat", type=click.Path(exists=True), default=None,
              help="side-feature CSV (required for --method sideinfo)")
@click.option("--center", is_flag=True, help="subtract column means first")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def cov_estimate(x_path, method, sfeat, center, seed, out):
    """Estimate the covariance matrix from CSV data."""
    X = io.read_matrix_csv(x_path)
    if center:
        X = X - X.mean(axis=0)
    if method == "sample":
        est = sample_covariance(X)
    elif method == "threshold":
        est = estimate_covariance_thresholded(X, seed=seed)
    else:
        if sfeat is None:
            raise click.UsageError("--method sideinfo requires --sfeat")
        est = sideinfo_covariance(io.read_matrix_csv(sfeat), X)
    payload = io.covariance_to_json(est)
    if out:
        pathlib.Path(out).write_text(payload)
    else:
        click.echo(payload)


if __name__ == "__main__":
    main()
