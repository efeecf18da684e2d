"""CSV / JSON serialization for matrices, graphs, fits, and experiment
tables."""

import csv
import json

import numpy as np

from .covariance import CovarianceEstimate
from .graph import CovarianceGraph, IncidenceSystem
from .harness import ExperimentResult
from .solver import FitResult


def read_matrix_csv(path) -> np.ndarray:
    """Read a row-major numeric CSV; a non-numeric first row is treated
    as a header and skipped."""
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    start = 0
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        start = 1
    return np.array([[float(v) for v in row] for row in rows[start:]])


def read_vector_csv(path) -> np.ndarray:
    M = read_matrix_csv(path)
    return M.ravel()


def write_matrix_csv(path, M, header=None) -> None:
    M = np.asarray(M)
    if M.ndim == 1:
        M = M[:, None]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        writer.writerows(M.tolist())


def covariance_to_json(est: CovarianceEstimate) -> str:
    payload = {"p": est.p, "source": est.source, "matrix": est.matrix.tolist()}
    if est.threshold is not None:
        payload["threshold"] = est.threshold
    return json.dumps(payload)


def covariance_from_json(text: str) -> CovarianceEstimate:
    payload = json.loads(text)
    return CovarianceEstimate(
        np.array(payload["matrix"], dtype=np.float64),
        source=payload["source"],
        threshold=payload.get("threshold"),
    )


def write_edges_csv(path, graph: CovarianceGraph) -> None:
    """Edge list as ``j,k,weight,sign`` (0-indexed vertices)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["j", "k", "weight", "sign"])
        for e in graph.edges:
            writer.writerow([e.j, e.k, repr(e.weight), e.sign])


def write_incidence_csv(path, sys: IncidenceSystem) -> None:
    """Incidence matrix as coordinate triplets ``row,col,value``."""
    coo = sys.gamma.tocoo()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for r, c, v in zip(coo.row, coo.col, coo.data):
            writer.writerow([int(r), int(c), repr(float(v))])


def fit_to_json(fit: FitResult) -> str:
    return json.dumps({
        "beta": fit.beta_hat.tolist(),
        "objective": fit.objective,
        "kkt": fit.kkt_residual,
        "iters": fit.iterations,
        "converged": fit.converged,
    })


def write_cv_table(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda1", "lambda_tv", "lambda_s", "fold", "mse"])
        writer.writerows(rows)


def write_experiment_csv(path, result: ExperimentResult) -> None:
    keys = sorted({k for r in result.records for k in r.info})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "method", "mse", "runtime"] + keys)
        for r in result.records:
            writer.writerow([r.trial, r.method, repr(r.mse), f"{r.runtime:.3f}"]
                            + [r.info.get(k, "") for k in keys])


def experiment_summary_json(result: ExperimentResult) -> str:
    sc = result.scenario
    return json.dumps({
        "scenario": {
            "family": sc.family, "p": sc.p, "r": sc.r, "n": sc.n, "K": sc.K,
            "s": sc.s, "sigma_noise": sc.sigma_noise,
            "beta_noise_sd": sc.beta_noise_sd, "split_blocks": sc.split_blocks,
            "seed": sc.seed,
        },
        "trials": result.trials,
        "median_mse": result.median_mse,
        "boot_sd": result.boot_sd,
    }, indent=2)


def write_plot_csv(path, result: ExperimentResult) -> None:
    """Plot-ready long format: one row per method with the scenario echo."""
    sc = result.scenario
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["family", "p", "n", "s", "r", "method",
                         "median_mse", "boot_sd"])
        for m in result.methods:
            writer.writerow([sc.family, sc.p, sc.n, sc.s, sc.r, m,
                             repr(result.median_mse[m]), repr(result.boot_sd[m])])
