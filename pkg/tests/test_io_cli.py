import json

import numpy as np
import pytest
from click.testing import CliRunner

from gtv import io
from gtv.cli import main
from gtv.covariance import CovarianceEstimate, hard_threshold, sample_covariance
from gtv.graph import build_graph, incidence
from gtv.harness import run_experiment
from gtv.solver import GtvConfig, fit_gtv
from gtv.synth import Scenario, make_beta, make_covariance, sample_data


@pytest.fixture
def tmp_csvs(tmp_path):
    rng = np.random.default_rng(0)
    sc = Scenario(family="block", p=6, K=3, r=0.8, n=40, s=2, sigma_noise=0.05,
                  seed=2)
    Sigma = make_covariance(sc)
    beta, _ = make_beta(sc)
    X, y = sample_data(Sigma, beta, sc.n, sc.sigma_noise, 3)
    x_path = tmp_path / "X.csv"
    y_path = tmp_path / "y.csv"
    io.write_matrix_csv(x_path, X)
    io.write_matrix_csv(y_path, y)
    sigma_path = tmp_path / "sigma.csv"
    io.write_matrix_csv(sigma_path, Sigma.matrix)
    return dict(tmp=tmp_path, x=x_path, y=y_path, sigma=sigma_path,
                X=X, y_arr=y, Sigma=Sigma, beta=beta, rng=rng)


class TestMatrixCsv:
    def test_roundtrip_no_header(self, tmp_path):
        M = np.array([[1.5, -2.0], [0.25, 3.0]])
        path = tmp_path / "m.csv"
        io.write_matrix_csv(path, M)
        assert np.array_equal(io.read_matrix_csv(path), M)

    def test_header_skipped(self, tmp_path):
        path = tmp_path / "m.csv"
        io.write_matrix_csv(path, np.eye(2), header=["a", "b"])
        assert np.array_equal(io.read_matrix_csv(path), np.eye(2))

    def test_vector(self, tmp_path):
        path = tmp_path / "v.csv"
        io.write_matrix_csv(path, np.array([1.0, 2.0, 3.0]))
        assert np.array_equal(io.read_vector_csv(path), [1.0, 2.0, 3.0])

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(ValueError):
            io.read_matrix_csv(path)


class TestCovarianceJson:
    def test_roundtrip_with_threshold(self):
        S = sample_covariance(np.random.default_rng(1).standard_normal((20, 4)))
        T = hard_threshold(S, 0.2)
        back = io.covariance_from_json(io.covariance_to_json(T))
        assert np.array_equal(back.matrix, T.matrix)
        assert back.source == "hard_thresholded" and back.threshold == 0.2


class TestGraphExports:
    def test_edge_csv(self, tmp_path):
        M = np.array([[1.0, 0.5, 0.0], [0.5, 1.0, -0.25], [0.0, -0.25, 1.0]])
        g = build_graph(CovarianceEstimate(M))
        path = tmp_path / "edges.csv"
        io.write_edges_csv(path, g)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "j,k,weight,sign"
        assert lines[1] == "0,1,0.5,1"
        assert lines[2] == "1,2,-0.25,-1"

    def test_incidence_triplets(self, tmp_path):
        M = np.array([[1.0, 0.25], [0.25, 1.0]])
        sys = incidence(build_graph(CovarianceEstimate(M)), 1.0)
        path = tmp_path / "gamma.csv"
        io.write_incidence_csv(path, sys)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "row,col,value"
        assert len(rows) == 3  # one edge, two entries


class TestFitJson:
    def test_fields(self, tmp_csvs):
        sys = incidence(build_graph(tmp_csvs["Sigma"]), 1.0)
        cfg = GtvConfig(lambda_1=0.05, lambda_tv=1.0, lambda_s=0.1)
        fit = fit_gtv(tmp_csvs["X"], tmp_csvs["y_arr"], sys, cfg)
        payload = json.loads(io.fit_to_json(fit))
        assert set(payload) == {"beta", "objective", "kkt", "iters", "converged"}
        assert len(payload["beta"]) == 6


class TestExperimentExports:
    def test_csv_and_summary(self, tmp_path):
        sc = Scenario(family="block", p=8, K=4, r=0.8, n=30, s=2,
                      sigma_noise=0.05, seed=5)
        grids = {"lambda1": np.array([0.01, 0.1]), "lambda_tv": np.array([0.0]),
                 "lambda_s": np.array([0.0]), "threshold": None,
                 "owl_lambda2": np.array([0.0])}
        res = run_experiment(sc, ["lasso"], trials=2, grids=grids, boot_b=20)
        out = tmp_path / "res.csv"
        io.write_experiment_csv(out, res)
        assert out.read_text().startswith("trial,method,mse,runtime")
        summary = json.loads(io.experiment_summary_json(res))
        assert summary["trials"] == 2
        assert "lasso" in summary["median_mse"]
        long_path = tmp_path / "long.csv"
        io.write_plot_csv(long_path, res)
        assert "median_mse" in long_path.read_text().splitlines()[0]

    def test_cv_table(self, tmp_path):
        path = tmp_path / "cv.csv"
        io.write_cv_table(path, [(0.1, 0.0, 0.0, 0, 1.25)])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "lambda1,lambda_tv,lambda_s,fold,mse"
        assert lines[1].startswith("0.1,")


class TestCli:
    def test_fit_subcommand(self, tmp_csvs):
        runner = CliRunner()
        out = tmp_csvs["tmp"] / "fit.json"
        result = runner.invoke(main, [
            "fit", "--x", str(tmp_csvs["x"]), "--y", str(tmp_csvs["y"]),
            "--sigma", str(tmp_csvs["sigma"]),
            "--lambda1", "0.05", "--lambda-tv", "1.0", "--lambda-s", "0.1",
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert payload["converged"]

    def test_fit_without_sigma_estimates(self, tmp_csvs):
        runner = CliRunner()
        result = runner.invoke(main, [
            "fit", "--x", str(tmp_csvs["x"]), "--y", str(tmp_csvs["y"]),
            "--lambda1", "0.1"])
        assert result.exit_code == 0, result.output
        assert '"beta"' in result.output

    def test_theory_subcommand(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "theory.json"
        result = runner.invoke(main, [
            "theory", "--family", "chain", "--p", "20", "--r", "0.4",
            "--n", "50", "--s", "6", "--lambda-tv", "1.0", "--lambda-s", "0.5",
            "--json", str(out)])
        assert result.exit_code == 0, result.output
        assert "rho" in result.output
        payload = json.loads(out.read_text())
        assert payload["rho_exact"] <= payload["rho_bound"] + 1e-9

    def test_cov_estimate_threshold(self, tmp_csvs):
        runner = CliRunner()
        out = tmp_csvs["tmp"] / "cov.json"
        result = runner.invoke(main, [
            "cov-estimate", "--x", str(tmp_csvs["x"]), "--method", "threshold",
            "--out", str(out)])
        assert result.exit_code == 0, result.output
        est = io.covariance_from_json(out.read_text())
        assert est.source == "hard_thresholded" and est.p == 6

    def test_cov_estimate_sideinfo(self, tmp_csvs):
        runner = CliRunner()
        rng = tmp_csvs["rng"]
        S = rng.integers(0, 2, size=(40, 2)).astype(float)
        A = rng.standard_normal((2, 6))
        X = S @ A + 0.05 * rng.standard_normal((40, 6))
        x_path = tmp_csvs["tmp"] / "Xs.csv"
        s_path = tmp_csvs["tmp"] / "S.csv"
        io.write_matrix_csv(x_path, X)
        io.write_matrix_csv(s_path, S)
        result = runner.invoke(main, [
            "cov-estimate", "--x", str(x_path), "--method", "sideinfo",
            "--sfeat", str(s_path)])
        assert result.exit_code == 0, result.output
        assert '"side_info"' in result.output

    def test_simulate_subcommand(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "results.csv"
        result = runner.invoke(main, [
            "simulate", "--family", "block", "--p", "8", "--K", "4",
            "--r", "0.8", "--n", "30", "--s", "2", "--trials", "2",
            "--methods", "lasso", "--seed", "1", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert out.exists()
        assert (tmp_path / "results.json").exists()
        assert (tmp_path / "results_long.csv").exists()
        assert "median MSE" in result.output
