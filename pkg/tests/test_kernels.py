import numpy as np
import pytest

from gtv._kernels import BACKEND, _py, enet_cd, pav_nonincreasing

try:
    from gtv._kernels import _core
except ImportError:
    _core = None

backends = [("python", _py)] + ([("cython", _core)] if _core else [])


def test_backend_reported():
    assert BACKEND in ("cython", "python")


class TestEnetCd:
    def test_backends_agree(self):
        if _core is None:
            pytest.skip("compiled extension unavailable")
        rng = np.random.default_rng(0)
        X = rng.standard_normal((40, 12))
        y = rng.standard_normal(40)
        Xf = np.asfortranarray(X)
        b1 = np.zeros(12)
        b2 = np.zeros(12)
        _py.enet_cd(Xf, y, 0.05, 0.01, b1, 500, 1e-12)
        _core.enet_cd(Xf, y, 0.05, 0.01, b2, 500, 1e-12)
        assert np.allclose(b1, b2, atol=1e-12)

    def test_solves_soft_threshold_case(self):
        # orthonormal design: the solution is an entrywise soft threshold
        rng = np.random.default_rng(1)
        q, _ = np.linalg.qr(rng.standard_normal((30, 6)))
        X = q * np.sqrt(30)
        y = X @ np.array([1.0, -0.5, 0.2, 0.0, 0.0, 0.0])
        lam = 0.3
        beta, _, converged = enet_cd(X, y, lam, 0.0)
        target = X.T @ y / 30
        expected = np.sign(target) * np.maximum(np.abs(target) - lam / 2, 0.0)
        assert converged
        assert np.allclose(beta, expected, atol=1e-10)

    def test_warm_start_in_place(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((25, 5))
        y = rng.standard_normal(25)
        cold, _, _ = enet_cd(X, y, 0.1, 0.0)
        warm = cold.copy()
        out, sweeps, _ = enet_cd(X, y, 0.1, 0.0, beta=warm)
        assert out is warm
        assert sweeps <= 2
        assert np.allclose(out, cold, atol=1e-12)


class TestPav:
    @pytest.mark.parametrize("name,mod", backends)
    def test_simple_pool(self, name, mod):
        out = np.asarray(mod.pav_nonincreasing(np.array([0.5, 1.0])))
        assert np.allclose(out, [0.75, 0.75])

    @pytest.mark.parametrize("name,mod", backends)
    def test_already_monotone(self, name, mod):
        v = np.array([3.0, 2.0, 0.5, -1.0])
        assert np.allclose(np.asarray(mod.pav_nonincreasing(v)), v)

    def test_matches_reverse_isotonic_oracle(self):
        # nonincreasing projection == reversed nondecreasing projection
        # computed by a brute-force quadratic program over a fine path
        rng = np.random.default_rng(3)
        for _ in range(50):
            v = rng.standard_normal(rng.integers(1, 12))
            ours = pav_nonincreasing(v)
            # oracle via scipy isotonic on the reversed sequence
            from scipy.optimize import isotonic_regression

            oracle = isotonic_regression(v[::-1], increasing=True).x[::-1]
            assert np.allclose(ours, oracle, atol=1e-10)

    def test_projection_properties(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            v = rng.standard_normal(8)
            out = pav_nonincreasing(v)
            assert np.all(np.diff(out) <= 1e-12)
            # projection is no farther from v than any monotone candidate
            cand = np.sort(rng.standard_normal(8))[::-1]
            assert np.sum((out - v) ** 2) <= np.sum((cand - v) ** 2) + 1e-12

    def test_empty_input(self):
        assert pav_nonincreasing(np.array([])).size == 0
