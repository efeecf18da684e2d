"""Synthetic covariance families (block, chain, lattice), aligned
coefficient vectors, and seeded Gaussian sampling.
"""

import math
from dataclasses import dataclass

import numpy as np

from .covariance import SOURCE_SAMPLE, CovarianceEstimate

FAMILIES = ("block", "chain", "lattice")


@dataclass
class Scenario:
    """One simulation scenario.

    ``beta_noise_sd`` controls the spread of the active coefficients
    around 1 (raising it injects l1-type misalignment); ``split_blocks``
    splits the active chain nodes into that many separated interior runs
    (l0-type misalignment; even a single run is placed away from the
    chain ends, unlike the default prefix placement). The defaults
    reproduce the aligned setting.
    """

    family: str
    p: int
    r: float
    n: int
    K: int | None = None
    s: int | None = None
    sigma_noise: float = 0.01
    beta_noise_sd: float = 0.01
    split_blocks: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.p < 1:
            raise ValueError("p must be positive")
        if self.family == "block":
            if self.K is None or self.K < 1 or self.p % self.K != 0:
                raise ValueError("block family needs K >= 1 dividing p")
            if not 0 < self.r <= 1:
                raise ValueError("block family needs r in (0, 1]")
        elif self.family == "chain":
            if not 0 < self.r < 0.5:
                raise ValueError("chain family needs r in (0, 1/2)")
        else:
            side = math.isqrt(self.p)
            if side * side != self.p:
                raise ValueError("lattice family needs p to be a perfect square")
            if not 0 < self.r < 0.25:
                raise ValueError("lattice family needs r in (0, 1/4)")
        if self.s is not None:
            if not 0 <= self.s <= self.p:
                raise ValueError("s must lie in [0, p]")
            if self.family == "block" and self.s % (self.p // self.K) != 0:
                raise ValueError("block family needs s to be a multiple of the block size")
            if self.family == "lattice":
                side = math.isqrt(self.s)
                if side * side != self.s:
                    raise ValueError("lattice family needs s to be a perfect square")
        if self.split_blocks is not None:
            if self.split_blocks < 1:
                raise ValueError("split_blocks must be >= 1")
            if self.family != "chain":
                raise ValueError("split_blocks applies to the chain family only")


def lattice_edges(p: int):
    """4-neighbor edges of the sqrt(p) x sqrt(p) grid, row-major, 0-indexed."""
    side = math.isqrt(p)
    edges = []
    for i in range(side):
        for j in range(side):
            v = i * side + j
            if j + 1 < side:
                edges.append((v, v + 1))
            if i + 1 < side:
                edges.append((v, v + side))
    return sorted(edges)


def make_covariance(scenario: Scenario) -> CovarianceEstimate:
    """Population covariance of the scenario's family."""
    p, r = scenario.p, scenario.r
    if scenario.family == "block":
        K = scenario.K
        q = p // K
        a = K / p
        block = a * (r * np.ones((q, q)) + (1 - r) * np.eye(q))
        Sigma = np.kron(np.eye(K), block)
    elif scenario.family == "chain":
        Sigma = np.eye(p)
        idx = np.arange(p - 1)
        Sigma[idx, idx + 1] = r
        Sigma[idx + 1, idx] = r
    else:
        Sigma = np.eye(p)
        for j, k in lattice_edges(p):
            Sigma[j, k] = r
            Sigma[k, j] = r
    return CovarianceEstimate(Sigma, source=SOURCE_SAMPLE)


def _chain_runs(p: int, s: int, count: int):
    """Place ``count`` equal-ish runs of active nodes, centered away from
    the chain endpoints so every run has two boundary edges."""
    if count > s:
        raise ValueError("cannot split s active nodes into more than s runs")
    lengths = [s // count + (1 if i < s % count else 0) for i in range(count)]
    seg = p // count
    runs = []
    for i, ln in enumerate(lengths):
        lo = i * seg
        start = lo + (seg - ln) // 2
        start = max(start, lo + 1, 1)
        if start + ln > min(lo + seg, p) - (1 if i == count - 1 else 0):
            raise ValueError(
                f"cannot place {count} separated runs of {s} active nodes in a chain of {p}"
            )
        runs.append(np.arange(start, start + ln))
    return runs


def make_beta(scenario: Scenario):
    """Coefficient vector aligned with the family graph.

    Active entries are drawn N(1, beta_noise_sd^2); inactive entries are
    exactly zero. Returns (beta, groups) where ``groups`` lists the index
    arrays of the active regions (blocks, runs, or the sublattice).
    """
    if scenario.s is None:
        raise ValueError("scenario.s must be set to generate coefficients")
    p, s = scenario.p, scenario.s
    rng = np.random.default_rng(scenario.seed)
    if scenario.family == "block":
        q = p // scenario.K
        n_active = s // q
        chosen = np.sort(rng.choice(scenario.K, size=n_active, replace=False))
        groups = [np.arange(b * q, (b + 1) * q) for b in chosen]
    elif scenario.family == "chain":
        if scenario.split_blocks is not None:
            groups = _chain_runs(p, s, scenario.split_blocks)
        else:
            groups = [np.arange(s)]
    else:
        side = math.isqrt(p)
        sub = math.isqrt(s)
        rows, cols = np.meshgrid(np.arange(sub), np.arange(sub), indexing="ij")
        groups = [np.sort((rows * side + cols).ravel())]
    beta = np.zeros(p)
    for g in groups:
        beta[g] = rng.normal(1.0, scenario.beta_noise_sd, size=g.size)
    return beta, groups


def _psd_sqrt(Sigma: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(Sigma)
    if vals.min() < -1e-10:
        raise ValueError(f"covariance is indefinite (min eigenvalue {vals.min():.3e})")
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals) @ vecs.T


def sample_data(Sigma, beta_star: np.ndarray, n: int, sigma_noise: float, seed: int):
    """Draw X with i.i.d. N(0, Sigma) rows and y = X beta + noise."""
    if isinstance(Sigma, CovarianceEstimate):
        Sigma = Sigma.matrix
    Sigma = np.asarray(Sigma, dtype=np.float64)
    root = _psd_sqrt(Sigma)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, Sigma.shape[0])) @ root
    y = X @ beta_star + sigma_noise * rng.standard_normal(n)
    return X, y


def sample_sideinfo(Sigma, m: int = 1000, seed: int = 0) -> np.ndarray:
    """Unlabeled draws from the same design distribution."""
    if isinstance(Sigma, CovarianceEstimate):
        Sigma = Sigma.matrix
    Sigma = np.asarray(Sigma, dtype=np.float64)
    root = _psd_sqrt(Sigma)
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, Sigma.shape[0])) @ root
