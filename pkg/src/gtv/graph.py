"""Covariance graph, weighted edge-incidence matrix, Laplacian, augmented
regression system, and the spectral/combinatorial quantities (inverse
scaling factor, compatibility bound, curvature floor) driving the error
bounds.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .covariance import SYMMETRY_TOL, CovarianceEstimate

MAX_DENSE_P = 2000
EIG_ZERO_RTOL = 1e-9


class Edge(NamedTuple):
    j: int
    k: int
    weight: float
    sign: int


@dataclass
class CovarianceGraph:
    """Vertices 0..p-1 with one edge per nonzero off-diagonal covariance
    entry; edges are stored with j < k in lexicographic order so the
    incidence row indexing is reproducible."""

    p: int
    edges: list[Edge]

    def __post_init__(self):
        prev = (-1, -1)
        for e in self.edges:
            if not 0 <= e.j < e.k < self.p:
                raise ValueError(f"edge {e} out of range or not j < k")
            if e.weight == 0:
                raise ValueError(f"edge {e} has zero weight")
            if e.sign != (1 if e.weight > 0 else -1):
                raise ValueError(f"edge {e} sign does not match weight")
            if (e.j, e.k) <= prev:
                raise ValueError("edges must be strictly increasing lexicographically")
            prev = (e.j, e.k)

    @property
    def m(self) -> int:
        return len(self.edges)


@dataclass
class IncidenceSystem:
    """Sparse incidence matrix, Laplacian, and the stacked penalty matrix
    [lambda_tv * Gamma; I] used by the l1 regularizer."""

    gamma: sp.csr_array
    laplacian: sp.csr_array
    gamma_tilde: sp.csr_array
    lambda_tv: float

    @property
    def p(self) -> int:
        return self.gamma.shape[1]

    @property
    def m(self) -> int:
        return self.gamma.shape[0]


@dataclass
class BlockDecomposition:
    """Connected components with the spectral data of each Laplacian block.

    ``mu`` holds the smallest nonzero eigenvalue per component (None for
    singletons); ``lambda_min`` the smallest eigenvalue, which is 0 for
    components whose edge signs are all positive but may be positive for
    mixed-sign components (flagged via :meth:`nonsingular`).
    """

    components: list[np.ndarray]
    mu: list[float | None]
    lambda_min: list[float]
    sizes: list[int] = field(init=False)

    def __post_init__(self):
        self.sizes = [len(c) for c in self.components]

    def nonsingular(self, rtol: float = EIG_ZERO_RTOL) -> list[int]:
        out = []
        for i, (lm, m) in enumerate(zip(self.lambda_min, self.mu)):
            scale = max(abs(m) if m is not None else 1.0, 1.0)
            if lm > rtol * scale:
                out.append(i)
        return out


def build_graph(sigma_hat: CovarianceEstimate, eps_edge: float = 0.0) -> CovarianceGraph:
    """Edges are the unordered pairs with |Sigma_hat[j, k]| > eps_edge."""
    if eps_edge < 0:
        raise ValueError("eps_edge must be nonnegative")
    M = sigma_hat.matrix
    pairs = np.argwhere(np.triu(np.abs(M) > eps_edge, k=1))
    edges = [
        Edge(int(j), int(k), float(M[j, k]), 1 if M[j, k] > 0 else -1) for j, k in pairs
    ]
    return CovarianceGraph(p=sigma_hat.p, edges=edges)


def incidence(graph: CovarianceGraph, lambda_tv: float) -> IncidenceSystem:
    """Build Gamma (one row per edge: sqrt(|w|) on j, -sign*sqrt(|w|) on k),
    the Laplacian Gamma^T Gamma, and the stacked [lambda_tv*Gamma; I]."""
    if lambda_tv < 0:
        raise ValueError("lambda_tv must be nonnegative")
    p, m = graph.p, graph.m
    rows = np.repeat(np.arange(m), 2)
    cols = np.empty(2 * m, dtype=np.intp)
    data = np.empty(2 * m)
    for ell, e in enumerate(graph.edges):
        w = math.sqrt(abs(e.weight))
        cols[2 * ell] = e.j
        cols[2 * ell + 1] = e.k
        data[2 * ell] = w
        data[2 * ell + 1] = -e.sign * w
    gamma = sp.csr_array((data, (rows, cols)), shape=(m, p))
    laplacian = sp.csr_array((gamma.T @ gamma))
    gamma_tilde = sp.csr_array(sp.vstack([lambda_tv * gamma, sp.eye_array(p, format="csr")]))
    return IncidenceSystem(
        gamma=gamma, laplacian=laplacian, gamma_tilde=gamma_tilde, lambda_tv=float(lambda_tv)
    )


def augment(X: np.ndarray, y: np.ndarray, sys: IncidenceSystem, lambda_s: float):
    """Stack sqrt(n*lambda_s)*Gamma under X and zeros under y, so the
    least-squares objective of the stacked system absorbs the quadratic
    graph penalty exactly."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if lambda_s < 0:
        raise ValueError("lambda_s must be nonnegative")
    n, p = X.shape
    if p != sys.p:
        raise ValueError(f"X has {p} columns but the graph has {sys.p} vertices")
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    bottom = math.sqrt(n * lambda_s) * sys.gamma.toarray()
    X_tilde = np.vstack([X, bottom])
    y_tilde = np.concatenate([y, np.zeros(sys.m)])
    return X_tilde, y_tilde


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def components(graph: CovarianceGraph) -> BlockDecomposition:
    """Connected components and per-block Laplacian spectra."""
    uf = _UnionFind(graph.p)
    for e in graph.edges:
        uf.union(e.j, e.k)
    groups: dict[int, list[int]] = {}
    for v in range(graph.p):
        groups.setdefault(uf.find(v), []).append(v)
    comps = sorted((np.array(sorted(g)) for g in groups.values()), key=lambda c: c[0])

    L = incidence(graph, 0.0).laplacian.toarray()
    mu: list[float | None] = []
    lam_min: list[float] = []
    for comp in comps:
        if comp.size == 1:
            mu.append(None)
            lam_min.append(0.0)
            continue
        vals = scipy.linalg.eigvalsh(L[np.ix_(comp, comp)])
        lam_min.append(float(vals[0]))
        tol = EIG_ZERO_RTOL * max(vals[-1], 1e-300)
        nonzero = vals[vals > tol]
        mu.append(float(nonzero[0]) if nonzero.size else None)
    return BlockDecomposition(components=comps, mu=mu, lambda_min=lam_min)


def rho_exact(sys: IncidenceSystem) -> float:
    """Inverse scaling factor: the largest column l2 norm of the
    Moore-Penrose pseudoinverse of [lambda_tv*Gamma; I]."""
    if sys.p > MAX_DENSE_P:
        raise ValueError(f"dense SVD guard: p={sys.p} exceeds {MAX_DENSE_P}")
    pinv = np.linalg.pinv(sys.gamma_tilde.toarray())
    return float(np.linalg.norm(pinv, axis=0).max())


def rho_bound(decomp: BlockDecomposition, lambda_tv: float) -> float:
    """Closed-form upper bound on the inverse scaling factor from the
    component sizes and smallest nonzero Laplacian eigenvalues. Singleton
    components contribute 1 + 2 under the mu*lambda_tv^2 = 0 convention."""
    if lambda_tv < 0:
        raise ValueError("lambda_tv must be nonnegative")
    terms = []
    for size, mu in zip(decomp.sizes, decomp.mu):
        mlt2 = 0.0 if mu is None else mu * lambda_tv**2
        terms.append(1.0 / size + 2.0 / (1.0 + mlt2))
    return math.sqrt(max(terms))


def kt_inv_bound(t1: int, t2: int, sigma_l11: float, lambda_tv: float) -> float:
    """Upper bound on the reciprocal compatibility factor for a support
    split into t1 edge rows and t2 identity rows of the stacked penalty
    matrix; sigma_l11 is the max row l1 norm of the covariance estimate."""
    if t1 < 0 or t2 < 0 or t1 + t2 < 1:
        raise ValueError("need t1, t2 >= 0 with t1 + t2 >= 1")
    if sigma_l11 < 0 or lambda_tv < 0:
        raise ValueError("sigma_l11 and lambda_tv must be nonnegative")
    num = lambda_tv * math.sqrt(2.0 * sigma_l11 * t1) + math.sqrt(t2)
    return num / math.sqrt(t1 + t2)


class MinEigResult(NamedTuple):
    exact: float
    lower_bound: float
    gap: float


def min_eig(sigma: np.ndarray, laplacian, lambda_s: float) -> MinEigResult:
    """Exact smallest eigenvalue of Sigma + lambda_s * L next to its
    closed-form lower bound (1-lambda_s)*lmin(Sigma) + lambda_s*c_l/2,
    with c_l the smallest row l1 sum of Sigma."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sp.issparse(laplacian):
        laplacian = laplacian.toarray()
    laplacian = np.asarray(laplacian, dtype=np.float64)
    if not 0 <= lambda_s <= 1:
        raise ValueError("the lower bound requires lambda_s in [0, 1]")
    for name, M in (("sigma", sigma), ("laplacian", laplacian)):
        if np.max(np.abs(M - M.T)) > SYMMETRY_TOL:
            raise ValueError(f"{name} is asymmetric beyond tolerance")
    exact = float(scipy.linalg.eigvalsh(sigma + lambda_s * laplacian)[0])
    c_l = float(np.min(np.sum(np.abs(sigma), axis=1)))
    lower = (1 - lambda_s) * float(scipy.linalg.eigvalsh(sigma)[0]) + lambda_s * c_l / 2.0
    return MinEigResult(exact=exact, lower_bound=lower, gap=exact - lower)
