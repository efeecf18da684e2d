"""Finite-sample error bounds as executable formulas.

Everything here is plain arithmetic on instance quantities: the penalty
floor for lambda_1, the mean-squared-error and prediction bounds, and
the closed-form block/chain/lattice specializations. Unspecified
absolute constants are reported with value 1; the literal factors 48
and 8 in the penalty floor are kept. All outputs are "up to absolute
constant".
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import synth
from .covariance import CovarianceEstimate, assumption_constants, l11_distance
from .graph import (
    build_graph,
    components,
    incidence,
    kt_inv_bound,
    min_eig,
    rho_bound,
    rho_exact,
)

FAMILY_GENERIC = "generic"


@dataclass
class BoundInputs:
    """Instance quantities entering the bounds."""

    n: int
    p: int
    sigma: float
    c_u: float
    c_l: float
    lambda_tv: float
    lambda_s: float
    beta_l0: int
    gamma_beta_l0: int
    gamma_beta_l1: float
    l_beta_inf: float
    sigma_hat_l11: float
    block_sizes: list[int]
    mus: list[float | None]
    min_eig_exact: float
    min_eig_lower: float

    def component_term(self) -> float:
        """max over components of 1/|B_k| + 2/(1 + mu_k * lambda_tv^2);
        singletons use mu * lambda_tv^2 = 0."""
        terms = []
        for size, mu in zip(self.block_sizes, self.mus):
            mlt2 = 0.0 if mu is None else mu * self.lambda_tv**2
            terms.append(1.0 / size + 2.0 / (1.0 + mlt2))
        return max(terms)


def alignment_stats(sys, beta: np.ndarray, atol: float = 1e-12):
    """(||Gamma b||_0, ||Gamma b||_1, ||L b||_inf) of a coefficient vector."""
    gb = sys.gamma @ beta
    lb = sys.laplacian @ beta
    return (
        int(np.sum(np.abs(gb) > atol)),
        float(np.abs(gb).sum()),
        float(np.abs(lb).max()) if lb.size else 0.0,
    )


def bound_inputs(sigma, sigma_hat, beta_star: np.ndarray, n: int, noise_sd: float,
                 lambda_tv: float, lambda_s: float,
                 c_u: float | None = None, c_l: float | None = None) -> BoundInputs:
    """Assemble all bound inputs from a concrete instance.

    c_u and c_l default to the largest eigenvalue and smallest row l1 sum
    of the true covariance; pass overrides to study other normalizations.
    """
    if isinstance(sigma, CovarianceEstimate):
        sigma = sigma.matrix
    if not isinstance(sigma_hat, CovarianceEstimate):
        sigma_hat = CovarianceEstimate(np.asarray(sigma_hat))
    consts = assumption_constants(sigma)
    graph = build_graph(sigma_hat)
    sys = incidence(graph, lambda_tv)
    decomp = components(graph)
    gl0, gl1, linf = alignment_stats(sys, beta_star)
    me = min_eig(sigma, sys.laplacian, lambda_s)
    return BoundInputs(
        n=n,
        p=sigma.shape[0],
        sigma=float(noise_sd),
        c_u=consts.c_u if c_u is None else float(c_u),
        c_l=consts.c_l if c_l is None else float(c_l),
        lambda_tv=float(lambda_tv),
        lambda_s=float(lambda_s),
        beta_l0=int(np.sum(beta_star != 0)),
        gamma_beta_l0=gl0,
        gamma_beta_l1=gl1,
        l_beta_inf=linf,
        sigma_hat_l11=float(np.max(np.sum(np.abs(sigma_hat.matrix), axis=1))),
        block_sizes=decomp.sizes,
        mus=decomp.mu,
        min_eig_exact=me.exact,
        min_eig_lower=me.lower_bound,
    )


def lambda1_floor(inputs: BoundInputs) -> float:
    """Smallest admissible sparsity penalty:
    48 sqrt(sigma^2 c_u log(p)/n * max_k(1/|B_k| + 2/(1+mu_k ltv^2)))
    + 8 lambda_s ||L b*||_inf.
    """
    base = 48.0 * math.sqrt(
        inputs.sigma**2 * inputs.c_u * math.log(inputs.p) / inputs.n
        * inputs.component_term()
    )
    return base + 8.0 * inputs.lambda_s * inputs.l_beta_inf


def _mse_numerator(inputs: BoundInputs, lambda_1: float) -> float:
    tv_term = min(
        lambda_1**2 * inputs.lambda_tv**2 * inputs.sigma_hat_l11 * inputs.gamma_beta_l0,
        lambda_1 * inputs.lambda_tv * inputs.gamma_beta_l1,
    )
    return lambda_1**2 * inputs.beta_l0 + tv_term


def mse_bound_general(inputs: BoundInputs, lambda_1: float) -> float:
    """Squared-error bound with the constant set to 1; evaluates (with a
    warning) even when lambda_1 sits below the floor."""
    if inputs.min_eig_exact <= 0:
        raise ValueError("curvature lambda_min(Sigma + lambda_s L) must be positive")
    if lambda_1 < lambda1_floor(inputs):
        warnings.warn("lambda_1 is below the admissible floor; bound not guaranteed",
                      RuntimeWarning, stacklevel=2)
    lam = inputs.min_eig_exact
    return _mse_numerator(inputs, lambda_1) / min(lam * lam, lam)


def prediction_bound(inputs: BoundInputs, lambda_1: float) -> float:
    """In-sample prediction-error bound (constant set to 1)."""
    if inputs.min_eig_exact <= 0:
        raise ValueError("curvature lambda_min(Sigma + lambda_s L) must be positive")
    if lambda_1 < lambda1_floor(inputs):
        warnings.warn("lambda_1 is below the admissible floor; bound not guaranteed",
                      RuntimeWarning, stacklevel=2)
    lam = inputs.min_eig_exact
    tv_term = min(
        2.0 * lambda_1**2 * inputs.lambda_tv**2 * inputs.sigma_hat_l11
        * inputs.gamma_beta_l0,
        2.0 * lambda_1 * inputs.lambda_tv * inputs.gamma_beta_l1,
    )
    return lambda_1**2 * inputs.beta_l0 / lam + tv_term


def family_rho_sq_bound(family: str, p: int, r: float, lambda_tv: float,
                        K: int | None = None) -> float:
    """Closed-form bound on the squared inverse scaling factor."""
    if family == "block":
        if K is None:
            raise ValueError("block family needs K")
        return K / p + 2.0 / (1.0 + r * lambda_tv**2)
    if family == "chain":
        return 1.0 / p + 2.0 * math.pi / (r * lambda_tv + 1.0)
    if family == "lattice":
        return (
            1.0 / p
            + 5.0 * math.pi * math.log(2.0 + r * lambda_tv) / (r**2 * lambda_tv**2 + 1.0)
            + 10.0 * math.pi / (r * lambda_tv * math.sqrt(p) + 1.0)
        )
    raise ValueError(f"unknown family {family!r}")


def family_min_eig_lower(family: str, r: float, lambda_s: float, p: int | None = None,
                         K: int | None = None) -> float:
    """Closed-form lower bound on lambda_min(Sigma + lambda_s L)."""
    if family == "block":
        if K is None or p is None:
            raise ValueError("block family needs p and K")
        return (1.0 - lambda_s) * (1.0 - r) * K / p + lambda_s * r
    if family == "chain":
        return (1.0 - lambda_s) * (1.0 - 2.0 * r) + lambda_s
    if family == "lattice":
        return (1.0 - lambda_s) * (1.0 - 4.0 * r) + lambda_s
    raise ValueError(f"unknown family {family!r}")


@dataclass
class TheoryReport:
    """Everything the bounds say about one instance, exact values next to
    their closed-form counterparts."""

    rho_exact: float
    rho_bound: float
    kt_inv_bound: float
    min_eig_exact: float
    min_eig_lower: float
    lambda1_floor: float
    mse_bound: float
    prediction_bound: float
    graph_family: str
    inputs_echo: dict
    lambda_1: float
    consistency_proviso: float
    nonsingular_components: list[int] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def rows(self):
        """(quantity, exact, bound, slack) table for printing."""
        out = [
            ("rho", self.rho_exact, self.rho_bound, self.rho_bound - self.rho_exact),
            ("min_eig", self.min_eig_exact, self.min_eig_lower,
             self.min_eig_exact - self.min_eig_lower),
            ("kt_inv", float("nan"), self.kt_inv_bound, float("nan")),
            ("lambda1_floor", float("nan"), self.lambda1_floor, float("nan")),
            ("mse_bound", float("nan"), self.mse_bound, float("nan")),
            ("prediction_bound", float("nan"), self.prediction_bound, float("nan")),
            ("consistency_proviso", float("nan"), self.consistency_proviso, float("nan")),
        ]
        return out


def _echo(inputs: BoundInputs) -> dict:
    return {
        "n": inputs.n, "p": inputs.p, "sigma": inputs.sigma,
        "c_u": inputs.c_u, "c_l": inputs.c_l,
        "lambda_tv": inputs.lambda_tv, "lambda_s": inputs.lambda_s,
        "beta_l0": inputs.beta_l0,
        "gamma_beta_l0": inputs.gamma_beta_l0,
        "gamma_beta_l1": inputs.gamma_beta_l1,
        "l_beta_inf": inputs.l_beta_inf,
        "sigma_hat_l11": inputs.sigma_hat_l11,
        "K": len(inputs.block_sizes),
        "block_sizes": list(inputs.block_sizes),
        "mu": [m for m in inputs.mus],
    }


def theory_report(sigma, sigma_hat, beta_star, n, noise_sd, lambda_tv, lambda_s,
                  lambda_1: float | None = None, family: str = FAMILY_GENERIC,
                  c_u: float | None = None, c_l: float | None = None) -> TheoryReport:
    """Evaluate every bound on one instance.

    With ``family`` set to block/chain/lattice the closed-form family
    lines replace the generic component bound for rho, the curvature
    floor, and the lambda_1 floor. ``lambda_1`` defaults to the floor.
    """
    if not isinstance(sigma_hat, CovarianceEstimate):
        sigma_hat = CovarianceEstimate(np.asarray(sigma_hat))
    inputs = bound_inputs(sigma, sigma_hat, beta_star, n, noise_sd,
                          lambda_tv, lambda_s, c_u=c_u, c_l=c_l)
    graph = build_graph(sigma_hat)
    sys = incidence(graph, lambda_tv)
    decomp = components(graph)
    notes = []

    if family == FAMILY_GENERIC:
        rho_b = rho_bound(decomp, lambda_tv)
        floor = lambda1_floor(inputs)
        min_eig_low = inputs.min_eig_lower
    else:
        K = len(decomp.sizes) if family == "block" else None
        r = _family_r(sigma_hat.matrix, family)
        rho_b = math.sqrt(family_rho_sq_bound(family, inputs.p, r, lambda_tv, K=K))
        min_eig_low = family_min_eig_lower(family, r, lambda_s, p=inputs.p, K=K)
        floor = 48.0 * math.sqrt(
            noise_sd**2 * inputs.c_u * math.log(inputs.p) / n
            * family_rho_sq_bound(family, inputs.p, r, lambda_tv, K=K)
        ) + 8.0 * lambda_s * inputs.l_beta_inf
        notes.append(f"family closed forms used (r={r:g})")

    lam1 = floor if lambda_1 is None else float(lambda_1)
    t1, t2 = inputs.gamma_beta_l0, inputs.beta_l0
    kt_inv = kt_inv_bound(t1, t2, inputs.sigma_hat_l11, lambda_tv) if t1 + t2 else 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mse = mse_bound_general(inputs, lam1)
        pred = prediction_bound(inputs, lam1)
    proviso = (lam1**2 * (t1 + t2) * kt_inv**2 / inputs.min_eig_exact**2
               if inputs.min_eig_exact > 0 else float("inf"))
    nonsing = decomp.nonsingular()
    if nonsing:
        notes.append("components with nonsingular Laplacian (mixed signs): "
                     + ", ".join(map(str, nonsing)))

    return TheoryReport(
        rho_exact=rho_exact(sys),
        rho_bound=rho_b,
        kt_inv_bound=kt_inv,
        min_eig_exact=inputs.min_eig_exact,
        min_eig_lower=min_eig_low,
        lambda1_floor=floor,
        mse_bound=mse,
        prediction_bound=pred,
        graph_family=family,
        inputs_echo=_echo(inputs),
        lambda_1=lam1,
        consistency_proviso=proviso,
        nonsingular_components=nonsing,
        notes=notes,
    )


def _family_r(sigma: np.ndarray, family: str) -> float:
    """Recover the correlation coefficient from a family covariance."""
    off = np.abs(sigma[~np.eye(sigma.shape[0], dtype=bool)])
    nz = off[off > 0]
    if nz.size == 0:
        return 0.0
    if family == "block":
        a = float(sigma[0, 0])
        return float(nz.max()) / a
    return float(nz.max())


def mse_bound_family(scenario: synth.Scenario, lambda_tv: float, lambda_s: float,
                     lambda_1: float | None = None,
                     beta_star: np.ndarray | None = None) -> TheoryReport:
    """Family-specialized report for a synthetic scenario with the
    population covariance used as its own estimate."""
    Sigma = synth.make_covariance(scenario)
    if beta_star is None:
        beta_star, _ = synth.make_beta(scenario)
    return theory_report(
        Sigma.matrix, Sigma, beta_star, scenario.n, scenario.sigma_noise,
        lambda_tv, lambda_s, lambda_1=lambda_1, family=scenario.family,
    )


def is_aligned(sys, beta: np.ndarray, atol: float = 1e-12) -> bool:
    """True when the misalignment ||L b||_inf vanishes, i.e. b is constant
    on every connected component joined by positive-sign edges."""
    return alignment_stats(sys, beta, atol=atol)[2] <= atol


def assumption3_distance(sigma_hat, sigma) -> float:
    if isinstance(sigma_hat, CovarianceEstimate):
        sigma_hat = sigma_hat.matrix
    if isinstance(sigma, CovarianceEstimate):
        sigma = sigma.matrix
    return l11_distance(sigma_hat, sigma)
