"""Graph total variation regression for highly-correlated designs.

Covariance-graph construction, a composite-penalty solver with
optimality certificates, baseline estimators, executable error bounds,
and a seeded simulation harness.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .covariance import (
    AssumptionInputs,
    CovarianceEstimate,
    hard_threshold,
    l11_distance,
    sample_covariance,
    select_threshold_cv,
    sideinfo_covariance,
)
from .graph import (
    BlockDecomposition,
    CovarianceGraph,
    IncidenceSystem,
    augment,
    build_graph,
    components,
    incidence,
    kt_inv_bound,
    min_eig,
    rho_bound,
    rho_exact,
)
from .harness import (
    ExperimentResult,
    bootstrap_median_sd,
    run_experiment,
    stability_study,
    support_correlation,
    tanimoto,
)
from .solver import (
    FitResult,
    GtvConfig,
    cross_validate,
    fit_elastic_net,
    fit_gtv,
    fit_lasso_cd,
    fit_logistic_gtv,
    fit_owl,
    objective,
    owl_prox,
)
from .synth import Scenario, make_beta, make_covariance, sample_data, sample_sideinfo
from .theory import (
    BoundInputs,
    TheoryReport,
    bound_inputs,
    lambda1_floor,
    mse_bound_family,
    mse_bound_general,
    prediction_bound,
    theory_report,
)

__version__ = "0.1.0"
