"""Graph-Laplacian spectral regression on point clouds from unknown submanifolds."""

from .bayes import (
    BasisProvider,
    CustomPsi,
    DeterministicH,
    DyadicH,
    FixedH,
    FixedJ,
    GaussianPsi,
    GeometricJ,
    GridH,
    LaplacePsi,
    PoissonJ,
    PosteriorResult,
    PriorSpec,
    credible_radius,
    inverse_gamma_discretized_h,
    log_evidence_gaussian,
    posterior_gaussian,
    posterior_mh,
    sample_prior,
)
from .estimators import (
    FitReport,
    RateReport,
    RegressionDataset,
    empirical_rate,
    kernel_regress,
    make_dataset,
    pcr_le,
    tune_jh,
)
from .graph import (
    LaplacianOperator,
    RadiusGraph,
    build_graph,
    dirichlet_form,
    inner_nu,
    laplacian,
)
from .manifold import ManifoldSpec, PointCloud, eval_truth, geodesic_dist, sample_cloud
from .spectral import (
    SpectralBasis,
    chi_kernel_regress,
    decompose,
    heat_apply,
    heat_kernel,
    project,
    q_kernel_apply,
    taylor_lift,
)

__version__ = "0.1.0"
