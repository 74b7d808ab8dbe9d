"""Network reconstruction for additive ODE systems by integrated-basis group lasso.

The pipeline smooths each observed series with a local polynomial
estimator, integrates basis functions of the smoothed trajectories, and
regresses the observations on those integrals with a group lasso penalty per
candidate regulator.  Simulation, a derivative-based baseline and recovery
evaluation are included for benchmarking.
"""

__version__ = "0.1.0"

from .basis import BasisSpec, IntegratedDesign, build_basis_design, build_integrated_design
from .dynamics import (
    AdditiveSystem,
    LinearOscillatorPairs,
    LotkaVolterraPairs,
    TimeSeriesDataset,
    appendix_c_system,
    euler_integrate,
    generate_multi_experiment,
    regulatory_effect,
    sample_observations,
)
from .errors import GradeError
from .glasso import GroupLassoProblem, PenalizedDesign, compute_lambda_max, fit_path, fit_single, kkt_certificate
from .network import (
    GradeConfig,
    NetworkEstimate,
    RecoveryReport,
    derivative_baseline_fit,
    evaluate_recovery,
    grade_fit,
    roc_auc,
    select_lambda_for_edge_count,
)
from .smoother import LocalPolyConfig, local_poly_fit, smooth_dataset

__all__ = [
    "AdditiveSystem", "BasisSpec", "GradeConfig", "GradeError", "GroupLassoProblem",
    "IntegratedDesign", "LinearOscillatorPairs", "LocalPolyConfig", "LotkaVolterraPairs",
    "NetworkEstimate", "PenalizedDesign", "RecoveryReport", "TimeSeriesDataset",
    "appendix_c_system", "build_basis_design", "build_integrated_design", "compute_lambda_max",
    "derivative_baseline_fit", "euler_integrate", "evaluate_recovery", "fit_path", "fit_single",
    "generate_multi_experiment", "grade_fit", "kkt_certificate", "local_poly_fit",
    "regulatory_effect", "roc_auc", "sample_observations", "select_lambda_for_edge_count",
    "smooth_dataset",
]
