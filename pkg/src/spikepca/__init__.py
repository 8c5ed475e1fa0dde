"""Spiked-model PCA: debiased eigenvalues, eigenvector/score fidelity
estimates, and bias-adjusted out-of-sample PC score prediction."""

from .eigen import SampleEigen, ScoreMatrix, pc_scores, project_new, sample_eigen
from .errors import (
    DegenerateInput,
    DegenerateMatrix,
    DegenerateRegressor,
    DegenerateVariable,
    DimensionError,
    DomainError,
    EmptyInput,
    FormatError,
    NotIdentifiable,
    NumericalError,
    ParseError,
    SpikePcaError,
)
from .matrix_io import (
    DataMatrix,
    Preprocessing,
    apply_preprocessing,
    read_matrix,
    read_model,
    standardize,
    write_matrix,
    write_model,
)
from .model import (
    FittedPcModel,
    JackknifeShrinkage,
    PredictionScores,
    fit,
    jackknife_shrinkage,
    pcr_fit,
    pcr_mse,
    pcr_predict,
    predict,
)
from .simulate import (
    SimConfig,
    SimulationReport,
    empirical_angle,
    empirical_shrinkage,
    gen_intro,
    gen_pcr,
    gen_two_spike,
    run_intro,
    run_simulation,
    run_table3,
    run_table12,
)
from .spiked import (
    MpLaw,
    RescaledSpectrum,
    adjustment_factor,
    debias_eigenvalue,
    detection_threshold,
    eigenvector_angle,
    mp_edges,
    mp_integral,
    rescale_eigenvalues,
    sample_eigenvalue_limit,
    score_angle,
    shrinkage_factor,
    trace_gap,
)

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "Preprocessing",
    "SampleEigen",
    "ScoreMatrix",
    "RescaledSpectrum",
    "MpLaw",
    "FittedPcModel",
    "PredictionScores",
    "JackknifeShrinkage",
    "SimConfig",
    "SimulationReport",
    "read_matrix",
    "write_matrix",
    "standardize",
    "apply_preprocessing",
    "read_model",
    "write_model",
    "sample_eigen",
    "pc_scores",
    "project_new",
    "sample_eigenvalue_limit",
    "debias_eigenvalue",
    "detection_threshold",
    "eigenvector_angle",
    "score_angle",
    "shrinkage_factor",
    "adjustment_factor",
    "rescale_eigenvalues",
    "trace_gap",
    "mp_edges",
    "mp_integral",
    "fit",
    "predict",
    "jackknife_shrinkage",
    "pcr_fit",
    "pcr_predict",
    "pcr_mse",
    "gen_intro",
    "gen_two_spike",
    "gen_pcr",
    "empirical_angle",
    "empirical_shrinkage",
    "run_table12",
    "run_table3",
    "run_intro",
    "run_simulation",
    "SpikePcaError",
    "ParseError",
    "EmptyInput",
    "FormatError",
    "DimensionError",
    "DomainError",
    "DegenerateMatrix",
    "DegenerateVariable",
    "NotIdentifiable",
    "NumericalError",
    "DegenerateRegressor",
    "DegenerateInput",
]
