"""Mesoscopic linear eigenvalue statistics of Wigner matrices with a tunable
symmetry parameter: samplers, limiting covariance kernels, cumulant and
contour calculus, resolvent diagnostics and a Monte Carlo harness."""

from .contour import (AlmostAnalyticExtension, StripDomain, cauchy_reconstruct,
                      extension_eval)
from .cumulants import (CumulantTable, MomentTable, cumulants_to_moments,
                        entry_cumulant_predictions, expansion_check,
                        moments_to_cumulants)
from .ensembles import (EnsembleSpec, HermitianMatrix, dbm_matrix,
                        entry_moment_report, sample_gaussian_ensemble,
                        sample_wigner)
from .harness import (ExperimentConfig, SampleAccumulator, StatReport, merge,
                      run_clt, run_dbm_sweep, run_diagnostics,
                      run_transition_sweep, wick_check)
from .resolvent import (DiagnosticsReport, ResolventPoint, local_law_residuals,
                        power_trace_bound_check, product_trace_vs_prediction,
                        resolvent_entries, resolvent_trace)
from .spectral import MesoWindow, compensator, semicircle_density, stieltjes_m
from .teststats import (SpectrumSample, TestFunction, builtin, eigenvalues,
                        linear_statistic)
from .variance_kernel import (CovarianceResult, KernelParams, chi, mu_star,
                              v_first_term, v_mu, v_mu_alt, v_mu_fourier,
                              v_tilde)

__all__ = [
    "AlmostAnalyticExtension",
    "StripDomain",
    "cauchy_reconstruct",
    "extension_eval",
    "CumulantTable",
    "MomentTable",
    "cumulants_to_moments",
    "entry_cumulant_predictions",
    "expansion_check",
    "moments_to_cumulants",
    "EnsembleSpec",
    "HermitianMatrix",
    "dbm_matrix",
    "entry_moment_report",
    "sample_gaussian_ensemble",
    "sample_wigner",
    "ExperimentConfig",
    "SampleAccumulator",
    "StatReport",
    "merge",
    "run_clt",
    "run_dbm_sweep",
    "run_diagnostics",
    "run_transition_sweep",
    "wick_check",
    "DiagnosticsReport",
    "ResolventPoint",
    "local_law_residuals",
    "power_trace_bound_check",
    "product_trace_vs_prediction",
    "resolvent_entries",
    "resolvent_trace",
    "MesoWindow",
    "compensator",
    "semicircle_density",
    "stieltjes_m",
    "SpectrumSample",
    "TestFunction",
    "builtin",
    "eigenvalues",
    "linear_statistic",
    "CovarianceResult",
    "KernelParams",
    "chi",
    "mu_star",
    "v_first_term",
    "v_mu",
    "v_mu_alt",
    "v_mu_fourier",
    "v_tilde",
]

__version__ = "0.1.0"
