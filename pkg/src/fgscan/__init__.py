"""Fine-Gray competing-risks regression with linear-time risk-set scans."""

__version__ = "0.1.0"

from .bootstrap import BootstrapControl, CovarianceEstimate, bootstrap_covariance, wald_intervals
from .cif import (BaselineHazard, CifEstimate, breslow_baseline, cif_band,
                  cif_pointwise_interval, predict_cif)
from .dataset import Dataset, Subject, canonicalize, from_arrays, load_csv, write_csv
from .errors import (BootstrapError, CsvFormatError, DataError, DegenerateColumnError,
                     FgscanError, NoPrimaryEventsError, NumericalError, ScanOverflowError,
                     ZeroDenominatorError)
from .fit import FitResult, fit_unpenalized, summarize
from .ipcw import CensoringSurvival, WeightSet, censoring_km, precompute_weights
from .penalized import PenalizedPath, PenaltySpec, fit_path, lambda_max, log_grid
from .scan import NaiveEngine, ScanEngine, ScanOutput, brute_force, scan_all
from .sim import SimConfig, scaling_config, simulate, simulate_with_report, toy_config

__all__ = [
    "__version__",
    "BaselineHazard", "BootstrapControl", "BootstrapError", "CensoringSurvival", "CifEstimate",
    "CovarianceEstimate", "CsvFormatError", "DataError", "Dataset", "DegenerateColumnError",
    "FgscanError", "FitResult", "NaiveEngine", "NoPrimaryEventsError", "NumericalError",
    "PenalizedPath", "PenaltySpec", "ScanEngine", "ScanOutput", "ScanOverflowError", "SimConfig",
    "Subject", "WeightSet", "ZeroDenominatorError", "bootstrap_covariance", "breslow_baseline",
    "brute_force", "canonicalize", "censoring_km", "cif_band", "cif_pointwise_interval",
    "fit_path", "fit_unpenalized", "from_arrays", "lambda_max", "load_csv", "log_grid",
    "precompute_weights", "predict_cif", "scaling_config", "scan_all", "simulate",
    "simulate_with_report", "summarize", "toy_config", "wald_intervals", "write_csv",
]
