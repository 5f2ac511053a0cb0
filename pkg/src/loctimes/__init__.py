"""Weighted Brownian local times with small noise.

Deterministic side: the expected weighted local time (characteristic)
of x + eps W integrated against a finite measure, certified upper
bounds on its exponential moments, and the small-noise limit
(t/2) (largest atom)^2 of eps^2 log E e^(local time).

Monte Carlo side: reproducible path simulation with per-path
counter-based streams, kernel local-time estimators, log-exp-moment
estimates with delta-method errors, and experiment drivers that write
byte-stable CSV/JSON reports.
"""

from .bounds import (
    BoundCertificate,
    composite_upper_bound,
    concentration_bound,
    epsilon_threshold,
    holder_combine,
    khasminskii_bound,
    small_noise_limit,
    theta_constant,
)
from .characteristic import (
    CharacteristicQuery,
    characteristic,
    heat_kernel,
    khasminskii_horizon,
    sup_characteristic,
)
from .errors import (
    CapacityError,
    LoctimesError,
    MeasureConfigError,
    QuadratureError,
    ValidityError,
)
from .experiments import (
    AsymptoticsReport,
    CounterexampleReport,
    KhasminskiiReport,
    asymptotic_sweep,
    counterexample_run,
    khasminskii_check,
    single_atom_lambda,
    write_counterexample_csv,
    write_counterexample_json,
    write_khasminskii_csv,
    write_khasminskii_json,
    write_sweep_csv,
    write_sweep_json,
)
from .measure import (
    Atom,
    DensityPiece,
    WeightedMeasure,
    counterexample_measure,
    load_measure,
    measure_from_dict,
    parse_measure_text,
)
from .simulation import (
    LocalTimeEstimate,
    LogExpMoment,
    PathBatch,
    abs_brownian_log_mgf,
    default_bandwidth,
    exact_local_time,
    iter_path_blocks,
    local_time_kernel,
    log_exp_moment,
    log_mean_exp,
    pairwise_sum,
    sample_paths,
    weighted_local_time_samples,
    weighted_local_times,
)

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "DensityPiece",
    "WeightedMeasure",
    "counterexample_measure",
    "load_measure",
    "measure_from_dict",
    "parse_measure_text",
    "CharacteristicQuery",
    "characteristic",
    "heat_kernel",
    "sup_characteristic",
    "khasminskii_horizon",
    "BoundCertificate",
    "theta_constant",
    "epsilon_threshold",
    "concentration_bound",
    "khasminskii_bound",
    "holder_combine",
    "composite_upper_bound",
    "small_noise_limit",
    "PathBatch",
    "LocalTimeEstimate",
    "LogExpMoment",
    "default_bandwidth",
    "sample_paths",
    "iter_path_blocks",
    "local_time_kernel",
    "weighted_local_times",
    "weighted_local_time_samples",
    "exact_local_time",
    "abs_brownian_log_mgf",
    "pairwise_sum",
    "log_mean_exp",
    "log_exp_moment",
    "AsymptoticsReport",
    "KhasminskiiReport",
    "CounterexampleReport",
    "single_atom_lambda",
    "asymptotic_sweep",
    "khasminskii_check",
    "counterexample_run",
    "write_sweep_csv",
    "write_sweep_json",
    "write_khasminskii_csv",
    "write_khasminskii_json",
    "write_counterexample_csv",
    "write_counterexample_json",
    "LoctimesError",
    "MeasureConfigError",
    "ValidityError",
    "QuadratureError",
    "CapacityError",
]
