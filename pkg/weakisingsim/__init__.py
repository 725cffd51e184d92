"""
weakisingsim - Weak measurements on the critical transverse-field Ising chain

Free-fermion (Majorana covariance) simulation of weak sigma-x measurements,
closed-form predictions for the effective central charge, and a dense
exact-diagonalization cross-check for short chains.

Example usage:
    from weakisingsim import build_ground_state, MeasurementScheme, ensemble_entropy

    ground = build_ground_state(128)
    profile = ensemble_entropy(ground, 0.5, MeasurementScheme.born(), n_traj=20, master_seed=7)
"""

__version__ = "0.1.0"
__license__ = "MIT"

# Gaussian engine
from weakisingsim.gaussian import (
    CovarianceState,
    SpinInterval,
    build_ground_state,
    entanglement_entropy,
    half_chain_entropy,
    zz_correlator_abs,
)

# Measurements
from weakisingsim.measurement import (
    MeasurementRecord,
    MeasurementScheme,
    apply_weak_x,
    born_probability_x,
    run_trajectory,
)

# Statistics and fits
from weakisingsim.stats import (
    EntropyProfile,
    FitResult,
    ensemble_entropy,
    fit_c_eff,
    fit_power_law,
)

# Closed-form predictions
from weakisingsim.analytics import c_eff_uniform, curve, predicted_c_eff

# Errors
from weakisingsim.errors import (
    InvalidArgumentError,
    MeasurementInconsistencyError,
    NumericalFailureError,
    OutOfValidityError,
    WeakIsingError,
)

__all__ = [
    # Gaussian engine
    "CovarianceState",
    "SpinInterval",
    "build_ground_state",
    "entanglement_entropy",
    "half_chain_entropy",
    "zz_correlator_abs",
    # Measurements
    "MeasurementRecord",
    "MeasurementScheme",
    "apply_weak_x",
    "born_probability_x",
    "run_trajectory",
    # Statistics
    "EntropyProfile",
    "FitResult",
    "ensemble_entropy",
    "fit_c_eff",
    "fit_power_law",
    # Analytics
    "c_eff_uniform",
    "curve",
    "predicted_c_eff",
    # Errors
    "WeakIsingError",
    "InvalidArgumentError",
    "OutOfValidityError",
    "MeasurementInconsistencyError",
    "NumericalFailureError",
    # Metadata
    "__version__",
]
