"""Simulation and verification toolkit for a dissipative collapse model.

The model adds a mass-amplified, dissipative white-noise coupling to the
Schroedinger equation.  Individual trajectories localize toward a universal
Gaussian of fixed width while the ensemble obeys a translation-covariant
master equation with closed-form Green machinery; the library implements
both levels plus the cross-validation harness that pins one against the
other.

Module map:
    model         parameters, mass scaling, derived stationary constants
    gaussian      closed-form Gaussian trajectory dynamics
    grid          split-step spectral SDE integrator
    master        characteristic-function / Green-function ensemble results
    localization  the contractive observable and its drift law
    ensemble      batched reproducible Monte Carlo runs
    cli           command-line entry points
"""

from .constants import BOLTZMANN, HBAR, NUCLEON_MASS, FundamentalConstants
from .errors import InstabilityError, NormLossError, ResolutionError
from .model import (DerivedConstants, ModelParams, UnitSystem,
                    center_of_mass_params, derive_constants, scale_parameters,
                    uncertainty_product)
from .gaussian import (GaussianState, SpreadTriple, a_closed_form,
                       gaussian_energy, phase_constants, sigma_q_of_t,
                       spreads, stationary_covariance)
from .grid import (Grid, GridState, MomentRecord, NoiseStream,
                   build_gaussian, build_superposition, evolve_trajectory,
                   linear_step, nonlinear_step, observables)
from .master import (CharCoefficients, coeff_flow, evolve_characteristic,
                     green_factors, position_density)
from .localization import (collapse_rate_bound, drift_prediction, sigma_O_sq,
                           stationarity_residuals)
from .ensemble import (EnsembleSummary, ExperimentConfig, compare_to_master,
                       run_ensemble)

__version__ = "0.1.0"

__all__ = [
    "BOLTZMANN", "HBAR", "NUCLEON_MASS", "FundamentalConstants",
    "InstabilityError", "NormLossError", "ResolutionError",
    "DerivedConstants", "ModelParams", "UnitSystem",
    "center_of_mass_params", "derive_constants", "scale_parameters",
    "uncertainty_product",
    "GaussianState", "SpreadTriple", "a_closed_form", "gaussian_energy",
    "phase_constants", "sigma_q_of_t", "spreads", "stationary_covariance",
    "Grid", "GridState", "MomentRecord", "NoiseStream", "build_gaussian",
    "build_superposition", "evolve_trajectory", "linear_step",
    "nonlinear_step", "observables",
    "CharCoefficients", "coeff_flow", "evolve_characteristic",
    "green_factors", "position_density",
    "collapse_rate_bound", "drift_prediction", "sigma_O_sq",
    "stationarity_residuals",
    "EnsembleSummary", "ExperimentConfig", "compare_to_master",
    "run_ensemble",
    "__version__",
]
