"""
singularqme: higher-order master equations for qubit dynamics whose
first-order generator is singular, plus information-backflow measures and
generator tomography.
"""

from .ept import EptFunction, OdeSpec, annihilator, expand_cos_power, spin_coefficient_matrix
from .errors import (IllConditionedError, NotFoundError, NumericalFailureError, ResourceError,
                     SingularQMEError, UnsupportedError)
from .generators import (derive_ode, find_singularities, higher_generator, initial_derivatives,
                         integrate_ode, verify_generator_identity, verify_generator_recurrence)
from .models import (CATALOG, CentralSpin, DampedCosine, Identity, JaynesCummings,
                     QuasiPeriodicThreeSpin, ThreeChannel, Transcendental, TwoSpinUnequal,
                     central_spin_joint_evolution, make_model)
from .nonmarkov import (MeasureResult, blp_windowed, find_tau, measure_rate_periodic,
                        measure_rate_rationalized, measure_rate_tolerance, mutual_information,
                        optimal_pair_search, rationalize_period, sigma)
from .qubit import AffineQubitMap, BlochState, choi_min_eigenvalue, trace_distance
from .tomography import TrajectoryBundle, canonical_rates, estimate_generator

__all__ = [
    "EptFunction", "OdeSpec", "annihilator", "expand_cos_power", "spin_coefficient_matrix",
    "IllConditionedError", "NotFoundError", "NumericalFailureError", "ResourceError",
    "SingularQMEError", "UnsupportedError", "derive_ode", "find_singularities",
    "higher_generator", "initial_derivatives", "integrate_ode", "verify_generator_identity",
    "verify_generator_recurrence", "CATALOG", "CentralSpin", "DampedCosine", "Identity",
    "JaynesCummings", "QuasiPeriodicThreeSpin", "ThreeChannel", "Transcendental",
    "TwoSpinUnequal", "central_spin_joint_evolution", "make_model", "MeasureResult",
    "blp_windowed", "find_tau", "measure_rate_periodic", "measure_rate_rationalized",
    "measure_rate_tolerance", "mutual_information", "optimal_pair_search",
    "rationalize_period", "sigma", "AffineQubitMap", "BlochState", "choi_min_eigenvalue",
    "trace_distance", "TrajectoryBundle", "canonical_rates", "estimate_generator",
]

__version__ = "0.1.0"
