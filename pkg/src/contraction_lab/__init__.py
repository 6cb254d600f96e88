"""Numerical laboratory for contraction rates of degenerate, preconditioned Langevin diffusions.

The package works on Galerkin truncations of ``dX = -X dt + b(X) dt + sqrt(2) dW``
with ``W`` a ``G``-Wiener process and provides

* :mod:`.spectral` -- eigenbasis, low/high splitting and the weighted norm,
* :mod:`.drifts` -- drift models, presets and sampling-based assumption checks,
* :mod:`.distance` -- concave distance profiles, rates and derived bounds,
* :mod:`.lyapunov` -- the quadratic Lyapunov function and its drift constants,
* :mod:`.coupling` -- synchronous, switching and reflection couplings,
* :mod:`.experiments` -- decay-rate estimation and dimension sweeps.
"""
from .coupling import (
    CouplingConfig,
    CouplingState,
    rc_mixing,
    reflection_direction,
    reflection_operator,
    simulate_ensemble,
    simulate_pair,
    simulate_reflection_fd,
    step_reflection_fd,
    step_switching,
    step_synchronous,
)
from .distance import (
    DistanceProfile,
    QuadratureError,
    RateReport,
    build_profile_thm2,
    build_profile_thm3,
    corollary_bounds,
    eval_distance,
    rate_synchronous,
    rate_thm2,
    rate_thm3,
)
from .drifts import (
    DriftModel,
    PathPotential,
    PotentialSpec,
    check_assumption1,
    check_large_distance,
    compact_bump,
    gaussian_bump,
    preconditioned_gradient_drift,
    sector_contraction_check,
    tps_drift,
    zero_perturbation,
)
from .experiments import (
    DecayEstimate,
    build_setup,
    empirical_w1_marginal,
    estimate_decay,
    run_contraction_experiment,
    run_dimension_sweep,
)
from .lyapunov import LyapunovSpec, derived_quantities, fit_drift_constants, generator_V, mc_generator_check
from .spectral import (
    LipschitzConstants,
    SpectralSpace,
    WeightedGeometry,
    compute_geometry,
    eigenvalue_family,
    project,
    split_index_for,
    weighted_norm,
)

__version__ = "0.1.0"
