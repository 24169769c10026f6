"""Steady-state EPR entanglement and force sensing for a cascaded hybrid system.

A negative-effective-mass spin oscillator and a positive-mass mechanical
oscillator couple in sequence to one unidirectional light field.  This package
computes the unconditional and measurement-conditioned Gaussian steady states,
optimizes the EPR entanglement over the coupling parameters, and evaluates the
quantum-noise-limited force sensitivity of the hybrid sensor.
"""

from .model import (
    DerivedRates,
    HybridParams,
    OscillatorParams,
    UnstableDynamicsError,
    decoherence_and_cooperativity,
    derived_rates,
    diffusion_matrix,
    drift_matrix,
    effective_linewidth,
    epr_weight,
    hybrid_from_cooperativities,
    sideband_split,
    unidirectional_rate,
)
from .unconditional import (
    CovarianceState,
    covariance_analytic,
    covariance_lyapunov,
    covariance_quadrature,
    epr_variance,
    epr_variance_min_g,
)
from .conditional import (
    conditional_analytic_qnd,
    riccati_rhs_general,
    riccati_rhs_qnd,
    riccati_steady_state,
)
from .optimize import (
    OptimizationContext,
    OptimizationResult,
    asymptotic_references,
    heatmap_cs_cm,
    objective,
    optimize_point,
    sweep_cs,
)
from .sensing import (
    NoiseSpectrum,
    SensingParams,
    enhancement_ratio,
    matched_filter_sensitivity,
    noise_spectrum_hybrid,
    noise_spectrum_mech,
    sql_benchmark,
    susceptibility,
)
from .physmap import (
    CavityParams,
    cascade_phase_choice,
    sideband_rates_from_cavity,
    spring_shift_fixed_point,
)

__version__ = "0.1.0"
