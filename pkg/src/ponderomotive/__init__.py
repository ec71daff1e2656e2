"""Linearized optomechanical squeezed-light model.

Frequencies are angular (rad/s) throughout the library; the CLI and config
files use Hz and degrees.
"""
from .analysis import (
    DetuningFit,
    LineFit,
    LorentzianFit,
    SqueezingReport,
    displacement_spectrum,
    fit_detuning,
    fit_lorentzian,
    fit_shot_noise_slope,
    minimum_uncertainty_product,
    optical_spring_track,
    quadrature_extrema,
    spectrum_map,
    squeezing_minimum,
    thermal_floor_curves,
    to_db,
    uncertainty_product,
)
from .classical import ClassicalNoise, classical_transfer_spectrum, total_detected_spectrum
from .detection import (
    DetectionChain,
    Scheme,
    apply_loss,
    compose_efficiency,
    detected_spectrum,
    direct_detection_spectrum,
    homodyne_spectrum,
    mix_local_oscillator,
)
from .errors import ConsistencyError, FitError, InstabilityError, ParameterError, SingularityError
from .mechanics import (
    DampingDrive,
    DampingMode,
    EffectiveMechanics,
    cooperativity,
    effective_parameters,
    rpsn_thermal_ratio,
)
from .model import (
    cavity_susceptibility,
    cross_correlators,
    displacement_correlator,
    dressed_resonance,
    loop_denominator,
    mechanical_susceptibility,
    output_quadrature_spectrum,
    shot_term,
)
from .oracle import assemble, oracle_spectrum
from .params import Coupling, MechanicalMode, OpticalCavity, QuadratureSpectrum, SystemParams

__version__ = "0.1.0"
