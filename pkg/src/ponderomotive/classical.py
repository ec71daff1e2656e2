"""Classical laser noise on the input beam and its detected contribution.

The classical field rides on the input-port vacuum xi_L, so it follows the
same cavity filter and radiation-pressure loop, but it has no partner in the
directly reflected output-port vacuum. That missing interference is what
flips the Fano asymmetry relative to the quantum-noise case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detection import DetectionChain, Scheme, detected_from_ideal
from .errors import ParameterError
from .model import (
    _as_freq,
    cavity_susceptibility,
    intracavity_rotation,
    loop_denominator,
    output_quadrature_spectrum,
    require_stable,
)
from .params import SystemParams


@dataclass(frozen=True)
class ClassicalNoise:
    """White classical quadrature noise on the input beam, in shot-noise units.

    Quadratures are referenced to the input carrier, so ``amp_psd`` is
    intensity noise and ``phase_psd`` is phase noise of the laser.
    """

    amp_psd: float = 0.0
    phase_psd: float = 0.0

    def __post_init__(self):
        for name in ("amp_psd", "phase_psd"):
            val = getattr(self, name)
            if not math.isfinite(val) or val < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {val}")

    @property
    def is_quiet(self):
        return self.amp_psd == 0 and self.phase_psd == 0


def input_port_transfer(omega, phi, params: SystemParams):
    """Closed-form coefficients of xi_L(w) and xi_L^+(w) in X_phi(w)."""
    w = _as_freq(omega, positive=True)
    cav, g = params.cavity, params.g
    a = cav.amplitude
    root_l, root_r = np.sqrt(cav.kappa_in), np.sqrt(cav.kappa_out)
    e = np.exp(1j * np.asarray(phi, dtype=float))
    chi_p = cavity_susceptibility(w, cav)
    chi_m_conj = np.conj(cavity_susceptibility(-w, cav))
    # X_phi picks up K(w) z(w) from the motion; z is driven through the loop
    readout = 1j * g * a * root_r * (-chi_p * e + chi_m_conj / e)
    loop = 2.0 * params.mechanics.omega_m * g * a / loop_denominator(w, params)
    t_in = root_l * chi_p * (e * root_r - readout * loop)
    t_in_dag = root_l * chi_m_conj * (root_r / e - readout * loop)
    return t_in, t_in_dag


def classical_transfer_spectrum(omega, phi, params: SystemParams, noise: ClassicalNoise):
    """Additive classical contribution to S_XX(omega, phi) before detection loss."""
    w = _as_freq(omega, positive=True)
    if noise.is_quiet:
        return np.zeros(np.broadcast_shapes(w.shape, np.shape(phi)))
    require_stable(params)
    t_in, t_in_dag = input_port_transfer(w, phi, params)
    carrier = np.exp(-1j * intracavity_rotation(params.cavity))
    amp = 0.5 * (t_in * carrier + t_in_dag / carrier)
    phase = 0.5j * (t_in * carrier - t_in_dag / carrier)
    return noise.amp_psd * np.abs(amp) ** 2 + noise.phase_psd * np.abs(phase) ** 2


def total_detected_spectrum(omega, params: SystemParams, chain: DetectionChain, noise: ClassicalNoise, phi=None):
    """Quantum plus classical spectrum passed through the detection chain."""
    if chain.scheme is Scheme.DIRECT:
        angle = 0.0
    else:
        angle = (chain.phi if phi is None else np.asarray(phi, dtype=float)) + chain.phase_offset
    s = output_quadrature_spectrum(omega, angle, params)
    s = s + classical_transfer_spectrum(omega, angle, params, noise)
    out = detected_from_ideal(s, chain)
    if chain.scheme is Scheme.DIRECT and phi is not None:
        out = np.broadcast_to(out, np.broadcast_shapes(out.shape, np.shape(phi))).copy()
    return out
