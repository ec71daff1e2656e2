"""Closed-form linearized optomechanics: susceptibilities, correlators and S_XX.

Every function accepts scalar or array angular frequencies and broadcasts.
Correlators are symmetrized and taken per unit delta function, so vacuum
inputs contribute 1/2 per ordering and the output shot noise is 1.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ConsistencyError, InstabilityError, ParameterError, SingularityError
from .params import OpticalCavity, SystemParams

SINGULAR_FLOOR = 1e-300
SHOT_TOLERANCE = 1e-9
IMAG_TOLERANCE = 1e-9


def _as_freq(omega, positive=False):
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ParameterError("frequencies must be finite")
    if positive and np.any(w <= 0):
        raise ParameterError("spectra are defined for omega > 0 only")
    return w


def cavity_susceptibility(omega, cavity: OpticalCavity):
    """chi_c(omega) = 1 / (kappa/2 - i (Delta + omega))."""
    w = _as_freq(omega)
    return 1.0 / (cavity.kappa / 2 - 1j * (cavity.detuning + w))


def mechanical_susceptibility(omega, mech):
    """chi_m(omega) = 1 / (Gamma/2 - i (omega - omega_m))."""
    w = _as_freq(omega)
    return 1.0 / (mech.gamma / 2 - 1j * (w - mech.omega_m))


def intracavity_rotation(cavity: OpticalCavity) -> float:
    """Quadrature rotation of intracavity fields relative to the input, atan(2 Delta / kappa)."""
    return float(np.arctan(2.0 * cavity.detuning / cavity.kappa))


def loop_denominator(omega, params: SystemParams):
    """Mechanical response denominator dressed by the signal beam.

    N(w) = 1/(chi_m(w) chi_m*(-w)) - 2i w_m g^2 |a|^2 (chi_c(w) - chi_c*(-w)).
    Raises :class:`SingularityError` where ``|N|`` underflows.
    """
    w = _as_freq(omega)
    mech, cav = params.mechanics, params.cavity
    bare = 1.0 / (mechanical_susceptibility(w, mech) * np.conj(mechanical_susceptibility(-w, mech)))
    optical = cavity_susceptibility(w, cav) - np.conj(cavity_susceptibility(-w, cav))
    n = bare - 2j * mech.omega_m * params.g**2 * cav.nbar * optical
    bad = np.abs(n) < SINGULAR_FLOOR
    if np.any(bad):
        raise SingularityError(np.atleast_1d(w)[np.atleast_1d(bad)][0] if np.ndim(w) else float(w))
    return n


def displacement_correlator(omega, params: SystemParams):
    """Symmetrized <z(-w) z(w)>: thermal plus radiation-pressure shot-noise drive over |N|^2."""
    w = _as_freq(omega, positive=True)
    mech, cav = params.mechanics, params.cavity
    n_half = mech.n_th + 0.5
    thermal = mech.gamma * n_half * (
        1.0 / np.abs(mechanical_susceptibility(w, mech)) ** 2
        + 1.0 / np.abs(mechanical_susceptibility(-w, mech)) ** 2
    )
    rpsn = (
        2.0 * mech.omega_m**2 * params.g**2 * cav.kappa * cav.nbar
        * (np.abs(cavity_susceptibility(w, cav)) ** 2 + np.abs(cavity_susceptibility(-w, cav)) ** 2)
    )
    return (thermal + rpsn) / np.abs(loop_denominator(w, params)) ** 2


def cross_correlators(omega, params: SystemParams):
    """Return (<z(-w) zeta(w)>_s, <zeta(-w) z(w)>_s).

    The hermitian-conjugate partners follow by conjugation:
    <z(-w) zeta^+(w)>_s = conj(<zeta(-w) z(w)>_s) and
    <zeta^+(-w) z(w)>_s = conj(<z(-w) zeta(w)>_s).
    """
    w = _as_freq(omega, positive=True)
    cav, mech = params.cavity, params.mechanics
    pref = -mech.omega_m * cav.amplitude * params.g * np.sqrt(cav.kappa_out)
    z_zeta = pref * cavity_susceptibility(w, cav) / loop_denominator(-w, params)
    zeta_z = pref * cavity_susceptibility(-w, cav) / loop_denominator(w, params)
    return z_zeta, zeta_z


def shot_term(omega, params: SystemParams, phi=0.0):
    """A_zeta_zeta assembled from the explicit output-noise coefficients.

    The result is identically 1 when the port fractions are consistent; it is
    computed rather than assumed so that a broken split is caught. ``phi`` is
    accepted for signature symmetry; the shot term does not depend on it.
    """
    w = _as_freq(omega)
    cav = params.cavity
    k_l, k_r, k_i = cav.kappa_in, cav.kappa_out, cav.kappa_int

    def ordered(x):
        chi = cavity_susceptibility(x, cav)
        mag2 = np.abs(chi) ** 2
        return mag2 * k_l * k_r + mag2 * k_i * k_r + np.abs(chi * k_r - 1.0) ** 2

    a = 0.5 * (ordered(w) + ordered(-w)) + 0.0 * np.asarray(phi, dtype=float)
    dev = np.max(np.abs(a - 1.0))
    if dev > SHOT_TOLERANCE:
        raise ConsistencyError(f"shot term deviates from unity by {dev:.3e}")
    return a


def drift_matrix(params: SystemParams):
    """Time-domain drift matrix for (d, d^+, c, c^+)."""
    cav, mech = params.cavity, params.mechanics
    ga = params.g * cav.amplitude
    k2, d = cav.kappa / 2, cav.detuning
    g2, wm = mech.gamma / 2, mech.omega_m
    return np.array(
        [
            [1j * d - k2, 0, -1j * ga, -1j * ga],
            [0, -1j * d - k2, 1j * ga, 1j * ga],
            [-1j * ga, -1j * ga, -1j * wm - g2, 0],
            [1j * ga, 1j * ga, 0, 1j * wm - g2],
        ],
        dtype=complex,
    )


@lru_cache(maxsize=4096)
def stability_margin(params: SystemParams) -> float:
    """Largest real part of the drift eigenvalues (negative means stable), in rad/s."""
    return float(np.max(np.linalg.eigvals(drift_matrix(params)).real))


def require_stable(params: SystemParams):
    margin = stability_margin(params)
    if margin >= 0:
        raise InstabilityError(
            f"linearized dynamics unstable (max eigenvalue real part {margin:.4g} rad/s); "
            "no steady-state spectrum exists"
        )


def output_quadrature_spectrum(omega, phi, params: SystemParams):
    """Symmetrized output quadrature spectrum S_XX(omega, phi) in shot-noise units.

    ``omega`` and ``phi`` broadcast against each other, e.g. ``phi[:, None]``
    with a 1-D ``omega`` yields a (phi, omega) map.
    """
    w = _as_freq(omega, positive=True)
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise ParameterError("phi must be finite")
    require_stable(params)
    cav, g = params.cavity, params.g
    a = cav.amplitude
    k_r = cav.kappa_out

    chi_p = cavity_susceptibility(w, cav)
    chi_m = cavity_susceptibility(-w, cav)
    rot = np.exp(2j * phi)

    a_zz = (
        k_r * a**2 * g**2
        * (np.abs(chi_p) ** 2 + np.abs(chi_m) ** 2 - chi_p * chi_m * rot - np.conj(chi_p * chi_m) / rot)
        * displacement_correlator(w, params)
    )

    z_zeta, zeta_z = cross_correlators(w, params)
    z_zetad, zetad_z = np.conj(zeta_z), np.conj(z_zeta)
    a_cross = 1j * np.sqrt(k_r) * a * g * (
        (-chi_m * rot + np.conj(chi_p)) * z_zeta
        + (-chi_p * rot + np.conj(chi_m)) * zeta_z
        + (np.conj(chi_p) / rot - chi_m) * z_zetad
        + (np.conj(chi_m) / rot - chi_p) * zetad_z
    )

    total = shot_term(w, params) + a_zz + a_cross
    resid = np.abs(total.imag)
    if np.any(resid > IMAG_TOLERANCE * np.maximum(np.abs(total.real), 1e-300)):
        raise ConsistencyError(f"imaginary residue {resid.max():.3e} in assembled spectrum")
    return total.real


def signal_damping(params: SystemParams, omega=None):
    """Optomechanical damping rate added by the signal beam, evaluated at ``omega`` (default omega_m)."""
    cav = params.cavity
    w = params.mechanics.omega_m if omega is None else omega
    diff = cavity_susceptibility(w, cav) - np.conj(cavity_susceptibility(-w, cav))
    return 2.0 * params.g**2 * cav.nbar * diff.real


def signal_spring_shift(params: SystemParams, omega=None):
    """Optical-spring frequency shift from the signal beam at ``omega`` (default omega_m)."""
    cav = params.cavity
    w = params.mechanics.omega_m if omega is None else omega
    diff = cavity_susceptibility(w, cav) - np.conj(cavity_susceptibility(-w, cav))
    return params.g**2 * cav.nbar * diff.imag


def dressed_resonance(params: SystemParams, span=None) -> float:
    """Frequency maximizing the closed-loop mechanical response 1/|N(w)|^2."""
    from scipy.optimize import minimize_scalar

    mech = params.mechanics
    shift = float(signal_spring_shift(params))
    width = abs(float(signal_damping(params))) + mech.gamma
    center = mech.omega_m + shift
    half = span if span is not None else 10.0 * width + abs(shift)
    lo, hi = max(center - half, 1e-9 * mech.omega_m), center + half
    grid = np.linspace(lo, hi, 2001)
    resp = -np.log(np.abs(loop_denominator(grid, params)))
    i = int(np.argmax(resp))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(
        lambda x: float(np.log(np.abs(loop_denominator(x, params)))),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-9 * mech.omega_m},
    )
    return float(res.x)
