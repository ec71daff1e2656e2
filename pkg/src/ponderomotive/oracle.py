"""Brute-force frequency-domain solve of the linearized equations of motion.

This path never calls the closed-form helpers in :mod:`ponderomotive.model`.
The state vector is (d, d^+, c, c^+) at a single Fourier frequency and the
inputs are (xi_L, xi_R, xi_int, xi_L^+, xi_R^+, xi_int^+, eta, eta^+), where
eta is the mechanical bath operator. With the convention
f(w) = int exp(i w t) f(t) dt a time derivative becomes -i w, so each
frequency needs one dense solve of (-i w - A) v = B u.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ParameterError, SingularityError
from .params import SystemParams

N_STATE = 4
N_INPUT = 8
CONDITION_LIMIT = 1e12
IMAG_LIMIT = 1e-10


class OracleConditioningWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class LinearResponseSystem:
    """Linear response at a batch of frequencies.

    ``system`` has shape (n, 4, 4), ``inputs`` (4, 8), ``output`` (4,) and
    ``feedthrough`` (8,) for the quadrature at angle ``phi``.
    """

    omega: np.ndarray
    phi: float
    system: np.ndarray
    inputs: np.ndarray
    output: np.ndarray
    feedthrough: np.ndarray
    condition: np.ndarray

    @property
    def dimension(self):
        return self.system.shape[-1]

    def transfer(self):
        """Row of transfer coefficients from each input to X_phi, shape (n, 8)."""
        rhs = np.broadcast_to(self.inputs, self.system.shape[:-2] + self.inputs.shape)
        try:
            resp = np.linalg.solve(self.system, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularityError(self.omega, f"oracle system singular: {exc}") from None
        return np.einsum("j,njk->nk", self.output, resp) + self.feedthrough


def assemble(omega, params: SystemParams, phi=0.0) -> LinearResponseSystem:
    """Build the linear system at each frequency in ``omega`` (signed, rad/s)."""
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if not np.all(np.isfinite(w)):
        raise ParameterError("frequencies must be finite")
    cav, mech = params.cavity, params.mechanics
    kappa = cav.kappa
    k_l, k_r, k_i = kappa * cav.kappa_in_frac, kappa * cav.kappa_out_frac, kappa * cav.kappa_int_frac
    delta = cav.detuning
    ga = params.coupling.g * np.sqrt(cav.nbar)
    wm, gam = mech.omega_m, mech.gamma

    # H/hbar = wm c^+c - delta d^+d + g a (c + c^+)(d + d^+) in the drive frame
    drift = np.zeros((N_STATE, N_STATE), dtype=complex)
    drift[0, 0] = 1j * delta - kappa / 2
    drift[1, 1] = -1j * delta - kappa / 2
    drift[2, 2] = -1j * wm - gam / 2
    drift[3, 3] = 1j * wm - gam / 2
    drift[0, 2:] = -1j * ga
    drift[1, 2:] = 1j * ga
    drift[2, :2] = -1j * ga
    drift[3, :2] = 1j * ga

    inputs = np.zeros((N_STATE, N_INPUT), dtype=complex)
    inputs[0, 0:3] = np.sqrt([k_l, k_r, k_i])
    inputs[1, 3:6] = np.sqrt([k_l, k_r, k_i])
    inputs[2, 6] = np.sqrt(gam)
    inputs[3, 7] = np.sqrt(gam)

    system = -1j * w[:, None, None] * np.eye(N_STATE) - drift
    condition = np.linalg.cond(system)

    # d_out = sqrt(k_r) d - xi_R, X_phi = d_out e^{i phi} + d_out^+ e^{-i phi}
    e = np.exp(1j * phi)
    output = np.array([np.sqrt(k_r) * e, np.sqrt(k_r) / e, 0, 0], dtype=complex)
    feedthrough = np.zeros(N_INPUT, dtype=complex)
    feedthrough[1] = -e
    feedthrough[4] = -1 / e
    return LinearResponseSystem(w, float(phi), system, inputs, output, feedthrough, condition)


def input_correlations(params: SystemParams):
    """Matrix C[k, l] = <u_k(-w) u_l(w)> per unit delta for the eight inputs."""
    n = params.mechanics.n_th
    corr = np.zeros((N_INPUT, N_INPUT))
    for j in range(3):
        corr[j, j + 3] = 1.0  # <xi(-w) xi^+(w)> = 1, <xi^+ xi> = 0
    corr[6, 7] = n + 1.0
    corr[7, 6] = n
    return corr


def oracle_spectrum(omega, phi, params: SystemParams):
    """Symmetrized output quadrature spectrum from the numerical solve.

    ``omega`` must be positive; ``phi`` is a scalar angle.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(w <= 0):
        raise ParameterError("spectra are defined for omega > 0 only")
    plus = assemble(w, params, phi)
    minus = assemble(-w, params, phi)
    worst = max(plus.condition.max(), minus.condition.max())
    if worst > CONDITION_LIMIT:
        warnings.warn(
            f"oracle system condition number {worst:.3e} exceeds {CONDITION_LIMIT:.0e}",
            OracleConditioningWarning,
            stacklevel=2,
        )
    t_p, t_m = plus.transfer(), minus.transfer()
    corr = input_correlations(params)
    fwd = np.einsum("nk,kl,nl->n", t_m, corr, t_p)  # <X(-w) X(w)>
    bwd = np.einsum("nk,kl,nl->n", t_p, corr, t_m)  # <X(w) X(-w)>
    s = 0.5 * (fwd + bwd)
    if np.any(np.abs(s.imag) > IMAG_LIMIT * np.abs(s.real)):
        raise ConsistencyError(f"oracle spectrum has imaginary residue {np.abs(s.imag).max():.3e}")
    out = s.real
    return out if np.ndim(omega) else out[0]


def oracle_deviation(omega, phis, params: SystemParams, closed_form):
    """Maximum relative deviation between ``closed_form(omega, phi, params)`` and the oracle."""
    worst = 0.0
    for phi in np.atleast_1d(phis):
        ref = oracle_spectrum(omega, phi, params)
        val = closed_form(omega, phi, params)
        worst = max(worst, float(np.max(np.abs(val - ref) / np.abs(ref))))
    return worst
