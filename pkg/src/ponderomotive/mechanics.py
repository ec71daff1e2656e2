"""Damping-beam dressing of the mechanical mode and the headline figures of merit.

Computed mode uses weak-coupling sideband-cooling rates for a damping beam
sharing the signal mode's kappa:

    A_-  = g^2 n_d kappa / ((kappa/2)^2 + (Delta_d + w_m)^2)
    A_+  = g^2 n_d kappa / ((kappa/2)^2 + (Delta_d - w_m)^2)
    Gamma_opt = A_- - A_+,   n_ba = A_+ / Gamma_opt

so that red detuning (Delta_d < 0) damps and cools.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import InstabilityError, ParameterError
from .params import MechanicalMode, OpticalCavity, SystemParams, occupation_temperature


class DampingMode(str, enum.Enum):
    DIRECT = "direct"
    COMPUTED = "computed"


@dataclass(frozen=True)
class DampingDrive:
    """Auxiliary damping beam.

    In ``DIRECT`` mode the effective values are supplied by the user through
    ``omega_m_eff``, ``gamma_eff`` and ``n_eff``; ``detuning_d``/``nbar_d`` are
    ignored. In ``COMPUTED`` mode they are derived from the drive.
    """

    mode: DampingMode = DampingMode.DIRECT
    detuning_d: float = 0.0
    nbar_d: float = 0.0
    omega_m_eff: float | None = None
    gamma_eff: float | None = None
    n_eff: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "mode", DampingMode(self.mode))
        if not (math.isfinite(self.detuning_d) and math.isfinite(self.nbar_d)):
            raise ParameterError("damping drive parameters must be finite")
        if self.nbar_d < 0:
            raise ParameterError(f"nbar_d must be >= 0, got {self.nbar_d}")
        if self.mode is DampingMode.DIRECT:
            missing = [n for n in ("omega_m_eff", "gamma_eff", "n_eff") if getattr(self, n) is None]
            if missing:
                raise ParameterError(f"direct damping mode requires {', '.join(missing)}")


@dataclass(frozen=True)
class EffectiveMechanics:
    omega_m_eff: float
    gamma_eff: float
    n_eff: float

    @property
    def t_eff(self):
        return occupation_temperature(self.omega_m_eff, self.n_eff)

    def as_mode(self, mass) -> MechanicalMode:
        return MechanicalMode(self.omega_m_eff, self.gamma_eff, mass, self.n_eff)


def sideband_rates(mech: MechanicalMode, cavity: OpticalCavity, g, detuning_d, nbar_d):
    """Return (A_minus, A_plus) scattering rates for the damping beam."""
    half = cavity.kappa / 2
    scale = g**2 * nbar_d * cavity.kappa
    a_minus = scale / (half**2 + (detuning_d + mech.omega_m) ** 2)
    a_plus = scale / (half**2 + (detuning_d - mech.omega_m) ** 2)
    return a_minus, a_plus


def effective_parameters(mech: MechanicalMode, cavity: OpticalCavity, drive: DampingDrive, g=0.0):
    """Effective (damping-beam dressed) frequency, linewidth and occupation.

    ``g`` is the single-photon coupling seen by the damping beam; it is only
    used in computed mode.
    """
    if drive.mode is DampingMode.DIRECT:
        if drive.gamma_eff <= 0 or drive.omega_m_eff <= 0 or drive.n_eff < 0:
            raise ParameterError("direct effective values must satisfy omega, gamma > 0 and n >= 0")
        return EffectiveMechanics(drive.omega_m_eff, drive.gamma_eff, drive.n_eff)

    if drive.nbar_d == 0:
        return EffectiveMechanics(mech.omega_m, mech.gamma, mech.n_th)
    a_minus, a_plus = sideband_rates(mech, cavity, g, drive.detuning_d, drive.nbar_d)
    gamma_opt = a_minus - a_plus
    gamma_eff = mech.gamma + gamma_opt
    if gamma_eff <= 0:
        raise InstabilityError(
            f"damping beam anti-damps the mechanics: Gamma_eff = {gamma_eff:.4g} rad/s"
        )
    half = cavity.kappa / 2
    d, wm = drive.detuning_d, mech.omega_m
    spring = g**2 * drive.nbar_d * (
        (d - wm) / (half**2 + (d - wm) ** 2) + (d + wm) / (half**2 + (d + wm) ** 2)
    )
    # Gamma_opt * n_ba == A_plus, written without dividing by Gamma_opt
    n_eff = (mech.gamma * mech.n_th + a_plus) / gamma_eff
    return EffectiveMechanics(wm + spring, gamma_eff, n_eff)


def backaction_limit(mech: MechanicalMode, cavity: OpticalCavity, detuning_d):
    """Occupation floor n_ba reached as the damping-beam power grows."""
    half = cavity.kappa / 2
    denom = -4.0 * detuning_d * mech.omega_m
    if denom <= 0:
        raise ParameterError("back-action cooling limit needs red detuning (detuning_d < 0)")
    return (half**2 + (detuning_d + mech.omega_m) ** 2) / denom


def cooperativity(params: SystemParams) -> float:
    """C = 4 nbar g^2 / (kappa Gamma)."""
    cav = params.cavity
    return 4.0 * cav.nbar * params.g**2 / (cav.kappa * params.mechanics.gamma)


def rpsn_thermal_ratio(params: SystemParams, n_th=None) -> float:
    """Ratio of radiation-pressure shot noise to thermal force drive near zero detuning.

    R = C / n_th / (1 + (2 w_m / kappa)^2). ``n_th`` defaults to the
    occupation stored on ``params.mechanics``.
    """
    n = params.mechanics.n_th if n_th is None else n_th
    if not n > 0:
        raise ParameterError(f"R is undefined for n_th = {n}")
    sideband = 1.0 + (2.0 * params.mechanics.omega_m / params.cavity.kappa) ** 2
    return cooperativity(params) / n / sideband


def occupation_for_ratio(params: SystemParams, ratio) -> float:
    """Thermal occupation that yields the requested R with the other parameters fixed."""
    if ratio <= 0:
        raise ParameterError(f"ratio must be > 0, got {ratio}")
    sideband = 1.0 + (2.0 * params.mechanics.omega_m / params.cavity.kappa) ** 2
    return cooperativity(params) / ratio / sideband

