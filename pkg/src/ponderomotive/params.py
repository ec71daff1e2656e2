"""Parameter containers shared by every module.

All rates are angular (rad/s). Conversion from ordinary frequency happens in
:mod:`ponderomotive.config`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J/K
QE = 1.602176634e-19  # C

TWO_PI = 2.0 * math.pi


def _finite(name, value):
    if not np.all(np.isfinite(value)):
        raise ParameterError(f"{name} must be finite, got {value!r}")


def bose_occupation(omega, temperature):
    """Mean Bose-Einstein occupation of a mode at ``omega`` (rad/s) and ``temperature`` (K)."""
    _finite("temperature", temperature)
    if temperature < 0:
        raise ParameterError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega / (KB * temperature))


def occupation_temperature(omega, n):
    """Inverse of :func:`bose_occupation`."""
    if n < 0:
        raise ParameterError(f"occupation must be >= 0, got {n}")
    if n == 0:
        return 0.0
    return HBAR * omega / (KB * math.log1p(1.0 / n))


@dataclass(frozen=True)
class OpticalCavity:
    """Three-port cavity with effective detuning and intracavity photon number.

    The fractions give kappa_L, kappa_R and kappa_int as parts of ``kappa``.
    """

    kappa: float
    kappa_in_frac: float
    kappa_out_frac: float
    kappa_int_frac: float
    detuning: float = 0.0
    nbar: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "kappa_in_frac", "kappa_out_frac", "kappa_int_frac", "detuning", "nbar"):
            _finite(name, getattr(self, name))
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be > 0, got {self.kappa}")
        fracs = (self.kappa_in_frac, self.kappa_out_frac, self.kappa_int_frac)
        if any(f < 0 or f > 1 for f in fracs):
            raise ParameterError(f"kappa fractions must lie in [0, 1], got {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise ParameterError(f"kappa fractions must sum to 1, got {sum(fracs)!r}")
        if self.nbar < 0:
            raise ParameterError(f"nbar must be >= 0, got {self.nbar}")

    @property
    def kappa_in(self):
        return self.kappa * self.kappa_in_frac

    @property
    def kappa_out(self):
        return self.kappa * self.kappa_out_frac

    @property
    def kappa_int(self):
        return self.kappa * self.kappa_int_frac

    @property
    def amplitude(self):
        """Real, non-negative intracavity amplitude sqrt(nbar)."""
        return math.sqrt(self.nbar)


@dataclass(frozen=True)
class MechanicalMode:
    omega_m: float
    gamma: float
    mass: float = 1.0
    n_th: float = 0.0
    z_zp: float = field(init=False)

    def __post_init__(self):
        for name in ("omega_m", "gamma", "mass", "n_th"):
            _finite(name, getattr(self, name))
        if self.omega_m <= 0 or self.gamma <= 0 or self.mass <= 0:
            raise ParameterError(
                f"omega_m, gamma and mass must be > 0, got {self.omega_m}, {self.gamma}, {self.mass}"
            )
        if self.n_th < 0:
            raise ParameterError(f"n_th must be >= 0, got {self.n_th}")
        object.__setattr__(self, "z_zp", math.sqrt(HBAR / (2.0 * self.mass * self.omega_m)))

    @classmethod
    def from_temperature(cls, omega_m, gamma, mass, temperature):
        return cls(omega_m, gamma, mass, bose_occupation(omega_m, temperature))

    @property
    def temperature(self):
        return occupation_temperature(self.omega_m, self.n_th)


@dataclass(frozen=True)
class Coupling:
    g: float

    def __post_init__(self):
        _finite("g", self.g)
        if self.g < 0:
            raise ParameterError(f"g must be >= 0, got {self.g}")


@dataclass(frozen=True)
class SystemParams:
    """Signal-beam cavity, effective mechanics and single-photon coupling."""

    cavity: OpticalCavity
    mechanics: MechanicalMode
    coupling: Coupling

    @property
    def g(self):
        return self.coupling.g

    def replace(self, **changes) -> "SystemParams":
        """Copy with cavity/mechanics/coupling fields swapped by name.

        >>> p.replace(detuning=0.0, nbar=1e8)  # doctest: +SKIP
        """
        from dataclasses import fields, replace

        groups = {"cavity": {}, "mechanics": {}, "coupling": {}}
        for key, value in changes.items():
            for group in groups:
                obj = getattr(self, group)
                if key in {f.name for f in fields(obj) if f.init}:
                    groups[group][key] = value
                    break
            else:
                raise ParameterError(f"unknown parameter {key!r}")
        return SystemParams(
            replace(self.cavity, **groups["cavity"]),
            replace(self.mechanics, **groups["mechanics"]),
            replace(self.coupling, **groups["coupling"]),
        )


@dataclass(frozen=True)
class QuadratureSpectrum:
    """Shot-noise-normalized spectrum on an angular-frequency grid.

    ``values`` has shape ``(len(phis), len(frequencies))``; a 1-D spectrum is
    stored with a single row.
    """

    frequencies: np.ndarray
    phis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        freqs = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        phis = np.atleast_1d(np.asarray(self.phis, dtype=float))
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if freqs.size == 0:
            raise ParameterError("frequency grid is empty")
        if np.any(freqs <= 0) or np.any(np.diff(freqs) <= 0):
            raise ParameterError("frequency grid must be positive and strictly increasing")
        if values.shape != (phis.size, freqs.size):
            raise ParameterError(
                f"values shape {values.shape} does not match grid ({phis.size}, {freqs.size})"
            )
        if np.any(values < 0):
            raise ParameterError("spectral values must be >= 0")
        for name, arr in (("frequencies", freqs), ("phis", phis), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
