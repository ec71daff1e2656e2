"""Detection chain: optical loss, direct photodetection and finite-LO homodyne."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import output_quadrature_spectrum
from .params import SystemParams


class Scheme(str, enum.Enum):
    DIRECT = "direct"
    HOMODYNE = "homodyne"


@dataclass(frozen=True)
class DetectionChain:
    """Efficiency chain and readout scheme.

    ``efficiencies`` is a tuple of ``(name, value)`` pairs whose product is
    the overall external efficiency. ``lo_ratio`` is eps |a_out|^2 / |a_LO|^2
    (0 is an ideal strong LO). ``phase_offset`` is added to ``phi`` to model a
    fixed homodyne phase error. ``dark_noise`` is residual, unsubtracted white
    detector noise in shot-noise units. Direct detection ignores ``phi``,
    ``phase_offset`` and ``lo_ratio``.
    """

    efficiencies: tuple = (("detector", 1.0),)
    scheme: Scheme = Scheme.DIRECT
    lo_ratio: float = 0.0
    phi: float = 0.0
    phase_offset: float = 0.0
    dark_noise: float = 0.0
    _eps: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        effs = tuple(
            (str(name), float(val))
            for name, val in (
                self.efficiencies.items() if isinstance(self.efficiencies, dict) else self.efficiencies
            )
        )
        if not effs:
            raise ParameterError("detection chain needs at least one efficiency")
        for name, val in effs:
            if not (0.0 < val <= 1.0):
                raise ParameterError(f"efficiency {name!r} must lie in (0, 1], got {val}")
        object.__setattr__(self, "efficiencies", effs)
        for name in ("lo_ratio", "phi", "phase_offset", "dark_noise"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.lo_ratio < 0:
            raise ParameterError(f"lo_ratio must be >= 0, got {self.lo_ratio}")
        if self.dark_noise < 0:
            raise ParameterError(f"dark_noise must be >= 0, got {self.dark_noise}")
        object.__setattr__(self, "_eps", compose_efficiency(self))

    @property
    def epsilon(self):
        return self._eps


def compose_efficiency(chain) -> float:
    """Product of the chain's efficiencies (accepts a chain or a plain sequence)."""
    effs = chain.efficiencies if isinstance(chain, DetectionChain) else chain
    values = [v for _, v in effs] if effs and isinstance(effs[0], tuple) else list(effs)
    if any(not (0.0 < v <= 1.0) for v in values):
        raise ParameterError(f"efficiencies must lie in (0, 1], got {values}")
    return float(math.prod(values))


def lo_ratio_from_powers(signal_power, lo_power, eps):
    """Reduce detected signal and LO powers to eps P_signal / P_LO."""
    if lo_power <= 0 or signal_power < 0:
        raise ParameterError("LO power must be > 0 and signal power >= 0")
    return eps * signal_power / lo_power


def apply_loss(s, eps):
    """Mix a spectrum with vacuum through a beam splitter of transmission ``eps``."""
    if not (0.0 < eps <= 1.0):
        raise ParameterError(f"eps must lie in (0, 1], got {eps}")
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ParameterError("spectral values must be >= 0")
    return eps * s + (1.0 - eps)


def mix_local_oscillator(s_lossy, rho):
    """Add LO vacuum beating against the signal carrier; ``s_lossy`` already includes loss."""
    if rho < 0:
        raise ParameterError(f"lo_ratio must be >= 0, got {rho}")
    return (np.asarray(s_lossy, dtype=float) + rho) / (1.0 + rho)


def _dark(s, level):
    return s if level == 0 else (s + level) / (1.0 + level)


def direct_detection_spectrum(omega, params: SystemParams, chain: DetectionChain):
    """S_I = eps S_XX(phi=0) + 1 - eps."""
    s = output_quadrature_spectrum(omega, 0.0, params)
    return _dark(apply_loss(s, chain.epsilon), chain.dark_noise)


def homodyne_spectrum(omega, params: SystemParams, chain: DetectionChain, phi=None):
    """Homodyne spectrum with a finite LO.

    S_phi = (eps S_XX + 1 - eps + rho) / (1 + rho), rho = ``chain.lo_ratio``.
    ``phi`` overrides ``chain.phi`` and may be an array broadcasting with ``omega``.
    """
    angle = (chain.phi if phi is None else np.asarray(phi, dtype=float)) + chain.phase_offset
    s = output_quadrature_spectrum(omega, angle, params)
    return _dark(mix_local_oscillator(apply_loss(s, chain.epsilon), chain.lo_ratio), chain.dark_noise)


def detected_spectrum(omega, params: SystemParams, chain: DetectionChain, phi=None):
    """Dispatch on ``chain.scheme``; ``phi`` is ignored for direct detection."""
    if chain.scheme is Scheme.DIRECT:
        s = direct_detection_spectrum(omega, params, chain)
        if phi is not None:
            s = np.broadcast_to(s, np.broadcast_shapes(np.shape(s), np.shape(phi))).copy()
        return s
    return homodyne_spectrum(omega, params, chain, phi)


def detected_from_ideal(s_xx, chain: DetectionChain):
    """Map an already computed S_XX through the chain (loss, LO mixing, dark noise)."""
    s = apply_loss(s_xx, chain.epsilon)
    if chain.scheme is Scheme.HOMODYNE:
        s = mix_local_oscillator(s, chain.lo_ratio)
    return _dark(s, chain.dark_noise)
