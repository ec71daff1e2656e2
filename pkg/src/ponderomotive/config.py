"""JSON run configuration.

External files use ordinary frequency (Hz) and degrees; everything is converted
to rad/s and radians here and nowhere else.
"""
from __future__ import annotations

import hashlib
import json
import math
from importlib import resources
from pathlib import Path
from typing import Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .classical import ClassicalNoise
from .detection import DetectionChain, lo_ratio_from_powers
from .mechanics import DampingDrive, DampingMode, effective_parameters
from .params import TWO_PI, Coupling, MechanicalMode, OpticalCavity, SystemParams, bose_occupation

SCHEMA_VERSION = 1


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class CavityConfig(_Section):
    kappa_hz: float = Field(gt=0, allow_inf_nan=False)
    kappa_in_frac: float = Field(ge=0, le=1, allow_inf_nan=False)
    kappa_out_frac: float = Field(ge=0, le=1, allow_inf_nan=False)
    kappa_int_frac: float = Field(ge=0, le=1, allow_inf_nan=False)

    @model_validator(mode="after")
    def _fractions(self):
        total = self.kappa_in_frac + self.kappa_out_frac + self.kappa_int_frac
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"kappa fractions must sum to 1, got {total!r}")
        return self


class MechanicsConfig(_Section):
    freq_hz: float = Field(gt=0, allow_inf_nan=False)
    gamma_hz: float = Field(gt=0, allow_inf_nan=False)
    mass_kg: float = Field(gt=0, allow_inf_nan=False)
    bath_temp_k: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)
    n_th: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _one_bath(self):
        if (self.bath_temp_k is None) == (self.n_th is None):
            raise ValueError("give exactly one of bath_temp_k or n_th")
        return self

    def occupation(self):
        if self.n_th is not None:
            return self.n_th
        return bose_occupation(TWO_PI * self.freq_hz, self.bath_temp_k)


class CouplingConfig(_Section):
    g0_hz: float = Field(ge=0, allow_inf_nan=False)


class SignalConfig(_Section):
    detuning_hz: float = Field(allow_inf_nan=False)
    nbar: float = Field(ge=0, allow_inf_nan=False)


class DampingBeamConfig(_Section):
    mode: Literal["direct", "computed"] = "direct"
    gamma_eff_hz: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    freq_eff_hz: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    temp_eff_k: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)
    n_eff: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)
    detuning_hz: Optional[float] = Field(default=None, allow_inf_nan=False)
    nbar: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _mode_fields(self):
        if self.mode == "direct":
            missing = [n for n in ("gamma_eff_hz", "freq_eff_hz") if getattr(self, n) is None]
            if missing:
                raise ValueError(f"direct mode requires {', '.join(missing)}")
            if (self.temp_eff_k is None) == (self.n_eff is None):
                raise ValueError("direct mode requires exactly one of temp_eff_k or n_eff")
        else:
            missing = [n for n in ("detuning_hz", "nbar") if getattr(self, n) is None]
            if missing:
                raise ValueError(f"computed mode requires {', '.join(missing)}")
        return self


class DetectionConfig(_Section):
    scheme: Literal["direct", "homodyne"] = "direct"
    efficiencies: Union[dict[str, float], list[float]] = Field(default_factory=lambda: {"detector": 1.0})
    lo_ratio: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)
    signal_power_w: Optional[float] = Field(default=None, ge=0, allow_inf_nan=False)
    lo_power_w: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False)
    phi_deg: float = Field(default=0.0, allow_inf_nan=False)
    phase_offset_deg: float = Field(default=0.0, allow_inf_nan=False)
    dark_noise: float = Field(default=0.0, ge=0, allow_inf_nan=False)

    @model_validator(mode="after")
    def _checks(self):
        values = self.efficiencies.values() if isinstance(self.efficiencies, dict) else self.efficiencies
        bad = [v for v in values if not (0 < v <= 1)]
        if not values or bad:
            raise ValueError(f"efficiencies must be non-empty and lie in (0, 1], got {list(values)}")
        powers = (self.signal_power_w is not None, self.lo_power_w is not None)
        if any(powers) and not all(powers):
            raise ValueError("signal_power_w and lo_power_w must be given together")
        if all(powers) and self.lo_ratio is not None:
            raise ValueError("give lo_ratio or the two powers, not both")
        return self

    def named_efficiencies(self):
        if isinstance(self.efficiencies, dict):
            return tuple(self.efficiencies.items())
        return tuple((f"e{i}", v) for i, v in enumerate(self.efficiencies))


class ClassicalNoiseConfig(_Section):
    amp_rel_shot: float = Field(default=0.0, ge=0, allow_inf_nan=False)
    phase_rel_shot: float = Field(default=0.0, ge=0, allow_inf_nan=False)


class GridConfig(_Section):
    f_min_hz: float = Field(gt=0, allow_inf_nan=False)
    f_max_hz: float = Field(gt=0, allow_inf_nan=False)
    points: int = Field(ge=2)
    phi_min_deg: float = Field(default=0.0, allow_inf_nan=False)
    phi_max_deg: float = Field(default=0.0, allow_inf_nan=False)
    phi_points: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _order(self):
        if self.f_max_hz <= self.f_min_hz:
            raise ValueError("f_max_hz must exceed f_min_hz")
        if self.phi_points > 1 and self.phi_max_deg <= self.phi_min_deg:
            raise ValueError("phi_max_deg must exceed phi_min_deg when phi_points > 1")
        return self

    def frequencies_hz(self):
        return np.linspace(self.f_min_hz, self.f_max_hz, self.points)

    def phis_deg(self):
        if self.phi_points == 1:
            return np.array([self.phi_min_deg])
        return np.linspace(self.phi_min_deg, self.phi_max_deg, self.phi_points)


class SweepConfig(_Section):
    axis: Literal["detuning", "phi", "power"]
    start: float = Field(alias="from", allow_inf_nan=False)
    stop: float = Field(alias="to", allow_inf_nan=False)
    points: int = Field(ge=1)


class RunConfig(_Section):
    schema_version: int = SCHEMA_VERSION
    description: str = ""
    cavity: CavityConfig
    mechanics: MechanicsConfig
    coupling: CouplingConfig
    signal: SignalConfig
    damping_beam: Optional[DampingBeamConfig] = None
    detection: DetectionConfig = Field(default_factory=DetectionConfig)
    classical_noise: ClassicalNoiseConfig = Field(default_factory=ClassicalNoiseConfig)
    grid: GridConfig
    sweep: Optional[SweepConfig] = None

    # ------------------------------------------------------------ derived objects

    def canonical_json(self):
        return json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def cavity_params(self):
        c = self.cavity
        return OpticalCavity(
            TWO_PI * c.kappa_hz,
            c.kappa_in_frac,
            c.kappa_out_frac,
            c.kappa_int_frac,
            TWO_PI * self.signal.detuning_hz,
            self.signal.nbar,
        )

    def bare_mechanics(self):
        m = self.mechanics
        return MechanicalMode(TWO_PI * m.freq_hz, TWO_PI * m.gamma_hz, m.mass_kg, m.occupation())

    def damping_drive(self):
        d = self.damping_beam
        if d is None:
            return DampingDrive(DampingMode.COMPUTED, 0.0, 0.0)
        if d.mode == "computed":
            return DampingDrive(DampingMode.COMPUTED, TWO_PI * d.detuning_hz, d.nbar)
        omega = TWO_PI * d.freq_eff_hz
        n_eff = d.n_eff if d.n_eff is not None else bose_occupation(omega, d.temp_eff_k)
        return DampingDrive(DampingMode.DIRECT, omega_m_eff=omega, gamma_eff=TWO_PI * d.gamma_eff_hz, n_eff=n_eff)

    def system_params(self) -> SystemParams:
        cavity = self.cavity_params()
        bare = self.bare_mechanics()
        g = TWO_PI * self.coupling.g0_hz
        eff = effective_parameters(bare, cavity, self.damping_drive(), g)
        return SystemParams(cavity, eff.as_mode(bare.mass), Coupling(g))

    def detection_chain(self) -> DetectionChain:
        d = self.detection
        chain = DetectionChain(d.named_efficiencies())
        if d.signal_power_w is not None:
            rho = lo_ratio_from_powers(d.signal_power_w, d.lo_power_w, chain.epsilon)
        else:
            rho = d.lo_ratio or 0.0
        return DetectionChain(
            d.named_efficiencies(),
            d.scheme,
            rho,
            math.radians(d.phi_deg),
            math.radians(d.phase_offset_deg),
            d.dark_noise,
        )

    def noise(self) -> ClassicalNoise:
        return ClassicalNoise(self.classical_noise.amp_rel_shot, self.classical_noise.phase_rel_shot)

    def omega_grid(self):
        return TWO_PI * self.grid.frequencies_hz()


class ConfigError(ValueError):
    """Configuration could not be parsed; ``errors`` lists every problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _format_validation(exc: ValidationError):
    out = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        out.append(f"{loc}: {err['msg']}")
    return out


def parse_config(data) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from None


def preset_names():
    root = resources.files("ponderomotive") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name) -> dict:
    root = resources.files("ponderomotive") / "presets"
    path = root / f"{name}.json"
    if not path.is_file():
        raise ConfigError([f"unknown preset {name!r}; available: {', '.join(preset_names())}"])
    return json.loads(path.read_text())


def load_config(source) -> RunConfig:
    """Load from a JSON path, or ``preset:NAME`` for a bundled preset."""
    source = str(source)
    if source.startswith("preset:"):
        return parse_config(load_preset(source.split(":", 1)[1]))
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config {source}: {exc.strerror}"]) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{source}:{exc.lineno}: invalid JSON ({exc.msg})"]) from None
    return parse_config(data)
