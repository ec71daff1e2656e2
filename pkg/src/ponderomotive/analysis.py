"""Derived quantities and inverse problems on top of the forward model."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .classical import ClassicalNoise, total_detected_spectrum
from .detection import DetectionChain, Scheme, detected_from_ideal
from .errors import FitError, InstabilityError, ParameterError, SingularityError
from .mechanics import rpsn_thermal_ratio
from .model import dressed_resonance, displacement_correlator, output_quadrature_spectrum
from .params import QE, QuadratureSpectrum, SystemParams


def to_db(s):
    return 10.0 * np.log10(s)


# ---------------------------------------------------------------- squeezing


@dataclass(frozen=True)
class SqueezingReport:
    s_min: float
    s_min_db: float
    omega_opt: float
    phi_opt: float
    contour: tuple  # ((omega, phi), ...) where the grid crosses S = 1


def _vertex(x, y, i):
    """Parabolic vertex through the three samples around index ``i``; falls back to x[i]."""
    if i == 0 or i == len(x) - 1:
        return x[i]
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    if not np.all(np.isfinite((y0, y1, y2))):
        return x[i]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a <= 0:
        return x[i]
    return float(np.clip(-b / (2 * a), x0, x2))


def shot_noise_contour(freqs, phis, values, level=1.0):
    """Points where the (phi, omega) grid crosses ``level``, by linear interpolation on edges."""
    pts = []
    v = values - level
    for j in range(v.shape[0]):
        row = v[j]
        idx = np.nonzero(row[:-1] * row[1:] < 0)[0]
        for i in idx:
            t = row[i] / (row[i] - row[i + 1])
            pts.append((float(freqs[i] + t * (freqs[i + 1] - freqs[i])), float(phis[j])))
    for i in range(v.shape[1]):
        col = v[:, i]
        idx = np.nonzero(col[:-1] * col[1:] < 0)[0]
        for j in idx:
            t = col[j] / (col[j] - col[j + 1])
            pts.append((float(freqs[i]), float(phis[j] + t * (phis[j + 1] - phis[j]))))
    pts.sort()
    return tuple(pts)


def squeezing_minimum(spectrum: QuadratureSpectrum) -> SqueezingReport:
    """Grid argmin with parabolic refinement and the S = 1 contour.

    Ties resolve to the lowest frequency, then the lowest angle. ``s_min`` is
    the sampled minimum; the reported location is refined by a three-point
    parabola along each axis. Contour resolution is set by the grid.
    """
    freqs, phis, vals = spectrum.frequencies, spectrum.phis, spectrum.values
    if np.all(np.isnan(vals)):
        raise ParameterError("spectrum contains no finite values")
    order = np.argsort(phis, kind="stable")
    phis, vals = phis[order], vals[order]
    # scan frequency-major so the first hit is lowest omega, then lowest phi
    flat = np.nanargmin(vals.T)
    i, j = divmod(int(flat), vals.shape[0])
    s_min = float(vals[j, i])
    omega_opt = _vertex(freqs, vals[j], i)
    phi_opt = _vertex(phis, vals[:, i], j) if phis.size >= 3 else float(phis[j])
    contour = shot_noise_contour(freqs, phis, vals)
    return SqueezingReport(s_min, float(to_db(s_min)), float(omega_opt), float(phi_opt), contour)


def spectrum_map(omega, phis, params: SystemParams, chain: DetectionChain, noise: ClassicalNoise | None = None):
    """Detected spectrum on a (phi, omega) grid as a :class:`QuadratureSpectrum`."""
    omega = np.asarray(omega, dtype=float)
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    noise = noise or ClassicalNoise()
    vals = total_detected_spectrum(omega, params, chain, noise, phi=phis[:, None])
    return QuadratureSpectrum(omega, phis, vals)


# ---------------------------------------------------------------- uncertainty


def quadrature_extrema(omega, params: SystemParams, chain: DetectionChain | None = None):
    """Return (s_min, phi_min, s_max) over all quadratures at each ``omega``.

    S(phi) = a + b cos(2 phi) + c sin(2 phi) exactly, so three angles fix it.
    """
    s = [output_quadrature_spectrum(omega, phi, params) for phi in (0.0, math.pi / 4, math.pi / 2)]
    if chain is not None:
        s = [detected_from_ideal(x, chain) for x in s]
    mean = 0.5 * (s[0] + s[2])
    cos_part = 0.5 * (s[0] - s[2])
    sin_part = s[1] - mean
    amp = np.hypot(cos_part, sin_part)
    phi_min = 0.5 * (np.arctan2(sin_part, cos_part) + math.pi)
    phi_min = np.mod(phi_min + math.pi / 2, math.pi) - math.pi / 2
    return mean - amp, phi_min, mean + amp


def uncertainty_product(omega, phi, params: SystemParams, chain: DetectionChain | None = None):
    """S(phi) S(phi + pi/2), detected through ``chain`` when given."""

    def spec(angle):
        s = output_quadrature_spectrum(omega, angle, params)
        return s if chain is None else detected_from_ideal(s, chain)

    return spec(phi) * spec(np.asarray(phi) + math.pi / 2)


def minimum_uncertainty_product(omega, params: SystemParams, chain: DetectionChain | None = None):
    """Uncertainty product for the most squeezed quadrature and its conjugate."""
    lo, _, hi = quadrature_extrema(omega, params, chain)
    return lo * hi


# ---------------------------------------------------------------- spring track


@dataclass(frozen=True)
class SpringPoint:
    detuning: float
    omega_opt: float | None
    status: str  # "ok", "flat" or "unstable"


def _direct_minimum(params, lo, hi, points):
    grid = np.linspace(lo, hi, points)
    s = output_quadrature_spectrum(grid, 0.0, params)
    # roundoff from large cancelling terms leaves ~1e-12 ripple on an exactly flat spectrum
    if np.ptp(s) < 1e-9:
        return None
    i = int(np.argmin(s))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, points - 1)]
    res = minimize_scalar(
        lambda x: float(output_quadrature_spectrum(x, 0.0, params)),
        bounds=(a, b),
        method="bounded",
        options={"xatol": 1e-10 * hi},
    )
    return float(res.x)


def optical_spring_track(params: SystemParams, delta_grid, span=None, points=4001):
    """Frequency of the direct-detection minimum for each signal detuning.

    Detection loss is monotone in S_XX, so the location comes from S_XX(phi=0)
    and does not depend on the detection chain.
    Points where the dynamics are unstable are flagged and skipped.
    """
    mech = params.mechanics
    half = span if span is not None else 40.0 * mech.gamma + 0.02 * mech.omega_m
    out = []
    for delta in np.atleast_1d(delta_grid):
        if not math.isfinite(delta):
            raise ParameterError("detuning grid must be finite")
        p = params.replace(detuning=float(delta))
        try:
            w = _direct_minimum(p, mech.omega_m - half, mech.omega_m + half, points)
        except (InstabilityError, SingularityError):
            out.append(SpringPoint(float(delta), None, "unstable"))
            continue
        out.append(SpringPoint(float(delta), w, "ok" if w is not None else "flat"))
    return out


# ---------------------------------------------------------------- Lorentzian fit


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    fwhm: float
    area: float
    floor: float
    residual_rms: float
    iterations: int


def lorentzian(x, center, fwhm, area, floor):
    """Area-normalized Lorentzian on a constant floor."""
    half = 0.5 * fwhm
    return floor + area * half / math.pi / ((np.asarray(x) - center) ** 2 + half**2)


def _lorentz_jac(x, p):
    c, w, a, _ = p
    h = 0.5 * w
    d = (x - c) ** 2 + h**2
    base = h / math.pi / d
    jac = np.empty((x.size, 4))
    jac[:, 0] = a * base * 2 * (x - c) / d
    jac[:, 1] = a * (0.5 / math.pi / d - h / math.pi * h / d**2)
    jac[:, 2] = base
    jac[:, 3] = 1.0
    return jac


def fit_lorentzian(omega, values, max_iter=200, xtol=1e-10) -> LorentzianFit:
    """Levenberg-Marquardt fit of :func:`lorentzian` to a peaked series.

    Works in coordinates scaled to the data span so that a narrow line on a
    large carrier frequency stays well conditioned. Rejected steps raise the
    damping and are not taken, so the cost never increases.
    """
    x = np.asarray(omega, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size != y.size or x.size < 8:
        raise FitError("need at least 8 points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError("data must be finite")

    x0, xs = x.mean(), np.ptp(x)
    floor0 = float(np.median(y))
    ys = float(np.max(np.abs(y - floor0)))
    if xs == 0 or ys == 0 or np.ptp(y) <= 1e-12 * max(abs(floor0), 1e-300):
        raise FitError("series has no peak")
    u = (x - x0) / xs
    v = (y - floor0) / ys

    k = int(np.argmax(v))
    # half maximum above the lowest sample, so a window cut inside the wings still reads wide
    above = np.nonzero(v >= 0.5 * (v[k] + v.min()))[0]
    width = max(u[above[-1]] - u[above[0]], np.min(np.diff(np.sort(u))))
    if 3 * width > 1.0:  # u spans exactly 1
        raise FitError("data must span at least three linewidths")
    p = np.array([u[k], width, v[k] * math.pi * width / 2, 0.0])

    def resid(q):
        return lorentzian(u, *q) - v

    r = resid(p)
    cost = r @ r
    lam = 1e-3
    for it in range(1, max_iter + 1):
        jac = _lorentz_jac(u, p)
        jtj = jac.T @ jac
        grad = jac.T @ r
        while True:
            a = jtj + lam * np.diag(np.diag(jtj) + 1e-30)
            try:
                step = -np.linalg.solve(a, grad)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = p + step
            if trial[1] <= 0:
                lam *= 10
            else:
                r_new = resid(trial)
                c_new = r_new @ r_new
                if c_new <= cost:
                    break
                lam *= 10
            if lam > 1e16:
                step = np.zeros_like(p)
                trial, r_new, c_new = p, r, cost
                break
        p, r, cost = trial, r_new, c_new
        lam = max(lam / 10, 1e-12)
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol):
            break
    else:
        raise FitError(f"Lorentzian fit did not converge in {max_iter} iterations", last=_unscale(p, x0, xs, ys, floor0))

    center, fwhm, area, floor = _unscale(p, x0, xs, ys, floor0)
    model = lorentzian(x, center, fwhm, area, floor)
    rms = float(np.sqrt(np.mean((model - y) ** 2)))
    return LorentzianFit(center, fwhm, area, floor, rms, it)


def _unscale(p, x0, xs, ys, floor0):
    c, w, a, f = p
    return (float(x0 + c * xs), float(w * xs), float(a * xs * ys), float(floor0 + f * ys))


def displacement_spectrum(omega, params: SystemParams):
    """One-sided physical displacement PSD in m^2/Hz: 2 Z_zp^2 <z(-w) z(w)>_s."""
    return 2.0 * params.mechanics.z_zp**2 * displacement_correlator(omega, params)


# ---------------------------------------------------------------- detuning fit


@dataclass(frozen=True)
class DetuningFit:
    detuning: float
    residual: float  # rms log-residual at the optimum
    evaluations: int


def fit_detuning(
    measured: QuadratureSpectrum,
    params: SystemParams,
    chain: DetectionChain,
    noise: ClassicalNoise | None = None,
    coarse_points=81,
) -> DetuningFit:
    """Single-spectrum detuning calibration over Delta in [-kappa, kappa].

    A coarse scan locates the basin (unstable detunings score +inf), then a
    bounded golden-section/parabolic search refines it. The objective is the
    summed squared log-residual between model and measurement.
    """
    noise = noise or ClassicalNoise()
    kappa = params.cavity.kappa
    freqs = measured.frequencies
    phis = measured.phis if chain.scheme is Scheme.HOMODYNE else np.zeros(1)
    log_meas = np.log(measured.values)
    if chain.scheme is Scheme.DIRECT:
        log_meas = log_meas[:1]
    count = [0]

    def objective(delta):
        count[0] += 1
        p = params.replace(detuning=float(delta))
        try:
            model = total_detected_spectrum(freqs, p, chain, noise, phi=phis[:, None])
        except (InstabilityError, SingularityError):
            return math.inf
        return float(np.sum((np.log(model) - log_meas) ** 2))

    grid = np.linspace(-kappa, kappa, coarse_points)
    costs = np.array([objective(d) for d in grid])
    finite = costs[np.isfinite(costs)]
    if finite.size == 0:
        raise FitError("model unstable over the whole detuning range")
    if np.ptp(finite) <= 1e-12 * (1.0 + finite.max()):
        raise FitError("objective is flat in detuning; detuning is unidentifiable")
    i = int(np.nanargmin(np.where(np.isfinite(costs), costs, np.nan)))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9 * kappa})
    best, cost = (float(res.x), float(res.fun)) if res.fun <= costs[i] else (float(grid[i]), float(costs[i]))
    return DetuningFit(best, math.sqrt(cost / log_meas.size), count[0])


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float

    @property
    def shot_noise_ratio(self):
        """Slope relative to the shot-noise expectation 2 q_e."""
        return self.slope / (2.0 * QE)


def fit_shot_noise_slope(current, psd) -> LineFit:
    """Ordinary least squares of detector noise PSD against mean photocurrent."""
    x = np.asarray(current, dtype=float)
    y = np.asarray(psd, dtype=float)
    if x.size != y.size:
        raise ParameterError("current and psd must have equal length")
    if x.size < 3:
        raise ParameterError("need at least 3 calibration points")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ParameterError("calibration data must be finite")
    design = np.column_stack([x, np.ones_like(x)])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        raise ParameterError("photocurrents must not all be equal")
    resid = y - design @ coef
    dof = x.size - 2
    sigma2 = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = sigma2 * np.linalg.inv(design.T @ design)
    return LineFit(float(coef[0]), float(coef[1]), float(math.sqrt(cov[0, 0])), float(math.sqrt(cov[1, 1])))


# ---------------------------------------------------------------- reference floors


def floor_curves(ratio, eps):
    """(1/R, 1 - eps, their sum clipped to [0, 1])."""
    thermal = 0.0 if math.isinf(ratio) else 1.0 / ratio
    eff = 1.0 - eps
    return thermal, eff, min(max(thermal + eff, 0.0), 1.0)


def thermal_floor_curves(params: SystemParams, chain: DetectionChain):
    return floor_curves(rpsn_thermal_ratio(params), chain.epsilon)


def resonance_side(params: SystemParams, omega):
    """Sign of ``omega`` relative to the signal-dressed mechanical resonance."""
    return int(np.sign(omega - dressed_resonance(params)))
