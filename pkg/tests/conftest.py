import math

import numpy as np
import pytest

from ponderomotive.config import load_config
from ponderomotive.model import stability_margin
from ponderomotive.params import TWO_PI, Coupling, MechanicalMode, OpticalCavity, SystemParams

KHZ = TWO_PI * 1e3
MHZ = TWO_PI * 1e6


def random_params(rng, g_zero=False, max_tries=50):
    """Stable random parameter set spanning several orders of magnitude."""
    for _ in range(max_tries):
        kappa = rng.uniform(0.2, 5.0) * MHZ
        fracs = rng.dirichlet([1.0, 1.0, 1.0])
        cav = OpticalCavity(
            kappa,
            fracs[0],
            fracs[1],
            1.0 - fracs[0] - fracs[1],
            detuning=rng.uniform(-1.0, 1.0) * kappa,
            nbar=10 ** rng.uniform(4, 9),
        )
        n_th = 0.0 if rng.random() < 0.2 else 10 ** rng.uniform(-2, 3)
        mech = MechanicalMode(
            rng.uniform(0.5, 3.0) * MHZ, 10 ** rng.uniform(1, 4) * TWO_PI, 1e-11, n_th
        )
        g = 0.0 if g_zero else rng.uniform(1.0, 100.0) * TWO_PI
        params = SystemParams(cav, mech, Coupling(g))
        if stability_margin(params) < 0:
            return params
    raise RuntimeError("no stable draw")


def probe_frequencies(params, count=64):
    """Positive frequencies spanning up to ten linewidths plus the mechanical band."""
    kappa, wm, gam = params.cavity.kappa, params.mechanics.omega_m, params.mechanics.gamma
    wide = np.linspace(1e-3 * kappa, 10 * kappa, count // 2)
    narrow = np.linspace(wm - 10 * gam, wm + 10 * gam, count - count // 2)
    return np.sort(np.concatenate([wide, narrow[narrow > 0]]))


def direct_params(detuning_khz=-85.0):
    """R = 5.1 parameter set of the direct-detection preset at a chosen signal detuning."""
    return load_config("preset:direct_detection").system_params().replace(detuning=detuning_khz * KHZ)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def quadratures(n=8):
    return np.linspace(0.0, math.pi, n, endpoint=False)
