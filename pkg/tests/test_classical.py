import math

import numpy as np
import pytest

from conftest import MHZ, direct_params, probe_frequencies, random_params
from ponderomotive.classical import (
    ClassicalNoise,
    classical_transfer_spectrum,
    input_port_transfer,
    total_detected_spectrum,
)
from ponderomotive.detection import DetectionChain
from ponderomotive.errors import ParameterError
from ponderomotive.model import output_quadrature_spectrum
from ponderomotive.oracle import assemble

W = np.linspace(1.45, 1.60, 301) * MHZ


@pytest.mark.parametrize("seed", range(8))
def test_input_transfer_matches_oracle(seed):
    p = random_params(np.random.default_rng(100 + seed))
    w = probe_frequencies(p)
    for phi in (0.0, 0.7, 2.0):
        t = assemble(w, p, phi).transfer()
        t_in, t_in_dag = input_port_transfer(w, phi, p)
        np.testing.assert_allclose(t_in, t[:, 0], rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(t_in_dag, t[:, 3], rtol=1e-9, atol=1e-12)


def test_quiet_noise_adds_nothing():
    p = direct_params()
    assert np.all(classical_transfer_spectrum(W, 0.0, p, ClassicalNoise()) == 0)


def test_noise_only_adds():
    p = direct_params()
    noise = ClassicalNoise(5.0, 2.0)
    chain = DetectionChain((("e", 0.5),))
    quiet = total_detected_spectrum(W, p, chain, ClassicalNoise())
    noisy = total_detected_spectrum(W, p, chain, noise)
    assert np.all(noisy > quiet)
    np.testing.assert_allclose(quiet, 0.5 * output_quadrature_spectrum(W, 0.0, p) + 0.5, rtol=1e-14)


def test_resonant_empty_cavity_transmits_amplitude_noise():
    # g = 0, Delta = 0: amplitude noise reaches the output scaled by |T|^2 = kappa_L kappa_R / (kappa/2)^2
    p = direct_params().replace(g=0.0, detuning=0.0)
    cav = p.cavity
    gain = cav.kappa_in * cav.kappa_out / (cav.kappa / 2) ** 2
    w = np.array([1e-3 * cav.kappa])
    s = classical_transfer_spectrum(w, 0.0, p, ClassicalNoise(amp_psd=1.0))
    assert s[0] == pytest.approx(gain, rel=1e-5)
    s_phase = classical_transfer_spectrum(w, 0.0, p, ClassicalNoise(phase_psd=1.0))
    assert s_phase[0] == pytest.approx(0.0, abs=1e-5)


def test_noise_rejects_negative():
    with pytest.raises(ParameterError):
        ClassicalNoise(-1.0)
    with pytest.raises(ParameterError):
        ClassicalNoise(0.0, math.inf)
