import math

import numpy as np
import pytest

from compressive_rate.bounds import concentration_bound
from compressive_rate.channel_model import ChannelMatrix, complex_gaussian
from compressive_rate.sensing import (
    MeasurementMatrix,
    NoiseModel,
    ReceiverFeedback,
    concentration_probe,
    gen_pilot_matrix,
    measure,
    measure_all,
)


def _channels(N, seed=0):
    return ChannelMatrix(complex_gaussian(np.random.default_rng(seed), (N, N)))


def test_scalar_pilot_matrix():
    Phi = gen_pilot_matrix(1, 1, seed=3)
    assert Phi.entries.shape == (1, 1)
    assert Phi.ensemble_tag == "gaussian-1-over-M"


def test_pilot_columns_have_unit_expected_energy():
    M, N, n = 8, 5, 10_000
    energies = np.array([np.sum(np.abs(gen_pilot_matrix(M, N, s).entries[:, 0]) ** 2) for s in range(n)])
    assert abs(energies.mean() - 1.0) <= 3 * energies.std(ddof=1) / math.sqrt(n)


def test_isotropy_for_fixed_unit_vector():
    M, N, n = 10, 6, 10_000
    rng = np.random.default_rng(1)
    a = complex_gaussian(rng, N)
    a /= np.linalg.norm(a)
    vals = np.array([np.linalg.norm(gen_pilot_matrix(M, N, s).entries @ a) ** 2 for s in range(n)])
    assert abs(vals.mean() - 1.0) <= 3 * vals.std(ddof=1) / math.sqrt(n)


def test_pilot_matrix_deterministic():
    assert gen_pilot_matrix(4, 9, 12).entries.tobytes() == gen_pilot_matrix(4, 9, 12).entries.tobytes()
    with pytest.raises(ValueError):
        gen_pilot_matrix(0, 3)


def test_identity_measurement_is_exact():
    H = _channels(5)
    fb = measure(MeasurementMatrix(np.eye(5)), H, NoiseModel(), receiver=2)
    assert np.array_equal(fb.z, H.h(2))
    assert fb.xi_bound == 0.0


def test_bounded_ball_noise_within_radius():
    H = _channels(10)
    Phi = gen_pilot_matrix(6, 10, 0)
    for seed in range(200):
        noise = NoiseModel.bounded_ball(0.3, rng_seed=seed)
        for fb in measure_all(Phi, H, noise):
            mu = fb.z - Phi.entries @ H.h(fb.receiver_id)
            assert np.linalg.norm(mu) <= fb.xi_bound == 0.3


def test_quantizer_error_within_certified_bound():
    rng = np.random.default_rng(2)
    step = 0.05
    for t in range(1000):
        M = int(rng.integers(1, 20))
        H = _channels(8, seed=t)
        Phi = gen_pilot_matrix(M, 8, t)
        fb = measure(Phi, H, NoiseModel.scalar_quantizer(step), receiver=t % 8)
        mu = fb.z - Phi.entries @ H.h(fb.receiver_id)
        assert fb.xi_bound == pytest.approx(step * math.sqrt(M / 2))
        assert np.linalg.norm(mu) <= fb.xi_bound + 1e-15


def test_noiseless_measurement_is_linear_in_channels():
    Phi = gen_pilot_matrix(5, 7, 4)
    H1, H2 = _channels(7, 1), _channels(7, 2)
    a, b = 0.7 - 0.2j, -1.3
    H = ChannelMatrix(a * H1.entries + b * H2.entries)
    for i in range(7):
        lhs = measure(Phi, H, receiver=i).z
        rhs = a * measure(Phi, H1, receiver=i).z + b * measure(Phi, H2, receiver=i).z
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_measure_all_shares_one_pilot_matrix():
    Phi = gen_pilot_matrix(4, 6, 8)
    H = _channels(6)
    Z = np.column_stack([fb.z for fb in measure_all(Phi, H)])
    assert np.allclose(Z, Phi.entries @ H.entries.T)


def test_measurement_errors():
    with pytest.raises(ValueError):
        measure(gen_pilot_matrix(3, 4), _channels(5))
    with pytest.raises(IndexError):
        measure(gen_pilot_matrix(3, 5), _channels(5), receiver=5)
    with pytest.raises(ValueError):
        NoiseModel("gaussian")
    with pytest.raises(ValueError):
        NoiseModel("scalar-quantizer", step=0.0)
    with pytest.raises(ValueError):
        ReceiverFeedback(0, np.zeros(3), -1.0)
    with pytest.raises(ValueError):
        MeasurementMatrix(np.eye(2), ensemble_tag="bernoulli")


def test_concentration_example_value():
    assert concentration_bound(100, 0.5) == pytest.approx(0.0432, abs=5e-5)


def test_concentration_probe_respects_bound():
    M, eps, n = 100, 0.5, 4000
    freq = concentration_probe(M, 20, eps, n, seed=5)
    bound = concentration_bound(M, eps)
    assert freq <= bound + 3 * math.sqrt(bound * (1 - bound) / n)


def test_concentration_probe_edge_cases():
    assert concentration_probe(20, 10, 1e6, 500, seed=1) == 0.0
    a = complex_gaussian(np.random.default_rng(0), 10)
    f1 = concentration_probe(20, 10, 0.3, 2000, seed=9, a=a)
    f2 = concentration_probe(20, 10, 0.3, 2000, seed=9, a=7.5 * a)
    assert f1 == f2
    with pytest.raises(ValueError):
        concentration_probe(20, 10, 0.0, 10)
