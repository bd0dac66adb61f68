import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compressive_rate.channel_model import GainMatrix
from compressive_rate.estimators import GainEstimate
from compressive_rate.rates import (
    PowerProfile,
    estimated_rate,
    link_rates,
    lipschitz_bound,
    rate,
    rate_gap,
    sinr,
)
from oracles import sinr_direct


def test_sinr_examples():
    pp = PowerProfile.uniform(2, 1.0)
    assert sinr(GainMatrix([[1.0, 0.0], [0.0, 1.0]]), 0, [0], pp) == 1.0
    assert sinr(GainMatrix([[1.0, 0.5], [0.0, 1.0]]), 0, [0, 1], pp) == pytest.approx(2 / 3)


def test_sinr_requires_membership():
    pp = PowerProfile.uniform(3, 1.0)
    X = GainMatrix(np.ones((3, 3)))
    with pytest.raises(ValueError):
        sinr(X, 2, [0, 1], pp)
    with pytest.raises(ValueError):
        estimated_rate(np.ones(3), 2, [0, 1], pp)
    with pytest.raises(ValueError):
        PowerProfile([1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        PowerProfile([1.0], [1.0, 1.0])


def test_adding_an_interferer_decreases_sinr():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        N = int(rng.integers(2, 8))
        X = GainMatrix(rng.exponential(size=(N, N)) + 1e-3)
        pp = PowerProfile(rng.uniform(0.1, 10, N), rng.uniform(0.1, 2, N))
        S = list(range(N - 1))
        assert sinr(X, 0, S + [N - 1], pp) < sinr(X, 0, S, pp)


def test_rate_examples():
    pp = PowerProfile.uniform(1, 1.0)
    assert rate(GainMatrix([[0.0]]), 0, [0], pp) == 0.0
    assert rate(GainMatrix([[math.e - 1]]), 0, [0], pp) == pytest.approx(1.0, abs=1e-15)
    rng = np.random.default_rng(1)
    for _ in range(10):
        x, p = rng.exponential(), rng.uniform(0.1, 100)
        assert rate(GainMatrix([[x]]), 0, [0], PowerProfile.uniform(1, p)) == pytest.approx(math.log(1 + p * x), rel=1e-14)


def test_rate_matches_direct_sinr():
    rng = np.random.default_rng(2)
    for _ in range(200):
        N = int(rng.integers(1, 9))
        X = rng.exponential(size=(N, N))
        p = rng.uniform(0.1, 5, N)
        s2 = rng.uniform(0.1, 2, N)
        S = sorted(rng.choice(N, int(rng.integers(1, N + 1)), replace=False).tolist())
        pp = PowerProfile(p, s2)
        vec = link_rates(X, S, p, s2)
        for pos, i in enumerate(S):
            ref = math.log1p(sinr_direct(X[i], i, S, p, s2[i]))
            assert rate(GainMatrix(X), i, S, pp) == pytest.approx(ref, rel=1e-13)
            assert vec[pos] == pytest.approx(ref, rel=1e-13)


def test_estimated_rate_examples():
    rng = np.random.default_rng(3)
    X = rng.exponential(size=(5, 5))
    pp = PowerProfile.uniform(5, 3.0)
    S = [0, 2, 4]
    for i in S:
        a = estimated_rate(GainEstimate(i, X[i]), i, S, pp)
        b = rate(GainMatrix(X), i, S, pp)
        assert abs(a - b) <= 4 * np.spacing(b)
        assert estimated_rate(GainEstimate(i, np.zeros(5)), i, S, pp) == 0.0
    assert estimated_rate(X, 2, [2], pp) == pytest.approx(math.log(1 + 3.0 * X[2, 2]), rel=1e-14)


def test_estimated_rate_uses_unit_noise():
    X = np.array([[2.0]])
    pp = PowerProfile([1.0], [4.0])
    assert estimated_rate(X, 0, [0], pp) == pytest.approx(math.log(3.0))
    assert rate(GainMatrix(X), 0, [0], pp) == pytest.approx(math.log(1.5))


def test_lipschitz_bound_examples():
    row = np.array([1.0, 2.0, 3.0])
    assert lipschitz_bound(row, row, [0, 1, 2], 5.0) == 0.0
    assert lipschitz_bound(row, row + np.array([0, 1.0, 0]), [0, 1, 2], 1.0) == 2.0
    # coordinates outside S are ignored
    assert lipschitz_bound(row, row + np.array([0, 1.0, 0]), [0, 2], 1.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_lipschitz_bound_monotone_in_s(seed):
    rng = np.random.default_rng(seed)
    N = 8
    x, e = rng.exponential(size=N), rng.exponential(size=N)
    S = rng.choice(N, 3, replace=False).tolist()
    S2 = sorted(set(S) | set(rng.choice(N, 3).tolist()))
    assert lipschitz_bound(x, e, S, 2.0) <= lipschitz_bound(x, e, S2, 2.0)


def test_rate_gap_with_truth_is_zero():
    X = np.random.default_rng(4).exponential(size=(4, 4))
    rep = rate_gap(GainMatrix(X), GainEstimate(1, X[1]), 1, [0, 1, 3], PowerProfile.uniform(4, 2.0))
    assert rep.gap == 0.0 and rep.lipschitz_bound == 0.0
    assert rep.receiver_id == 1


def test_single_gain_perturbation_bound():
    rng = np.random.default_rng(5)
    for _ in range(2000):
        N = int(rng.integers(1, 7))
        X = rng.exponential(size=(N, N))
        P = rng.uniform(0.1, 20)
        S = list(range(N))
        i, j = rng.integers(N), rng.integers(N)
        delta = rng.exponential()
        est = X[i].copy()
        est[j] = max(est[j] + rng.choice([-1, 1]) * delta, 0.0)
        d = abs(est[j] - X[i, j])
        rep = rate_gap(GainMatrix(X), est, i, S, PowerProfile.uniform(N, P))
        assert rep.gap <= 2 * P * d * (1 + 1e-12) + 1e-15


def test_gap_below_lipschitz_bound_randomized():
    """Vectorized sweep over 10^5 random instances with powers up to P."""
    rng = np.random.default_rng(6)
    violations = 0
    n_inst = 0
    for N in (1, 2, 3, 5, 8):
        B = 20_000
        P = rng.choice([0.1, 1.0, 10.0, 100.0], size=B)
        p = rng.uniform(0.01, 1.0, size=(B, N)) * P[:, None]
        p[:, 0] = P  # at least one node at full power
        x = rng.exponential(size=(B, N)) * rng.choice([1e-3, 1.0, 10.0], size=(B, 1))
        xh = np.abs(x + rng.normal(size=(B, N)) * rng.choice([1e-4, 0.1, 1.0, 5.0], size=(B, 1)))
        mask = rng.random((B, N)) < 0.6
        i = rng.integers(N, size=B)
        mask[np.arange(B), i] = True
        rows = np.arange(B)

        def r(g):
            interf = np.sum(np.where(mask, p * g, 0.0), axis=1) - p[rows, i] * g[rows, i]
            return np.log1p(p[rows, i] * g[rows, i] / (1.0 + interf))

        gap = np.abs(r(x) - r(xh))
        bound = 2 * P * np.sum(np.where(mask, np.abs(x - xh), 0.0), axis=1)
        violations += int(np.sum(gap > bound * (1 + 1e-12) + 1e-15))
        n_inst += B
        # spot check the vectorized form against the package
        for b in range(0, B, 4000):
            S = np.flatnonzero(mask[b]).tolist()
            pp = PowerProfile(p[b], np.ones(N))
            rep = rate_gap(GainMatrix(np.tile(x[b], (N, 1))), xh[b], int(i[b]), S, pp)
            assert rep.gap == pytest.approx(gap[b], rel=1e-9, abs=1e-15)
            assert rep.lipschitz_bound >= 2 * P[b] * np.sum(np.abs(x[b] - xh[b])[S]) * (1 - 1e-12)
    assert n_inst >= 100_000
    assert violations == 0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gap_below_bound_hypothesis(seed):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(1, 7))
    X = rng.exponential(size=(N, N))
    est = np.abs(X + rng.normal(scale=rng.choice([1e-3, 1.0]), size=(N, N)))
    S = sorted(set(rng.choice(N, int(rng.integers(1, N + 1))).tolist()))
    i = S[int(rng.integers(len(S)))]
    pp = PowerProfile(rng.uniform(0.1, 5, N), np.ones(N))
    rep = rate_gap(GainMatrix(X), est, i, S, pp)
    assert rep.gap == pytest.approx(abs(rep.true_rate - rep.est_rate))
    assert rep.gap <= rep.lipschitz_bound * (1 + 1e-12) + 1e-15


def test_rate_monotone_in_gains():
    rng = np.random.default_rng(7)
    pp = PowerProfile.uniform(4, 2.0)
    for _ in range(200):
        X = rng.exponential(size=(4, 4))
        base = rate(GainMatrix(X), 0, [0, 1, 2, 3], pp)
        up = X.copy()
        up[0, 0] += rng.exponential() + 1e-6
        assert rate(GainMatrix(up), 0, [0, 1, 2, 3], pp) > base
        j = int(rng.integers(1, 4))
        more = X.copy()
        more[0, j] += rng.exponential()
        assert rate(GainMatrix(more), 0, [0, 1, 2, 3], pp) <= base


def test_link_rates_empty_and_zero_diagonal():
    assert link_rates(np.ones((3, 3)), [], np.ones(3), np.ones(3)).size == 0
    X = np.full((2, 2), 5.0)
    np.fill_diagonal(X, 0.0)
    assert np.all(link_rates(X, [0, 1], np.ones(2), np.ones(2)) == 0.0)
