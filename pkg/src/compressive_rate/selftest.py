"""Fast invariant checks runnable without pytest (``compressive-rate selftest``)."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import bounds, estimators, rates, scheduler, sensing, sparse_solver
from .channel_model import ChannelMatrix, SparseModelConfig, best_k_term_error, gain_matrix, gen_sparse_channels


def _gap_bound(rng) -> bool:
    N, P = 8, 5.0
    pp = rates.PowerProfile.uniform(N, P)
    for _ in range(2000):
        X = rng.exponential(size=(N, N))
        Xh = np.abs(X + rng.normal(scale=0.3, size=(N, N)))
        S = rng.choice(N, size=rng.integers(1, N + 1), replace=False)
        i = int(rng.choice(S))
        rep = rates.rate_gap(X, Xh, i, S, pp)
        if rep.gap > rep.lipschitz_bound + 1e-9:
            return False
    return True


def _bpdn_recovery(rng) -> bool:
    N, M, k = 40, 20, 3
    ok = 0
    for t in range(10):
        Phi = sensing.gen_pilot_matrix(M, N, int(rng.integers(2**32)))
        x = np.zeros(N, dtype=complex)
        x[rng.choice(N, k, replace=False)] = rng.normal(size=k) + 1j * rng.normal(size=k)
        sol = sparse_solver.solve_bpdn(sparse_solver.BpdnProblem(Phi, Phi.entries @ x, 0.0))
        ok += sol.converged and np.linalg.norm(sol.x_hat - x) <= 1e-4 * np.linalg.norm(x)
    return ok >= 9


def _pinv(rng) -> bool:
    Phi = sensing.gen_pilot_matrix(12, 30, int(rng.integers(2**32)))
    Psi = estimators.pseudo_inverse(Phi).Psi
    Pr = Psi @ Phi.entries
    return (np.linalg.norm(Phi.entries @ Psi - np.eye(12)) <= 1e-10
            and np.linalg.norm(Pr @ Pr - Pr) <= 1e-9
            and abs(np.linalg.norm(Pr, 2) - 1.0) <= 1e-9)


def _sparse_rows(rng) -> bool:
    H = gen_sparse_channels(SparseModelConfig(30, 4, "uniform-random", int(rng.integers(2**32))))
    return all(np.count_nonzero(H.h(i)) == 4 and best_k_term_error(H.h(i), 4) == 0 for i in range(30))


def _pairing(rng) -> bool:
    N = 8
    pp = rates.PowerProfile.uniform(N, 10.0)
    rbar = 0.1 * math.log1p(10.0)
    for _ in range(50):
        X = gain_matrix(ChannelMatrix(rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))))
        oracle = scheduler.RateOracle.true_rates(X, pp)
        cand = scheduler.discover_perfect(X, (), rbar, pp).candidates
        ex = scheduler.pair_exhaustive(oracle, (), cand, rbar)
        gr = scheduler.pair_greedy(oracle, (), cand, rbar)
        if not (scheduler.is_feasible(oracle, ex, rbar) and scheduler.is_feasible(oracle, gr, rbar)):
            return False
        if oracle.sum_rate(list(gr.members)) > oracle.sum_rate(list(ex.members)) + 1e-12:
            return False
    return True


def _constants(rng) -> bool:
    C2, C3 = bounds.cs_error_constants(0.0)
    M = bounds.rip_sample_count(bounds.RipBoundQuery(10, 10_000, 1.0 / 3.0, 0.1))
    return (abs(bounds.C1 - 6.32843) <= 1e-5 and abs(bounds.KAPPA - 6.51778) <= 1e-4
            and abs(C2 - 2.0) <= 1e-12 and abs(C3 - math.sqrt(2.0)) <= 1e-12 and abs(M - 59167) <= 1)


CHECKS: list[tuple[str, Callable[[np.random.Generator], bool]]] = [
    ("rate gap within its bound", _gap_bound),
    ("noiseless BPDN recovers sparse vectors", _bpdn_recovery),
    ("pseudo-inverse projector identities", _pinv),
    ("sparse channel rows are exactly k-sparse", _sparse_rows),
    ("pairing feasible, greedy <= exhaustive", _pairing),
    ("bound constants", _constants),
]


def run_selftest(seed: int = 2024, verbose: bool = True) -> bool:
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, check in CHECKS:
        ok = bool(check(rng))
        all_ok &= ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return all_ok
