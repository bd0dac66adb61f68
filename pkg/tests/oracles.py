"""Reference implementations the package is checked against.

These are deliberately naive and share no code with the package.
"""

from itertools import combinations

import numpy as np


def l0_least_squares(Phi, z, k, rtol=1e-9):
    """Sparsest least-squares fit of ``z`` over all supports of size <= k.

    Returns the fit with the smallest support whose residual is at most
    ``rtol * ||z||``, or the best size-k fit if none qualifies.
    """
    M, N = Phi.shape
    best = None
    for size in range(0, k + 1):
        for T in combinations(range(N), size):
            x = np.zeros(N, dtype=complex)
            if size:
                sol = np.linalg.lstsq(Phi[:, T], z, rcond=None)[0]
                x[list(T)] = sol
            res = np.linalg.norm(Phi @ x - z)
            if best is None or res < best[0] - 1e-15:
                best = (res, x)
        if best[0] <= rtol * max(np.linalg.norm(z), 1e-300):
            return best[1]
    return best[1]


def sinr_direct(gains_row, i, S, powers, noise):
    interference = 0.0
    for j in S:
        if j != i:
            interference += powers[j] * gains_row[j]
    return powers[i] * gains_row[i] / (noise + interference)


def best_pairing_bruteforce(G, powers, noise, N1, candidates, thresholds):
    """Enumerate every subset with itertools; same tie-break as the package.

    Returns ``(links, total)`` maximizing the sum, then fewer links, then the
    lexicographically smallest tuple.
    """
    N1 = sorted(N1)
    cand = sorted(set(candidates) - set(N1))
    best = None
    for size in range(len(cand) + 1):
        for A in combinations(cand, size):
            S = sorted(N1 + list(A))
            rates = [np.log1p(sinr_direct(G[i], i, S, powers, noise[i])) for i in S]
            if any(r < thresholds[i] for r, i in zip(rates, S)):
                continue
            total = float(np.sum(rates))
            key = (-total, size, A)
            if best is None:
                best = (key, A, total)
                continue
            (bt, bs, bA) = best[0]
            tol = 1e-12 * max(1.0, abs(bt))
            if -total > bt + tol:
                continue
            if -total < bt - tol or size < bs or (size == bs and A < bA):
                best = (key, A, total)
    if best is None:
        return None, None
    return best[1], best[2]
