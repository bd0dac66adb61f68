"""Numerical evaluation of sample-complexity, recovery and rate-gap bounds.

Combinatorial and exponential factors are handled in log-space; probability
bounds are returned both raw (possibly above one, or infinite) and clamped
to [0, 1].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "C1",
    "KAPPA",
    "BoundDomainError",
    "NoBoundError",
    "TooExpensiveError",
    "RipBoundQuery",
    "ConcentrationProfile",
    "RateEstBoundQuery",
    "ProbabilityBound",
    "rip_sample_count",
    "rip_delta_bound",
    "cs_error_constants",
    "cs_error_bound",
    "cs_rate_gap_threshold",
    "concentration_bound",
    "rate_est_bound_rhs",
    "rate_est_gap_threshold",
    "linear_rate_gap_threshold",
    "compression_curve",
    "empirical_rip_constant",
    "gaussian_norm_tail",
]

_S = math.sqrt(0.5)
C1 = 2.0 * (1.0 + _S) + (1.0 + _S) ** 2
KAPPA = 2.0 / (1.0 - math.log(2.0))

RIP_EXHAUSTIVE_MAX_N = 24
RIP_EXHAUSTIVE_MAX_K = 3


class BoundDomainError(ValueError):
    """Parameters outside the range where a bound is defined."""


class NoBoundError(ValueError):
    """Too few measurements for the bound to say anything."""


class TooExpensiveError(ValueError):
    """An exact computation was requested beyond its size gate."""


@dataclass(frozen=True)
class ProbabilityBound:
    raw: float
    clamped: float
    log_value: float


def _probability(log_value: float) -> ProbabilityBound:
    raw = math.exp(log_value) if log_value < 709.0 else math.inf
    return ProbabilityBound(raw, min(max(raw, 0.0), 1.0), log_value)


def _logsumexp(terms: Sequence[float]) -> float:
    finite = [t for t in terms if t != -math.inf]
    if not finite:
        return -math.inf
    m = max(finite)
    if m == math.inf:
        return math.inf
    return m + math.log(sum(math.exp(t - m) for t in finite))


def _log_binom(n: int, r: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


@dataclass(frozen=True)
class RipBoundQuery:
    k: int
    N: int
    delta: float
    eps_fail: float
    eta: float | None = None

    def __post_init__(self):
        if not 1 <= self.k <= self.N:
            raise BoundDomainError(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        if not 0 < self.delta < 1:
            raise BoundDomainError("delta must lie in (0, 1)")
        if not 0 < self.eps_fail < 1:
            raise BoundDomainError("eps_fail must lie in (0, 1)")
        if self.eta is not None and not 0 < self.eta < 1:
            raise BoundDomainError("eta must lie in (0, 1)")

    @property
    def log_term(self) -> float:
        """``k ln(eN/k) + ln(2/eps)``."""
        return _log_term(self.k, self.N, self.eps_fail)


def _log_term(k: int, N: int, eps: float) -> float:
    return k * math.log(math.e * N / k) + math.log(2.0 / eps)


def rip_sample_count(q: RipBoundQuery, for_recovery: bool = False) -> int:
    """Number of Gaussian measurements that guarantees ``delta_k <= delta``.

    ``M = ceil(2 C1^2 delta^-2 (k ln(eN/k) + ln(2/eps)))`` with probability
    at least ``1 - eps``. With ``for_recovery=True`` a warning is issued when
    ``delta >= 1/3``, where the l1 recovery guarantee no longer applies.
    """
    if for_recovery and q.delta >= 1.0 / 3.0:
        warnings.warn("delta >= 1/3: the l1 recovery error bound does not apply", stacklevel=2)
    return int(math.ceil(2.0 * C1**2 * q.log_term / q.delta**2))


def rip_delta_bound(M: int, N: int, k: int, eps_fail: float) -> float:
    """High-probability upper bound on ``delta_k`` for an M x N Gaussian matrix.

    Raises
    ------
    NoBoundError
        If ``eta >= 1``, i.e. ``M < 2 (k ln(eN/k) + ln(2/eps))``.
    """
    if not 1 <= k <= N or M < 1 or not 0 < eps_fail < 1:
        raise BoundDomainError("need 1 <= k <= N, M >= 1 and 0 < eps_fail < 1")
    eta = math.sqrt(2.0 * _log_term(k, N, eps_fail) / M)
    if eta >= 1.0:
        raise NoBoundError(f"eta = {eta:.4g} >= 1; M = {M} is too small")
    c = 1.0 + 1.0 / math.sqrt(2.0 * math.log(math.e * N / k))
    return 2.0 * c * eta + c * c * eta * eta


def cs_error_constants(delta: float) -> tuple[float, float]:
    """``(C2, C3)`` of the l1 recovery error bound, defined for ``0 <= delta < 1/3``."""
    if not 0.0 <= delta < 1.0 / 3.0:
        raise BoundDomainError(f"delta must lie in [0, 1/3), got {delta}")
    d = 1.0 - 3.0 * delta
    C2 = (2.0 * math.sqrt(2.0) * (2.0 * delta + math.sqrt(d * delta)) + 2.0 * d) / d
    C3 = math.sqrt(2.0 * (1.0 + delta)) / d
    return C2, C3


def cs_error_bound(delta: float, sigma_k1: float, k: int, xi: float) -> float:
    """``C2 sigma_k(h)_1 / sqrt(k) + 2 C3 xi``, the l2 recovery error bound ``q``."""
    if sigma_k1 < 0 or xi < 0 or k < 1:
        raise BoundDomainError("sigma_k1 and xi must be non-negative and k >= 1")
    C2, C3 = cs_error_constants(delta)
    return C2 * sigma_k1 / math.sqrt(k) + 2.0 * C3 * xi


def cs_rate_gap_threshold(P: float, a_i: float, sigma_k1: float, k: int, xi: float, delta: float) -> float:
    """Rate-gap level ``2 P q (2 a_i + q)`` exceeded with probability at most eps."""
    if P < 0 or a_i < 0:
        raise BoundDomainError("P and a_i must be non-negative")
    q = cs_error_bound(delta, sigma_k1, k, xi)
    return 2.0 * P * q * (2.0 * a_i + q)


def concentration_bound(M: int, eps: float) -> float:
    """``2 exp(eps^2 M (ln 2 - 1) / 2)``, tail of ``| ||Phi a||^2 - ||a||^2 |``."""
    return 2.0 * math.exp(eps * eps * M * (math.log(2.0) - 1.0) / 2.0)


@dataclass(frozen=True)
class ConcentrationProfile:
    """``P(| ||Phi a||^2 - ||a||^2 | > eps ||a||^2) <= c0 exp(-gamma(eps))``."""

    c0: float
    gamma: Callable[[float], float]

    @classmethod
    def gaussian(cls, M: int) -> "ConcentrationProfile":
        return cls(2.0, lambda eps: eps * eps * M * (1.0 - math.log(2.0)) / 2.0)


@dataclass(frozen=True)
class RateEstBoundQuery:
    n: int
    N: int
    M: int
    P: float
    u0: float = 0.0
    rho0: float = 0.0
    eps: float = 0.0
    tail_prob_smax: float = 0.0
    tail_prob_noise: float = 0.0

    def __post_init__(self):
        if not 1 <= self.n <= self.N or self.M < 1:
            raise BoundDomainError("need 1 <= n <= N and M >= 1")
        for name in ("P", "u0", "rho0", "eps", "tail_prob_smax", "tail_prob_noise"):
            if getattr(self, name) < 0:
                raise BoundDomainError(f"{name} must be non-negative")


def rate_est_bound_rhs(
    q: RateEstBoundQuery, profile: ConcentrationProfile, eps: float | None = None
) -> ProbabilityBound:
    """Probability that some active link's linear-estimate rate gap exceeds its level.

    Sum of ``exp(log(4n^2) + n log(Ne/n) - gamma(eps))`` and
    ``(Ne/n)^n`` times each of the two tail probabilities. The constant
    ``c0`` of the profile does not enter.
    """
    eps = q.eps if eps is None else eps
    n, N = q.n, q.N
    log_union = n * math.log(N * math.e / n)
    terms = [math.log(4.0 * n * n) + log_union - profile.gamma(eps)]
    for t in (q.tail_prob_smax, q.tail_prob_noise):
        terms.append(log_union + math.log(t) if t > 0 else -math.inf)
    return _probability(_logsumexp(terms))


def rate_est_gap_threshold(P: float, h_norm_sq: float, n: int, u0: float, eps: float, rho0: float) -> float:
    """Rate-gap level ``2 P ||h_i||^2 (4 sqrt(n) (1 + u0) eps + rho0)``."""
    return 2.0 * P * h_norm_sq * (4.0 * math.sqrt(n) * (1.0 + u0) * eps + rho0)


def linear_rate_gap_threshold(
    P: float, n: int, N: int, M: int, k: int, eps_fail: float, combinatorial: str = "binomial"
) -> float:
    """Rate-gap level for the pseudo-inverse decoder on k-sparse Gaussian channels.

    ``16 P sqrt(kappa n / M) (sqrt(2) L + k sqrt(L))`` with
    ``L = ln((4 n N C + 1) / eps)``. ``C`` is ``binom(N, n)`` by default or
    the multiset coefficient ``binom(N + n - 1, n)`` with
    ``combinatorial="multiset"``.
    """
    if min(P, n, N, M, k) <= 0 or not 0 < eps_fail < 1:
        raise BoundDomainError("P, n, N, M, k must be positive and eps_fail in (0, 1)")
    if combinatorial == "binomial":
        if n > N:
            raise BoundDomainError("n must not exceed N")
        log_c = _log_binom(N, n)
    elif combinatorial == "multiset":
        log_c = _log_binom(N + n - 1, n)
    else:
        raise ValueError("combinatorial must be 'binomial' or 'multiset'")
    log_count = _logsumexp([math.log(4.0 * n * N) + log_c, 0.0])
    L = log_count - math.log(eps_fail)
    return 16.0 * P * math.sqrt(KAPPA * n / M) * (math.sqrt(2.0) * L + k * math.sqrt(L))


def compression_curve(k: int, eps_fail: float, delta: float, N_grid: Sequence[int]) -> list[tuple[int, float]]:
    """``(N, M/N)`` with ``M`` from :func:`rip_sample_count`, clamped at 1."""
    out = []
    for N in N_grid:
        N = int(N)
        M = rip_sample_count(RipBoundQuery(k, N, delta, eps_fail))
        out.append((N, min(1.0, M / N)))
    return out


def empirical_rip_constant(Phi, k: int) -> float:
    """Exact ``delta_k`` of ``Phi`` by enumerating every support of size ``k``.

    ``delta_k = max_T max(s_max(Phi_T)^2 - 1, 1 - s_min(Phi_T)^2)``; supports
    smaller than ``k`` are covered by interlacing.

    Raises
    ------
    TooExpensiveError
        Beyond ``N <= 24``, ``k <= 3``.
    """
    A = np.asarray(getattr(Phi, "entries", Phi), dtype=complex)
    N = A.shape[1]
    if N > RIP_EXHAUSTIVE_MAX_N or k > RIP_EXHAUSTIVE_MAX_K:
        raise TooExpensiveError(
            f"exhaustive RIP is limited to N <= {RIP_EXHAUSTIVE_MAX_N}, k <= {RIP_EXHAUSTIVE_MAX_K}"
        )
    if not 1 <= k <= N:
        raise BoundDomainError("need 1 <= k <= N")
    supports = np.array(list(combinations(range(N), k)))
    sub = A[:, supports].transpose(1, 0, 2)  # (n_supports, M, k)
    s = np.linalg.svd(sub, compute_uv=False)
    if A.shape[0] < k:
        lo = 1.0
    else:
        lo = float(1.0 - (s[:, -1] ** 2).min())
    hi = float((s[:, 0] ** 2).max() - 1.0)
    return max(hi, lo)


def gaussian_norm_tail(t: float) -> float:
    """``exp(-t^2/2)``.

    Bounds ``P(||a||_2 - E||a||_2 > t)`` for ``a ~ CN(0, I)``, the norm being
    a 1/sqrt(2)-Lipschitz function of the underlying real Gaussians. It does
    not bound the deviation of ``||a||_2^2`` once the dimension is large.
    """
    return math.exp(-t * t / 2.0)
