"""True and estimated achievable rates, rate gaps and the gap bound.

Rates are in nats. A scheduling set ``S`` may be given either as a
:class:`~compressive_rate.scheduler.SchedulingDecision` or as any iterable
of node indices.

The estimated rate uses a unit noise term in its denominator regardless of
``sigma2``; with ``sigma2 = 1`` and exact gains it coincides with the true
rate, and the gap bound

    |r_hat_i - r_i| <= 2 P sum_{j in S} |x_ij - x_hat_ij|

applies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .channel_model import GainMatrix

__all__ = [
    "PowerProfile",
    "RateReport",
    "members_of",
    "sinr",
    "rate",
    "estimated_rate",
    "rate_gap",
    "lipschitz_bound",
    "link_rates",
]


@dataclass(frozen=True)
class PowerProfile:
    powers: np.ndarray
    noise_powers: np.ndarray

    def __post_init__(self):
        p = np.array(self.powers, dtype=float, copy=True).ravel()
        s = np.array(self.noise_powers, dtype=float, copy=True).ravel()
        if p.size != s.size or p.size == 0:
            raise ValueError("powers and noise_powers must have the same non-zero length")
        if np.any(p <= 0) or np.any(s <= 0) or not np.all(np.isfinite(np.r_[p, s])):
            raise ValueError("powers and noise powers must be finite and positive")
        p.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "powers", p)
        object.__setattr__(self, "noise_powers", s)

    @classmethod
    def uniform(cls, n_nodes: int, P: float, sigma2: float = 1.0) -> "PowerProfile":
        return cls(np.full(n_nodes, float(P)), np.full(n_nodes, float(sigma2)))

    @property
    def p_max(self) -> float:
        return float(self.powers.max())

    @property
    def n_nodes(self) -> int:
        return self.powers.size


@dataclass(frozen=True)
class RateReport:
    receiver_id: int
    true_rate: float
    est_rate: float
    gap: float
    lipschitz_bound: float


def members_of(S) -> np.ndarray:
    """Sorted unique member indices of a decision or index iterable."""
    members = getattr(S, "members", S)
    return np.unique(np.asarray(list(members), dtype=int))


def _gains(obj) -> np.ndarray:
    return np.asarray(getattr(obj, "entries", getattr(obj, "gains", obj)), dtype=float)


def _check_member(i: int, members: np.ndarray) -> None:
    if i not in members:
        raise ValueError(f"receiver {i} is not in the scheduling set")


def _sinr_row(row: np.ndarray, i: int, members: np.ndarray, powers: np.ndarray, noise: float) -> float:
    others = members[members != i]
    interference = float(np.dot(powers[others], row[others]))
    return powers[i] * row[i] / (noise + interference)


def sinr(X: GainMatrix, i: int, S, pp: PowerProfile) -> float:
    members = members_of(S)
    _check_member(i, members)
    return float(_sinr_row(_gains(X)[i], i, members, pp.powers, pp.noise_powers[i]))


def rate(X: GainMatrix, i: int, S, pp: PowerProfile) -> float:
    return float(np.log1p(sinr(X, i, S, pp)))


def estimated_rate(est, i: int, S, pp: PowerProfile) -> float:
    """Rate computed from the estimated gains of receiver ``i`` with unit noise."""
    members = members_of(S)
    _check_member(i, members)
    row = _gains(est)
    if row.ndim == 2:
        row = row[i]
    return float(np.log1p(_sinr_row(row, i, members, pp.powers, 1.0)))


def lipschitz_bound(x_row, est_row, S, P: float) -> float:
    members = members_of(S)
    x_row = np.asarray(x_row, dtype=float)
    est_row = np.asarray(est_row, dtype=float)
    return float(2.0 * P * np.sum(np.abs(x_row[members] - est_row[members])))


def rate_gap(X: GainMatrix, est, i: int, S, pp: PowerProfile) -> RateReport:
    r = rate(X, i, S, pp)
    r_hat = estimated_rate(est, i, S, pp)
    est_row = _gains(est)
    if est_row.ndim == 2:
        est_row = est_row[i]
    bound = lipschitz_bound(_gains(X)[i], est_row, S, pp.p_max)
    return RateReport(int(i), r, r_hat, abs(r - r_hat), bound)


def link_rates(G: np.ndarray, members: Iterable[int], powers: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Rates of every member of ``S`` at once.

    ``G[i, j]`` is the (true or estimated) gain from ``j`` to ``i`` and
    ``noise[i]`` the noise term of receiver ``i``.
    """
    m = np.asarray(members, dtype=int)
    if m.size == 0:
        return np.zeros(0)
    sub = G[np.ix_(m, m)] * powers[m]
    desired = np.diagonal(sub).copy()
    np.fill_diagonal(sub, 0.0)
    interference = sub.sum(axis=1)
    return np.log1p(desired / (noise[m] + interference))
