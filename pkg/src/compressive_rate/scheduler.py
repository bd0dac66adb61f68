"""D2D discovery and pairing.

A rate oracle maps a scheduling set to the rates of its members; the same
pairing code runs on true rates (perfect CSI) and on rates computed from
estimated gains.

Feasible sets are closed under removal of D2D users, since dropping a
transmitter only removes interference. The exhaustive search therefore
enumerates subsets depth-first and never expands an infeasible set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .channel_model import GainMatrix
from .rates import PowerProfile, link_rates

__all__ = [
    "SchedulingDecision",
    "DiscoveryResult",
    "RateOracle",
    "CapExceededError",
    "EXHAUSTIVE_CAP",
    "discover_perfect",
    "discover_estimated",
    "pair_exhaustive",
    "pair_greedy",
    "pair",
    "is_feasible",
]

EXHAUSTIVE_CAP = 16
FEASIBILITY_TAGS = ("true-rates", "estimated-rates", "unchecked")


class CapExceededError(ValueError):
    """Too many candidates for exhaustive enumeration."""


def _index_tuple(idx: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted({int(i) for i in idx}))


@dataclass(frozen=True)
class SchedulingDecision:
    members: tuple[int, ...]
    cellular_set: tuple[int, ...] = ()
    feasible_under: str = "unchecked"
    method: str = "given"
    objective: float = float("nan")

    def __post_init__(self):
        members = _index_tuple(self.members)
        cellular = _index_tuple(self.cellular_set)
        if not set(cellular) <= set(members):
            raise ValueError("the cellular set must be part of every scheduling decision")
        if self.feasible_under not in FEASIBILITY_TAGS:
            raise ValueError(f"feasible_under must be one of {FEASIBILITY_TAGS}")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "cellular_set", cellular)

    @property
    def d2d_links(self) -> tuple[int, ...]:
        return tuple(i for i in self.members if i not in self.cellular_set)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DiscoveryResult:
    candidates: tuple[int, ...]
    epsilon_used: float
    basis: str

    def __post_init__(self):
        if self.basis not in ("perfect", "estimated"):
            raise ValueError("basis must be 'perfect' or 'estimated'")
        if self.epsilon_used < 0:
            raise ValueError("epsilon must be non-negative")
        object.__setattr__(self, "candidates", _index_tuple(self.candidates))


class RateOracle:
    """Rates of the members of a scheduling set under fixed gains.

    ``gains[i, j]`` is the gain from transmitter ``j`` seen at receiver ``i``
    and ``noise[i]`` the noise term in receiver ``i``'s denominator.
    """

    def __init__(self, gains: np.ndarray, powers: np.ndarray, noise: np.ndarray, basis: str):
        self.gains = np.asarray(gains, dtype=float)
        self.powers = np.asarray(powers, dtype=float)
        self.noise = np.asarray(noise, dtype=float)
        if basis not in ("true-rates", "estimated-rates"):
            raise ValueError("basis must be 'true-rates' or 'estimated-rates'")
        self.basis = basis
        n = self.gains.shape[0]
        if self.gains.shape != (n, n) or self.powers.shape != (n,) or self.noise.shape != (n,):
            raise ValueError("gains, powers and noise sizes do not agree")

    @classmethod
    def true_rates(cls, X: GainMatrix, pp: PowerProfile) -> "RateOracle":
        return cls(getattr(X, "entries", X), pp.powers, pp.noise_powers, "true-rates")

    @classmethod
    def estimated_rates(cls, ests, pp: PowerProfile) -> "RateOracle":
        """Oracle from one gain estimate per receiver (or an N x N array); unit noise."""
        if isinstance(ests, np.ndarray):
            G = ests
        else:
            ests = sorted(ests, key=lambda e: e.receiver_id)
            if [e.receiver_id for e in ests] != list(range(len(ests))):
                raise ValueError("need exactly one estimate per receiver")
            G = np.vstack([e.gains for e in ests])
        return cls(G, pp.powers, np.ones(pp.n_nodes), "estimated-rates")

    @property
    def n_nodes(self) -> int:
        return self.gains.shape[0]

    def rates(self, members: Sequence[int]) -> np.ndarray:
        """Rates of ``members`` (in the given order) when exactly they are active."""
        return link_rates(self.gains, members, self.powers, self.noise)

    def single_link_rates(self) -> np.ndarray:
        """Interference-free rate of every node."""
        return np.log1p(self.powers * np.diagonal(self.gains) / self.noise)

    def sum_rate(self, members: Sequence[int]) -> float:
        return float(np.sum(self.rates(members)))


def _thresholds(rbar, n: int) -> np.ndarray:
    r = np.broadcast_to(np.asarray(rbar, dtype=float), (n,))
    return np.array(r)


def discover_perfect(X: GainMatrix, N1, rbar, pp: PowerProfile) -> DiscoveryResult:
    """Nodes outside ``N1`` whose interference-free true rate meets ``rbar``."""
    oracle = RateOracle.true_rates(X, pp)
    thr = _thresholds(rbar, oracle.n_nodes)
    r = oracle.single_link_rates()
    cellular = set(_index_tuple(N1))
    cand = [i for i in range(oracle.n_nodes) if i not in cellular and r[i] >= thr[i]]
    return DiscoveryResult(tuple(cand), 0.0, "perfect")


def discover_estimated(ests, N1, rbar, pp: PowerProfile, eps: float = 0.0) -> DiscoveryResult:
    """Nodes outside ``N1`` whose interference-free estimated rate meets ``rbar + eps``."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    oracle = RateOracle.estimated_rates(ests, pp)
    thr = _thresholds(rbar, oracle.n_nodes) + eps
    r = oracle.single_link_rates()
    cellular = set(_index_tuple(N1))
    cand = [i for i in range(oracle.n_nodes) if i not in cellular and r[i] >= thr[i]]
    return DiscoveryResult(tuple(cand), float(eps), "estimated")


def is_feasible(oracle: RateOracle, S: SchedulingDecision, rbar, margin: float = 0.0) -> bool:
    """Whether every member of ``S`` reaches ``rbar + margin`` under the oracle."""
    if not set(S.cellular_set) <= set(S.members):
        raise ValueError("the cellular set must be part of the decision")
    m = list(S.members)
    if not m:
        return True
    thr = _thresholds(rbar, oracle.n_nodes)[m] + margin
    return bool(np.all(oracle.rates(m) >= thr))


def _is_better(total, links, best_total, best_links) -> bool:
    """Larger sum, then fewer D2D links, then lexicographically smaller."""
    tol = 1e-12 * max(1.0, abs(best_total))
    if total > best_total + tol:
        return True
    if total < best_total - tol:
        return False
    if len(links) != len(best_links):
        return len(links) < len(best_links)
    return links < best_links


def _decision(oracle, N1, links, total, method, feasible):
    tag = oracle.basis if feasible else "unchecked"
    return SchedulingDecision(tuple(N1) + tuple(links), tuple(N1), tag, method, float(total))


def pair_exhaustive(
    oracle: RateOracle, N1, candidates, rbar, eps: float = 0.0, cap: int = EXHAUSTIVE_CAP
) -> SchedulingDecision:
    """Best subset of ``candidates`` to schedule alongside ``N1``.

    Maximizes the sum of oracle rates over ``A u N1`` subject to every member
    reaching ``rbar + eps``. If ``N1`` alone violates its requirements no
    subset can help, and ``N1`` is returned tagged ``unchecked``.

    Raises
    ------
    CapExceededError
        If there are more than ``cap`` candidates.
    """
    N1 = _index_tuple(N1)
    cand = [c for c in _index_tuple(candidates) if c not in N1]
    if len(cand) > cap:
        raise CapExceededError(f"{len(cand)} candidates exceed the exhaustive cap of {cap}")
    thr = _thresholds(rbar, oracle.n_nodes) + eps

    def evaluate(links):
        members = sorted(N1 + links)
        r = oracle.rates(members)
        return bool(np.all(r >= thr[members])), float(np.sum(r))

    ok, total = evaluate(())
    if not ok:
        return _decision(oracle, N1, (), total, "exhaustive", False)
    best_total, best_links = total, ()
    stack = [((), 0)]
    while stack:
        links, start = stack.pop()
        # push in reverse so that children are visited in increasing order
        for k in range(len(cand) - 1, start - 1, -1):
            child = links + (cand[k],)
            ok, total = evaluate(child)
            if not ok:
                continue
            if _is_better(total, child, best_total, best_links):
                best_total, best_links = total, child
            stack.append((child, k + 1))
    return _decision(oracle, N1, best_links, best_total, "exhaustive", True)


def pair_greedy(oracle: RateOracle, N1, candidates, rbar, eps: float = 0.0) -> SchedulingDecision:
    """Add candidates by descending single-link rate.

    A candidate is kept when every member still reaches ``rbar + eps`` and
    the sum rate increases.
    """
    N1 = _index_tuple(N1)
    cand = [c for c in _index_tuple(candidates) if c not in N1]
    thr = _thresholds(rbar, oracle.n_nodes) + eps
    single = oracle.single_link_rates()
    order = sorted(cand, key=lambda c: (-single[c], c))

    members = list(N1)
    r = oracle.rates(members)
    total = float(np.sum(r))
    if members and not np.all(r >= thr[members]):
        return _decision(oracle, N1, (), total, "greedy", False)
    links: list[int] = []
    for c in order:
        trial = sorted(members + [c])
        rt = oracle.rates(trial)
        t_sum = float(np.sum(rt))
        if t_sum > total and np.all(rt >= thr[trial]):
            members, total = trial, t_sum
            links.append(c)
    return _decision(oracle, N1, tuple(sorted(links)), total, "greedy", True)


def pair(oracle: RateOracle, N1, candidates, rbar, eps: float = 0.0, cap: int = EXHAUSTIVE_CAP) -> SchedulingDecision:
    """Exhaustive pairing when the candidate set is small enough, greedy otherwise."""
    n_cand = len([c for c in set(candidates) if c not in set(N1)])
    if n_cand <= cap:
        return pair_exhaustive(oracle, N1, candidates, rbar, eps, cap)
    return pair_greedy(oracle, N1, candidates, rbar, eps)
