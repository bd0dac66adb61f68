"""Composite channel matrices and compressibility measures.

Indexing convention: ``H[i, j]`` is the coefficient from transmitter ``j`` to
receiver ``i``, so the vector of all channels into receiver ``i`` is row ``i``
(available through :meth:`ChannelMatrix.h`). All indices are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "ChannelMatrix",
    "GainMatrix",
    "GroupModelConfig",
    "SparseModelConfig",
    "complex_gaussian",
    "random_pathloss_matrix",
    "gen_group_channels",
    "gen_sparse_channels",
    "best_k_term_error",
    "gain_matrix",
]

SUPPORT_RULES = ("uniform-random", "diagonal-forced")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Draw circularly-symmetric CN(0, variance) samples.

    Real and imaginary parts are independent N(0, variance/2), so that
    ``E|x|^2 = variance``.
    """
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelMatrix:
    """N x N complex channel coefficients (row = receiver, column = transmitter)."""

    entries: np.ndarray

    def __post_init__(self):
        H = np.asarray(self.entries, dtype=complex)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
            raise ValueError(f"channel matrix must be square and non-empty, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise ValueError("channel matrix has non-finite entries")
        object.__setattr__(self, "entries", _frozen(H))

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[0]

    def h(self, i: int) -> np.ndarray:
        """Channel vector into receiver ``i``: ``(h_{i,0}, ..., h_{i,N-1})``."""
        return self.entries[i]


@dataclass(frozen=True)
class GainMatrix:
    """Elementwise squared channel magnitudes ``x_{i,j} = |h_{i,j}|^2``."""

    entries: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.entries, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ValueError(f"gain matrix must be square, got shape {X.shape}")
        if np.any(X < 0) or not np.all(np.isfinite(X)):
            raise ValueError("gains must be finite and non-negative")
        object.__setattr__(self, "entries", _frozen(X))

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[0]

    def row(self, i: int) -> np.ndarray:
        return self.entries[i]


@dataclass(frozen=True)
class GroupModelConfig:
    """Group path-loss model: users in the same group share path loss.

    ``pathloss_matrix[g, f]`` is the amplitude factor applied to channels from
    transmitters in group ``f`` to receivers in group ``g``.
    """

    group_sizes: tuple[int, ...]
    pathloss_matrix: np.ndarray
    rng_seed: int | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.group_sizes)
        if not sizes or any(s < 1 for s in sizes):
            raise ValueError("group sizes must be positive integers")
        A = np.asarray(self.pathloss_matrix, dtype=float)
        G = len(sizes)
        if A.shape != (G, G):
            raise ValueError(f"pathloss matrix must be {G}x{G}, got {A.shape}")
        if np.any(A < 0) or not np.all(np.isfinite(A)):
            raise ValueError("path loss coefficients must be finite and non-negative")
        if not np.allclose(np.diag(A), 1.0, rtol=0, atol=1e-12):
            raise ValueError("diagonal of the pathloss matrix must be all ones")
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "pathloss_matrix", _frozen(A))

    @property
    def n_nodes(self) -> int:
        return sum(self.group_sizes)

    def group_index(self) -> np.ndarray:
        """Group label of every node."""
        return np.repeat(np.arange(len(self.group_sizes)), self.group_sizes)


@dataclass(frozen=True)
class SparseModelConfig:
    n_nodes: int
    sparsity: int
    support_rule: str = "diagonal-forced"
    rng_seed: int | None = None

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be >= 1")
        if not 1 <= self.sparsity <= self.n_nodes:
            raise ValueError(f"sparsity must lie in [1, {self.n_nodes}], got {self.sparsity}")
        if self.support_rule not in SUPPORT_RULES:
            raise ValueError(f"support_rule must be one of {SUPPORT_RULES}")


def random_pathloss_matrix(
    n_groups: int, rng, z_range: tuple[float, float] = (0.0, 1.0)
) -> np.ndarray:
    """Symmetric path-loss matrix with ``a[g, f] = 10**(z/10)``, ``z ~ U(z_range)``.

    One draw per unordered group pair; the diagonal is fixed to one.
    """
    rng = np.random.default_rng(rng)
    A = np.ones((n_groups, n_groups))
    iu = np.triu_indices(n_groups, k=1)
    z = rng.uniform(z_range[0], z_range[1], size=len(iu[0]))
    A[iu] = 10.0 ** (z / 10.0)
    A[(iu[1], iu[0])] = A[iu]
    return A


def gen_group_channels(cfg: GroupModelConfig) -> ChannelMatrix:
    """Draw ``h_{j,i} = a_{g,f} b_{j,i}`` with i.i.d. ``b ~ CN(0, 1)``."""
    rng = np.random.default_rng(cfg.rng_seed)
    N = cfg.n_nodes
    labels = cfg.group_index()
    amplitude = cfg.pathloss_matrix[np.ix_(labels, labels)]
    B = complex_gaussian(rng, (N, N))
    return ChannelMatrix(amplitude * B)


def gen_sparse_channels(cfg: SparseModelConfig) -> ChannelMatrix:
    """Draw a channel matrix whose every row has exactly ``k`` CN(0,1) entries."""
    rng = np.random.default_rng(cfg.rng_seed)
    N, k = cfg.n_nodes, cfg.sparsity
    H = np.zeros((N, N), dtype=complex)
    for i in range(N):
        if cfg.support_rule == "diagonal-forced":
            others = np.delete(np.arange(N), i)
            support = np.concatenate(([i], rng.choice(others, size=k - 1, replace=False)))
        else:
            support = rng.choice(N, size=k, replace=False)
        # a CN(0,1) draw is zero with probability 0, so supp has size exactly k
        H[i, support] = complex_gaussian(rng, k)
    return ChannelMatrix(H)


def best_k_term_error(x: Sequence[complex], k: int, p: float = 1) -> float:
    """l_p distance from ``x`` to the set of k-sparse vectors.

    The ``k`` largest-magnitude entries are kept (ties keep the lower
    index) and the norm of the remainder is returned.
    """
    x = np.asarray(x)
    n = x.size
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, {n}], got {k}")
    if p < 1:
        raise ValueError("p must be >= 1")
    mags = np.abs(x).ravel()
    if k == 0:
        tail = mags
    else:
        order = np.argsort(-mags, kind="stable")
        tail = mags[order[k:]]
    if tail.size == 0:
        return 0.0
    return float(np.linalg.norm(tail, ord=p))


def gain_matrix(H: ChannelMatrix) -> GainMatrix:
    E = H.entries
    return GainMatrix(E.real**2 + E.imag**2)
