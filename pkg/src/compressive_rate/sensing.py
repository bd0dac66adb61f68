"""Random pilot sensing and per-receiver feedback.

All transmitters send their pilot sequences simultaneously, so receiver ``i``
observes ``Phi @ h_i`` plus measurement/quantization noise. One
:class:`MeasurementMatrix` is shared by every receiver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_model import ChannelMatrix, complex_gaussian

__all__ = [
    "MeasurementMatrix",
    "NoiseModel",
    "ReceiverFeedback",
    "gen_pilot_matrix",
    "measure",
    "measure_all",
    "concentration_probe",
]

ENSEMBLES = ("gaussian-1-over-M", "custom")
NOISE_KINDS = ("none", "bounded-ball", "scalar-quantizer")


@dataclass(frozen=True)
class MeasurementMatrix:
    """M x N pilot matrix; column ``j`` is the pilot sequence of transmitter ``j``."""

    entries: np.ndarray
    ensemble_tag: str = "custom"
    rng_seed: int | None = None

    def __post_init__(self):
        Phi = np.asarray(self.entries, dtype=complex)
        if Phi.ndim != 2 or min(Phi.shape) < 1:
            raise ValueError(f"measurement matrix must be 2-D and non-empty, got {Phi.shape}")
        if self.ensemble_tag not in ENSEMBLES:
            raise ValueError(f"unknown ensemble tag {self.ensemble_tag!r}")
        Phi = np.array(Phi, copy=True)
        Phi.setflags(write=False)
        object.__setattr__(self, "entries", Phi)

    @property
    def m_pilots(self) -> int:
        return self.entries.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Additive feedback noise ``mu_i`` with a certified l2 bound.

    ``none``
        Exact feedback, bound 0.
    ``bounded-ball``
        ``mu`` uniform in the complex l2 ball of radius ``xi``.
    ``scalar-quantizer``
        Real and imaginary parts rounded to multiples of ``step``; the error
        per real dimension is at most ``step/2``, hence
        ``||mu||_2 <= step * sqrt(M/2)``.
    """

    kind: str = "none"
    xi: float = 0.0
    step: float = 0.0
    rng_seed: int | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.xi < 0 or self.step < 0:
            raise ValueError("xi and step must be non-negative")
        if self.kind == "scalar-quantizer" and self.step <= 0:
            raise ValueError("scalar quantizer needs a positive step")

    @classmethod
    def bounded_ball(cls, xi: float, rng_seed: int | None = None) -> "NoiseModel":
        return cls("bounded-ball", xi=xi, rng_seed=rng_seed)

    @classmethod
    def scalar_quantizer(cls, step: float) -> "NoiseModel":
        return cls("scalar-quantizer", step=step)

    def bound(self, m_pilots: int) -> float:
        """Certified bound on ``||mu||_2`` for ``m_pilots`` measurements."""
        if self.kind == "none":
            return 0.0
        if self.kind == "bounded-ball":
            return float(self.xi)
        return float(self.step * np.sqrt(m_pilots / 2.0))

    def apply(self, y: np.ndarray, receiver: int = 0) -> np.ndarray:
        if self.kind == "none":
            return y.copy()
        if self.kind == "scalar-quantizer":
            q = self.step
            return q * (np.round(y.real / q) + 1j * np.round(y.imag / q))
        rng = np.random.default_rng([0 if self.rng_seed is None else self.rng_seed, receiver])
        m = y.size
        direction = complex_gaussian(rng, m)
        direction /= np.linalg.norm(direction)
        # uniform in a ball of real dimension 2m
        radius = self.xi * rng.uniform() ** (1.0 / (2 * m))
        return y + radius * direction


@dataclass(frozen=True)
class ReceiverFeedback:
    receiver_id: int
    z: np.ndarray
    xi_bound: float

    def __post_init__(self):
        if self.xi_bound < 0 or not np.isfinite(self.xi_bound):
            raise ValueError("xi_bound must be finite and non-negative")
        z = np.array(self.z, dtype=complex, copy=True).ravel()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)


def gen_pilot_matrix(M: int, N: int, seed=None) -> MeasurementMatrix:
    """I.i.d. CN(0, 1/M) pilots, so that ``E ||Phi a||^2 = ||a||^2``."""
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    rng = np.random.default_rng(seed)
    entries = complex_gaussian(rng, (M, N), variance=1.0 / M)
    tag_seed = seed if isinstance(seed, (int, np.integer)) else None
    return MeasurementMatrix(entries, "gaussian-1-over-M", tag_seed)


def measure(
    Phi: MeasurementMatrix,
    H: ChannelMatrix,
    noise: NoiseModel | None = None,
    receiver: int = 0,
) -> ReceiverFeedback:
    """Feedback of ``receiver``: ``z = Phi h_i + mu_i`` and its noise bound."""
    noise = noise or NoiseModel()
    if Phi.n_nodes != H.n_nodes:
        raise ValueError(f"Phi has {Phi.n_nodes} columns but H has {H.n_nodes} nodes")
    if not 0 <= receiver < H.n_nodes:
        raise IndexError(f"receiver {receiver} out of range")
    y = Phi.entries @ H.h(receiver)
    z = noise.apply(y, receiver)
    return ReceiverFeedback(receiver, z, noise.bound(Phi.m_pilots))


def measure_all(
    Phi: MeasurementMatrix, H: ChannelMatrix, noise: NoiseModel | None = None
) -> list[ReceiverFeedback]:
    return [measure(Phi, H, noise, i) for i in range(H.n_nodes)]


def concentration_probe(
    M: int,
    N: int,
    eps: float,
    n_trials: int,
    seed=None,
    a: np.ndarray | None = None,
    batch: int = 500,
) -> float:
    """Empirical frequency of ``| ||Phi a||^2 - ||a||^2 | > eps ||a||^2``.

    ``a`` defaults to a random unit vector drawn once; a fresh Gaussian
    ``Phi`` is drawn for every trial.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    rng = np.random.default_rng(seed)
    if a is None:
        a = complex_gaussian(rng, N)
        a /= np.linalg.norm(a)
    a = np.asarray(a, dtype=complex)
    na2 = float(np.vdot(a, a).real)
    hits = 0
    done = 0
    while done < n_trials:
        b = min(batch, n_trials - done)
        Phis = complex_gaussian(rng, (b, M, N), variance=1.0 / M)
        v = Phis @ a
        e = np.einsum("bm,bm->b", v.conj(), v).real
        hits += int(np.count_nonzero(np.abs(e - na2) > eps * na2))
        done += b
    return hits / n_trials
