"""Channel-gain estimators from compressed feedback.

Both families return squared magnitudes only; phases are never needed
downstream.

* linear: ``x_hat_j = |(Psi z)_j|^2`` for a fixed N x M decoder ``Psi``;
* non-linear: ``x_hat_j = |x_j|^2`` with ``x`` the BPDN solution for ``z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sensing import MeasurementMatrix, ReceiverFeedback
from .sparse_solver import SolverOptions, solve_bpdn_batch

__all__ = [
    "LinearDecoder",
    "GainEstimate",
    "SingularMatrixError",
    "pseudo_inverse",
    "matched_filter",
    "phi_hermitian_a",
    "linear_gain_estimate",
    "linear_gain_estimates",
    "nonlinear_gain_estimate",
    "nonlinear_gain_estimates",
]

DECODER_TAGS = ("pseudo-inverse", "phi-hermitian-A", "custom")
COND_LIMIT = 1e12
PSD_FLOOR = -1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    """``Phi Phi^H`` is numerically singular."""


def _entries(Phi) -> np.ndarray:
    return np.asarray(getattr(Phi, "entries", Phi), dtype=complex)


@dataclass(frozen=True)
class LinearDecoder:
    Psi: np.ndarray
    construction_tag: str = "custom"
    A: np.ndarray | None = None

    def __post_init__(self):
        Psi = np.array(self.Psi, dtype=complex, copy=True)
        if Psi.ndim != 2:
            raise ValueError("Psi must be a matrix")
        if self.construction_tag not in DECODER_TAGS:
            raise ValueError(f"unknown construction tag {self.construction_tag!r}")
        Psi.setflags(write=False)
        object.__setattr__(self, "Psi", Psi)
        if self.A is not None:
            A = np.array(self.A, dtype=complex, copy=True)
            if A.shape != (Psi.shape[1], Psi.shape[1]):
                raise ValueError(f"A must be {Psi.shape[1]}x{Psi.shape[1]}, got {A.shape}")
            A.setflags(write=False)
            object.__setattr__(self, "A", A)
        if self.construction_tag == "phi-hermitian-A":
            if self.A is None:
                raise ValueError("phi-hermitian-A decoder needs A")
            _check_psd(self.A)

    @property
    def shape(self) -> tuple[int, int]:
        return self.Psi.shape


@dataclass(frozen=True)
class GainEstimate:
    receiver_id: int
    gains: np.ndarray
    converged: bool = True

    def __post_init__(self):
        g = np.array(self.gains, dtype=float, copy=True).ravel()
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite and non-negative")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)


def _check_psd(A: np.ndarray) -> None:
    if not np.allclose(A, A.conj().T, rtol=0, atol=1e-10 * max(1.0, np.abs(A).max())):
        raise ValueError("A must be Hermitian")
    if np.linalg.eigvalsh(A).min() < PSD_FLOOR:
        raise ValueError("A must be positive semi-definite")


def pseudo_inverse(Phi: MeasurementMatrix) -> LinearDecoder:
    """Right pseudo-inverse ``Phi^H (Phi Phi^H)^{-1}`` of a wide ``Phi``.

    Computed from the thin QR factorization ``Phi^H = Q R``, which gives
    ``Psi = Q R^{-H}`` without forming ``Phi Phi^H``.

    Raises
    ------
    SingularMatrixError
        If the condition number of ``Phi Phi^H`` exceeds 1e12.
    """
    P = _entries(Phi)
    M, N = P.shape
    if M > N:
        raise ValueError(f"pseudo-inverse decoder needs M <= N, got M={M}, N={N}")
    Q, R = np.linalg.qr(P.conj().T)
    # cond(Phi Phi^H) = cond(R)^2
    if not np.all(np.diag(R)) or np.linalg.cond(R) ** 2 > COND_LIMIT:
        raise SingularMatrixError("Phi Phi^H is numerically singular")
    # Psi^H = R^{-1} Q^H
    Psi = np.linalg.solve(R, Q.conj().T).conj().T
    return LinearDecoder(Psi, "pseudo-inverse")


def matched_filter(Phi: MeasurementMatrix) -> LinearDecoder:
    """``Psi = Phi^H`` (the ``A = I`` member of the ``Phi^H A`` family)."""
    P = _entries(Phi)
    return LinearDecoder(P.conj().T, "phi-hermitian-A", np.eye(P.shape[0]))


def phi_hermitian_a(Phi: MeasurementMatrix, A: np.ndarray) -> LinearDecoder:
    """``Psi = Phi^H A`` for a Hermitian positive semi-definite ``A``."""
    P = _entries(Phi)
    A = np.asarray(A, dtype=complex)
    if A.shape != (P.shape[0], P.shape[0]):
        raise ValueError(f"A must be {P.shape[0]}x{P.shape[0]}, got {A.shape}")
    _check_psd(A)
    return LinearDecoder(P.conj().T @ A, "phi-hermitian-A", A)


def linear_gain_estimate(dec: LinearDecoder, fb: ReceiverFeedback) -> GainEstimate:
    if dec.Psi.shape[1] != fb.z.size:
        raise ValueError(f"decoder expects {dec.Psi.shape[1]} measurements, got {fb.z.size}")
    v = dec.Psi @ fb.z
    return GainEstimate(fb.receiver_id, v.real**2 + v.imag**2)


def linear_gain_estimates(dec: LinearDecoder, fbs: Sequence[ReceiverFeedback]) -> list[GainEstimate]:
    if not fbs:
        return []
    V = dec.Psi @ np.column_stack([fb.z for fb in fbs])
    G = V.real**2 + V.imag**2
    return [GainEstimate(fb.receiver_id, G[:, c]) for c, fb in enumerate(fbs)]


def nonlinear_gain_estimate(
    Phi: MeasurementMatrix, fb: ReceiverFeedback, opts: SolverOptions | None = None
) -> GainEstimate:
    return nonlinear_gain_estimates(Phi, [fb], opts)[0]


def nonlinear_gain_estimates(
    Phi: MeasurementMatrix, fbs: Sequence[ReceiverFeedback], opts: SolverOptions | None = None
) -> list[GainEstimate]:
    """BPDN gain estimates for several receivers sharing one pilot matrix.

    A receiver whose solve is not certified still gets the solver's best
    iterate, with ``converged=False``.
    """
    if not fbs:
        return []
    P = _entries(Phi)
    xi = np.array([fb.xi_bound for fb in fbs])
    Z = np.column_stack([fb.z for fb in fbs])
    sols = solve_bpdn_batch(P, Z, xi, opts)
    out = []
    for fb, s in zip(fbs, sols):
        x = s.x_hat
        out.append(GainEstimate(fb.receiver_id, x.real**2 + x.imag**2, s.converged))
    return out
