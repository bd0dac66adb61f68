"""Complex basis pursuit denoising.

Solves::

    minimize    sum_j |x_j|
    subject to  ||Phi x - z||_2 <= xi

over ``x`` in C^N. The l1 norm is the sum of complex moduli.

Method
------
1. Continuation over the penalty of the l1-regularized least-squares
   problem ``1/2 ||Phi x - z||^2 + lam ||x||_1``, each stage solved by
   accelerated proximal gradient (FISTA with adaptive restart, step from a
   power-iteration estimate of ``s_max(Phi)^2``). Problems sharing one
   ``Phi`` are advanced together as columns of a matrix.
2. Once a stage is close enough (``xi = 0``: every stage; ``xi > 0``: once
   the residual drops to ``xi``), Newton's method is applied to the KKT
   system restricted to the detected support. For ``xi > 0`` the penalty
   is one of the Newton unknowns, which places the residual exactly on the
   constraint; if that fails, the penalty is bracketed and bisected on the
   Pareto curve.
3. A candidate is accepted when it is feasible and the duality gap of the
   constrained problem, ``||x||_1 - (Re<y, z> - xi ||y||)`` with
   ``||Phi^H y||_inf <= 1``, is at most ``abs_tol * max(1, ||x||_1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BpdnProblem",
    "SolverOptions",
    "BpdnSolution",
    "soft_threshold_complex",
    "solve_bpdn",
    "solve_bpdn_batch",
    "duality_gap",
]

_TINY = np.finfo(float).tiny


@dataclass(frozen=True)
class SolverOptions:
    abs_tol: float = 1e-8
    feas_tol: float = 1e-6
    max_iters: int = 20000
    pareto_tol: float = 1e-6
    inner_tol: float = 1e-4
    lam_start: float = 0.1
    lam_decay: float = 0.2
    lam_floor: float = 1e-10

    def __post_init__(self):
        for name in ("abs_tol", "feas_tol", "pareto_tol", "inner_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0 < self.lam_decay < 1 or not 0 < self.lam_start <= 1:
            raise ValueError("lam_decay must lie in (0, 1) and lam_start in (0, 1]")


@dataclass(frozen=True)
class BpdnProblem:
    Phi: np.ndarray
    z: np.ndarray
    xi: float = 0.0

    def __post_init__(self):
        Phi = getattr(self.Phi, "entries", self.Phi)
        Phi = np.asarray(Phi, dtype=complex)
        z = np.asarray(self.z, dtype=complex).ravel()
        if Phi.ndim != 2 or Phi.shape[0] != z.size:
            raise ValueError(f"Phi {Phi.shape} and z ({z.size},) do not agree")
        if not self.xi >= 0:
            raise ValueError("xi must be non-negative")
        object.__setattr__(self, "Phi", Phi)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "xi", float(self.xi))


@dataclass(frozen=True)
class BpdnSolution:
    """Result of a BPDN solve.

    ``status`` is ``"optimal"`` (certified by the duality gap),
    ``"max_iters"`` (budget exhausted, best iterate returned) or
    ``"infeasible"`` (no ``x`` meets the constraint; least-squares
    solution returned).
    """

    x_hat: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    gap: float
    status: str

    @property
    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.x_hat)))


def soft_threshold_complex(v, t):
    """Proximal map of ``t |.|``: ``v * max(1 - t/|v|, 0)``, zero at ``v = 0``."""
    v = np.asarray(v, dtype=complex)
    mag = np.abs(v)
    with np.errstate(over="ignore"):
        shrink = np.maximum(1.0 - t / np.maximum(mag, _TINY), 0.0)
    out = v * shrink
    return out[()] if out.ndim == 0 else out


def duality_gap(Phi: np.ndarray, z: np.ndarray, xi: float, x: np.ndarray, y: np.ndarray) -> float:
    """Gap between ``||x||_1`` and the dual value of ``y`` (rescaled to be feasible)."""
    c = float(np.max(np.abs(Phi.conj().T @ y))) if y.size else 0.0
    if c > 1.0:
        y = y / c
    dual = float(np.vdot(y, z).real) - xi * float(np.linalg.norm(y))
    return float(np.sum(np.abs(x))) - dual


def _largest_singular_value(A: np.ndarray, iters: int = 200, rtol: float = 1e-10) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(A.shape[1]) + 1j * rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    s = 0.0
    for _ in range(iters):
        w = A.conj().T @ (A @ v)
        s_new = float(np.linalg.norm(w))
        if s_new == 0.0:
            return 0.0
        v = w / s_new
        if abs(s_new - s) <= rtol * s_new:
            s = s_new
            break
        s = s_new
    return float(np.sqrt(s))


def _fista(A, AH, Z, lam, L, X0, tol, max_iters, check_every=10):
    """Batched FISTA on ``1/2||A x_b - z_b||^2 + lam_b ||x_b||_1`` (columns b)."""
    X = X0.copy()
    Y = X.copy()
    t = np.ones(Z.shape[1])
    step_thresh = lam / L
    zz = np.einsum("ij,ij->j", Z.conj(), Z).real
    k = 0
    for k in range(1, max_iters + 1):
        V = Y - (AH @ (A @ Y - Z)) / L
        mag = np.abs(V)
        Xn = V * np.maximum(1.0 - step_thresh / np.maximum(mag, _TINY), 0.0)
        restart = np.einsum("ij,ij->j", (Y - Xn).conj(), Xn - X).real > 0
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / tn
        beta[restart] = 0.0
        tn[restart] = 1.0
        Y = Xn + beta * (Xn - X)
        X, t = Xn, tn
        if k % check_every == 0:
            R = Z - A @ X
            C = np.max(np.abs(AH @ R), axis=0)
            s = np.minimum(1.0, lam / np.maximum(C, _TINY))
            l1 = np.sum(np.abs(X), axis=0)
            rr = np.einsum("ij,ij->j", R.conj(), R).real
            primal = 0.5 * rr + lam * l1
            W = Z - s * R
            dual = 0.5 * zz - 0.5 * np.einsum("ij,ij->j", W.conj(), W).real
            if np.all(primal - dual <= tol * lam * np.maximum(1.0, l1)):
                break
    return X, k


def _real_block(C: np.ndarray) -> np.ndarray:
    return np.block([[C.real, -C.imag], [C.imag, C.real]])


def _radial_jacobian(xt: np.ndarray):
    """Real 2x2-block Jacobian of ``x -> x/|x|`` as four diagonals."""
    ax = np.abs(xt)
    ur = xt.real / ax
    ui = xt.imag / ax
    return (1 - ur**2) / ax, -ur * ui / ax, (1 - ui**2) / ax


def _newton_step(J, F, square):
    if square:
        try:
            return np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            pass
    return np.linalg.lstsq(J, -F, rcond=None)[0]


def _newton_bp(A, z, x, y, T, max_iters=30):
    """Newton on ``A_T x_T = z, A_T^H y = x_T/|x_T|``."""
    At = A[:, T]
    AtH = At.conj().T
    m, t = At.shape
    n = 2 * (t + m)
    J = np.zeros((n, n))
    J[: 2 * m, : 2 * t] = _real_block(At)
    J[2 * m :, 2 * t :] = _real_block(AtH)
    di = np.arange(t)
    r0 = 2 * m
    xt = x[T].astype(complex)

    def residual(xt, y):
        e1 = At @ xt - z
        e2 = AtH @ y - xt / np.abs(xt)
        return np.concatenate([e1.real, e1.imag, e2.real, e2.imag])

    F = residual(xt, y)
    nf = np.linalg.norm(F)
    scale = 1.0 + np.linalg.norm(z)
    it = 0
    for it in range(1, max_iters + 1):
        if nf <= 1e-13 * scale:
            break
        drr, dri, dii = _radial_jacobian(xt)
        J[r0 + di, di] = -drr
        J[r0 + di, t + di] = -dri
        J[r0 + t + di, di] = -dri
        J[r0 + t + di, t + di] = -dii
        d = _newton_step(J, F, t >= m)
        dx = d[:t] + 1j * d[t : 2 * t]
        dy = d[2 * t : 2 * t + m] + 1j * d[2 * t + m :]
        s = 1.0
        accepted = False
        while s > 1e-3:
            xn = xt + s * dx
            if np.all(xn != 0):
                yn = y + s * dy
                Fn = residual(xn, yn)
                nfn = np.linalg.norm(Fn)
                if nfn < (1 - 1e-4 * s) * nf:
                    accepted = True
                    break
            s *= 0.5
        if not accepted:
            break
        xt, y, F, nf = xn, yn, Fn, nfn
    out = np.zeros(A.shape[1], dtype=complex)
    out[T] = xt
    return out, y, it


def _newton_bpdn(A, z, xi, x, lam, T, max_iters=40):
    """Newton on ``A_T^H (A_T x - z) + lam x/|x| = 0, ||A_T x - z|| = xi``."""
    At = A[:, T]
    AtH = At.conj().T
    t = At.shape[1]
    n = 2 * t + 1
    J = np.zeros((n, n))
    J[: 2 * t, : 2 * t] = _real_block(AtH @ At)
    base = J[: 2 * t, : 2 * t].copy()
    di = np.arange(t)
    xt = x[T].astype(complex)

    def residual(xt, lam):
        r = At @ xt - z
        g = AtH @ r
        G = g + lam * xt / np.abs(xt)
        h = (float(np.vdot(r, r).real) - xi * xi) / (2.0 * xi)
        return np.concatenate([G.real, G.imag, [h]]), g

    F, g = residual(xt, lam)
    nf = np.linalg.norm(F)
    scale = 1.0 + np.linalg.norm(AtH @ z)
    it = 0
    for it in range(1, max_iters + 1):
        if nf <= 1e-13 * scale:
            break
        drr, dri, dii = _radial_jacobian(xt)
        J[: 2 * t, : 2 * t] = base
        J[di, di] += lam * drr
        J[di, t + di] += lam * dri
        J[t + di, di] += lam * dri
        J[t + di, t + di] += lam * dii
        u = xt / np.abs(xt)
        J[: t, 2 * t] = u.real
        J[t : 2 * t, 2 * t] = u.imag
        J[2 * t, :t] = g.real / xi
        J[2 * t, t : 2 * t] = g.imag / xi
        J[2 * t, 2 * t] = 0.0
        d = _newton_step(J, F, True)
        dx = d[:t] + 1j * d[t : 2 * t]
        dl = d[2 * t]
        s = 1.0
        accepted = False
        while s > 1e-3:
            xn = xt + s * dx
            ln = lam + s * dl
            if ln > 0 and np.all(xn != 0):
                Fn, gn = residual(xn, ln)
                nfn = np.linalg.norm(Fn)
                if nfn < (1 - 1e-4 * s) * nf:
                    accepted = True
                    break
            s *= 0.5
        if not accepted:
            break
        xt, lam, F, g, nf = xn, ln, Fn, gn, nfn
    out = np.zeros(A.shape[1], dtype=complex)
    out[T] = xt
    return out, lam, it


class _Problem:
    """Per-column bookkeeping inside a batched solve."""

    def __init__(self, A, z, xi, opts):
        self.z = z
        self.xi = xi
        self.znorm = float(np.linalg.norm(z))
        self.limit = xi * (1.0 + opts.feas_tol) + 1e-3 * opts.feas_tol * self.znorm
        self.iterations = 0
        self.lam_hi = None  # last penalty with residual above xi
        self.x_hi = None


def _finish(A, p, x, y, iterations, opts, status_if_uncertified="max_iters"):
    resid = float(np.linalg.norm(A @ x - p.z))
    gap = duality_gap(A, p.z, p.xi, x, y) if y is not None else np.inf
    ok = resid <= p.limit and gap <= opts.abs_tol * max(1.0, float(np.sum(np.abs(x))))
    status = "optimal" if ok else status_if_uncertified
    return BpdnSolution(x, int(iterations), resid, bool(ok), float(gap), status)


def _candidate_supports(x):
    """Supports to try for polishing: the full one, then with small entries pruned."""
    mag = np.abs(x)
    top = float(mag.max()) if mag.size else 0.0
    seen = []
    for rel in (0.0, 1e-6, 1e-3, 1e-2):
        T = np.flatnonzero(mag > rel * top)
        if T.size and not any(np.array_equal(T, U) for U in seen):
            seen.append(T)
    return seen


def _try_polish_bp(A, p, x, lam, opts):
    y0 = (p.z - A @ x) / lam
    iters = 0
    for T in _candidate_supports(x):
        xp, yp, it = _newton_bp(A, p.z, x, y0, T)
        iters += it
        sol = _finish(A, p, xp, yp, 0, opts)
        if sol.converged:
            return sol, iters
        sol = _projected_dual_candidate(A, p, T, y0, opts)
        if sol is not None:
            return sol, iters
    return None, iters


def _projected_dual_candidate(A, p, T, y0, opts):
    """Exact solve on ``T`` with the lasso dual nudged to satisfy ``A_T^H y = sign(x_T)``.

    Covers degenerate problems where the off-support dual constraints are
    active, so Newton on ``T`` cannot converge but the lasso dual approaches a
    certificate as the penalty shrinks.
    """
    At = A[:, T]
    if At.shape[1] > At.shape[0]:
        return None
    xt = np.linalg.lstsq(At, p.z, rcond=None)[0]
    if np.any(xt == 0) or np.linalg.norm(At @ xt - p.z) > p.limit:
        return None
    AtH = At.conj().T
    try:
        y = y0 + At @ np.linalg.solve(AtH @ At, xt / np.abs(xt) - AtH @ y0)
    except np.linalg.LinAlgError:
        return None
    x = np.zeros(A.shape[1], dtype=complex)
    x[T] = xt
    sol = _finish(A, p, x, y, 0, opts)
    if sol.converged:
        return sol
    sol = _finish(A, p, x, _repair_dual(A, T, y), 0, opts)
    return sol if sol.converged else None


def _repair_dual(A, T, y, max_iters=50):
    """Move ``y`` inside ``{A_T^H y fixed}`` until ``|a_j^H y| <= 1`` off ``T``.

    Gauss-Newton on the squared hinge violations ``max(|a_j^H y| - 1, 0)``.
    """
    m = A.shape[0]
    t = T.size
    if t >= m:
        return y
    Q = np.linalg.qr(A[:, T], mode="complete")[0]
    W = Q[:, t:]
    off = np.setdiff1d(np.arange(A.shape[1]), T)
    D = A[:, off].conj().T
    c = D @ y
    E = D @ W
    w = np.zeros(m - t, dtype=complex)

    def violations(w):
        g = c + E @ w
        return g, np.maximum(np.abs(g) - 1.0, 0.0)

    g, v = violations(w)
    cost = float(v @ v)
    for _ in range(max_iters):
        act = v > 0
        if not act.any():
            break
        gh = g[act].conj() / np.abs(g[act])
        Ea = gh[:, None] * E[act]
        J = np.hstack([Ea.real, -Ea.imag])
        d = np.linalg.lstsq(J, -v[act], rcond=None)[0]
        dw = d[: m - t] + 1j * d[m - t :]
        s = 1.0
        while s > 1e-4:
            gn, vn = violations(w + s * dw)
            cn = float(vn @ vn)
            if cn < cost:
                break
            s *= 0.5
        else:
            break
        w, g, v, cost = w + s * dw, gn, vn, cn
    return y + W @ w


def _try_polish_bpdn(A, p, x, lam, opts):
    iters = 0
    for T in _candidate_supports(x):
        xp, lp, it = _newton_bpdn(A, p.z, p.xi, x, lam, T)
        iters += it
        y = (p.z - A @ xp) / lp
        sol = _finish(A, p, xp, y, 0, opts)
        if sol.converged:
            return sol, iters
    return None, iters


def _pareto_bisection(A, AH, L, p, lam_lo, x_lo, lam_hi, opts):
    """Bisect the penalty until the residual sits on ``xi`` (from below)."""
    z = p.z[:, None]
    tol = min(opts.inner_tol, 1e-8)
    iters = 0
    x_mid = x_lo
    for _ in range(100):
        if iters >= opts.max_iters:
            break
        rho_lo = float(np.linalg.norm(A @ x_lo - p.z))
        if abs(rho_lo - p.xi) <= opts.pareto_tol * p.xi or lam_hi / lam_lo - 1.0 < 1e-12:
            break
        lam_mid = np.sqrt(lam_lo * lam_hi)
        X, k = _fista(A, AH, z, np.array([lam_mid]), L, x_mid[:, None], tol, opts.max_iters - iters)
        iters += k
        x_mid = X[:, 0]
        if np.linalg.norm(A @ x_mid - p.z) <= p.xi:
            lam_lo, x_lo = lam_mid, x_mid
        else:
            lam_hi = lam_mid
    return lam_lo, x_lo, iters


def solve_bpdn_batch(Phi, Z, xi, opts: SolverOptions | None = None) -> list[BpdnSolution]:
    """Solve one BPDN problem per column of ``Z``, all sharing ``Phi``.

    ``xi`` is a scalar or one radius per column.
    """
    opts = opts or SolverOptions()
    A = np.asarray(getattr(Phi, "entries", Phi), dtype=complex)
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim == 1:
        Z = Z[:, None]
    M, N = A.shape
    if Z.shape[0] != M:
        raise ValueError(f"Phi has {M} rows but Z has {Z.shape[0]}")
    B = Z.shape[1]
    xis = np.broadcast_to(np.asarray(xi, dtype=float), (B,)).copy()
    if np.any(xis < 0) or not np.all(np.isfinite(xis)):
        raise ValueError("xi must be finite and non-negative")

    probs = [_Problem(A, Z[:, b], xis[b], opts) for b in range(B)]
    results: list[BpdnSolution | None] = [None] * B
    zero = np.zeros(N, dtype=complex)

    for b, p in enumerate(probs):
        if p.znorm <= p.xi:
            results[b] = BpdnSolution(zero.copy(), 0, p.znorm, True, 0.0, "optimal")

    pending = [b for b in range(B) if results[b] is None]
    if not pending:
        return results

    AH = A.conj().T
    if not np.any(A):
        for b in pending:
            p = probs[b]
            results[b] = BpdnSolution(zero.copy(), 0, p.znorm, False, np.inf, "infeasible")
        return results

    # least-squares pass: detects infeasibility, and with full column rank and
    # xi = 0 the feasible set is a single point
    X_ls, _, rank, _ = np.linalg.lstsq(A, Z[:, pending], rcond=None)
    keep = []
    for col, b in enumerate(pending):
        p = probs[b]
        x_ls = X_ls[:, col]
        res = float(np.linalg.norm(A @ x_ls - p.z))
        if res > p.limit:
            results[b] = BpdnSolution(x_ls, 0, res, False, np.inf, "infeasible")
        elif p.xi == 0.0 and rank == N:
            results[b] = BpdnSolution(x_ls, 0, res, True, 0.0, "optimal")
        else:
            keep.append(b)
    pending = keep
    if not pending:
        return results

    L = 1.01 * _largest_singular_value(A) ** 2
    lam_max = np.array([np.max(np.abs(AH @ probs[b].z)) for b in pending])
    lam = lam_max * opts.lam_start
    X = np.zeros((N, len(pending)), dtype=complex)
    active = list(range(len(pending)))

    while active:
        idx = np.array(active)
        budget = opts.max_iters - max(probs[pending[a]].iterations for a in active)
        Xa, k = _fista(A, AH, Z[:, [pending[a] for a in active]], lam[idx], L, X[:, idx],
                       opts.inner_tol, max(budget, 1))
        X[:, idx] = Xa
        still = []
        for a in active:
            b = pending[a]
            p = probs[b]
            p.iterations += k
            x = X[:, a]
            sol = None
            if p.xi == 0.0:
                sol, it = _try_polish_bp(A, p, x, lam[a], opts)
                p.iterations += it
            elif np.linalg.norm(A @ x - p.z) <= p.xi:
                sol, it = _try_polish_bpdn(A, p, x, lam[a], opts)
                p.iterations += it
                if sol is None:
                    lam_hi = p.lam_hi if p.lam_hi is not None else lam_max[a]
                    lam_b, x_b, it = _pareto_bisection(A, AH, L, p, lam[a], x, lam_hi, opts)
                    p.iterations += it
                    sol, it = _try_polish_bpdn(A, p, x_b, lam_b, opts)
                    p.iterations += it
                    if sol is None:
                        y = (p.z - A @ x_b) / lam_b
                        sol = _finish(A, p, x_b, y, 0, opts)
                if sol is not None:
                    sol = BpdnSolution(sol.x_hat, p.iterations, sol.residual_norm,
                                       sol.converged, sol.gap, sol.status)
                results[b] = sol
                continue
            else:
                p.lam_hi = lam[a]
            if sol is not None:
                results[b] = BpdnSolution(sol.x_hat, p.iterations, sol.residual_norm,
                                          sol.converged, sol.gap, sol.status)
                continue
            exhausted = p.iterations >= opts.max_iters
            if exhausted or lam[a] * opts.lam_decay < opts.lam_floor * lam_max[a]:
                results[b] = _fallback(A, p, x, lam[a], opts)
                continue
            still.append(a)
        for a in still:
            lam[a] *= opts.lam_decay
        active = still
    return results


def _fallback(A, p, x, lam, opts):
    """Best effort once the budget is spent: make ``x`` feasible if possible."""
    r = p.z - A @ x
    y = r / lam
    if p.xi == 0.0:
        x = x + np.linalg.lstsq(A, r, rcond=None)[0]
    elif np.linalg.norm(r) > p.xi:
        x_ls = np.linalg.lstsq(A, p.z, rcond=None)[0]
        # shortest move towards the least-squares point that enters the ball
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if np.linalg.norm(A @ (x + mid * (x_ls - x)) - p.z) <= p.xi:
                hi = mid
            else:
                lo = mid
        x = x + hi * (x_ls - x)
    sol = _finish(A, p, x, y, p.iterations, opts)
    return sol


def solve_bpdn(problem: BpdnProblem, opts: SolverOptions | None = None) -> BpdnSolution:
    """Solve a single BPDN problem. See :func:`solve_bpdn_batch`."""
    return solve_bpdn_batch(problem.Phi, problem.z[:, None], problem.xi, opts)[0]
