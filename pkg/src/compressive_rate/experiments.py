"""Seeded Monte Carlo experiments and their CSV/JSON output.

Seeding
-------
Every trial gets its own 64-bit seed::

    trial_seed = splitmix64(master_seed XOR trial_index)

from which the per-trial streams are derived with numpy's ``SeedSequence``:
channels use ``default_rng([trial_seed, 1])``, the pilot matrix for ``M``
pilots ``default_rng([trial_seed, 2, M])``, and the feedback noise for
``M`` pilots the seed ``splitmix64(trial_seed XOR (3 << 32 | M))``. The same
channels and pilot matrix are shared by all estimators and power levels of a
trial, so estimator comparisons are paired.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .bounds import compression_curve, rip_sample_count, RipBoundQuery
from .channel_model import (
    GroupModelConfig,
    SparseModelConfig,
    complex_gaussian,
    gain_matrix,
    gen_group_channels,
    gen_sparse_channels,
    random_pathloss_matrix,
)
from .estimators import linear_gain_estimates, nonlinear_gain_estimates, pseudo_inverse
from .rates import PowerProfile
from .scheduler import RateOracle, discover_estimated, discover_perfect, is_feasible, pair
from .sensing import NoiseModel, gen_pilot_matrix, measure_all
from .sparse_solver import SolverOptions, solve_bpdn_batch

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ConfigError",
    "SimConfig",
    "ResultRow",
    "ExperimentResult",
    "splitmix64",
    "trial_seed",
    "load_config",
    "config_from_dict",
    "run_sumrate_experiment",
    "run_bounds_sweep",
    "run_recovery_phase",
    "write_rows",
    "rows_to_csv",
    "rows_to_json",
]

MASK64 = (1 << 64) - 1
ESTIMATORS = ("linear-pinv", "nonlinear-bpdn")
ESTIMATOR_CHOICES = ESTIMATORS + ("both",)
RBAR_RULES = ("fraction-of-single-link", "explicit")
CHANNEL_MODELS = ("group", "sparse")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 mixer on a 64-bit unsigned integer."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    return splitmix64((master_seed ^ trial) & MASK64)


@dataclass(frozen=True)
class SimConfig:
    """Sum-rate experiment parameters. See ``README.md`` for the file format."""

    N: int = 25
    cellular_set: tuple[int, ...] = ()
    channel_model: str = "group"
    group_sizes: tuple[int, ...] = (5, 5, 5, 5, 5)
    pathloss_matrix: tuple[tuple[float, ...], ...] | None = None
    z_range: tuple[float, float] = (0.0, 1.0)
    sparsity: int = 5
    support_rule: str = "diagonal-forced"
    P_grid: tuple[float, ...] = (1.0, 10.0, 100.0)
    rbar_rule: str = "fraction-of-single-link"
    rbar_fraction: float = 0.1
    rbar_values: tuple[float, ...] = ()
    eps: float = 0.0
    M_grid: tuple[int, ...] = (5, 10, 15, 20, 25)
    estimator: str = "both"
    noise_kind: str = "none"
    noise_xi: float = 0.0
    noise_step: float = 0.0
    trials: int = 200
    master_seed: int = 0
    workers: int = 1
    exhaustive_cap: int = 16
    record_timing: bool = False
    failure_budget: float = 0.05
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        err = []
        if self.N < 1:
            err.append("N must be >= 1")
        if self.trials < 1:
            err.append("trials must be >= 1")
        if not 0 <= self.master_seed <= MASK64:
            err.append("master_seed must be a 64-bit unsigned integer")
        if self.channel_model not in CHANNEL_MODELS:
            err.append(f"channel.model must be one of {CHANNEL_MODELS}")
        if self.channel_model == "group":
            if sum(self.group_sizes) != self.N or any(g < 1 for g in self.group_sizes):
                err.append(f"group_sizes must be positive and sum to N={self.N}")
            if self.pathloss_matrix is not None:
                G = len(self.group_sizes)
                A = np.asarray(self.pathloss_matrix, dtype=float)
                if A.shape != (G, G):
                    err.append(f"pathloss_matrix must be {G}x{G}")
            lo, hi = self.z_range
            if not lo <= hi:
                err.append("z_range must be increasing")
        elif not 1 <= self.sparsity <= self.N:
            err.append("sparsity must lie in [1, N]")
        if any(not 1 <= m <= self.N for m in self.M_grid) or not self.M_grid:
            err.append("every M in M_grid must lie in [1, N]")
        if not self.P_grid or any(p <= 0 for p in self.P_grid):
            err.append("P_grid must be non-empty and positive")
        if self.rbar_rule not in RBAR_RULES:
            err.append(f"rate_requirement.rule must be one of {RBAR_RULES}")
        if self.rbar_rule == "explicit" and len(self.rbar_values) != self.N:
            err.append("explicit rate requirements need one value per node")
        if self.eps < 0:
            err.append("eps must be non-negative")
        if self.estimator not in ESTIMATOR_CHOICES:
            err.append(f"estimator must be one of {ESTIMATOR_CHOICES}")
        if any(not 0 <= i < self.N for i in self.cellular_set):
            err.append("cellular_set indices must lie in [0, N)")
        if self.workers < 1:
            err.append("workers must be >= 1")
        if not 0 <= self.failure_budget <= 1:
            err.append("failure_budget must lie in [0, 1]")
        try:
            self.noise_model(1)
        except ValueError as e:
            err.append(str(e))
        if err:
            raise ConfigError("; ".join(err))

    @property
    def estimators(self) -> tuple[str, ...]:
        return ESTIMATORS if self.estimator == "both" else (self.estimator,)

    def noise_model(self, seed: int | None) -> NoiseModel:
        return NoiseModel(self.noise_kind, xi=self.noise_xi, step=self.noise_step, rng_seed=seed)

    def rbar(self, P: float) -> np.ndarray:
        if self.rbar_rule == "explicit":
            return np.asarray(self.rbar_values, dtype=float)
        return np.full(self.N, self.rbar_fraction * math.log1p(P))


# TOML layout: table -> {key: (SimConfig field, converter)}
_SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "simulation": {
        "N": ("N", int),
        "trials": ("trials", int),
        "master_seed": ("master_seed", int),
        "M_grid": ("M_grid", lambda v: tuple(int(x) for x in v)),
        "P_grid": ("P_grid", lambda v: tuple(float(x) for x in v)),
        "estimator": ("estimator", str),
        "eps": ("eps", float),
        "cellular_set": ("cellular_set", lambda v: tuple(int(x) for x in v)),
        "workers": ("workers", int),
        "exhaustive_cap": ("exhaustive_cap", int),
        "record_timing": ("record_timing", bool),
        "failure_budget": ("failure_budget", float),
    },
    "rate_requirement": {
        "rule": ("rbar_rule", str),
        "fraction": ("rbar_fraction", float),
        "values": ("rbar_values", lambda v: tuple(float(x) for x in v)),
    },
    "channel": {
        "model": ("channel_model", str),
        "group_sizes": ("group_sizes", lambda v: tuple(int(x) for x in v)),
        "pathloss_matrix": ("pathloss_matrix", lambda v: tuple(tuple(float(x) for x in r) for r in v)),
        "z_range": ("z_range", lambda v: (float(v[0]), float(v[1]))),
        "sparsity": ("sparsity", int),
        "support_rule": ("support_rule", str),
    },
    "noise": {
        "kind": ("noise_kind", str),
        "xi": ("noise_xi", float),
        "step": ("noise_step", float),
    },
}
_SOLVER_KEYS = {f.name for f in fields(SolverOptions)}


def config_from_dict(doc: dict) -> SimConfig:
    """Build a :class:`SimConfig` from a parsed document; unknown keys are errors."""
    kwargs: dict[str, Any] = {}
    for table, body in doc.items():
        if table == "solver":
            if not isinstance(body, dict):
                raise ConfigError("[solver] must be a table")
            unknown = set(body) - _SOLVER_KEYS
            if unknown:
                raise ConfigError(f"unknown key(s) in [solver]: {sorted(unknown)}")
            try:
                kwargs["solver"] = SolverOptions(**body)
            except (TypeError, ValueError) as e:
                raise ConfigError(f"[solver]: {e}") from None
            continue
        if table not in _SCHEMA:
            raise ConfigError(f"unknown table [{table}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{table}] must be a table")
        for key, value in body.items():
            if key not in _SCHEMA[table]:
                raise ConfigError(f"unknown key {table}.{key}")
            name, conv = _SCHEMA[table][key]
            if conv is bool and not isinstance(value, bool):
                raise ConfigError(f"{table}.{key} must be true or false")
            try:
                kwargs[name] = conv(value)
            except (TypeError, ValueError, IndexError) as e:
                raise ConfigError(f"bad value for {table}.{key}: {e}") from None
    return SimConfig(**kwargs)


def load_config(path: str | Path) -> SimConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    return config_from_dict(doc)


@dataclass(frozen=True)
class ResultRow:
    trial: int
    M_over_N: float
    estimator: str
    sum_rate_true_at_decision: float
    sum_rate_perfect_csi: float
    n_scheduled: int
    n_candidates: int
    mean_rate_gap: float
    wall_time_ms: float
    P: float = float("nan")
    sum_rate_est_at_decision: float = float("nan")
    sum_rate_true_bits: float = float("nan")
    pairing: str = ""
    solver_failures: int = 0
    feasible_true: bool = True


ROW_FIELDS = [f.name for f in fields(ResultRow)]


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    n_solves: int = 0
    n_solver_failures: int = 0
    audit_violations: list[str] = field(default_factory=list)

    @property
    def failure_rate(self) -> float:
        return self.n_solver_failures / self.n_solves if self.n_solves else 0.0


def _draw_channels(cfg: SimConfig, rng: np.random.Generator):
    if cfg.channel_model == "group":
        if cfg.pathloss_matrix is None:
            A = random_pathloss_matrix(len(cfg.group_sizes), rng, cfg.z_range)
        else:
            A = np.asarray(cfg.pathloss_matrix, dtype=float)
        model = GroupModelConfig(cfg.group_sizes, A, int(rng.integers(0, 2**63)))
        return gen_group_channels(model)
    model = SparseModelConfig(cfg.N, cfg.sparsity, cfg.support_rule, int(rng.integers(0, 2**63)))
    return gen_sparse_channels(model)


def _mean_gap(true_oracle, est_oracle, members) -> float:
    if not members:
        return float("nan")
    return float(np.mean(np.abs(true_oracle.rates(members) - est_oracle.rates(members))))


def _run_trial(cfg: SimConfig, trial: int) -> ExperimentResult:
    seed = trial_seed(cfg.master_seed, trial)
    H = _draw_channels(cfg, np.random.default_rng([seed, 1]))
    X = gain_matrix(H)
    N1 = cfg.cellular_set
    out = ExperimentResult([])

    pps = {P: PowerProfile.uniform(cfg.N, P) for P in cfg.P_grid}
    true_oracles = {P: RateOracle.true_rates(X, pps[P]) for P in cfg.P_grid}
    perfect = {}
    for P in cfg.P_grid:
        rbar = cfg.rbar(P)
        cand = discover_perfect(X, N1, rbar, pps[P])
        perfect[P] = pair(true_oracles[P], N1, cand.candidates, rbar, 0.0, cfg.exhaustive_cap)
        if N1 and not is_feasible(true_oracles[P], perfect[P], rbar, 0.0):
            out.audit_violations.append(f"trial {trial}, P={P}: cellular set infeasible under true rates")

    for M in cfg.M_grid:
        Phi = gen_pilot_matrix(M, cfg.N, np.random.default_rng([seed, 2, M]))
        noise = cfg.noise_model(splitmix64(seed ^ ((3 << 32) | M)))
        fbs = measure_all(Phi, H, noise)
        for name in cfg.estimators:
            t0 = time.perf_counter()
            if name == "linear-pinv":
                ests = linear_gain_estimates(pseudo_inverse(Phi), fbs)
                failures = 0
            else:
                ests = nonlinear_gain_estimates(Phi, fbs, cfg.solver)
                failures = sum(not e.converged for e in ests)
                out.n_solves += len(ests)
                out.n_solver_failures += failures
            elapsed = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else float("nan")
            for P in cfg.P_grid:
                rbar = cfg.rbar(P)
                pp = pps[P]
                t_or = true_oracles[P]
                e_or = RateOracle.estimated_rates(ests, pp)
                cand = discover_estimated(ests, N1, rbar, pp, cfg.eps)
                dec = pair(e_or, N1, cand.candidates, rbar, cfg.eps, cfg.exhaustive_cap)
                members = list(dec.members)
                true_sum = t_or.sum_rate(members)
                perf_sum = t_or.sum_rate(list(perfect[P].members))
                if dec.feasible_under != "unchecked" and not is_feasible(e_or, dec, rbar, cfg.eps):
                    out.audit_violations.append(f"trial {trial}, M={M}, {name}: decision infeasible")
                feasible_true = is_feasible(t_or, dec, rbar, 0.0)
                # the perfect-CSI decision is only optimal for the true objective
                # among true-feasible sets when it came from exhaustive search
                if (feasible_true and perfect[P].method == "exhaustive"
                        and dec.method == "exhaustive" and true_sum > perf_sum + 1e-9):
                    out.audit_violations.append(
                        f"trial {trial}, M={M}, {name}: true sum {true_sum} beats perfect CSI {perf_sum}"
                    )
                out.rows.append(ResultRow(
                    trial=trial,
                    M_over_N=M / cfg.N,
                    estimator=name,
                    sum_rate_true_at_decision=true_sum,
                    sum_rate_perfect_csi=perf_sum,
                    n_scheduled=len(members),
                    n_candidates=len(cand.candidates),
                    mean_rate_gap=_mean_gap(t_or, e_or, members),
                    wall_time_ms=elapsed,
                    P=P,
                    sum_rate_est_at_decision=dec.objective,
                    sum_rate_true_bits=true_sum / math.log(2.0),
                    pairing=dec.method,
                    solver_failures=failures,
                    feasible_true=feasible_true,
                ))
    return out


def _run_trials(cfg: SimConfig, trials: Sequence[int]) -> ExperimentResult:
    return _merge([_run_trial(cfg, t) for t in trials])


def _merge(parts: Sequence[ExperimentResult]) -> ExperimentResult:
    total = ExperimentResult([])
    for p in parts:
        total.rows.extend(p.rows)
        total.n_solves += p.n_solves
        total.n_solver_failures += p.n_solver_failures
        total.audit_violations.extend(p.audit_violations)
    return total


def run_sumrate_experiment(cfg: SimConfig) -> ExperimentResult:
    """Run every trial of ``cfg``; rows are ordered by (trial, M, estimator, P)."""
    trials = list(range(cfg.trials))
    if cfg.workers == 1:
        result = _run_trials(cfg, trials)
    else:
        chunks = [trials[w :: cfg.workers] for w in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            result = _merge(list(pool.map(_run_trials, [cfg] * len(chunks), chunks)))
    order = {name: i for i, name in enumerate(ESTIMATORS)}
    result.rows.sort(key=lambda r: (r.trial, r.M_over_N, order[r.estimator], r.P))
    return result


def run_bounds_sweep(
    k: int = 10, eps: float = 0.9, delta: float = 1.0 / 3.0, n_min: int = 100, n_max: int = 10**7, num: int = 61
) -> list[dict]:
    """Compression ratio ``M/N`` (clamped at 1) over a log-spaced grid of ``N``."""
    if n_min < k or n_max < n_min or num < 1:
        raise ConfigError("need k <= n_min <= n_max and num >= 1")
    grid = sorted({int(round(n)) for n in np.geomspace(n_min, n_max, num)})
    rows = []
    for N, ratio in compression_curve(k, eps, delta, grid):
        M = rip_sample_count(RipBoundQuery(k, N, delta, eps))
        rows.append({"N": N, "M_bound": M, "M_over_N": ratio, "k": k, "eps": eps, "delta": delta})
    return rows


def run_recovery_phase(
    N: int, k_grid: Sequence[int], m_grid: Sequence[int], trials: int, seed: int = 0,
    tol: float = 1e-4, opts: SolverOptions | None = None,
) -> list[dict]:
    """Fraction of exact noiseless BPDN recoveries per ``(M, k)`` cell.

    In trial ``t`` for ``M`` pilots one Gaussian ``Phi`` is drawn and one
    k-sparse CN(0,1) vector per ``k`` in ``k_grid``; recovery counts when
    ``||x_hat - x|| <= tol ||x||``.
    """
    k_grid = [int(k) for k in k_grid]
    if any(not 1 <= k <= N for k in k_grid) or any(not 1 <= m <= N for m in m_grid) or trials < 1:
        raise ConfigError("need 1 <= k, M <= N and trials >= 1")
    rows = []
    for M in m_grid:
        hits = np.zeros(len(k_grid), dtype=int)
        failures = np.zeros(len(k_grid), dtype=int)
        for t in range(trials):
            rng = np.random.default_rng([trial_seed(seed, t), 4, int(M)])
            Phi = gen_pilot_matrix(int(M), N, rng)
            Xs = np.zeros((N, len(k_grid)), dtype=complex)
            for c, k in enumerate(k_grid):
                Xs[rng.choice(N, size=k, replace=False), c] = complex_gaussian(rng, k)
            sols = solve_bpdn_batch(Phi, Phi.entries @ Xs, 0.0, opts)
            for c, s in enumerate(sols):
                err = np.linalg.norm(s.x_hat - Xs[:, c]) / np.linalg.norm(Xs[:, c])
                hits[c] += err <= tol
                failures[c] += not s.converged
        for c, k in enumerate(k_grid):
            rows.append({
                "N": N, "M": int(M), "k": k, "trials": trials, "recovered": int(hits[c]),
                "fraction": hits[c] / trials, "solver_failures": int(failures[c]),
            })
    return rows


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: Sequence, columns: Sequence[str] | None = None) -> str:
    dicts = [asdict(r) if isinstance(r, ResultRow) else dict(r) for r in rows]
    if columns is None:
        columns = ROW_FIELDS if rows and isinstance(rows[0], ResultRow) else list(dicts[0]) if dicts else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for d in dicts:
        w.writerow([_fmt(d[c]) for c in columns])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def rows_to_json(rows: Sequence) -> str:
    dicts = [asdict(r) if isinstance(r, ResultRow) else dict(r) for r in rows]
    return json.dumps([{k: _json_safe(v) for k, v in d.items()} for d in dicts], indent=1) + "\n"


def write_rows(rows: Sequence, path: str | Path, fmt: str = "csv") -> None:
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    text = rows_to_csv(rows) if fmt == "csv" else rows_to_json(rows)
    Path(path).write_text(text, encoding="utf-8")
