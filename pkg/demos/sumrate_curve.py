"""Average true sum-rate of decisions made from compressed feedback.

Prints one line per (M/N, estimator) for the grouped and the i.i.d.
channel setups. Pass a trial count as the first argument (default 20).
"""

import sys

import numpy as np

from compressive_rate.experiments import SimConfig, run_sumrate_experiment


def summarize(label, cfg):
    res = run_sumrate_experiment(cfg)
    print(f"{label}: {res.n_solver_failures}/{res.n_solves} uncertified solves")
    for ratio in sorted({r.M_over_N for r in res.rows}):
        perfect = np.mean([r.sum_rate_perfect_csi for r in res.rows
                           if r.M_over_N == ratio and r.estimator == "linear-pinv"])
        line = [f"  M/N={ratio:.1f}  perfect {perfect:6.3f}"]
        for est in ("linear-pinv", "nonlinear-bpdn"):
            vals = [r.sum_rate_true_at_decision for r in res.rows if r.M_over_N == ratio and r.estimator == est]
            line.append(f"{est} {np.mean(vals):6.3f}")
        print("  ".join(line))


if __name__ == "__main__":
    trials = int(sys.argv[1]) if len(sys.argv) > 1 else 20
    common = dict(N=25, M_grid=(5, 10, 15, 20, 25), P_grid=(10.0,), trials=trials, master_seed=1)
    summarize("5 groups of 5", SimConfig(group_sizes=(5,) * 5, **common))
    summarize("single group", SimConfig(group_sizes=(25,), **common))
