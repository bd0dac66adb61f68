"""Empirical l1 recovery next to the RIP sample-count bound.

The bound is loose by orders of magnitude at these sizes; the empirical
transition shows how few pilots actually suffice.
"""

from compressive_rate.bounds import RipBoundQuery, rip_sample_count
from compressive_rate.experiments import run_recovery_phase

N = 64
rows = run_recovery_phase(N, k_grid=[2, 4, 8], m_grid=[8, 16, 24, 32, 48], trials=20, seed=0)
print(" M   " + "  ".join(f"k={k}" for k in (2, 4, 8)))
for M in (8, 16, 24, 32, 48):
    fr = [r["fraction"] for r in rows if r["M"] == M]
    print(f"{M:2d}   " + "  ".join(f"{f:.2f}" for f in fr))

for k in (2, 4, 8):
    m = rip_sample_count(RipBoundQuery(k, N, 0.3, 0.1))
    print(f"RIP guarantee for k={k}, N={N}: M >= {m}")
