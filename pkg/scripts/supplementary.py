"""Supplementary runs behind the analysis of the failing acceptance criteria.

1. Late decay slope on a wide window (L = 1000) versus the default L = 20.
2. InnerCase energy slope with c = s, where the interface correction cancels.
3. Tail mass exponent on L = 100.
4. Kernel mass on growing windows against the exact window mass.
"""

import numpy as np

from fracflow import analysis, inequalities as ineq
from fracflow.config import ProblemConfig
from fracflow.experiments import PROBE_EPS, simulate
from fracflow.kernel import kernel_table, window_mass


def cfg(**kw):
    base = dict(r=0.5, s=0.5, c=0.5, inner_radius=1.0, truncation_radius=20.0, n_cells=2000)
    base.update(kw)
    return ProblemConfig(**base)


def late_decay():
    for L, n in ((20.0, 2000), (1000.0, 4000)):
        traj = simulate(cfg(truncation_radius=L, n_cells=n))
        rep = analysis.fit_decay(traj, "inf", (10.0, 100.0))
        print(f"late Linf slope L={L:g} n={n}: {rep.slope:.4f} (predicted {rep.predicted_slope_r:.1f})")


def inner_probe():
    for c in (0.5, 0.25):
        p = ineq.small_time_probe("InnerCase", cfg(s=0.25, c=c, n_cells=4000), PROBE_EPS)
        print(f"InnerCase s=0.25 c={c}: slope {p.slope:.4f} (predicted {p.predicted:.2f})")


def tail_mass():
    traj = simulate(cfg(truncation_radius=100.0, c=0.25, snapshot_times=(1.0,)))
    R = np.array([4.0, 8.0, 16.0])
    tails = [analysis.tail_mass(traj.snapshots[0], rr, traj.grid) for rr in R]
    print(f"tail mass exponent at t=1, L=100: {analysis.fit_power_law(R, tails).slope:.4f}")


def kernel_mass():
    for X in (50.0, 200.0, 1000.0):
        h = 0.01 if X <= 200 else 0.05
        x = -X + h * (np.arange(int(round(2 * X / h))) + 0.5)
        m = kernel_table(0.5, 1.0, x).riemann_mass()
        print(f"r=0.5 kernel mass on |x|<={X:g}: {m:.8f}, exact window mass {window_mass(0.5, 1.0, X):.8f}")


if __name__ == "__main__":
    kernel_mass()
    inner_probe()
    tail_mass()
    late_decay()
