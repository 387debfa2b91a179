"""Implicit Euler time stepping for u' = -A u."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from .config import Grid
from .errors import SnapshotLookupError, SolverStagnationError, ValidationError
from .operator import NonlocalOperator, quadratic_energy

DEFAULT_TOL = 1e-10

StepSize = Union[float, Callable[[float], float]]


@dataclass
class StepInfo:
    t: float
    mass: float
    l1: float
    l2: float
    linf: float
    energy: float
    iterations: int


@dataclass(frozen=True)
class Trajectory:
    grid: Grid
    times: np.ndarray
    snapshots: np.ndarray          # shape (n_snapshots, n_cells)
    mass: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    energy: np.ndarray
    steps: list = field(default_factory=list, repr=False)
    r: Optional[float] = None
    lam: float = 1.0
    exponents: Optional[dict] = None
    coefficients: Optional[dict] = None
    initial: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return self.times.size

    def snapshot(self, t: float, rtol: float = 1e-9) -> np.ndarray:
        return self.snapshots[self.index_of(t, rtol)]

    def index_of(self, t: float, rtol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > rtol * max(1.0, abs(t)):
            raise SnapshotLookupError(
                f"time {t:g} is not a stored snapshot (nearest is {self.times[k]:g})")
        return k

    def diagnostics_rows(self):
        for k in range(self.times.size):
            yield (self.times[k], self.mass[k], self.l1[k], self.l2[k], self.linf[k], self.energy[k])


def _norms(u: np.ndarray, h: float):
    return (h * float(np.sum(u)), h * float(np.sum(np.abs(u))),
            math.sqrt(h * float(np.dot(u, u))), float(np.max(np.abs(u))))


def step_implicit(op: NonlocalOperator, u, dt: float, tol: float = DEFAULT_TOL,
                  return_info: bool = False, maxiter: Optional[int] = None):
    """Solve (I + dt A) u_new = u by conjugate gradients started from u.

    Starting from the old state makes every residual orthogonal to the
    constant vector (1^T A = 0), so the iterate keeps the mass of u up to
    rounding regardless of how far CG is from convergence.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt!r}")
    if not 0 < tol <= 1e-6:
        raise ValidationError(f"tol must lie in (0, 1e-6], got {tol!r}")
    u = np.asarray(u, dtype=float)
    A = op.matrix
    n = u.size
    system = LinearOperator((n, n), matvec=lambda x: x + dt * (A @ x), dtype=float)
    count = [0]

    def _count(_):
        count[0] += 1

    norm_b = float(np.linalg.norm(u))
    if norm_b == 0.0:
        return (u.copy(), 0) if return_info else u.copy()
    maxiter = 10 * n if maxiter is None else int(maxiter)
    x, info = cg(system, u, x0=u.copy(), rtol=tol, atol=0.0, maxiter=maxiter, callback=_count)
    residual = float(np.linalg.norm(u - system.matvec(x)))
    if info != 0 or residual > 10 * tol * norm_b:
        raise SolverStagnationError(
            f"CG did not reach tol={tol:g} within {maxiter} iterations "
            f"(relative residual {residual / norm_b:.3e})",
            residual=residual, iterations=count[0])
    return (x, count[0]) if return_info else x


def geometric_steps(dt_min: float, ratio: float, dt_max: float = math.inf) -> Callable[[float], float]:
    """Step-size rule dt(t) = clip(ratio * t, dt_min, dt_max)."""
    def rule(t):
        return min(max(dt_min, ratio * t), dt_max)
    return rule


def evolve(op: NonlocalOperator, u0, schedule: Sequence[float], dt: StepSize,
           tol: float = DEFAULT_TOL, record_steps: bool = True) -> Trajectory:
    """March from t=0 through every schedule time, landing exactly on each.

    ``dt`` is a step size or a rule t -> step size; the substep before a
    schedule time is shortened to hit it.
    """
    times = np.asarray(schedule, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValidationError("schedule must be a non-empty sequence of times")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValidationError("schedule must start at t >= 0 and be strictly increasing")
    rule = dt if callable(dt) else (lambda t, _dt=float(dt): _dt)
    h = op.grid.h
    u = np.array(u0, dtype=float)
    if u.shape != (op.n,):
        raise ValidationError(f"u0 must have shape ({op.n},)")

    snaps, diag = [], []
    steps = []
    t = 0.0

    def record(vec):
        m, l1, l2, linf = _norms(vec, h)
        return m, l1, l2, linf, quadratic_energy(op, vec)

    if record_steps:
        steps.append(StepInfo(0.0, *record(u), iterations=0))
    for target in times:
        while t < target:
            step = float(rule(t))
            if not step > 0:
                raise ValidationError(f"step rule returned non-positive dt={step!r} at t={t:g}")
            if t + step >= target * (1 - 1e-12):
                step = target - t
                t_next = float(target)
            else:
                t_next = t + step
            u, its = step_implicit(op, u, step, tol=tol, return_info=True)
            t = t_next
            if record_steps:
                steps.append(StepInfo(t, *record(u), iterations=its))
        snaps.append(u.copy())
        diag.append(record(u))
    diag = np.array(diag)
    return Trajectory(grid=op.grid, times=times.copy(), snapshots=np.array(snaps),
                      mass=diag[:, 0], l1=diag[:, 1], l2=diag[:, 2], linf=diag[:, 3],
                      energy=diag[:, 4], steps=steps,
                      r=op.exponents.get("r"), exponents=dict(op.exponents),
                      coefficients=dict(op.coefficients), initial=np.array(u0, dtype=float))


def rescale_trajectory(traj: Trajectory, lam: float, r: float,
                       times: Optional[Sequence[float]] = None) -> Trajectory:
    """u_lam(x, t) = lam * u(lam x, lam^(2r) t) resampled on the original cells.

    Stored snapshot times T map to rescaled times T / lam^(2r).  ``times``
    selects rescaled times; each must correspond to a stored snapshot.
    Points with lam*x outside the window are NaN.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValidationError(f"lambda must be > 0, got {lam!r}")
    scale_t = lam ** (2 * r)
    if times is None:
        idx = list(range(traj.times.size))
    else:
        idx = [traj.index_of(tau * scale_t) for tau in times]
    x = traj.grid.cell_centers
    h = traj.grid.h
    out = []
    for k in idx:
        if lam == 1.0:
            out.append(traj.snapshots[k].copy())
        else:
            out.append(lam * np.interp(lam * x, x, traj.snapshots[k], left=np.nan, right=np.nan))
    out = np.array(out)
    diag = []
    for v in out:
        w = np.nan_to_num(v)
        m, l1, l2, linf = _norms(w, h)
        diag.append((m, l1, l2, linf, np.nan))
    diag = np.array(diag)
    return Trajectory(grid=traj.grid, times=traj.times[idx] / scale_t, snapshots=out,
                      mass=diag[:, 0], l1=diag[:, 1], l2=diag[:, 2], linf=diag[:, 3],
                      energy=diag[:, 4], r=r, lam=traj.lam * lam,
                      exponents=traj.exponents, coefficients=traj.coefficients)


def write_trajectory_csv(traj: Trajectory, out_dir, meta: Optional[dict] = None) -> list[Path]:
    """Diagnostics table plus one (x, u) file per snapshot; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header_lines = [f"# {k}: {v}" for k, v in sorted((meta or {}).items())]
    paths = []
    diag_path = out / "diagnostics.csv"
    with open(diag_path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "mass", "l1", "l2", "linf", "energy"])
        for row in traj.diagnostics_rows():
            w.writerow([f"{v:.17g}" for v in row])
    paths.append(diag_path)
    x = traj.grid.cell_centers
    for k, t in enumerate(traj.times):
        p = out / f"snapshot_{k:04d}.csv"
        with open(p, "w", newline="") as fh:
            fh.write(f"# t: {t:.17g}\n")
            for line in header_lines:
                fh.write(line + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u"])
            for xi, ui in zip(x, traj.snapshots[k]):
                w.writerow([f"{xi:.17g}", f"{ui:.17g}"])
        paths.append(p)
    return paths
