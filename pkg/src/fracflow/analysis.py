"""Norms, decay fits, profile errors and dissipation reports for trajectories."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import Grid
from .errors import (DegenerateInputError, GeometryError, HypothesisViolationError,
                     InsufficientDataError, ValidationError)
from .integrator import Trajectory
from .kernel import diffusivity, limit_profile

MIN_FIT_POINTS = 6
EARLY_WINDOW = (0.01, 0.5)
LATE_T_MIN = 10.0


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "oo"):
            return math.inf
        p = float(p)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise ValidationError(f"p must be >= 1 or inf, got {p!r}")
    return p


def _h(grid) -> float:
    return grid.h if isinstance(grid, Grid) else float(grid)


def lp_norm(u, p, grid) -> float:
    """(h sum |u_i|^p)^(1/p), or max |u_i| for p = inf.  ``grid`` may be a Grid or h."""
    p = _parse_p(p)
    a = np.abs(np.asarray(u, dtype=float))
    if p == math.inf:
        return float(a.max()) if a.size else 0.0
    h = _h(grid)
    if p == 1:
        return h * float(a.sum())
    if p == 2:
        return math.sqrt(h * float(np.dot(a, a)))
    m = a.max() if a.size else 0.0
    if m == 0:
        return 0.0
    # scale by the max to avoid overflow for large p
    return float(m * (h * np.sum((a / m) ** p)) ** (1.0 / p))


def decay_exponent(p, r: float, N: int = 1) -> float:
    """(N / (2r)) (1 - 1/p)."""
    p = _parse_p(p)
    return N / (2.0 * r) * (1.0 - (0.0 if p == math.inf else 1.0 / p))


@dataclass(frozen=True)
class PowerFit:
    slope: float
    intercept: float
    residual_rms: float
    n_points: int


def fit_power_law(x, y) -> PowerFit:
    """Least-squares line through (log x, log y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or x.shape != y.shape:
        raise InsufficientDataError("need at least two matching (x, y) pairs")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DegenerateInputError("log-log fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    res = ly - (slope * lx + intercept)
    return PowerFit(float(slope), float(intercept), float(np.sqrt(np.mean(res ** 2))), int(x.size))


@dataclass(frozen=True)
class DecayReport:
    p: float
    t_min: float
    t_max: float
    times: tuple
    norms: tuple
    slope: float
    intercept: float
    residual_rms: float
    predicted_slope_r: float
    predicted_slope_min: float

    @property
    def n_points(self) -> int:
        return len(self.times)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = "inf" if self.p == math.inf else self.p
        d["times"] = list(self.times)
        d["norms"] = list(self.norms)
        return d


def fit_decay(traj: Trajectory, p, window: Sequence[float], N: int = 1) -> DecayReport:
    """Fit log ||u(t)||_p against log t over the snapshots with t in [t_min, t_max]."""
    p = _parse_p(p)
    t_min, t_max = map(float, window)
    if not 0 < t_min < t_max:
        raise ValidationError(f"window must satisfy 0 < t_min < t_max, got {window!r}")
    lo, hi = float(traj.times.min()), float(traj.times.max())
    tol = 1e-12 * max(1.0, hi)
    if t_min < lo - tol or t_max > hi + tol:
        raise ValidationError(
            f"window [{t_min:g}, {t_max:g}] is not inside the trajectory range [{lo:g}, {hi:g}]")
    sel = (traj.times >= t_min - tol) & (traj.times <= t_max + tol)
    n = int(sel.sum())
    if n < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"{n} snapshot(s) in [{t_min:g}, {t_max:g}]; at least {MIN_FIT_POINTS} required")
    times = traj.times[sel]
    h = traj.grid.h
    norms = np.array([lp_norm(u, p, h) for u in traj.snapshots[sel]])
    if np.any(norms <= 0):
        raise DegenerateInputError("all norms in the fit window must be positive")
    fit = fit_power_law(times, norms)
    ex = traj.exponents or {}
    r = ex.get("r", traj.r)
    s = ex.get("s", r)
    return DecayReport(p=p, t_min=t_min, t_max=t_max, times=tuple(map(float, times)),
                       norms=tuple(map(float, norms)), slope=fit.slope, intercept=fit.intercept,
                       residual_rms=fit.residual_rms,
                       predicted_slope_r=-decay_exponent(p, r, N),
                       predicted_slope_min=-decay_exponent(p, min(r, s), N))


def profile_constant(traj: Trajectory, N: int = 1) -> float:
    """C_{Omega_r} = alpha_r / C_{N,r}: the diffusivity of the limit equation."""
    coeff = traj.coefficients or {"r": 1.0}
    return diffusivity(coeff["r"], traj.exponents["r"], N)


def check_profile_hypothesis(r: float, c: float, N: int = 1) -> None:
    if not r < N / 2 + c:
        raise HypothesisViolationError(
            f"asymptotic profile needs r < N/2 + c; got r={r:g}, c={c:g}, N={N}")


def profile_error(traj: Trajectory, t: float, p, M: Optional[float] = None,
                  C_omega_r: Optional[float] = None, r: Optional[float] = None,
                  N: int = 1) -> float:
    """t^((N/2r)(1-1/p)) ||u(t) - U_M(t)||_p with U_M = M K^r_{C t} sampled at cell centers.

    M defaults to the initial mass, C_omega_r to alpha_r / C_{N,r}.
    """
    ex = traj.exponents or {}
    r = ex.get("r", traj.r) if r is None else r
    c = ex.get("c")
    if c is not None:
        check_profile_hypothesis(r, c, N)
    p = _parse_p(p)
    u = traj.snapshot(t)
    if M is None:
        M = float(traj.mass[0])
    if C_omega_r is None:
        C_omega_r = profile_constant(traj, N)
    U = limit_profile(M, C_omega_r, r, t, traj.grid.cell_centers)
    return t ** decay_exponent(p, r, N) * lp_norm(u - U, p, traj.grid)


def profile_error_series(traj: Trajectory, times, p, **kw) -> list:
    return [(float(t), profile_error(traj, t, p, **kw)) for t in times]


def tail_mass(u, R: float, grid: Grid) -> float:
    """h * sum of |u_i| over cells with |x_i| > 2R."""
    if not R > 0:
        raise ValidationError(f"R must be > 0, got {R!r}")
    if not 2 * R < grid.truncation_radius:
        raise GeometryError(f"2R = {2 * R:g} must be < L = {grid.truncation_radius:g}")
    u = np.asarray(u, dtype=float)
    far = np.abs(grid.cell_centers) > 2 * R
    return grid.h * float(np.sum(np.abs(u[far])))


@dataclass(frozen=True)
class DissipationRow:
    t: float
    form_energy: float
    bound: float
    ok: bool


def energy_dissipation_report(traj: Trajectory, rtol: float = 1e-8) -> list:
    """Rows (t, E(u,u), ||u0||^2 / (2t), pass) for every snapshot with t > 0.

    E(u,u) is the bilinear form on the diagonal, twice the stored energy.
    """
    if traj.initial is None:
        raise ValidationError("trajectory does not carry its initial state")
    h = traj.grid.h
    u0_sq = h * float(np.dot(traj.initial, traj.initial))
    rows = []
    for t, e in zip(traj.times, traj.energy):
        if t <= 0:
            continue
        form = 2.0 * float(e)
        bound = u0_sq / (2.0 * float(t))
        rows.append(DissipationRow(float(t), form, bound, bool(form <= (1 + rtol) * bound)))
    return rows


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path, header: Sequence[str], rows, meta: Optional[dict] = None) -> Path:
    """CSV with '#' metadata lines and 17-significant-digit numbers."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for k, v in sorted((meta or {}).items()):
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and math.isinf(o):
        return "inf"
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_decay_report(report: DecayReport, path) -> Path:
    meta = {"p": report.to_dict()["p"], "window": f"[{report.t_min!r}, {report.t_max!r}]",
            "slope": f"{report.slope:.17g}", "intercept": f"{report.intercept:.17g}",
            "predicted_slope_r": f"{report.predicted_slope_r:.17g}",
            "predicted_slope_min": f"{report.predicted_slope_min:.17g}"}
    return write_csv(path, ["t", "norm"], zip(report.times, report.norms), meta)
