"""Empirical checks of the functional inequalities and the optimality probes.

Every ratio here is a bounded-ness statistic: constants are never asserted,
only that ratios stay finite and stable under refinement and rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .analysis import fit_power_law
from .config import Grid, ProblemConfig, build_grid
from .errors import DegenerateInputError, GeometryError, ValidationError
from .operator import assemble, assemble_rescaled, quadratic_energy
from .quadrature import distance_weights, gagliardo_seminorm_sq


# --- profiles ---------------------------------------------------------------

def bump(x, center: float = 0.0, scale: float = 1.0) -> np.ndarray:
    """phi((x - center) / scale) with phi(y) = (1 - y^2)^4 on |y| < 1, zero outside."""
    y = (np.asarray(x, dtype=float) - center) / scale
    return np.where(np.abs(y) < 1.0, (1.0 - y * y) ** 4, 0.0)


def _smoothstep(t):
    # C^3 septic: 0 at t=0, 1 at t=1, first three derivatives vanish at both ends
    t = np.clip(t, 0.0, 1.0)
    return t ** 4 * (35.0 - 84.0 * t + 70.0 * t ** 2 - 20.0 * t ** 3)


def cutoff(x) -> np.ndarray:
    """psi: 0 for |x| < 1, 1 for |x| > 2, C^3 polynomial in |x| between."""
    return _smoothstep(np.abs(np.asarray(x, dtype=float)) - 1.0)


@dataclass(frozen=True)
class BumpFamily:
    center: float
    scale: float

    def __call__(self, x):
        return bump(x, self.center, self.scale)

    @property
    def support(self):
        return self.center - self.scale, self.center + self.scale


# --- Nash ---------------------------------------------------------------

def nash_ratio(f, r: float, grid: Grid, mask=None, far_field: bool = True) -> float:
    """||f||_2 / (||f||_1^(2r/(1+2r)) [f]_r^(1/(1+2r))) over the masked cells.

    ``mask`` defaults to the exterior cells.  With ``far_field`` the region is
    continued past the window edges it touches (f = 0 there), so the ratio
    refers to the unbounded exterior rather than its truncation.
    """
    f = np.asarray(f, dtype=float)
    mask = grid.exterior if mask is None else np.asarray(mask, dtype=bool)
    fm = f[mask]
    h = grid.h
    l1 = h * float(np.sum(np.abs(fm)))
    if l1 == 0:
        raise DegenerateInputError("f vanishes on the masked cells")
    l2 = math.sqrt(h * float(np.dot(fm, fm)))
    sn_sq = gagliardo_seminorm_sq(f, r, mask, grid, far_field=far_field)
    if not sn_sq > 0:
        raise DegenerateInputError("seminorm is zero (f constant on the mask)")
    return l2 / (l1 ** (2 * r / (1 + 2 * r)) * math.sqrt(sn_sq) ** (1 / (1 + 2 * r)))


def random_exterior_bumps(grid: Grid, count: int, seed: int, min_scale: float = 0.5,
                          max_scale: float = 3.0) -> list:
    """Seeded bumps with support inside the exterior part of the window."""
    rng = np.random.default_rng(seed)
    R, L = grid.inner_radius, grid.truncation_radius
    out = []
    while len(out) < count:
        scale = float(rng.uniform(min_scale, max_scale))
        lo, hi = R + scale, L - scale
        if hi <= lo:
            continue
        center = float(rng.uniform(lo, hi)) * (1 if rng.random() < 0.5 else -1)
        out.append(BumpFamily(center, scale))
    return out


# --- measure density -------------------------------------------------------

EXTERIOR_LINE = ((-math.inf, -1.0), (1.0, math.inf))


@dataclass(frozen=True)
class MeasureDensityResult:
    integral: float
    measure: float
    ratio: float
    flagged: bool


def _intervals(items, what):
    out = []
    for iv in items:
        a, b = map(float, iv)
        if not a < b:
            raise ValidationError(f"{what} interval ({a}, {b}) must have a < b")
        out.append((a, b))
    out.sort()
    for (a0, b0), (a1, b1) in zip(out, out[1:]):
        if a1 < b0:
            raise ValidationError(f"{what} intervals ({a0}, {b0}) and ({a1}, {b1}) overlap")
    return out


def _power_integral(x, a, b, beta):
    """int_a^b |x - y|^(-1-beta) dy for x outside the open interval (a, b)."""
    if x <= a:
        near, far = a - x, b - x
    else:
        near, far = x - b, x - a
    if near == 0:
        return math.inf
    return (near ** -beta - (0.0 if math.isinf(far) else far ** -beta)) / beta


def measure_density_integral(x: float, E, p: float, s: float, omega=EXTERIOR_LINE) -> MeasureDensityResult:
    """int over omega minus E of |x - y|^(-1 - p s) dy, and its ratio to |E|^(-p s).

    ``omega`` and ``E`` are lists of disjoint open intervals (infinite ends
    allowed in omega).  The value is +inf, and flagged, when x is not in the
    closure of E.
    """
    if not p > 1:
        raise ValidationError(f"p must be > 1, got {p!r}")
    if not 0 < s < 1:
        raise ValidationError(f"s must lie in (0,1), got {s!r}")
    omega = _intervals(omega, "omega")
    E = _intervals(E, "E")
    x = float(x)
    if not any(a < x < b for a, b in omega):
        raise ValidationError(f"x={x} is not in omega")
    for a, b in E:
        if not any(oa <= a and b <= ob for oa, ob in omega):
            raise ValidationError(f"E interval ({a}, {b}) is not contained in omega")
    beta = p * s
    total = 0.0
    for oa, ob in omega:
        cursor = oa
        for a, b in E:
            if a >= ob or b <= oa:
                continue
            if a > cursor:
                total += _piece(x, cursor, a, beta)
            cursor = b
        if cursor < ob:
            total += _piece(x, cursor, ob, beta)
    measure = float(sum(b - a for a, b in E))
    if math.isinf(measure) or measure == 0:
        raise ValidationError("E must have positive finite measure")
    ratio = total * measure ** beta
    return MeasureDensityResult(integral=total, measure=measure, ratio=ratio,
                                flagged=math.isinf(total))


def _piece(x, a, b, beta):
    if a < x < b:
        return math.inf
    return _power_integral(x, a, b, beta)


def measure_density_sweep(n_samples: int, p: float, s: float, seed: int,
                          omega=EXTERIOR_LINE, decades: float = 3.0) -> list:
    """Random (x, E) pairs with x inside E and |E| spread over ``decades`` decades.

    Omega must be a union of half-lines and bounded intervals; points are drawn
    within 10 units of its finite endpoints.
    """
    omega = _intervals(omega, "omega")
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_samples:
        oa, ob = omega[int(rng.integers(len(omega)))]
        lo = oa if math.isfinite(oa) else ob - 10.0
        hi = ob if math.isfinite(ob) else oa + 10.0
        x = float(rng.uniform(lo, hi))
        if not oa < x < ob:
            continue
        length = 10.0 ** rng.uniform(-2.0, -2.0 + decades)
        frac = rng.uniform(0.05, 0.95)
        a, b = max(oa, x - frac * length), min(ob, x + (1 - frac) * length)
        E = [(a, b)]
        # optional second component, away from the first
        if rng.random() < 0.5:
            gap = 10.0 ** rng.uniform(-2.0, 0.0)
            ell = 10.0 ** rng.uniform(-2.0, -2.0 + decades)
            c0 = b + gap
            if c0 + ell < ob:
                E.append((c0, c0 + ell))
        res = measure_density_integral(x, E, p, s, [(oa, ob)] + [iv for iv in omega if iv != (oa, ob)])
        out.append((x, tuple(E), res))
    return out


# --- interpolation claim ------------------------------------------------------

def tail_constant(r: float) -> float:
    """C(r) = int_{|z|>1} |z|^(-1-r) dz = 2/r."""
    return 2.0 / r


@dataclass(frozen=True)
class InterpolationCheck:
    lhs: float           # [v]^2_{r/2}
    rhs: float           # 2 C(r) ||v|| [v]_r
    rhs_delta: float     # delta^r [v]_r^2 + C(r) delta^-r ||v||^2 at delta^r = ||v|| / [v]_r
    delta: float
    passed: bool


def interpolation_seminorm_check(v, r: float, grid: Grid, mask=None) -> InterpolationCheck:
    if not 0 < r < 1:
        raise ValidationError(f"r must lie in (0,1), got {r!r}")
    v = np.asarray(v, dtype=float)
    mask = np.ones(grid.n, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    vm = v[mask]
    norm = math.sqrt(grid.h * float(np.dot(vm, vm)))
    top_sq = gagliardo_seminorm_sq(v, r, mask, grid)
    if not top_sq > 0 or norm == 0:
        raise DegenerateInputError("v is constant on the mask")
    top = math.sqrt(top_sq)
    lhs = gagliardo_seminorm_sq(v, r / 2, mask, grid)
    C = tail_constant(r)
    delta_r = norm / top
    rhs_delta = delta_r * top_sq + C * norm * norm / delta_r
    rhs = 2 * C * norm * top
    return InterpolationCheck(lhs=lhs, rhs=rhs, rhs_delta=rhs_delta,
                              delta=delta_r ** (1 / r), passed=bool(lhs <= rhs * (1 + 1e-6)))


def random_bump_sum(grid: Grid, rng, mask=None, max_terms: int = 3, min_scale: float = 0.3):
    """A sum of 1..max_terms bumps with random signs, inside the masked region."""
    x = grid.cell_centers
    mask = np.ones(grid.n, dtype=bool) if mask is None else mask
    lo, hi = x[mask].min(), x[mask].max()
    v = np.zeros(grid.n)
    for _ in range(int(rng.integers(1, max_terms + 1))):
        scale = float(rng.uniform(min_scale, max(min_scale * 1.01, (hi - lo) / 6)))
        center = float(rng.uniform(lo + scale, hi - scale))
        v += float(rng.uniform(-2, 2)) * bump(x, center, scale)
    return np.where(mask, v, 0.0)


# --- optimality probes --------------------------------------------------------

MIN_EPS_SPAN = 8.0


class ProbeCase(Enum):
    INNER = "InnerCase"
    EXTERIOR = "ExteriorCase"


@dataclass(frozen=True)
class SmallTimeProbe:
    case: ProbeCase
    center: float
    eps: tuple
    energies: tuple
    slope: float
    predicted: float


def _support_cells(grid, center, scale):
    return np.abs(grid.cell_centers - center) < scale


def small_time_probe(case, config: ProblemConfig, eps_list: Sequence[float],
                     center: Optional[float] = None, grid: Optional[Grid] = None,
                     far_field: bool = True) -> SmallTimeProbe:
    """Slope of log E(phi_eps, phi_eps) against log eps for bumps shrinking at a point."""
    case = ProbeCase(case) if not isinstance(case, ProbeCase) else case
    eps = np.asarray(sorted(map(float, eps_list)), dtype=float)
    if eps.size < 4 or eps[-1] / eps[0] < MIN_EPS_SPAN * (1 - 1e-12) or eps[0] <= 0:
        raise ValidationError(f"eps list needs >= 4 positive values spanning a factor >= {MIN_EPS_SPAN:g}")
    grid = build_grid(config) if grid is None else grid
    R, L = grid.inner_radius, grid.truncation_radius
    if center is None:
        center = 0.0 if case is ProbeCase.INNER else 0.5 * (R + L)
    lo, hi = center - eps[-1], center + eps[-1]
    if case is ProbeCase.INNER:
        if not (-R <= lo and hi <= R):
            raise GeometryError(f"bump support [{lo:g}, {hi:g}] leaves the inner region (-{R:g}, {R:g})")
        want = True
    else:
        if not ((lo >= R or hi <= -R) and -L <= lo and hi <= L):
            raise GeometryError(f"bump support [{lo:g}, {hi:g}] is not inside the exterior window")
        want = False
    op = assemble(grid, config)
    energies = []
    for e in eps:
        cells = _support_cells(grid, center, e)
        if np.any(grid.inner[cells] != want):
            raise GeometryError(f"bump at eps={e:g} covers cells across the interface")
        phi = bump(grid.cell_centers, center, e)
        energies.append(2.0 * quadratic_energy(op, phi, far_field=far_field))
    fit = fit_power_law(eps, energies)
    N = config.dimension
    predicted = N - 2 * (config.s if case is ProbeCase.INNER else config.r)
    return SmallTimeProbe(case=case, center=float(center), eps=tuple(eps), energies=tuple(energies),
                          slope=fit.slope, predicted=float(predicted))


@dataclass(frozen=True)
class LargeTimeRow:
    radius: float
    center: float
    energy: float
    energy_ratio: float
    cross: float
    cross_bound: float
    cross_ratio: float
    inner_seminorm_sq: float


def large_time_probe(config: ProblemConfig, centers: Sequence[float], radii: Sequence[float],
                     grid: Optional[Grid] = None, far_field: bool = True) -> list:
    """Energy and cross-term scalings of bumps phi_n of radius r_n centered at x_n in the exterior."""
    grid = build_grid(config) if grid is None else grid
    if len(centers) != len(radii):
        raise ValidationError("centers and radii must have equal length")
    R, L = grid.inner_radius, grid.truncation_radius
    for xn, rn in zip(centers, radii):
        if not rn > 0:
            raise ValidationError(f"radius must be > 0, got {rn!r}")
        if abs(xn) - rn < R:
            raise GeometryError(f"ball B({xn:g}, {rn:g}) meets the inner region")
        if abs(xn) + rn > L:
            raise GeometryError(f"ball B({xn:g}, {rn:g}) leaves the window [-{L:g}, {L:g}]")
    op = assemble(grid, config)
    N, r, c = config.dimension, config.r, config.c
    dist_c = grid.h * distance_weights(grid.n, grid.h, c)
    inner = grid.inner
    inner_idx = np.flatnonzero(inner)
    rows = []
    for xn, rn in zip(centers, radii):
        phi = bump(grid.cell_centers, xn, rn)
        en = 2.0 * quadratic_energy(op, phi, far_field=far_field)
        supp = np.flatnonzero(phi)
        # sum over inner i, exterior j of W_ij (phi_i - phi_j)^2, phi = 0 on the inner cells
        to_inner = np.array([dist_c[np.abs(inner_idx - j)].sum() for j in supp])
        cross = float(np.dot(phi[supp] ** 2, to_inner))
        bound = rn ** N * (abs(xn) - rn - R) ** (-N - 2 * c)
        inner_sn = gagliardo_seminorm_sq(phi, config.s, inner, grid)
        rows.append(LargeTimeRow(radius=float(rn), center=float(xn), energy=en,
                                 energy_ratio=en / rn ** (N - 2 * r), cross=cross,
                                 cross_bound=bound, cross_ratio=cross / bound,
                                 inner_seminorm_sq=inner_sn))
    return rows


@dataclass(frozen=True)
class RescaledBoundReport:
    lam: float
    R: float
    rho: float
    region_max: tuple          # (|x| < 1/lam, 1/lam <= |x| < rho, |x| >= rho)
    predicted: tuple
    constants: tuple
    constant_region_max: float  # |x| > 2R

    def as_rows(self):
        names = ("inner", "middle", "outer")
        return [(n, self.lam, self.R, self.rho, m, p, k)
                for n, m, p, k in zip(names, self.region_max, self.predicted, self.constants)]


def rescaled_bound_tiers(r: float, c: float, lam: float, R: float, N: int = 1) -> tuple:
    return (lam ** (2 * r - 2 * c) * R ** (-2 * c), R ** (-2 * r),
            R ** (-2 * r) * (1 + (lam * R) ** (2 * r - 2 * c - N)))


def rescaled_operator_bound_check(config: ProblemConfig, lam: float, R: float, rho: float,
                                  far_field: bool = True) -> RescaledBoundReport:
    """Per-region max |L_lam psi_R| on the grid, against the three predicted tiers.

    With ``far_field`` the exterior continues past the window with psi_R = 1.
    """
    if not R > 2:
        raise ValidationError(f"R must be > 2, got {R!r}")
    if not lam > max(1.0, 1.0 / rho):
        raise ValidationError(f"lambda must exceed max(1, 1/rho) = {max(1.0, 1.0 / rho):g}")
    if not 2 * R < config.truncation_radius:
        raise GeometryError(f"2R = {2 * R:g} must be < L = {config.truncation_radius:g}")
    grid = build_grid(config)
    op = assemble_rescaled(grid, config, lam)
    x = op.grid.cell_centers
    psi = cutoff(x / R)
    Lpsi = op.apply_generator(psi, exterior_value=1.0 if far_field else None)
    ax = np.abs(x)
    regions = (ax < 1 / lam, (ax >= 1 / lam) & (ax < rho), ax >= rho)
    maxima = tuple(float(np.max(np.abs(Lpsi[m]))) if m.any() else math.nan for m in regions)
    tiers = rescaled_bound_tiers(config.r, config.c, lam, R, config.dimension)
    far = ax > 2 * R
    return RescaledBoundReport(lam=float(lam), R=float(R), rho=float(rho), region_max=maxima,
                               predicted=tiers, constants=tuple(m / p for m, p in zip(maxima, tiers)),
                               constant_region_max=float(np.max(np.abs(Lpsi[far]))) if far.any() else math.nan)
