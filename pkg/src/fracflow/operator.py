"""Dense assembly of the coupled three-kernel operator and its energy.

``NonlocalOperator.matrix`` is the discrete generator with the sign flipped,
``A = -L``, so solutions evolve by ``u' = -A u``.  Off-diagonal entries are
``A_ij = -coeff * w_ij`` where ``w_ij`` is the kernel integral over cell j seen
from x_i and the kernel is picked by the label pair (s inner/inner, r
exterior/exterior, c mixed).  The diagonal is minus the off-diagonal row sum.

Quadratic forms use the grid inner product ``(u, v) = h * sum(u * v)``, so the
bilinear form is ``E(u, v) = h * u^T A v`` and the energy is ``E(u, u) / 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import toeplitz

from .config import Grid, ProblemConfig, build_grid
from .errors import ValidationError
from .quadrature import distance_weights, far_field_tail, pair_weight_matrix


@dataclass(frozen=True)
class NonlocalOperator:
    matrix: np.ndarray
    grid: Grid
    exponents: dict
    coefficients: dict
    lam: Optional[float] = None

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def form_matrix(self) -> np.ndarray:
        """h * A: the Gram matrix of the bilinear form in the Euclidean inner product."""
        return self.grid.h * self.matrix

    def apply_generator(self, u, exterior_value: Optional[float] = None) -> np.ndarray:
        """Discrete L u = -A u.

        With ``exterior_value`` the exterior region is continued past the
        window with u equal to that constant, adding D * (value - u).
        """
        u = np.asarray(u, dtype=float)
        out = -(self.matrix @ u)
        if exterior_value is not None:
            out += far_field_diagonal(self) * (exterior_value - u)
        return out

    def metadata(self) -> dict:
        return {"n": self.n, "h": self.grid.h, "exponents": self.exponents,
                "coefficients": self.coefficients, "lambda": self.lam,
                "inner_radius": self.grid.inner_radius,
                "truncation_radius": self.grid.truncation_radius}


@dataclass(frozen=True)
class EnergyBreakdown:
    e_ss: float
    e_rr: float
    e_cross: float

    @property
    def total(self) -> float:
        return self.e_ss + self.e_rr + self.e_cross


def assemble_coefficients(grid: Grid, exponents: dict, coefficients: dict,
                          lam=None) -> NonlocalOperator:
    """Assemble from explicit exponent/coefficient dicts keyed "s", "r", "c".

    Coefficients may be zero here (e.g. to decouple the two regions), which a
    ProblemConfig does not allow.
    """
    for key in ("s", "r", "c"):
        if key not in exponents or key not in coefficients:
            raise ValidationError(f"missing exponent or coefficient for kernel {key!r}")
        if not coefficients[key] >= 0:
            raise ValidationError(f"coefficient {key} must be >= 0, got {coefficients[key]!r}")
    n = grid.n
    inner = grid.inner
    A = np.empty((n, n))
    ii = np.outer(inner, inner)
    ee = np.outer(~inner, ~inner)
    for key, block in (("s", ii), ("r", ee), ("c", ~(ii | ee))):
        w = toeplitz(distance_weights(n, grid.h, exponents[key]))
        np.copyto(A, -coefficients[key] * w, where=block)
    np.fill_diagonal(A, 0.0)
    A[np.diag_indices(n)] = -A.sum(axis=1)
    A.setflags(write=False)
    return NonlocalOperator(matrix=A, grid=grid, exponents=dict(exponents),
                            coefficients=dict(coefficients), lam=lam)


def assemble(grid: Grid, config: ProblemConfig) -> NonlocalOperator:
    exponents = {"s": config.s, "r": config.r, "c": config.c}
    coefficients = {"s": config.alpha_s, "r": config.alpha_r, "c": config.alpha_c}
    return assemble_coefficients(grid, exponents, coefficients)


def assemble_rescaled(grid: Grid, config: ProblemConfig, lam: float) -> NonlocalOperator:
    """Operator of the rescaled problem: inner region shrunk to radius R/lam,
    inner/inner and mixed kernels weighted by lam^(2r-2s) and lam^(2r-2c).

    The window [-L, L] and cell count are kept; labels are rebuilt at the
    shrunken radius.
    """
    if grid.n != config.n_cells or grid.truncation_radius != config.truncation_radius:
        raise ValidationError("grid does not match config")
    lam = float(lam)
    if not lam > 0:
        raise ValidationError(f"lambda must be > 0, got {lam!r}")
    grid = build_grid(config, inner_radius=config.inner_radius / lam, min_inner=1)
    r, s, c = config.r, config.s, config.c
    exponents = {"s": s, "r": r, "c": c}
    coefficients = {"s": config.alpha_s * lam ** (2 * r - 2 * s),
                    "r": config.alpha_r,
                    "c": config.alpha_c * lam ** (2 * r - 2 * c)}
    return assemble_coefficients(grid, exponents, coefficients, lam=lam)


def far_field_diagonal(op: NonlocalOperator) -> np.ndarray:
    """D_i: coefficient times kernel mass of the exterior beyond |x| = L, seen from cell i."""
    grid = op.grid
    k, e = op.coefficients, op.exponents
    ext = k["r"] * far_field_tail(grid, e["r"])
    inn = k["c"] * far_field_tail(grid, e["c"])
    return np.where(grid.inner, inn, ext)


def _masked_pair_sum(u, W, rows, cols) -> float:
    sub = W[np.ix_(rows, cols)]
    d = u[rows][:, None] - u[cols][None, :]
    return float(np.sum(sub * d * d))


def energy(op: NonlocalOperator, u) -> EnergyBreakdown:
    """The three summands of the energy, from the quadrature weights directly."""
    u = np.asarray(u, dtype=float)
    grid = op.grid
    inner = np.flatnonzero(grid.inner)
    ext = np.flatnonzero(grid.exterior)
    k = op.coefficients
    e = {}
    for key, rows, cols, factor in (("s", inner, inner, 0.25), ("r", ext, ext, 0.25),
                                    ("c", inner, ext, 0.5)):
        if rows.size == 0 or cols.size == 0:
            e[key] = 0.0
            continue
        W = pair_weight_matrix(grid, op.exponents[key])
        e[key] = factor * k[key] * _masked_pair_sum(u, W, rows, cols)
    return EnergyBreakdown(e_ss=e["s"], e_rr=e["r"], e_cross=e["c"])


def quadratic_energy(op: NonlocalOperator, u, far_field: bool = False) -> float:
    """E(u) = (h/2) u^T A u; cheap path used for per-step diagnostics.

    ``far_field`` adds the pairs with one point past the window, where u = 0.
    """
    u = np.asarray(u, dtype=float)
    e = 0.5 * op.grid.h * float(u @ (op.matrix @ u))
    if far_field:
        e += 0.5 * op.grid.h * float(np.dot(far_field_diagonal(op), u * u))
    return e


def bilinear(op: NonlocalOperator, u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return op.grid.h * float(u @ (op.matrix @ v))


def dump_matrix(op: NonlocalOperator, path) -> tuple[Path, Path]:
    """Write the matrix as row-major float64 plus a JSON sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(op.matrix, dtype="<f8").tofile(path)
    meta = path.with_suffix(path.suffix + ".json")
    meta.write_text(json.dumps({**op.metadata(), "dtype": "float64", "order": "row-major",
                                "sign": "A = -L"}, indent=2, sort_keys=True))
    return path, meta
