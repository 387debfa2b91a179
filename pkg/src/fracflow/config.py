"""Problem configuration and the computational grid."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Mapping, Optional

import numpy as np

from .errors import ConfigParseError, ResolutionError, ValidationError

REQUIRED_KEYS = ("r", "s", "c", "inner_radius", "truncation_radius", "n_cells")
OPTIONAL_KEYS = ("alpha_r", "alpha_s", "alpha_c", "dimension", "dt", "t_end",
                 "snapshot_times", "seed")
# accepted spellings -> canonical field name
ALIASES = {"L": "truncation_radius", "N": "dimension"}

MIN_CELLS = 8
MIN_INNER_CELLS = 4


class Label(IntEnum):
    EXTERIOR = 0
    INNER = 1


@dataclass(frozen=True)
class ProblemConfig:
    r: float
    s: float
    c: float
    inner_radius: float
    truncation_radius: float
    n_cells: int
    alpha_r: float = 1.0
    alpha_s: float = 1.0
    alpha_c: float = 1.0
    dimension: int = 1
    dt: Optional[float] = None
    t_end: Optional[float] = None
    snapshot_times: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("r", "s", "c"):
            v = getattr(self, name)
            if not _is_real(v) or not 0.0 < v < 1.0:
                raise ValidationError(f"{name} must lie in (0,1), got {v!r}")
        for name in ("alpha_r", "alpha_s", "alpha_c"):
            v = getattr(self, name)
            if not _is_real(v) or not v > 0.0:
                raise ValidationError(f"{name} must be > 0, got {v!r}")
        if not _is_real(self.inner_radius) or not self.inner_radius > 0:
            raise ValidationError(f"inner_radius must be > 0, got {self.inner_radius!r}")
        if not _is_real(self.truncation_radius) or not self.truncation_radius > self.inner_radius:
            raise ValidationError(
                "truncation_radius must exceed inner_radius "
                f"({self.truncation_radius!r} <= {self.inner_radius!r})")
        if isinstance(self.n_cells, bool) or not isinstance(self.n_cells, (int, np.integer)):
            raise ValidationError(f"n_cells must be an integer, got {self.n_cells!r}")
        if self.n_cells < MIN_CELLS:
            raise ResolutionError(f"n_cells must be >= {MIN_CELLS}, got {self.n_cells}")
        if self.dimension != 1:
            raise ValidationError(f"dimension must be 1 (the solver is one-dimensional), got {self.dimension!r}")
        if self.dt is not None and not (_is_real(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be > 0, got {self.dt!r}")
        if self.t_end is not None and not (_is_real(self.t_end) and self.t_end > 0):
            raise ValidationError(f"t_end must be > 0, got {self.t_end!r}")
        if self.snapshot_times is not None:
            times = tuple(float(t) for t in self.snapshot_times)
            if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
                raise ValidationError("snapshot_times must be nonnegative and strictly increasing")
            object.__setattr__(self, "snapshot_times", times)

    @property
    def N(self) -> int:
        return self.dimension

    @property
    def L(self) -> float:
        return self.truncation_radius

    @property
    def profile_hypothesis_holds(self) -> bool:
        """Whether r < N/2 + c, required by the asymptotic-profile experiments."""
        return self.r < self.dimension / 2 + self.c

    @property
    def h(self) -> float:
        return 2.0 * self.truncation_radius / self.n_cells

    def replace(self, **changes) -> "ProblemConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if d["snapshot_times"] is not None:
            d["snapshot_times"] = list(d["snapshot_times"])
        return d


def _is_real(v) -> bool:
    return isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) \
        and np.isfinite(v)


def config_from_mapping(data: Mapping[str, Any]) -> ProblemConfig:
    if not isinstance(data, Mapping):
        raise ValidationError("config must be a JSON object")
    kwargs = {}
    for key, value in data.items():
        name = ALIASES.get(key, key)
        if name not in REQUIRED_KEYS and name not in OPTIONAL_KEYS:
            raise ValidationError(f"unknown config key {key!r}")
        if name in kwargs:
            raise ValidationError(f"duplicate config key {key!r}")
        kwargs[name] = value
    missing = [k for k in REQUIRED_KEYS if k not in kwargs]
    if missing:
        raise ValidationError(f"missing required config key(s): {', '.join(missing)}")
    try:
        return ProblemConfig(**kwargs)
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ValidationError(f"duplicate config key {k!r}")
        out[k] = v
    return out


def parse_json(text: str):
    """json.loads that reports the error position and rejects repeated keys."""
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_config(text: str) -> ProblemConfig:
    """Parse a JSON document into a validated :class:`ProblemConfig`."""
    return config_from_mapping(parse_json(text))


@dataclass(frozen=True)
class Grid:
    """Uniform cell partition of [-L, L] with Inner / Exterior labels."""

    cell_centers: np.ndarray
    h: float
    labels: np.ndarray
    truncation_radius: float
    inner_radius: float
    inner_index_range: range = field(repr=False)
    exterior_index_set: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.cell_centers.size

    @property
    def inner(self) -> np.ndarray:
        return self.labels == Label.INNER

    @property
    def exterior(self) -> np.ndarray:
        return self.labels == Label.EXTERIOR

    @property
    def edges(self) -> np.ndarray:
        L = self.truncation_radius
        return -L + self.h * np.arange(self.n + 1)

    def integrate(self, u) -> float:
        return float(self.h * np.sum(u))


def build_grid(config: ProblemConfig, inner_radius: Optional[float] = None,
               min_inner: int = MIN_INNER_CELLS) -> Grid:
    """Materialize the grid; ``inner_radius`` overrides the labeling radius (rescaled frames)."""
    L = float(config.truncation_radius)
    n = int(config.n_cells)
    R = float(config.inner_radius if inner_radius is None else inner_radius)
    h = 2.0 * L / n
    centers = -L + (np.arange(n) + 0.5) * h
    inner = np.abs(centers) < R
    n_inner = int(inner.sum())
    if n_inner < min_inner:
        raise ResolutionError(
            f"inner region (-{R:g}, {R:g}) resolved by {n_inner} cell(s) at h={h:g}; "
            f"need at least {min_inner} (increase n_cells)")
    idx = np.flatnonzero(inner)
    labels = np.where(inner, Label.INNER, Label.EXTERIOR).astype(np.int8)
    centers.setflags(write=False)
    labels.setflags(write=False)
    ext = np.flatnonzero(~inner)
    ext.setflags(write=False)
    return Grid(cell_centers=centers, h=h, labels=labels, truncation_radius=L,
                inner_radius=R, inner_index_range=range(int(idx[0]), int(idx[-1]) + 1),
                exterior_index_set=ext)
