"""Evaluation grids: uniform coverage of [0, t_max] with geometric refinement near 0."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGrid

DEFAULT_POINTS = 512
# Fraction of t_max where the geometric refinement starts.
_GEO_START = 1e-6


@dataclass(frozen=True)
class GridSpec:
    """A fixed evaluation grid plus the descriptor used in reports."""

    ts: np.ndarray = field(repr=False, compare=False)
    t_max: float
    points: int

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        if ts.ndim != 1 or ts.size < 3:
            raise DegenerateGrid("grid needs at least 3 points")
        if ts[0] < 0 or np.any(np.diff(ts) <= 0):
            raise DegenerateGrid("grid must be strictly increasing and nonnegative")
        object.__setattr__(self, "ts", ts)

    def descriptor(self) -> dict:
        return {"points": self.points, "t_max": self.t_max}

    @classmethod
    def from_times(cls, ts) -> "GridSpec":
        ts = np.asarray(ts, dtype=float)
        return cls(ts=ts, t_max=float(ts[-1]), points=int(ts.size))


def default_grid(laws, points: int = DEFAULT_POINTS, t_max: float | None = None) -> GridSpec:
    """Union of a uniform grid on [0, t_max] and a geometric refinement near 0.

    ``t_max`` defaults to the largest 0.999 quantile among ``laws``.
    """
    if points < 8:
        raise DegenerateGrid("default grid needs at least 8 points")
    if t_max is None:
        if not laws:
            raise DegenerateGrid("no laws to size the grid from")
        t_max = max(float(d.inverse_survival(1e-3)) for d in laws)
    if not np.isfinite(t_max) or t_max <= 0:
        raise DegenerateGrid(f"t_max must be positive and finite, got {t_max}")
    n_uniform = points // 2
    uniform = np.linspace(0.0, t_max, n_uniform)
    geo = np.geomspace(t_max * _GEO_START, t_max, points - n_uniform + 1)[:-1]
    ts = np.unique(np.concatenate([uniform, geo]))
    return GridSpec(ts=ts, t_max=float(t_max), points=int(ts.size))
