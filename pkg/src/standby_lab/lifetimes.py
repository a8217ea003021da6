"""Lifetime-distribution kernel.

Every law is evaluated through its log-survival function, which keeps ratios
of survivals (residual laws, hazard-order checks, the warm-standby integrand)
exact deep into the tail where plain survivals underflow.
"""

from __future__ import annotations

import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DeadAtAge, DegenerateGrid, NegativeTime, OutOfRange
from .grids import GridSpec, default_grid
from .verdicts import Verdict

# Survival below this is treated as 0 for hazard/ratio purposes.
UNDERFLOW_FLOOR = 1e-300
LOG_UNDERFLOW_FLOOR = float(np.log(UNDERFLOW_FLOOR))
# Shape checks are restricted to the region where S exceeds this.
SHAPE_REGION_FLOOR = 1e-12
DEFAULT_SHAPE_TOL = 1e-9


def _vectorized(fn):
    """Evaluate on float arrays; return a float for scalar input."""

    def wrapper(self, t):
        arr = np.asarray(t, dtype=float)
        out = fn(self, arr)
        return float(out) if out.ndim == 0 else out

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


class LifetimeDistribution(ABC):
    """A nonnegative continuous lifetime law.

    Subclasses provide log-survival, log-density and the inverse of
    log-survival; everything else derives from those.
    """

    @abstractmethod
    def _log_survival(self, t: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _log_density(self, t: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _inverse_log_survival(self, log_p: np.ndarray) -> np.ndarray: ...

    @_vectorized
    def log_survival(self, t):
        return self._log_survival(t)

    @_vectorized
    def survival(self, t):
        return np.exp(self._log_survival(t))

    @_vectorized
    def cdf(self, t):
        return -np.expm1(self._log_survival(t))

    @_vectorized
    def log_cdf(self, t):
        ls = self._log_survival(t)
        with np.errstate(divide="ignore"):
            return np.log(-np.expm1(ls))

    @_vectorized
    def density(self, t):
        with np.errstate(over="ignore"):
            return np.exp(self._log_density(t))

    @_vectorized
    def log_density(self, t):
        return self._log_density(t)

    @_vectorized
    def hazard(self, t):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self._log_density(t) - self._log_survival(t))

    @_vectorized
    def reversed_hazard(self, t):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return np.exp(self._log_density(t) - np.log(-np.expm1(self._log_survival(t))))

    def inverse_survival(self, p):
        """inf{t >= 0 : S(t) <= p} for p in (0, 1]."""
        arr = np.asarray(p, dtype=float)
        if np.any(arr <= 0) or np.any(arr > 1):
            raise OutOfRange(f"survival probability must lie in (0, 1], got {p}")
        out = self._inverse_log_survival(np.log(arr))
        return float(out) if out.ndim == 0 else out

    def inverse_cdf(self, q):
        arr = np.asarray(q, dtype=float)
        if np.any(arr < 0) or np.any(arr >= 1):
            raise OutOfRange(f"cdf probability must lie in [0, 1), got {q}")
        out = self._inverse_log_survival(np.log1p(-arr))
        return float(out) if out.ndim == 0 else out

    def draw(self, u):
        """Inverse-transform draw from survival-probability uniforms in (0, 1]."""
        arr = np.asarray(u, dtype=float)
        out = self._inverse_log_survival(np.log(arr))
        return float(out) if out.ndim == 0 else out

    def residual_draw(self, age, u):
        """Draw from [X - age | X > age] using survival-probability uniforms."""
        age = np.asarray(age, dtype=float)
        target = self._log_survival(age) + np.log(np.asarray(u, dtype=float))
        out = np.maximum(self._inverse_log_survival(target) - age, 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Exponential(LifetimeDistribution):
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and np.isfinite(self.rate)):
            raise OutOfRange(f"rate must be positive, got {self.rate}")

    def _log_survival(self, t):
        return -self.rate * t

    def _log_density(self, t):
        return np.log(self.rate) - self.rate * t

    def _inverse_log_survival(self, log_p):
        return -log_p / self.rate

    def config(self) -> dict:
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Weibull(LifetimeDistribution):
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and np.isfinite(self.shape)):
            raise OutOfRange(f"shape must be positive, got {self.shape}")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise OutOfRange(f"scale must be positive, got {self.scale}")

    def _log_survival(self, t):
        return -((t / self.scale) ** self.shape)

    def _log_density(self, t):
        k, theta = self.shape, self.scale
        x = t / theta
        with np.errstate(divide="ignore", invalid="ignore"):
            lf = np.log(k / theta) + (k - 1.0) * np.log(x) - x**k
        if k == 1.0:
            lf = np.where(x == 0, np.log(k / theta), lf)
        return lf

    def _inverse_log_survival(self, log_p):
        return self.scale * (-log_p) ** (1.0 / self.shape)

    def config(self) -> dict:
        return {"kind": "weibull", "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class PiecewiseSurvival(LifetimeDistribution):
    """Survival table interpolated by a monotone cubic in log-survival space.

    Beyond the last knot, log-survival continues linearly at the last
    segment's average hazard, so the final segment must strictly decrease.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self):
        knots = tuple((float(t), float(s)) for t, s in self.knots)
        object.__setattr__(self, "knots", knots)
        ts = np.array([t for t, _ in knots])
        ss = np.array([s for _, s in knots])
        if ts.size < 2:
            raise OutOfRange("piecewise survival needs at least 2 knots")
        if ts[0] != 0.0 or ss[0] != 1.0:
            raise OutOfRange("first knot must be (t=0, S=1)")
        if np.any(np.diff(ts) <= 0):
            raise OutOfRange("knot times must be strictly increasing")
        if np.any(ss <= 0) or np.any(ss > 1) or np.any(np.diff(ss) > 0):
            raise OutOfRange("S values must be nonincreasing and in (0, 1]")
        if ss[-1] >= ss[-2]:
            raise OutOfRange("last segment must strictly decrease (fixes the tail hazard)")
        log_ss = np.log(ss)
        interp = PchipInterpolator(ts, log_ss, extrapolate=False)
        object.__setattr__(self, "_interp", interp)
        object.__setattr__(self, "_dinterp", interp.derivative())
        object.__setattr__(self, "_t_last", float(ts[-1]))
        object.__setattr__(self, "_log_s_last", float(log_ss[-1]))
        tail = (log_ss[-1] - log_ss[-2]) / (ts[-1] - ts[-2])
        object.__setattr__(self, "_tail_slope", float(tail))

    def _log_survival(self, t):
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        inside = arr <= self._t_last
        out = np.empty_like(arr)
        out[inside] = np.minimum(self._interp(arr[inside]), 0.0)
        out[~inside] = self._log_s_last + self._tail_slope * (arr[~inside] - self._t_last)
        return out if np.asarray(t).ndim else out.reshape(())

    def _dlog_survival(self, t):
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        inside = arr <= self._t_last
        out = np.empty_like(arr)
        out[inside] = np.minimum(self._dinterp(arr[inside]), 0.0)
        out[~inside] = self._tail_slope
        return out

    def _log_density(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore"):
            lf = np.log(-self._dlog_survival(t_arr)) + self._log_survival(t_arr)
        return lf if np.asarray(t).ndim else lf.reshape(())

    def _inverse_log_survival(self, log_p):
        lp = np.atleast_1d(np.asarray(log_p, dtype=float))
        out = np.empty_like(lp)
        out[lp >= 0.0] = 0.0
        in_tail = lp < self._log_s_last
        out[in_tail] = self._t_last + (lp[in_tail] - self._log_s_last) / self._tail_slope
        mid = (lp < 0.0) & ~in_tail
        if mid.any():
            target = lp[mid]
            lo = np.zeros_like(target)
            hi = np.full_like(target, self._t_last)
            for _ in range(90):
                m = 0.5 * (lo + hi)
                above = self._interp(m) > target
                lo = np.where(above, m, lo)
                hi = np.where(above, hi, m)
            out[mid] = 0.5 * (lo + hi)
        return out if np.asarray(log_p).ndim else out.reshape(())

    def config(self) -> dict:
        return {"kind": "piecewise_survival", "knots": [list(k) for k in self.knots]}

    @classmethod
    def from_csv(cls, path: str | Path) -> "PiecewiseSurvival":
        """Load a two-column CSV ``t,S`` with a header row."""
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [c.strip().lower() for c in header[:2]] != ["t", "s"]:
                raise OutOfRange(f"expected header 't,S' in {path}, got {header}")
            for row in reader:
                if not row or row[0].lstrip().startswith("#"):
                    continue
                rows.append((float(row[0]), float(row[1])))
        return cls(knots=tuple(rows))


@dataclass(frozen=True)
class ResidualLife(LifetimeDistribution):
    """[X - age | X > age]: the base law conditioned on surviving to ``age``."""

    base: LifetimeDistribution
    age: float

    def __post_init__(self):
        # Flatten nesting so repeated conditioning composes ages exactly.
        if isinstance(self.base, ResidualLife):
            object.__setattr__(self, "age", self.age + self.base.age)
            object.__setattr__(self, "base", self.base.base)
        object.__setattr__(self, "_log_s_age", self.base.log_survival(self.age))

    def _log_survival(self, t):
        return self.base._log_survival(np.asarray(t, dtype=float) + self.age) - self._log_s_age

    def _log_density(self, t):
        return self.base._log_density(np.asarray(t, dtype=float) + self.age) - self._log_s_age

    def _inverse_log_survival(self, log_p):
        shifted = self.base._inverse_log_survival(np.asarray(log_p, dtype=float) + self._log_s_age)
        return np.maximum(shifted - self.age, 0.0)

    def config(self) -> dict:
        return {"kind": "residual", "base": self.base.config(), "age": self.age}


@dataclass(frozen=True)
class HazardPair:
    hazard: float
    reversed_hazard: float


@dataclass(frozen=True)
class EvalRecord:
    S: float
    F: float
    f: float
    hazards: HazardPair


def evaluate(d: LifetimeDistribution, t: float) -> EvalRecord:
    """Survival, CDF, density and both hazard rates at a single time."""
    if t < 0:
        raise NegativeTime(f"t must be nonnegative, got {t}")
    s = d.survival(t)
    return EvalRecord(
        S=s,
        F=1.0 - s,
        f=d.density(t),
        hazards=HazardPair(hazard=d.hazard(t), reversed_hazard=d.reversed_hazard(t)),
    )


def inverse_survival(d: LifetimeDistribution, p: float) -> float:
    return d.inverse_survival(p)


def sample(d: LifetimeDistribution, stream) -> float:
    """One inverse-transform draw; deterministic in (stream.seed, position)."""
    return d.draw(stream.uniform())


def sample_many(d: LifetimeDistribution, stream, count: int) -> np.ndarray:
    return d.draw(stream.take(count))


def residual(d: LifetimeDistribution, age: float) -> LifetimeDistribution:
    """The law of [X - age | X > age]."""
    if age < 0:
        raise NegativeTime(f"age must be nonnegative, got {age}")
    if age == 0.0:
        return d
    if d.log_survival(age) < LOG_UNDERFLOW_FLOOR:
        raise DeadAtAge(f"survival at age {age} is 0 within tolerance")
    if isinstance(d, Exponential):
        return d
    return ResidualLife(base=d, age=float(age))


class ShapeProperty(Enum):
    LOG_CONCAVE_SURVIVAL = "log_concave_survival"
    LOG_CONVEX_SURVIVAL = "log_convex_survival"
    CONVEX_SURVIVAL = "convex_survival"


@dataclass(frozen=True)
class ShapeVerdict:
    property: ShapeProperty
    verdict: Verdict
    grid: dict

    def __bool__(self) -> bool:
        return bool(self.verdict)

    def to_json(self) -> dict:
        return {
            "property": self.property.value,
            "verdict": self.verdict.to_json(),
            "grid": self.grid,
        }


def shape_check(d: LifetimeDistribution, prop: ShapeProperty,
                grid: GridSpec | None = None, tol: float = DEFAULT_SHAPE_TOL) -> ShapeVerdict:
    """Test curvature of log S (or S) by discrete second differences.

    Restricted to the region S > 1e-12; the violation threshold is ``tol``
    plus a per-triple double-precision noise floor, so exactly-linear log
    survivals pass both concavity and convexity.
    """
    if grid is None:
        grid = default_grid([d])
    ts = grid.ts
    log_s = np.asarray(d.log_survival(ts), dtype=float)
    keep = log_s > np.log(SHAPE_REGION_FLOOR)
    ts, log_s = ts[keep], log_s[keep]
    if ts.size < 3:
        raise DegenerateGrid("fewer than 3 grid points with S above the shape floor")

    y = log_s if prop is not ShapeProperty.CONVEX_SURVIVAL else np.exp(log_s)
    h1 = np.diff(ts)[:-1]
    h2 = np.diff(ts)[1:]
    slopes = np.diff(y) / np.diff(ts)
    curvature = 2.0 * (slopes[1:] - slopes[:-1]) / (h1 + h2)

    y_mag = np.maximum.reduce([np.abs(y[:-2]), np.abs(y[1:-1]), np.abs(y[2:])])
    noise = 8.0 * np.finfo(float).eps * y_mag / (h1 * h2)
    threshold = tol + noise

    if prop is ShapeProperty.LOG_CONCAVE_SURVIVAL:
        margins = curvature  # concave: curvature must stay <= 0
    else:
        margins = -curvature  # convex: curvature must stay >= 0

    bad = margins - threshold
    if np.any(bad > 0):
        i = int(np.argmax(bad))
        verdict = Verdict.fails_at(ts[1:-1][i], float(margins[i]))
    else:
        verdict = Verdict.holds()
    return ShapeVerdict(property=prop, verdict=verdict,
                        grid={"points": int(ts.size), "t_max": float(ts[-1])})
