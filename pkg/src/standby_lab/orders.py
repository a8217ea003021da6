"""Grid-based verification of stochastic-order relations.

A HOLDS direction means the defining inequality held at every usable grid
point within tolerance ("holds-on-grid"), never a continuum proof. Ratio
orders (lr/hr/rhr) are tested in log space so the slack corresponds to a
relative tolerance on the ratio itself.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (DegenerateGrid, InvalidSystemPattern, NumericalUnderflow,
                     RegistryMismatch, TruncationWarning)
from .grids import GridSpec, default_grid
from .lifetimes import LOG_UNDERFLOW_FLOOR, PiecewiseSurvival, ResidualLife
from .quadrature import adaptive_simpson_graded
from .systems import SystemSpec, Topology, coupled_sample_many

Z_99 = 2.5758293035489004  # two-sided 99% normal quantile


class OrderKind(Enum):
    LR = "lr"
    HR = "hr"
    RHR = "rhr"
    ST = "st"
    ICV = "icv"
    SP = "sp"


class Direction(Enum):
    A_LE_B = "A_le_B"
    B_LE_A = "B_le_A"
    BOTH = "Both"
    NEITHER = "Neither"


@dataclass(frozen=True)
class OrderVerdict:
    relation: OrderKind
    direction: Direction
    witness_a_le_b: tuple[float, float] | None
    witness_b_le_a: tuple[float, float] | None
    grid: dict
    method: str = "grid"
    inconclusive: bool = False
    note: str = ""

    def holds(self, direction: Direction) -> bool:
        if self.inconclusive:
            return False
        return self.direction in (direction, Direction.BOTH)

    def witness(self, direction: Direction) -> tuple[float, float] | None:
        return self.witness_a_le_b if direction is Direction.A_LE_B else self.witness_b_le_a

    def to_json(self) -> dict:
        def w(v):
            return None if v is None else {"t": v[0], "margin": v[1]}

        out = {
            "relation": self.relation.value,
            "direction": self.direction.value,
            "witness": None if (self.witness_a_le_b is None and self.witness_b_le_a is None)
            else {"A_le_B": w(self.witness_a_le_b), "B_le_A": w(self.witness_b_le_a)},
            "method": self.method,
            "grid": self.grid,
        }
        if self.inconclusive:
            out["inconclusive"] = True
        if self.note:
            out["note"] = self.note
        return out


def _combine(a_le_b_witness, b_le_a_witness) -> Direction:
    if a_le_b_witness is None and b_le_a_witness is None:
        return Direction.BOTH
    if a_le_b_witness is None:
        return Direction.A_LE_B
    if b_le_a_witness is None:
        return Direction.B_LE_A
    return Direction.NEITHER


def _worst_excess(ts, excess, tol):
    """Worst point where ``excess`` exceeds ``tol``; None if nowhere."""
    over = excess - tol
    if not np.any(over > 0):
        return None
    i = int(np.argmax(over))
    return (float(ts[i]), float(excess[i]))


def _monotone_witnesses(ts, y, tol):
    """Witnesses against nondecreasing (for A<=B) and nonincreasing (B<=A)."""
    drops = y[:-1] - y[1:]
    return (_worst_excess(ts[1:], drops, tol), _worst_excess(ts[1:], -drops, tol))


def pointwise_dominance(ts, values_a, values_b, tol: float,
                        relation: OrderKind = OrderKind.ST, method: str = "grid",
                        grid_descriptor: dict | None = None) -> OrderVerdict:
    """ST-style verdict from two precomputed curves (A <= B iff S_A <= S_B)."""
    ts = np.asarray(ts, dtype=float)
    values_a = np.asarray(values_a, dtype=float)
    values_b = np.asarray(values_b, dtype=float)
    wa = _worst_excess(ts, values_a - values_b, tol)
    wb = _worst_excess(ts, values_b - values_a, tol)
    return OrderVerdict(
        relation=relation, direction=_combine(wa, wb),
        witness_a_le_b=wa, witness_b_le_a=wb,
        grid=grid_descriptor or {"points": int(ts.size), "t_max": float(ts[-1])},
        method=method)


def check_order(a, b, kind: OrderKind, grid: GridSpec | None = None,
                tol: float = 1e-9) -> OrderVerdict:
    """Check one non-SP order between two lifetime laws on a shared grid."""
    if kind is OrderKind.SP:
        raise ValueError("stochastic precedence needs a coupled system pair; "
                         "use sp_series_delta2")
    if grid is None:
        grid = default_grid([a, b])
    ts = grid.ts
    if ts.size < 3:
        raise DegenerateGrid("order checks need at least 3 grid points")
    descriptor = grid.descriptor()

    if kind is OrderKind.ST:
        return pointwise_dominance(ts, a.survival(ts), b.survival(ts), tol,
                                   grid_descriptor=descriptor)

    if kind is OrderKind.ICV:
        sa = np.asarray(a.survival(ts), dtype=float)
        sb = np.asarray(b.survival(ts), dtype=float)
        cum_a = _cumtrapz(ts, sa)
        cum_b = _cumtrapz(ts, sb)
        return pointwise_dominance(ts, cum_a, cum_b, tol,
                                   relation=OrderKind.ICV, grid_descriptor=descriptor)

    inconclusive_note = ""
    with np.errstate(invalid="ignore"):
        if kind is OrderKind.LR:
            ya = np.asarray(a.log_density(ts), dtype=float)
            yb = np.asarray(b.log_density(ts), dtype=float)
            y = yb - ya
            mask = np.isfinite(y)
            # Interpolant densities are trustworthy only away from 0/0 regions.
            for law in (a, b):
                target = law.base if isinstance(law, ResidualLife) else law
                if isinstance(target, PiecewiseSurvival):
                    dens = np.asarray(law.density(ts[1:-1]), dtype=float)
                    if np.any(dens < 1e-12):
                        inconclusive_note = "interpolant density below 1e-12 on grid interior"
        elif kind is OrderKind.HR:
            ya = np.asarray(a.log_survival(ts), dtype=float)
            yb = np.asarray(b.log_survival(ts), dtype=float)
            y = yb - ya
            mask = (ya > LOG_UNDERFLOW_FLOOR) & (yb > LOG_UNDERFLOW_FLOOR)
        elif kind is OrderKind.RHR:
            ya = np.asarray(a.log_cdf(ts), dtype=float)
            yb = np.asarray(b.log_cdf(ts), dtype=float)
            y = yb - ya
            mask = (ya > LOG_UNDERFLOW_FLOOR) & (yb > LOG_UNDERFLOW_FLOOR)
        else:
            raise ValueError(f"unknown order kind {kind}")

    ts_used, y_used = ts[mask], y[mask]
    if ts_used.size < 2:
        raise NumericalUnderflow(
            f"{kind.value} ratio is 0/0 or underflowed on the whole grid")
    wa, wb = _monotone_witnesses(ts_used, y_used, tol)
    return OrderVerdict(
        relation=kind, direction=_combine(wa, wb),
        witness_a_le_b=wa, witness_b_le_a=wb,
        grid=descriptor, inconclusive=bool(inconclusive_note), note=inconclusive_note)


def _cumtrapz(ts, values):
    steps = 0.5 * (values[1:] + values[:-1]) * np.diff(ts)
    return np.concatenate([[0.0], np.cumsum(steps)])


IMPLICATION_EDGES = (
    (OrderKind.LR, OrderKind.HR),
    (OrderKind.LR, OrderKind.RHR),
    (OrderKind.HR, OrderKind.ST),
    (OrderKind.RHR, OrderKind.ST),
    (OrderKind.ST, OrderKind.ICV),
)


@dataclass(frozen=True)
class ImplicationFlag:
    upstream: OrderKind
    downstream: OrderKind
    direction: Direction
    witness: tuple[float, float]

    def to_json(self) -> dict:
        return {"upstream": self.upstream.value, "downstream": self.downstream.value,
                "direction": self.direction.value,
                "witness": {"t": self.witness[0], "margin": self.witness[1]}}


@dataclass(frozen=True)
class ImplicationAudit:
    verdicts: dict
    flags: tuple[ImplicationFlag, ...]

    def to_json(self) -> dict:
        return {"verdicts": {k.value: v.to_json() for k, v in self.verdicts.items()},
                "flags": [f.to_json() for f in self.flags]}


def implication_audit(a, b, grid: GridSpec | None = None, tol: float = 1e-9
                      ) -> ImplicationAudit:
    """Run lr/hr/rhr/st/icv both ways and flag chain violations.

    A flag (upstream HOLDS while downstream fails by more than 10*tol) marks
    a numerical or implementation defect, never a mathematical one.
    """
    if grid is None:
        grid = default_grid([a, b])
    verdicts = {k: check_order(a, b, k, grid=grid, tol=tol)
                for k in (OrderKind.LR, OrderKind.HR, OrderKind.RHR,
                          OrderKind.ST, OrderKind.ICV)}
    flags = []
    for up, down in IMPLICATION_EDGES:
        for direction in (Direction.A_LE_B, Direction.B_LE_A):
            if not verdicts[up].holds(direction) or verdicts[down].holds(direction):
                continue
            witness = verdicts[down].witness(direction)
            if witness is not None and witness[1] > 10.0 * tol:
                flags.append(ImplicationFlag(up, down, direction, witness))
    return ImplicationAudit(verdicts=verdicts, flags=tuple(flags))


# -- stochastic precedence for coupled series systems ------------------------

class SpVerdict(Enum):
    B_SP_LE_A = "B_sp_le_A"
    A_SP_LE_B = "A_sp_le_B"
    BOTH = "Both"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class SpDelta2Result:
    """delta2 = P(T_A > T_B) - P(T_B > T_A) under the coupled joint law."""

    delta2: float
    ci: tuple[float, float] | None
    verdict: SpVerdict
    method: str
    standard_error: float | None = None
    draws: int | None = None

    def to_json(self) -> dict:
        return {
            "delta2": self.delta2,
            "ci99": None if self.ci is None else list(self.ci),
            "verdict": self.verdict.value,
            "method": self.method,
            "standard_error": self.standard_error,
            "draws": self.draws,
        }


@dataclass(frozen=True)
class _SpPattern:
    x_a: object
    y_a: object
    mf_a: object
    x_b: object
    y_b: object
    mf_b: object
    common: tuple


def _sp_pattern(a: SystemSpec, b: SystemSpec) -> _SpPattern:
    if a.topology is not Topology.SERIES or b.topology is not Topology.SERIES:
        raise InvalidSystemPattern("sp delta2 is defined for series system pairs")
    from .systems import _registries_shared  # local import to avoid cycle noise

    if not _registries_shared(a, b):
        raise RegistryMismatch("sp delta2 needs one shared registry")
    if len(a.nodes) != len(b.nodes):
        raise InvalidSystemPattern("systems must have the same node count")
    sa = [i for i, n in enumerate(a.nodes) if n.standby is not None]
    sb = [i for i, n in enumerate(b.nodes) if n.standby is not None]
    if len(sa) != 1 or len(sb) != 1 or sa[0] == sb[0]:
        raise InvalidSystemPattern(
            "each system must carry exactly one standby, on different nodes")
    i, j = sa[0], sb[0]
    for k, (na, nb) in enumerate(zip(a.nodes, b.nodes)):
        if k in (i, j):
            if na.component != nb.component:
                raise InvalidSystemPattern("standby-bearing components must match by position")
        elif na != nb:
            raise InvalidSystemPattern("non-standby nodes must be identical")
    reg = a.registry
    common = tuple(reg[n.component] for k, n in enumerate(a.nodes) if k not in (i, j))
    return _SpPattern(
        x_a=reg[a.nodes[i].component], y_a=reg[a.nodes[i].standby], mf_a=a.nodes[i].mf,
        x_b=reg[b.nodes[j].component], y_b=reg[b.nodes[j].standby], mf_b=b.nodes[j].mf,
        common=common)


def _sp_single_integral(x_own, y_own, mf_own, x_other, common, tol, max_depth,
                        truncation_q):
    """P(own standby survives storage past X_own, everything else outlives X_own)."""
    ls_y = y_own._log_survival
    ls_x_other = x_other._log_survival
    lf_x = x_own._log_density
    gamma = mf_own.gamma
    common_ls = [law._log_survival for law in common]

    def integrand(u):
        total = ls_y(np.asarray(gamma(u), dtype=float)) + ls_x_other(u) + lf_x(u)
        for ls in common_ls:
            total = total + ls(u)
        with np.errstate(over="ignore"):
            return np.exp(total)

    upper = float(x_own.inverse_survival(truncation_q))
    remainder = x_own.survival(upper)
    if remainder > 100.0 * truncation_q:
        warnings.warn(
            f"tail remainder bound {remainder:g} exceeds tolerance", TruncationWarning)
    lower = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        if not np.isfinite(x_own.density(0.0)):
            lower = min(x_own.inverse_cdf(tol * 1e-3), 0.5 * upper)
    return adaptive_simpson_graded(integrand, lower, upper, tol=tol,
                                   max_depth=max_depth)


def sp_series_delta2(a: SystemSpec, b: SystemSpec, method: str = "quadrature",
                     stream=None, draws: int = 1_000_000,
                     truncation_q: float = 1e-10, zero_tol: float = 1e-12
                     ) -> SpDelta2Result:
    """delta2 for a Model-II-pattern series pair, by quadrature or coupled MC.

    Quadrature evaluates the two single integrals of the reduced probability
    form, truncated at the 1 - truncation_q quantile of each integrating law;
    Monte Carlo uses coupled sampling and reports a 99% confidence interval.
    """
    pat = _sp_pattern(a, b)
    if method == "quadrature":
        tol = a.quadrature.tol
        depth = a.quadrature.max_depth
        p_a_wins = _sp_single_integral(pat.x_a, pat.y_a, pat.mf_a, pat.x_b,
                                       pat.common, tol, depth, truncation_q)
        p_b_wins = _sp_single_integral(pat.x_b, pat.y_b, pat.mf_b, pat.x_a,
                                       pat.common, tol, depth, truncation_q)
        delta2 = p_a_wins - p_b_wins
        if delta2 > zero_tol:
            verdict = SpVerdict.B_SP_LE_A
        elif delta2 < -zero_tol:
            verdict = SpVerdict.A_SP_LE_B
        else:
            verdict = SpVerdict.BOTH
        return SpDelta2Result(delta2=float(delta2), ci=None, verdict=verdict,
                              method="quadrature")
    if method in ("mc", "monte_carlo"):
        if stream is None:
            raise ValueError("Monte Carlo method needs a SeedStream")
        t_a, t_b = coupled_sample_many(a, b, stream, draws)
        score = np.sign(t_a - t_b)
        delta2 = float(score.mean())
        se = float(score.std(ddof=1) / np.sqrt(draws))
        ci = (delta2 - Z_99 * se, delta2 + Z_99 * se)
        if se == 0.0:
            verdict = SpVerdict.BOTH if delta2 == 0.0 else (
                SpVerdict.B_SP_LE_A if delta2 > 0 else SpVerdict.A_SP_LE_B)
        elif ci[0] > 0:
            verdict = SpVerdict.B_SP_LE_A
        elif ci[1] < 0:
            verdict = SpVerdict.A_SP_LE_B
        else:
            verdict = SpVerdict.INCONCLUSIVE
        return SpDelta2Result(delta2=delta2, ci=ci, verdict=verdict,
                              method="monte_carlo", standard_error=se, draws=draws)
    raise ValueError(f"unknown method {method!r}")
