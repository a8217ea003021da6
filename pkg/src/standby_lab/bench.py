"""Reproduction of the worked examples, allocation ranking, and probing.

Everything here is deterministic given (config, seed): reports serialize with
sorted keys and full-precision floats, so identical runs are byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .errors import ConfigError, ConstraintViolation, UnknownHypothesis
from .grids import GridSpec, default_grid
from .lifetimes import (Exponential, LifetimeDistribution, ShapeProperty,
                        Weibull, shape_check)
from .orders import (Direction, OrderKind, SpVerdict, check_order,
                     implication_audit, pointwise_dominance, sp_series_delta2)
from .rng import SeedStream
from .standby import (COLD_MF, HOT_MF, ModelFunction, QuadratureSettings,
                      StandbyComposite, linear_map, log_map, table_map,
                      validate_model_function, warm_sample_many, warm_survival,
                      zero_map)
from .systems import (Model, Node, SystemSpec, Topology, enumerate_allocations,
                      q_parallel_cdf)

EXAMPLE_IDS = ("EX3_1", "EX3_2", "EX4_1", "EX4_2")


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass
class ReproReport:
    example_id: str
    params: dict
    checks: list[CheckResult]
    curves: list[str]
    mc: dict | None
    passed: bool

    def to_json(self) -> dict:
        return {
            "example_id": self.example_id,
            "params": self.params,
            "checks": [c.to_json() for c in self.checks],
            "curves": self.curves,
            "mc": self.mc,
            "passed": self.passed,
        }


def write_curve(path: Path, ts, values, note: str) -> None:
    """CSV ``t,value`` with one comment line naming the system and check."""
    lines = [f"# {note}", "t,value"]
    lines += [f"{float(t)!r},{float(v)!r}" for t, v in zip(ts, values)]
    path.write_text("\n".join(lines) + "\n")


def _require(condition: bool, inequality: str, detail: str = "") -> None:
    if not condition:
        raise ConstraintViolation(inequality, detail)


def _positive_rates(rates, label: str):
    for r in rates:
        _require(r > 0, f"0 < {label}", f"got {r}")


def _merge(defaults: dict, overrides: dict | None) -> dict:
    out = dict(defaults)
    out.update(overrides or {})
    return out


def _example_overrides(cfg: ExperimentConfig, example_id: str) -> dict:
    return cfg.checks.get("reproduce", {}).get(example_id, {})


def _st_check(name: str, ts, low_curve, high_curve, tol: float) -> CheckResult:
    """Conclusion low <=_st high: S_low <= S_high + tol at every grid point."""
    verdict = pointwise_dominance(ts, low_curve, high_curve, tol)
    margin = float(np.min(np.asarray(high_curve) - np.asarray(low_curve)))
    return CheckResult(name=name, passed=verdict.holds(Direction.A_LE_B),
                       detail={"min_margin": margin, "tol": tol,
                               "direction": verdict.direction.value})


def run_reproduction(example_id: str, cfg: ExperimentConfig | None = None,
                     out_dir: Path | None = None) -> ReproReport:
    """Rebuild one worked example and compare against its stated conclusion."""
    if example_id not in EXAMPLE_IDS:
        raise UnknownHypothesis(f"unknown example id {example_id!r}; "
                                f"expected one of {EXAMPLE_IDS}")
    cfg = cfg if cfg is not None else load_config(None)
    out_dir = Path(out_dir) if out_dir is not None else Path(cfg.output.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = {
        "EX3_1": _reproduce_series_st,
        "EX3_2": _reproduce_series_sp,
        "EX4_1": _reproduce_parallel_st,
        "EX4_2": _reproduce_model3_parallel,
    }[example_id]
    report = runner(cfg, out_dir)
    report_path = out_dir / f"{report.example_id}_report.json"
    report_path.write_text(json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n")
    return report


def _competing_pair(registry, n_components, mf1, mf2, quadrature,
                    topology=Topology.SERIES):
    """The two competing systems: standby on slot 1 vs standby on slot 2."""
    extra = [Node(f"X{i}") for i in range(3, n_components + 1)]
    first = SystemSpec(topology=topology, registry=registry, quadrature=quadrature,
                       nodes=tuple([Node("X1", "Y1", mf1), Node("X2")] + extra))
    second = SystemSpec(topology=topology, registry=registry, quadrature=quadrature,
                        nodes=tuple([Node("X1"), Node("X2", "Y2", mf2)] + extra))
    return first, second


def _series_registry(lambdas, mus):
    registry: dict[str, LifetimeDistribution] = {
        f"X{i + 1}": Exponential(rate=float(l)) for i, l in enumerate(lambdas)}
    registry["Y1"] = Exponential(rate=float(mus[0]))
    registry["Y2"] = Exponential(rate=float(mus[1]))
    return registry


def _validate_series_constraints(lambdas, mus, a, b):
    _positive_rates(lambdas, "lambda_i")
    _positive_rates(mus, "mu_j")
    _require(lambdas[0] >= lambdas[1], "lambda1 >= lambda2", f"got {lambdas[:2]}")
    _require(mus[0] <= mus[1], "mu1 <= mu2", f"got {mus}")
    _require(0 < a[0], "0 < a1", f"got {a[0]}")
    _require(a[0] <= a[1], "a1 <= a2", f"got {a}")
    _require(a[1] <= b[0], "a2 <= b1", f"got a2={a[1]}, b1={b[0]}")
    _require(b[0] <= b[1], "b1 <= b2", f"got {b}")
    _require(b[1] <= 1, "b2 <= 1", f"got {b[1]}")


def _reproduce_series_st(cfg: ExperimentConfig, out_dir: Path) -> ReproReport:
    p = _merge({"lambdas": [2.0, 1.0], "mus": [1.0, 2.0],
                "a": [0.2, 0.4], "b": [0.6, 0.8]},
               _example_overrides(cfg, "EX3_1"))
    lambdas, mus, a, b = p["lambdas"], p["mus"], p["a"], p["b"]
    _validate_series_constraints(lambdas, mus, a, b)
    registry = _series_registry(lambdas, mus)
    mf1 = ModelFunction(gamma=linear_map(a[0]), omega=linear_map(b[0]))
    mf2 = ModelFunction(gamma=linear_map(a[1]), omega=linear_map(b[1]))
    first, second = _competing_pair(registry, len(lambdas), mf1, mf2,
                                    cfg.quadrature_settings())
    grid = cfg.grid_spec(registry.values())
    s_first = first.survival_curve(grid.ts)
    s_second = second.survival_curve(grid.ts)

    curves = []
    for label, vals in (("standby_on_X1", s_first), ("standby_on_X2", s_second)):
        path = out_dir / f"EX3_1_{label}.csv"
        write_curve(path, grid.ts, vals, f"EX3_1 {label} survival; check: st dominance")
        curves.append(str(path))

    checks = [_st_check("second_le_first_st_on_grid", grid.ts, s_second, s_first,
                        cfg.tolerances.order)]
    return ReproReport(example_id="EX3_1", params=p, checks=checks, curves=curves,
                       mc=None, passed=all(c.passed for c in checks))


def _reproduce_series_sp(cfg: ExperimentConfig, out_dir: Path) -> ReproReport:
    p = _merge({"lambdas": [2.0, 1.0], "mus": [1.0, 2.0],
                "a": [0.2, 0.4], "b": [0.6, 0.8], "draws": cfg.mc.sp_draws},
               _example_overrides(cfg, "EX3_2"))
    lambdas, mus, a, b = p["lambdas"], p["mus"], p["a"], p["b"]
    _validate_series_constraints(lambdas, mus, a, b)
    registry = _series_registry(lambdas, mus)
    mf1 = ModelFunction(gamma=log_map(a[0]), omega=log_map(b[0]))
    mf2 = ModelFunction(gamma=log_map(a[1]), omega=log_map(b[1]))
    first, second = _competing_pair(registry, len(lambdas), mf1, mf2,
                                    cfg.quadrature_settings())

    quad = sp_series_delta2(first, second, method="quadrature")
    stream = SeedStream(cfg.seed)
    mc = sp_series_delta2(first, second, method="mc", stream=stream,
                          draws=int(p["draws"]))

    grid = cfg.grid_spec(registry.values())
    curves = []
    for label, spec in (("standby_on_X1", first), ("standby_on_X2", second)):
        path = out_dir / f"EX3_2_{label}.csv"
        write_curve(path, grid.ts, spec.survival_curve(grid.ts),
                    f"EX3_2 {label} survival; check: sp precedence")
        curves.append(str(path))

    checks = [
        CheckResult("delta2_nonnegative_quadrature", quad.delta2 >= -1e-12,
                    {"delta2": quad.delta2}),
        CheckResult("mc_ci_contains_quadrature",
                    mc.ci[0] <= quad.delta2 <= mc.ci[1],
                    {"ci99": list(mc.ci), "delta2_quadrature": quad.delta2}),
        CheckResult("mc_lower_bound_above_minus_3se",
                    mc.ci[0] > -3.0 * mc.standard_error,
                    {"ci_low": mc.ci[0], "se": mc.standard_error}),
        CheckResult("conclusion_second_sp_le_first",
                    quad.verdict in (SpVerdict.B_SP_LE_A, SpVerdict.BOTH),
                    {"verdict": quad.verdict.value}),
    ]
    return ReproReport(example_id="EX3_2", params=p, checks=checks, curves=curves,
                       mc=mc.to_json(), passed=all(c.passed for c in checks))


def _reproduce_parallel_st(cfg: ExperimentConfig, out_dir: Path) -> ReproReport:
    p = _merge({"lambdas": [2.0, 1.0], "mus": [2.0, 1.0], "a": 0.3, "b": 0.6},
               _example_overrides(cfg, "EX4_1"))
    lambdas, mus, a, b = p["lambdas"], p["mus"], p["a"], p["b"]
    _positive_rates(lambdas, "lambda_i")
    _positive_rates(mus, "mu_j")
    _require(lambdas[0] >= lambdas[1], "lambda1 >= lambda2", f"got {lambdas[:2]}")
    _require(mus[0] >= mus[1], "mu1 >= mu2", f"got {mus}")
    _require(0 < a, "0 < a", f"got {a}")
    _require(a <= b, "a <= b", f"got a={a}, b={b}")
    _require(b <= 1, "b <= 1", f"got {b}")
    registry = _series_registry(lambdas, mus)
    mf = ModelFunction(gamma=log_map(a), omega=linear_map(b))
    first, second = _competing_pair(registry, len(lambdas), mf, mf,
                                    cfg.quadrature_settings(), topology=Topology.PARALLEL)
    grid = cfg.grid_spec(registry.values())
    s_first = first.survival_curve(grid.ts)
    s_second = second.survival_curve(grid.ts)

    curves = []
    for label, vals in (("standby_on_X1", s_first), ("standby_on_X2", s_second)):
        path = out_dir / f"EX4_1_{label}.csv"
        write_curve(path, grid.ts, vals, f"EX4_1 {label} survival; check: st dominance")
        curves.append(str(path))

    checks = [_st_check("first_le_second_st_on_grid", grid.ts, s_first, s_second,
                        cfg.tolerances.order)]
    return ReproReport(example_id="EX4_1", params=p, checks=checks, curves=curves,
                       mc=None, passed=all(c.passed for c in checks))


def _reproduce_model3_parallel(cfg: ExperimentConfig, out_dir: Path) -> ReproReport:
    p = _merge({"lambdas": [2.0, 1.0], "mus": [2.0, 1.0], "a": 0.5},
               _example_overrides(cfg, "EX4_2"))
    lambdas, mus, a = p["lambdas"], p["mus"], p["a"]
    _positive_rates(lambdas, "lambda_i")
    _positive_rates(mus, "mu_j")
    _require(0 < a, "0 < a", f"got {a}")
    _require(a <= 1, "a <= 1", f"got {a}")
    _require(lambdas[0] >= lambdas[1], "lambda1 >= lambda2", f"got {lambdas[:2]}")
    _require(mus[0] >= mus[1], "mu1 >= mu2", f"got {mus}")
    registry = _series_registry(lambdas, mus)
    mf = ModelFunction(gamma=linear_map(a), omega=linear_map(a))
    family = enumerate_allocations(
        Model.III, Topology.PARALLEL, registry,
        components=[f"X{i + 1}" for i in range(len(lambdas))],
        standbys=["Y1", "Y2"], mfs=mf, quadrature=cfg.quadrature_settings())
    cross, straight = family.candidates
    grid = cfg.grid_spec(registry.values())
    s_cross = cross.survival_curve(grid.ts)
    s_straight = straight.survival_curve(grid.ts)

    curves = []
    for label, vals in (("cross_pairing", s_cross), ("straight_pairing", s_straight)):
        path = out_dir / f"EX4_2_{label}.csv"
        write_curve(path, grid.ts, vals, f"EX4_2 {label} survival; check: st dominance")
        curves.append(str(path))

    spots = grid.ts[:: max(1, grid.ts.size // 16)]
    worst_gap = 0.0
    for t in spots:
        f1, f2 = q_parallel_cdf(family, float(t))
        worst_gap = max(worst_gap,
                        abs(f1 - cross.cdf(float(t))),
                        abs(f2 - straight.cdf(float(t))))

    checks = [
        _st_check("cross_le_straight_st_on_grid", grid.ts, s_cross, s_straight,
                  cfg.tolerances.order),
        CheckResult("factorization_agrees_with_generic", worst_gap <= 1e-8,
                    {"worst_gap": worst_gap, "spots": int(spots.size)}),
    ]
    return ReproReport(example_id="EX4_2", params=p, checks=checks, curves=curves,
                       mc=None, passed=all(c.passed for c in checks))


# -- allocation ranking -------------------------------------------------------

@dataclass(frozen=True)
class TheoremNote:
    rule: str
    predicted_top: str
    predicted_order: tuple[str, ...]  # weakest system first
    hypotheses: dict

    def to_json(self) -> dict:
        return {"rule": self.rule, "predicted_top": self.predicted_top,
                "predicted_order": list(self.predicted_order),
                "hypotheses": self.hypotheses}


@dataclass
class RankReport:
    labels: tuple[str, ...]
    pairwise: list[dict]
    hasse_edges: list[tuple[str, str]]
    maximal: list[str]
    notes: list[TheoremNote]
    defects: list[str]
    grid: dict

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "pairwise": self.pairwise,
            "hasse_edges": [list(e) for e in self.hasse_edges],
            "maximal": self.maximal,
            "notes": [n.to_json() for n in self.notes],
            "defects": self.defects,
            "grid": self.grid,
        }


def _chain_holds(laws, kind: OrderKind, grid: GridSpec, tol: float) -> bool:
    """laws[0] <= laws[1] <= ... in the given order, on the shared grid."""
    for lo, hi in zip(laws, laws[1:]):
        if lo is hi or lo == hi:
            continue
        if not check_order(lo, hi, kind, grid=grid, tol=tol).holds(Direction.A_LE_B):
            return False
    return True


def _maps_chain(maps, ts, tol: float, equal: bool = False) -> bool:
    for m1, m2 in zip(maps, maps[1:]):
        v1 = np.asarray(m1(ts), dtype=float)
        v2 = np.asarray(m2(ts), dtype=float)
        slack = tol * np.maximum(1.0, ts)
        if equal:
            if np.any(np.abs(v1 - v2) > slack):
                return False
        elif np.any(v1 - v2 > slack):
            return False
    return True


def _all_log_concave(laws, grid, tol) -> bool:
    return all(bool(shape_check(law, ShapeProperty.LOG_CONCAVE_SURVIVAL,
                                grid=grid, tol=tol)) for law in laws)


def _all_log_convex(laws, grid, tol) -> bool:
    return all(bool(shape_check(law, ShapeProperty.LOG_CONVEX_SURVIVAL,
                                grid=grid, tol=tol)) for law in laws)


def _mf_audits(mfs, ts, tol):
    audits = [validate_model_function(mf, ts, tol=tol) for mf in mfs]
    return {
        "delta_increasing": all(bool(a.delta_increasing) for a in audits),
        "omega_minus_gamma_increasing": all(
            bool(a.omega_minus_gamma_increasing) for a in audits),
        "omega_equals_gamma": all(bool(a.omega_equals_gamma) for a in audits),
        "maps_admissible": all(bool(a.gamma_valid) and bool(a.omega_valid)
                               for a in audits),
    }


def _rank_notes(model: Model, topology: Topology, labels, xs, ys, mfs,
                grid: GridSpec, tol: float) -> list[TheoremNote]:
    """Grid-audited sufficient conditions and the allocation they predict."""
    ts = grid.ts
    notes: list[TheoremNote] = []
    same_mf = all(mf.fingerprint() == mfs[0].fingerprint() for mf in mfs[1:]) if mfs else True
    audits = _mf_audits(mfs, ts, tol)
    gammas = [mf.gamma for mf in mfs]
    omegas = [mf.omega for mf in mfs]

    if model is Model.III:
        if topology is not Topology.PARALLEL:
            return notes
        x_lr = _chain_holds(xs[:2], OrderKind.LR, grid, tol)
        y_rhr = _chain_holds(ys[:2], OrderKind.RHR, grid, tol)
        x_lr_rev = _chain_holds(xs[1::-1], OrderKind.LR, grid, tol)
        y_rhr_rev = _chain_holds(ys[1::-1], OrderKind.RHR, grid, tol)
        hyps = {
            "delta_increasing": audits["delta_increasing"],
            "omega_equals_gamma": audits["omega_equals_gamma"],
            "x_lr_ordered_with_y_rhr": (x_lr and y_rhr) or (x_lr_rev and y_rhr_rev),
        }
        if all(hyps.values()):
            notes.append(TheoremNote(
                rule="parallel-two-standby straight pairing optimal "
                     "(lr-ordered components, rhr-ordered standbys, matched maps)",
                predicted_top="straight_pairing",
                predicted_order=("cross_pairing", "straight_pairing"),
                hypotheses=hyps))
        return notes

    if topology is Topology.SERIES:
        # Conclusion: allocating to the hr-weakest (first) component is best.
        order = tuple(labels[::-1])  # weakest system first
        x_hr = _chain_holds(xs, OrderKind.HR, grid, tol)
        y_rev_hr = _chain_holds(ys[::-1], OrderKind.HR, grid, tol)
        gamma_chain = _maps_chain(gammas, ts, tol)
        hyps1 = {"x_hr_chain": x_hr, "y_reverse_hr_chain": y_rev_hr,
                 "gamma_chain_nondecreasing": gamma_chain,
                 "omega_all_equal": _maps_chain(omegas, ts, tol, equal=True)}
        if all(hyps1.values()):
            notes.append(TheoremNote(
                rule="series standby-to-weakest (hr chains, common virtual-age map)",
                predicted_top=labels[0], predicted_order=order, hypotheses=hyps1))
        hyps2 = {"x_hr_chain": x_hr, "y_reverse_hr_chain": y_rev_hr,
                 "gamma_chain_nondecreasing": gamma_chain,
                 "shape_and_omega_chain_compatible": (
                     (_all_log_concave(ys, grid, tol) and _maps_chain(omegas, ts, tol))
                     or (_all_log_convex(ys, grid, tol)
                         and _maps_chain(omegas[::-1], ts, tol)))}
        if all(hyps2.values()):
            notes.append(TheoremNote(
                rule="series standby-to-weakest (hr chains, shape-compatible "
                     "ordered virtual-age maps)",
                predicted_top=labels[0], predicted_order=order, hypotheses=hyps2))
        hyps3 = {"same_model_function": same_mf,
                 "delta_increasing": audits["delta_increasing"],
                 "omega_equals_gamma": audits["omega_equals_gamma"],
                 "x_hr_chain": x_hr,
                 "y_reverse_st_chain": _chain_holds(ys[::-1], OrderKind.ST, grid, tol)}
        if all(hyps3.values()):
            notes.append(TheoremNote(
                rule="series standby-to-weakest (matched maps, st standby chain)",
                predicted_top=labels[0], predicted_order=order, hypotheses=hyps3))
        return notes

    # Parallel: allocating to the rhr-strongest (last) component is best.
    order = tuple(labels)  # weakest system first
    x_rhr = _chain_holds(xs, OrderKind.RHR, grid, tol)
    hyps1 = {"same_model_function": same_mf,
             "delta_increasing": audits["delta_increasing"],
             "omega_minus_gamma_increasing": audits["omega_minus_gamma_increasing"],
             "x_rhr_chain": x_rhr,
             "y_hr_chain": _chain_holds(ys, OrderKind.HR, grid, tol),
             "y_log_concave": _all_log_concave(ys, grid, tol)}
    if all(hyps1.values()):
        notes.append(TheoremNote(
            rule="parallel standby-to-strongest (rhr/hr chains, log-concave standbys)",
            predicted_top=labels[-1], predicted_order=order, hypotheses=hyps1))
    hyps2 = {"same_model_function": same_mf,
             "delta_increasing": audits["delta_increasing"],
             "omega_equals_gamma": audits["omega_equals_gamma"],
             "x_rhr_chain": x_rhr,
             "y_st_chain": _chain_holds(ys, OrderKind.ST, grid, tol)}
    if all(hyps2.values()):
        notes.append(TheoremNote(
            rule="parallel standby-to-strongest (matched maps, st standby chain)",
            predicted_top=labels[-1], predicted_order=order, hypotheses=hyps2))
    return notes


def rank_allocations(cfg: ExperimentConfig) -> RankReport:
    """Pairwise st comparison of all allocation candidates plus theorem notes.

    Grid verdicts yielding Neither are reported as incomparability; when an
    audited sufficient condition applies, a grid result contradicting it is
    recorded as a numerical defect.
    """
    rank_cfg = cfg.checks.get("rank", {})
    try:
        model = Model(rank_cfg.get("model", "I"))
        topology = Topology(rank_cfg.get("topology", "series"))
        components = rank_cfg["components"]
        standbys = rank_cfg["standbys"]
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"rank config needs model/topology/components/standbys: {exc}"
                          ) from exc
    mf_refs = rank_cfg.get("mfs", rank_cfg.get("mf"))
    if isinstance(mf_refs, (list, tuple)):
        mfs = [cfg.model_function(r) for r in mf_refs]
    else:
        mfs = cfg.model_function(mf_refs)
    family = enumerate_allocations(model, topology, cfg.distributions,
                                   components, standbys, mfs,
                                   quadrature=cfg.quadrature_settings())
    grid = cfg.grid_spec([cfg.law(c) for c in components]
                         + [cfg.law(s) for s in standbys])
    tol = cfg.tolerances.order

    labels = family.labels
    curves = [c.survival_curve(grid.ts) for c in family.candidates]
    n = len(labels)
    below = np.zeros((n, n), dtype=bool)  # below[i, j]: candidate i <=_st candidate j
    pairwise = []
    for i in range(n):
        for j in range(i + 1, n):
            verdict = pointwise_dominance(grid.ts, curves[i], curves[j], tol)
            below[i, j] = verdict.holds(Direction.A_LE_B)
            below[j, i] = verdict.holds(Direction.B_LE_A)
            pairwise.append({"a": labels[i], "b": labels[j],
                             "direction": verdict.direction.value})

    strict = below & ~below.T
    maximal = [labels[i] for i in range(n) if not strict[i].any()]
    hasse = []
    for i in range(n):
        for j in range(n):
            if strict[i, j] and not any(strict[i, k] and strict[k, j] for k in range(n)):
                hasse.append((labels[i], labels[j]))

    if model is Model.I:
        xs = [cfg.law(c) for c in components]
        ys = [cfg.law(standbys[0])] * len(components)
    elif model is Model.II:
        xs = [cfg.law(c) for c in components]
        ys = [cfg.law(s) for s in standbys]
    else:
        xs = [cfg.law(c) for c in components[:2]]
        ys = [cfg.law(s) for s in standbys]
    mf_list = mfs if isinstance(mfs, list) else [mfs] * max(len(components), 1)
    notes = _rank_notes(model, topology, labels, xs, ys, mf_list, grid, tol)

    defects = []
    label_curve = dict(zip(labels, curves))
    for note in notes:
        for lo, hi in zip(note.predicted_order, note.predicted_order[1:]):
            gap = np.asarray(label_curve[lo]) - np.asarray(label_curve[hi])
            worst = float(np.max(gap))
            if worst > 10.0 * tol:
                defects.append(
                    f"grid contradicts '{note.rule}': {lo} exceeds {hi} by {worst:g}")
    return RankReport(labels=labels, pairwise=pairwise, hasse_edges=hasse,
                      maximal=maximal, notes=notes, defects=defects,
                      grid=grid.descriptor())


# -- hypothesis-violation probing ---------------------------------------------

PROBE_FAMILIES = {
    "series_st": ("x_hr_order", "y_hr_order", "gamma_ordered", "omega_equal"),
    "parallel_st": ("x_rhr_order", "y_hr_order", "y_log_concave",
                    "delta_increasing", "omega_minus_gamma_increasing"),
    "model3_parallel_st": ("x_lr_order", "y_rhr_order", "omega_equals_gamma",
                           "delta_increasing"),
    "series_sp": ("x_st_order", "y_st_order", "gamma_ordered"),
}

_TRIAL_DRAWS = 16


@dataclass(frozen=True)
class ProbeFinding:
    trial: int
    params: dict
    witness_t: float | None
    margin: float

    def to_json(self) -> dict:
        return {"trial": self.trial, "params": self.params,
                "witness_t": self.witness_t, "margin": self.margin}


@dataclass
class ProbeReport:
    family: str
    violated: str | None
    trials: int
    findings: list[ProbeFinding]
    grid: dict
    elapsed_s: float

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "violated": self.violated,
            "trials": self.trials,
            "findings": [f.to_json() for f in self.findings],
            "grid": self.grid,
            "elapsed_s": round(self.elapsed_s, 3),
        }


def _log_uniform(u: float, lo: float, hi: float) -> float:
    return lo * (hi / lo) ** u


def _probe_rates(u1, u2, ordered_desc: bool):
    r1 = _log_uniform(u1, 0.3, 3.0)
    r2 = r1 * _log_uniform(u2, 1.15, 3.0)
    return (r2, r1) if ordered_desc else (r1, r2)


def _steep_table_map(t_max: float):
    # omega increasing with a stretch steeper than slope 1, so delta decreases there.
    mid = 0.5 * t_max
    return table_map([(0.0, 0.0), (mid, 0.1 * mid), (t_max, 0.95 * t_max)])


def _probe_series_st(u, violate):
    lam1, lam2 = _probe_rates(u[1], u[2], ordered_desc=True)     # X1 <=hr X2
    mu1, mu2 = _probe_rates(u[3], u[4], ordered_desc=False)      # Y2 <=hr Y1
    if violate == "x_hr_order":
        lam1, lam2 = lam2, lam1
    if violate == "y_hr_order":
        mu1, mu2 = mu2, mu1
    a1 = 0.05 + 0.4 * u[6]
    a2 = a1 + (0.95 - a1) * u[7]
    if violate == "gamma_ordered":
        a1, a2 = max(a2, 0.55), 0.3 * a1
    use_common_omega = u[10] < 0.5 and violate != "omega_equal"
    if use_common_omega:
        b = 0.05 + 0.9 * u[8]
        omega1 = omega2 = linear_map(b)
    else:
        b1 = 0.05 + 0.4 * u[8]
        b2 = b1 + (0.95 - b1) * u[9]
        if violate == "omega_equal":
            b1, b2 = min(max(b1, b2) + 0.02, 1.0), min(b1, b2)  # omega1 > omega2
        omega1, omega2 = linear_map(b1), linear_map(b2)
    if u[0] < 0.35:  # same-shape Weibull standbys keep the hr chain and shapes
        k = 1.0 + 2.0 * u[5]
        y1, y2 = Weibull(k, 1.0 / mu1), Weibull(k, 1.0 / mu2)
    else:
        y1, y2 = Exponential(mu1), Exponential(mu2)
    registry = {"X1": Exponential(lam1), "X2": Exponential(lam2), "Y1": y1, "Y2": y2}
    n = 2
    if u[11] < 0.3:
        registry["X3"] = Exponential(_log_uniform(u[12], 0.3, 3.0))
        n = 3
    mf1 = ModelFunction(gamma=linear_map(a1), omega=omega1)
    mf2 = ModelFunction(gamma=linear_map(a2), omega=omega2)
    first, second = _competing_pair(registry, n, mf1, mf2, QuadratureSettings())
    params = {"registry": {k: v.config() for k, v in registry.items()},
              "mf1": mf1.config(), "mf2": mf2.config()}
    return first, second, "second_le_first", params


def _probe_parallel_st(u, violate):
    weib = u[0] < 0.35 and violate != "y_log_concave"
    lam1, lam2 = _probe_rates(u[1], u[2], ordered_desc=True)     # X1 <=rhr X2
    mu1, mu2 = _probe_rates(u[3], u[4], ordered_desc=True)       # Y1 <=hr Y2
    if violate == "x_rhr_order":
        lam1, lam2 = lam2, lam1
    if violate == "y_hr_order":
        mu1, mu2 = mu2, mu1
    if weib:
        k = 1.0 + 2.0 * u[5]
        ys = {"Y1": Weibull(k, 1.0 / mu1), "Y2": Weibull(k, 1.0 / mu2)}
    elif violate == "y_log_concave":
        k = 0.35 + 0.4 * u[5]  # shape < 1: log-convex survival
        ys = {"Y1": Weibull(k, 1.0 / mu1), "Y2": Weibull(k, 1.0 / mu2)}
    else:
        ys = {"Y1": Exponential(mu1), "Y2": Exponential(mu2)}
    registry = {"X1": Exponential(lam1), "X2": Exponential(lam2), **ys}
    a = 0.05 + 0.4 * u[6]
    b = a + (0.95 - a) * u[7]
    if violate == "delta_increasing":
        t_ref = 3.0 / min(lam1, lam2)
        mf = ModelFunction(gamma=zero_map(), omega=_steep_table_map(t_ref))
    elif violate == "omega_minus_gamma_increasing":
        mf = ModelFunction(gamma=linear_map(b), omega=log_map(min(1.0, b + 0.04)))
    else:
        mf = ModelFunction(gamma=log_map(a), omega=linear_map(b))
    first, second = _competing_pair(registry, 2, mf, mf, QuadratureSettings(),
                                    topology=Topology.PARALLEL)
    params = {"registry": {k: v.config() for k, v in registry.items()},
              "mf": mf.config()}
    return first, second, "first_le_second", params


def _probe_model3_parallel_st(u, violate):
    lam1, lam2 = _probe_rates(u[1], u[2], ordered_desc=True)     # X1 <=lr X2
    mu1, mu2 = _probe_rates(u[3], u[4], ordered_desc=True)       # Y1 <=rhr Y2
    if violate == "x_lr_order":
        lam1, lam2 = lam2, lam1
    if violate == "y_rhr_order":
        mu1, mu2 = mu2, mu1
    a = 0.05 + 0.9 * u[6]
    if violate == "omega_equals_gamma":
        mf = ModelFunction(gamma=linear_map(a), omega=linear_map(min(1.0, a + 0.3)))
    elif violate == "delta_increasing":
        t_ref = 3.0 / min(lam1, lam2)
        steep = _steep_table_map(t_ref)
        mf = ModelFunction(gamma=steep, omega=steep)
    else:
        mf = ModelFunction(gamma=linear_map(a), omega=linear_map(a))
    registry = {"X1": Exponential(lam1), "X2": Exponential(lam2),
                "Y1": Exponential(mu1), "Y2": Exponential(mu2)}
    family = enumerate_allocations(Model.III, Topology.PARALLEL, registry,
                                   components=["X1", "X2"], standbys=["Y1", "Y2"],
                                   mfs=mf, quadrature=QuadratureSettings())
    cross, straight = family.candidates
    params = {"lambda": [lam1, lam2], "mu": [mu1, mu2], "mf": mf.config()}
    return cross, straight, "first_le_second", params


def _probe_series_sp(u, violate):
    lam1, lam2 = _probe_rates(u[1], u[2], ordered_desc=True)     # X1 <=st X2
    mu1, mu2 = _probe_rates(u[3], u[4], ordered_desc=False)      # Y2 <=st Y1
    if violate == "x_st_order":
        lam1, lam2 = lam2, lam1
    if violate == "y_st_order":
        mu1, mu2 = mu2, mu1
    a1 = 0.05 + 0.4 * u[6]
    a2 = a1 + (0.95 - a1) * u[7]
    if violate == "gamma_ordered":
        a1, a2 = max(a2, 0.6), 0.2 * a1
    b1 = max(a1, 0.3 + 0.6 * u[8])
    b2 = max(a2, 0.3 + 0.6 * u[9])
    registry = {"X1": Exponential(lam1), "X2": Exponential(lam2),
                "Y1": Exponential(mu1), "Y2": Exponential(mu2)}
    mf1 = ModelFunction(gamma=log_map(a1), omega=log_map(min(1.0, b1)))
    mf2 = ModelFunction(gamma=log_map(a2), omega=log_map(min(1.0, b2)))
    first, second = _competing_pair(registry, 2, mf1, mf2, QuadratureSettings())
    params = {"lambda": [lam1, lam2], "mu": [mu1, mu2], "mf1": mf1.config(),
              "mf2": mf2.config()}
    return first, second, "sp_second_le_first", params


_PROBE_BUILDERS = {
    "series_st": _probe_series_st,
    "parallel_st": _probe_parallel_st,
    "model3_parallel_st": _probe_model3_parallel_st,
    "series_sp": _probe_series_sp,
}


def probe_counterexample(family: str, violate: str | None, budget: int,
                         stream: SeedStream, grid_points: int = 129,
                         tol: float = 1e-9) -> ProbeReport:
    """Random search for conclusion failures under a single violated hypothesis.

    ``violate`` is a hypothesis name from PROBE_FAMILIES, or None/"nothing"
    for a conformance sweep (all hypotheses kept; zero findings expected).
    """
    if family not in _PROBE_BUILDERS:
        raise UnknownHypothesis(f"unknown probe family {family!r}; "
                                f"expected one of {sorted(_PROBE_BUILDERS)}")
    if violate in ("nothing", "none", ""):
        violate = None
    if violate is not None and violate not in PROBE_FAMILIES[family]:
        raise UnknownHypothesis(
            f"unknown hypothesis {violate!r} for family {family!r}; "
            f"expected one of {PROBE_FAMILIES[family]}")

    build = _PROBE_BUILDERS[family]
    started = time.perf_counter()
    findings: list[ProbeFinding] = []
    grid_desc: dict = {"points": grid_points}
    for trial in range(budget):
        u = stream.take(_TRIAL_DRAWS)
        first, second, conclusion, params = build(u, violate)
        if conclusion == "sp_second_le_first":
            result = sp_series_delta2(first, second, method="quadrature")
            if result.delta2 < -tol:
                findings.append(ProbeFinding(trial=trial, params=params,
                                             witness_t=None, margin=-result.delta2))
            continue
        grid = default_grid(list(first.registry.values()), points=grid_points)
        grid_desc = grid.descriptor()
        s_first = first.survival_curve(grid.ts)
        s_second = second.survival_curve(grid.ts)
        if conclusion == "second_le_first":
            s_low, s_high = s_second, s_first
        else:
            s_low, s_high = s_first, s_second
        verdict = pointwise_dominance(grid.ts, s_low, s_high, tol)
        if not verdict.holds(Direction.A_LE_B):
            t, margin = verdict.witness(Direction.A_LE_B)
            findings.append(ProbeFinding(trial=trial, params=params,
                                         witness_t=t, margin=margin))
    return ProbeReport(family=family, violated=violate, trials=budget,
                       findings=findings, grid=grid_desc,
                       elapsed_s=time.perf_counter() - started)


# -- selftest -----------------------------------------------------------------

def selftest(cfg: ExperimentConfig | None = None) -> list[CheckResult]:
    """Fast end-to-end sanity checks; all must pass on a healthy install."""
    cfg = cfg if cfg is not None else load_config(None)
    checks: list[CheckResult] = []
    x, y = Exponential(1.0), Exponential(1.0)

    hot = StandbyComposite(x, y, HOT_MF)
    ts = np.linspace(0.1, 5.0, 11)
    closed = 2.0 * np.exp(-ts) - np.exp(-2.0 * ts)
    gap_closed = float(max(abs(warm_survival(hot, t) - c) for t, c in zip(ts, closed)))
    gap_general = float(max(abs(warm_survival(hot, t, force_quadrature=True) - c)
                            for t, c in zip(ts, closed)))
    checks.append(CheckResult("hot_reduction_matches_max_law",
                              gap_closed <= 1e-9 and gap_general <= 1e-9,
                              {"gap_closed": gap_closed, "gap_general": gap_general}))

    cold = StandbyComposite(Exponential(2.0), Exponential(1.0), COLD_MF)
    gap_cold = float(max(abs(warm_survival(cold, t) - c) for t, c in zip(ts, closed)))
    checks.append(CheckResult("cold_reduction_matches_convolution",
                              gap_cold <= 1e-9, {"gap": gap_cold}))

    warm = StandbyComposite(Exponential(2.0), Exponential(1.0),
                            ModelFunction(gamma=log_map(0.3), omega=linear_map(0.6)))
    stream = SeedStream(cfg.seed)
    draws = warm_sample_many(warm, stream, 20_000)
    p_hat = float(np.mean(draws > 1.0))
    p_quad = warm_survival(warm, 1.0)
    se = float(np.sqrt(p_quad * (1.0 - p_quad) / draws.size))
    checks.append(CheckResult("mc_matches_quadrature_4se",
                              abs(p_hat - p_quad) <= 4.0 * se,
                              {"p_hat": p_hat, "p_quad": p_quad, "se": se}))

    audit = implication_audit(Exponential(2.0), Exponential(1.0))
    ok = (len(audit.flags) == 0
          and all(audit.verdicts[k].holds(Direction.A_LE_B)
                  for k in (OrderKind.LR, OrderKind.HR, OrderKind.RHR,
                            OrderKind.ST, OrderKind.ICV)))
    checks.append(CheckResult("exponential_pair_fully_ordered", ok,
                              {"flags": len(audit.flags)}))

    s1 = SeedStream(cfg.seed).take(64)
    s2a = SeedStream(cfg.seed).take(40)
    s2b = SeedStream(cfg.seed, position=40).take(24)
    checks.append(CheckResult("stream_split_invariance",
                              bool(np.array_equal(s1, np.concatenate([s2a, s2b]))), {}))
    return checks
