"""Command-line front end.

Exit codes: 0 all checks pass, 1 a reproduced conclusion failed,
2 inconclusive or numerical failure, 64 config error.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .bench import (EXAMPLE_IDS, probe_counterexample, rank_allocations,
                    run_reproduction, selftest, write_curve)
from .config import ExperimentConfig, load_config
from .errors import (ConfigError, ConstraintViolation, DegenerateGrid,
                     NumericalUnderflow, QuadratureFailure, StandbyLabError)
from .lifetimes import evaluate, residual
from .orders import OrderKind, SpVerdict, check_order, sp_series_delta2
from .rng import SeedStream
from .standby import StandbyComposite

EXIT_OK = 0
EXIT_CONCLUSION_FAILED = 1
EXIT_NUMERICAL = 2
EXIT_CONFIG = 64


def _echo_json(payload: dict) -> None:
    click.echo(json.dumps(payload, sort_keys=True, indent=2))


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, ConstraintViolation) as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except (QuadratureFailure, NumericalUnderflow, DegenerateGrid) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)
        except StandbyLabError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
    return wrapper


def _load(config_path: str | None) -> ExperimentConfig:
    return load_config(config_path)


config_option = click.option("--config", "config_path", default=None,
                             type=click.Path(exists=True, dir_okay=False),
                             help="JSON experiment config.")


@click.group()
def main():
    """Lifetimes of series/parallel systems with warm standby redundancy."""


@main.command("eval")
@click.argument("dist_id")
@config_option
@click.option("--t", "t", type=float, default=None, help="Evaluate at one time.")
@click.option("--curve", "curve_path", type=click.Path(dir_okay=False), default=None,
              help="Write a survival curve CSV instead.")
@_guarded
def eval_cmd(dist_id, config_path, t, curve_path):
    """Distribution diagnostics: survival, density, hazards, quantiles."""
    cfg = _load(config_path)
    law = cfg.law(dist_id)
    if curve_path is not None:
        grid = cfg.grid_spec([law])
        write_curve(Path(curve_path), grid.ts, law.survival(grid.ts),
                    f"{dist_id} survival curve")
        click.echo(f"wrote {curve_path}")
        return
    if t is None:
        t = float(law.inverse_survival(0.5))
        note = "evaluated at the median"
    else:
        note = None
    rec = evaluate(law, t)
    payload = {
        "distribution": dist_id, "t": t,
        "S": rec.S, "F": rec.F, "f": rec.f,
        "hazard": rec.hazards.hazard, "reversed_hazard": rec.hazards.reversed_hazard,
        "quantiles": {"q50": law.inverse_survival(0.5),
                      "q90": law.inverse_survival(0.1),
                      "q99.9": law.inverse_survival(1e-3)},
    }
    if note:
        payload["note"] = note
    _echo_json(payload)


@main.command()
@click.option("--base", required=True, help="Primary component distribution id.")
@click.option("--standby", "standby_id", required=True, help="Standby distribution id.")
@click.option("--mf", "mf_ref", required=True, help="Model function id from config.")
@click.option("--t0", type=float, default=0.0,
              help="Known-good age of the primary; conditions the base law.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@config_option
@_guarded
def compose(base, standby_id, mf_ref, t0, out_path, config_path):
    """Write the warm-standby composite survival curve to CSV."""
    cfg = _load(config_path)
    base_law = cfg.law(base)
    if t0 > 0:
        base_law = residual(base_law, t0)
    composite = StandbyComposite(base_law, cfg.law(standby_id),
                                 cfg.model_function(mf_ref),
                                 cfg.quadrature_settings())
    grid = cfg.grid_spec([cfg.law(base), cfg.law(standby_id)])
    write_curve(Path(out_path), grid.ts, composite.survival_curve(grid.ts),
                f"{base} with standby {standby_id}; warm-standby survival")
    click.echo(f"wrote {out_path}")


@main.command("check-order")
@click.argument("a_id")
@click.argument("b_id")
@click.option("--kind", type=click.Choice([k.value for k in OrderKind if k.value != "sp"]),
              default="st", show_default=True)
@config_option
@_guarded
def check_order_cmd(a_id, b_id, kind, config_path):
    """Check one stochastic order between two configured distributions."""
    cfg = _load(config_path)
    verdict = check_order(cfg.law(a_id), cfg.law(b_id), OrderKind(kind),
                          grid=cfg.grid_spec([cfg.law(a_id), cfg.law(b_id)]),
                          tol=cfg.tolerances.order)
    _echo_json({"A": a_id, "B": b_id, **verdict.to_json()})
    if verdict.inconclusive:
        sys.exit(EXIT_NUMERICAL)


@main.command()
@click.option("--a", "a_id", required=True, help="First system id (the V1 side).")
@click.option("--b", "b_id", required=True, help="Second system id (the V2 side).")
@click.option("--method", type=click.Choice(["quadrature", "mc", "both"]),
              default="both", show_default=True)
@click.option("--draws", type=int, default=None, help="MC draw count override.")
@config_option
@_guarded
def sp(a_id, b_id, method, draws, config_path):
    """Stochastic-precedence delta2 for a coupled series pair."""
    cfg = _load(config_path)
    a_sys, b_sys = cfg.system(a_id), cfg.system(b_id)
    payload: dict = {"A": a_id, "B": b_id}
    inconclusive = False
    if method in ("quadrature", "both"):
        res = sp_series_delta2(a_sys, b_sys, method="quadrature")
        payload["quadrature"] = res.to_json()
        inconclusive |= res.verdict is SpVerdict.INCONCLUSIVE
    if method in ("mc", "both"):
        res = sp_series_delta2(a_sys, b_sys, method="mc",
                               stream=SeedStream(cfg.seed),
                               draws=draws or cfg.mc.sp_draws)
        payload["monte_carlo"] = res.to_json()
        inconclusive |= res.verdict is SpVerdict.INCONCLUSIVE
    _echo_json(payload)
    if inconclusive:
        sys.exit(EXIT_NUMERICAL)


@main.command()
@config_option
@_guarded
def rank(config_path):
    """Rank allocation candidates by pairwise st dominance."""
    cfg = _load(config_path)
    report = rank_allocations(cfg)
    _echo_json(report.to_json())
    if report.defects:
        sys.exit(EXIT_NUMERICAL)


@main.command()
@click.argument("example_id", type=click.Choice(EXAMPLE_IDS))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory for curves and the report JSON.")
@config_option
@_guarded
def reproduce(example_id, out_dir, config_path):
    """Reproduce one worked example and compare against its conclusion."""
    cfg = _load(config_path)
    report = run_reproduction(example_id, cfg, out_dir=out_dir)
    _echo_json(report.to_json())
    if not report.passed:
        sys.exit(EXIT_CONCLUSION_FAILED)


@main.command()
@click.option("--family", required=True,
              type=click.Choice(["series_st", "parallel_st", "model3_parallel_st",
                                 "series_sp"]))
@click.option("--violate", default=None,
              help="Hypothesis name to violate; omit for a conformance sweep.")
@click.option("--budget", type=int, default=100, show_default=True)
@click.option("--grid-points", type=int, default=129, show_default=True)
@config_option
@_guarded
def probe(family, violate, budget, grid_points, config_path):
    """Search random parameterizations for theorem-conclusion failures."""
    cfg = _load(config_path)
    report = probe_counterexample(family, violate, budget,
                                  SeedStream(cfg.seed), grid_points=grid_points,
                                  tol=cfg.tolerances.order)
    _echo_json(report.to_json())
    if report.violated is None and report.findings:
        sys.exit(EXIT_CONCLUSION_FAILED)


@main.command("selftest")
@config_option
@_guarded
def selftest_cmd(config_path):
    """Run fast end-to-end sanity checks."""
    cfg = _load(config_path)
    results = selftest(cfg)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        click.echo(f"[{status}] {r.name}")
    if failed:
        sys.exit(EXIT_CONCLUSION_FAILED)


if __name__ == "__main__":
    main()
