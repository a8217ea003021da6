"""Experiment configuration: one JSON document driving the CLI.

Sections: ``distributions``, ``model_functions``, ``systems``, ``checks``,
``output``, ``seed`` plus optional ``grid``, ``mc`` and ``tolerances``
blocks. The environment variable STANDBY_LAB_SEED overrides the config seed.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, StandbyLabError
from .grids import DEFAULT_POINTS, GridSpec, default_grid
from .lifetimes import (Exponential, LifetimeDistribution, PiecewiseSurvival,
                        ResidualLife, Weibull)
from .standby import ModelFunction, QuadratureSettings
from .systems import Node, SystemSpec, Topology

DEFAULT_SEED = 20140
SEED_ENV_VAR = "STANDBY_LAB_SEED"


@dataclass(frozen=True)
class GridSettings:
    points: int = DEFAULT_POINTS
    t_max: float | None = None


@dataclass(frozen=True)
class McSettings:
    sp_draws: int = 1_000_000
    marginal_draws: int = 100_000


@dataclass(frozen=True)
class Tolerances:
    order: float = 1e-9
    shape: float = 1e-9
    quadrature: float = 1e-9
    quadrature_depth: int = 40


@dataclass(frozen=True)
class OutputSettings:
    dir: Path = Path("standby_out")


@dataclass
class ExperimentConfig:
    distributions: dict[str, LifetimeDistribution] = field(default_factory=dict)
    model_functions: dict[str, ModelFunction] = field(default_factory=dict)
    systems: dict[str, SystemSpec] = field(default_factory=dict)
    grid: GridSettings = field(default_factory=GridSettings)
    mc: McSettings = field(default_factory=McSettings)
    tolerances: Tolerances = field(default_factory=Tolerances)
    output: OutputSettings = field(default_factory=OutputSettings)
    seed: int = DEFAULT_SEED
    checks: dict = field(default_factory=dict)

    def quadrature_settings(self) -> QuadratureSettings:
        return QuadratureSettings(tol=self.tolerances.quadrature,
                                  max_depth=self.tolerances.quadrature_depth)

    def grid_spec(self, laws=None) -> GridSpec:
        laws = list(self.distributions.values()) if laws is None else list(laws)
        return default_grid(laws, points=self.grid.points, t_max=self.grid.t_max)

    def law(self, name: str) -> LifetimeDistribution:
        try:
            return self.distributions[name]
        except KeyError:
            raise ConfigError(f"unknown distribution id {name!r}") from None

    def model_function(self, ref) -> ModelFunction:
        if isinstance(ref, ModelFunction):
            return ref
        if isinstance(ref, dict):
            return ModelFunction.from_config(ref)
        try:
            return self.model_functions[ref]
        except KeyError:
            raise ConfigError(f"unknown model function id {ref!r}") from None

    def system(self, name: str) -> SystemSpec:
        try:
            return self.systems[name]
        except KeyError:
            raise ConfigError(f"unknown system id {name!r}") from None


def distribution_from_config(cfg: dict, resolved: dict[str, LifetimeDistribution],
                             base_dir: Path) -> LifetimeDistribution:
    kind = cfg.get("kind")
    if kind == "exponential":
        return Exponential(rate=float(cfg["rate"]))
    if kind == "weibull":
        return Weibull(shape=float(cfg["shape"]), scale=float(cfg["scale"]))
    if kind == "piecewise_survival":
        if "csv" in cfg:
            path = Path(cfg["csv"])
            if not path.is_absolute():
                path = base_dir / path
            return PiecewiseSurvival.from_csv(path)
        return PiecewiseSurvival(knots=tuple(tuple(k) for k in cfg["knots"]))
    if kind == "residual":
        base_ref = cfg["base"]
        if isinstance(base_ref, dict):
            base = distribution_from_config(base_ref, resolved, base_dir)
        elif base_ref in resolved:
            base = resolved[base_ref]
        else:
            raise ConfigError(f"residual base {base_ref!r} must be defined earlier")
        age = float(cfg["age"])
        if age == 0.0:
            return base
        if isinstance(base, Exponential):
            return base
        return ResidualLife(base=base, age=age)
    raise ConfigError(f"unknown distribution kind {kind!r}")


def _system_from_config(cfg: dict, distributions, model_functions,
                        quadrature: QuadratureSettings) -> SystemSpec:
    try:
        topology = Topology(cfg["topology"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad system topology: {exc}") from exc
    nodes = []
    for node_cfg in cfg.get("nodes", []):
        component = node_cfg["component"]
        standby = node_cfg.get("standby")
        mf_ref = node_cfg.get("mf")
        mf = None
        if standby is not None:
            if mf_ref is None:
                raise ConfigError(f"standby node {component!r} needs an 'mf' entry")
            if isinstance(mf_ref, str):
                if mf_ref not in model_functions:
                    raise ConfigError(f"unknown model function id {mf_ref!r}")
                mf = model_functions[mf_ref]
            else:
                mf = ModelFunction.from_config(mf_ref)
        nodes.append(Node(component=component, standby=standby, mf=mf))
    return SystemSpec(topology=topology, nodes=tuple(nodes), registry=distributions,
                      quadrature=quadrature)


def load_config(source: dict | str | Path | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from a JSON file, a dict, or defaults."""
    base_dir = Path.cwd()
    if source is None:
        data: dict = {}
    elif isinstance(source, dict):
        data = source
    else:
        path = Path(source)
        base_dir = path.parent
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")

    try:
        grid = GridSettings(**data.get("grid", {}))
        mc = McSettings(**data.get("mc", {}))
        tolerances = Tolerances(**data.get("tolerances", {}))
        output = OutputSettings(dir=Path(data.get("output", {}).get("dir", "standby_out")))
    except TypeError as exc:
        raise ConfigError(f"bad settings block: {exc}") from exc

    if grid.t_max is not None and not grid.t_max > 0:
        raise ConfigError(f"grid.t_max must be positive, got {grid.t_max}")
    if grid.points < 8:
        raise ConfigError(f"grid.points must be at least 8, got {grid.points}")
    if mc.sp_draws < 1000 or mc.marginal_draws < 1000:
        raise ConfigError("MC sample counts must be at least 1000 for verdicts")

    seed = data.get("seed", DEFAULT_SEED)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer: {env_seed!r}") from exc

    distributions: dict[str, LifetimeDistribution] = {}
    try:
        for name, dist_cfg in data.get("distributions", {}).items():
            distributions[name] = distribution_from_config(dist_cfg, distributions, base_dir)
        model_functions = {name: ModelFunction.from_config(mf_cfg)
                           for name, mf_cfg in data.get("model_functions", {}).items()}
    except ConfigError:
        raise
    except (StandbyLabError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad distribution/model-function block: {exc}") from exc

    cfg = ExperimentConfig(distributions=distributions, model_functions=model_functions,
                           grid=grid, mc=mc, tolerances=tolerances, output=output,
                           seed=int(seed), checks=data.get("checks", {}))
    try:
        for name, sys_cfg in data.get("systems", {}).items():
            cfg.systems[name] = _system_from_config(sys_cfg, distributions,
                                                    model_functions,
                                                    cfg.quadrature_settings())
    except ConfigError:
        raise
    except (StandbyLabError, KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad systems block: {exc}") from exc
    return cfg
