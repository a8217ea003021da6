"""Series/parallel systems over components with optional warm standbys.

Systems share one component registry; coupled sampling gives every shared
component id the same draw in both systems so dependent comparisons
(stochastic precedence) are evaluated on the true joint law.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import (ArityMismatch, ModelFunctionMismatch, NegativeTime,
                     RegistryMismatch)
from .lifetimes import LifetimeDistribution
from .quadrature import adaptive_simpson_graded
from .standby import (ModelFunction, QuadratureSettings, StandbyComposite,
                      validate_model_function)


class Topology(Enum):
    SERIES = "series"
    PARALLEL = "parallel"


class Model(Enum):
    I = "I"
    II = "II"
    III = "III"


@dataclass(frozen=True)
class Node:
    component: str
    standby: str | None = None
    mf: ModelFunction | None = None

    def __post_init__(self):
        if (self.standby is None) != (self.mf is None):
            raise ArityMismatch("a standby node needs both a standby id and a model function")

    def config(self) -> dict:
        out: dict = {"component": self.component}
        if self.standby is not None:
            out["standby"] = self.standby
            out["mf"] = self.mf.config()
        return out

    def descriptor(self) -> tuple[str, str, str] | None:
        """Identity of this node's standby randomness; None for plain nodes."""
        if self.standby is None:
            return None
        return (self.component, self.standby, self.mf.fingerprint())


@dataclass(frozen=True)
class SystemSpec:
    topology: Topology
    nodes: tuple[Node, ...]
    registry: Mapping[str, LifetimeDistribution]
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)

    def __post_init__(self):
        if len(self.nodes) < 1:
            raise ArityMismatch("a system needs at least one node")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        seen_standbys: set[str] = set()
        for node in self.nodes:
            if node.component not in self.registry:
                raise RegistryMismatch(f"component id {node.component!r} not in registry")
            if node.standby is not None:
                if node.standby not in self.registry:
                    raise RegistryMismatch(f"standby id {node.standby!r} not in registry")
                if node.standby in seen_standbys:
                    raise ArityMismatch(
                        f"standby id {node.standby!r} attached to more than one node")
                seen_standbys.add(node.standby)
        laws = tuple(
            self.registry[n.component] if n.standby is None
            else StandbyComposite(self.registry[n.component], self.registry[n.standby],
                                  n.mf, self.quadrature)
            for n in self.nodes
        )
        object.__setattr__(self, "_node_laws", laws)
        object.__setattr__(self, "_curve_cache", {})

    # -- evaluation --------------------------------------------------------

    def node_laws(self) -> tuple[LifetimeDistribution, ...]:
        return self._node_laws

    def survival(self, t: float) -> float:
        if t < 0:
            raise NegativeTime(f"t must be nonnegative, got {t}")
        if self.topology is Topology.SERIES:
            return float(np.exp(sum(law.log_survival(t) for law in self._node_laws)))
        return float(-np.expm1(sum(law.log_cdf(t) for law in self._node_laws)))

    def cdf(self, t: float) -> float:
        return 1.0 - self.survival(t)

    def _node_log_curves(self, ts: np.ndarray, want: str) -> np.ndarray:
        """Sum over nodes of log-survival ('s') or log-cdf ('f') curves."""
        total = np.zeros_like(ts)
        with np.errstate(divide="ignore"):
            for law in self._node_laws:
                if isinstance(law, StandbyComposite):
                    s = law.survival_curve(ts)
                    total += np.log(s) if want == "s" else np.log1p(-s)
                else:
                    ls = np.asarray(law.log_survival(ts), dtype=float)
                    total += ls if want == "s" else np.log(-np.expm1(ls))
        return total

    def survival_curve(self, ts) -> np.ndarray:
        """System survival at each grid time; memoized per grid."""
        ts = np.asarray(ts, dtype=float)
        key = (ts.tobytes(), self.topology.value)
        cached = self._curve_cache.get(key)
        if cached is None:
            if self.topology is Topology.SERIES:
                cached = np.exp(self._node_log_curves(ts, "s"))
            else:
                cached = -np.expm1(self._node_log_curves(ts, "f"))
            self._curve_cache[key] = cached
        return cached.copy()

    def cdf_curve(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.topology is Topology.PARALLEL:
            return np.exp(self._node_log_curves(ts, "f"))
        return 1.0 - self.survival_curve(ts)

    def config(self) -> dict:
        return {
            "topology": self.topology.value,
            "nodes": [n.config() for n in self.nodes],
        }


def system_survival(s: SystemSpec, t: float) -> float:
    """Series: product of node survivals; parallel: 1 - product of node CDFs."""
    return s.survival(t)


@dataclass(frozen=True)
class AllocationFamily:
    model: Model
    topology: Topology
    candidates: tuple[SystemSpec, ...]
    labels: tuple[str, ...]
    registry: Mapping[str, LifetimeDistribution]


def _mf_list(mfs, n: int) -> list[ModelFunction]:
    if isinstance(mfs, ModelFunction):
        return [mfs] * n
    mfs = list(mfs)
    if len(mfs) != n:
        raise ArityMismatch(f"expected {n} model functions, got {len(mfs)}")
    return mfs


def enumerate_allocations(model: Model, topology: Topology,
                          registry: Mapping[str, LifetimeDistribution],
                          components: Sequence[str], standbys: Sequence[str],
                          mfs, quadrature: QuadratureSettings = QuadratureSettings(),
                          ) -> AllocationFamily:
    """Build the candidate systems of an allocation model.

    Model I: one standby, n candidates (standby on node i).
    Model II: n standbys, n candidates (Y_i paired with X_i on node i).
    Model III: two standbys on the first two slots; exactly the cross and
    straight pairings.
    """
    components = list(components)
    standbys = list(standbys)
    n = len(components)
    if n < 1:
        raise ArityMismatch("need at least one component")

    def build(nodes) -> SystemSpec:
        return SystemSpec(topology=topology, nodes=tuple(nodes), registry=registry,
                          quadrature=quadrature)

    if model is Model.I:
        if len(standbys) != 1:
            raise ArityMismatch(f"Model I needs exactly 1 standby, got {len(standbys)}")
        mf_per_slot = _mf_list(mfs, n)
        candidates, labels = [], []
        for i, comp in enumerate(components):
            nodes = [Node(c) for c in components]
            nodes[i] = Node(comp, standbys[0], mf_per_slot[i])
            candidates.append(build(nodes))
            labels.append(f"standby_on_{comp}")
    elif model is Model.II:
        if len(standbys) != n:
            raise ArityMismatch(f"Model II needs {n} standbys, got {len(standbys)}")
        mf_per_slot = _mf_list(mfs, n)
        candidates, labels = [], []
        for i, comp in enumerate(components):
            nodes = [Node(c) for c in components]
            nodes[i] = Node(comp, standbys[i], mf_per_slot[i])
            candidates.append(build(nodes))
            labels.append(f"standby_on_{comp}")
    elif model is Model.III:
        if len(standbys) != 2 or n < 2:
            raise ArityMismatch("Model III needs exactly 2 standbys and >= 2 components")
        if not isinstance(mfs, ModelFunction):
            raise ArityMismatch("Model III uses one shared model function for all pairings")
        rest = [Node(c) for c in components[2:]]
        cross = build([Node(components[0], standbys[1], mfs),
                       Node(components[1], standbys[0], mfs)] + rest)
        straight = build([Node(components[0], standbys[0], mfs),
                          Node(components[1], standbys[1], mfs)] + rest)
        candidates = [cross, straight]
        labels = ["cross_pairing", "straight_pairing"]
    else:
        raise ArityMismatch(f"unknown model {model}")

    return AllocationFamily(model=model, topology=topology,
                            candidates=tuple(candidates), labels=tuple(labels),
                            registry=registry)


# -- sampling ---------------------------------------------------------------

def _registries_shared(a: SystemSpec, b: SystemSpec) -> bool:
    if a.registry is b.registry:
        return True
    if set(a.registry) != set(b.registry):
        return False
    return all(a.registry[k] is b.registry[k] or a.registry[k] == b.registry[k]
               for k in a.registry)


def _channel_layout(registry, descriptors):
    ids = sorted(registry)
    id_col = {cid: i for i, cid in enumerate(ids)}
    desc_col = {}
    col = len(ids)
    for desc in sorted(descriptors):
        desc_col[desc] = (col, col + 1)
        col += 2
    return id_col, desc_col, col


def _system_lifetimes(spec: SystemSpec, u: np.ndarray, id_col, desc_col) -> np.ndarray:
    draws = {}
    per_node = []
    for node, law in zip(spec.nodes, spec.node_laws()):
        cid = node.component
        if cid not in draws:
            draws[cid] = spec.registry[cid].draw(u[:, id_col[cid]])
        if node.standby is None:
            per_node.append(draws[cid])
        else:
            ind_col, res_col = desc_col[node.descriptor()]
            composite: StandbyComposite = law
            g = composite.mf.gamma(draws[cid])
            w = composite.mf.omega(draws[cid])
            survived = np.log(u[:, ind_col]) <= composite.standby.log_survival(g)
            r = composite.standby.residual_draw(w, u[:, res_col])
            per_node.append(np.where(survived, draws[cid] + r, draws[cid]))
    stacked = np.vstack(per_node)
    if spec.topology is Topology.SERIES:
        return stacked.min(axis=0)
    return stacked.max(axis=0)


def system_sample_many(spec: SystemSpec, stream, count: int) -> np.ndarray:
    """Lifetime draws of one system; draw i depends only on (seed, i)."""
    descriptors = [n.descriptor() for n in spec.nodes if n.standby is not None]
    id_col, desc_col, channels = _channel_layout(spec.registry, descriptors)
    u = stream.block(count, channels)
    return _system_lifetimes(spec, u, id_col, desc_col)


def coupled_sample_many(a: SystemSpec, b: SystemSpec, stream, count: int
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Joint lifetime draws (T_a, T_b) on a shared registry draw.

    Component ids receive the same draw in both systems. Standby
    storage/residual randomness is keyed by node descriptor, so two systems
    containing an identical standby node share its randomness too (identical
    specs give T_a = T_b pathwise), while differently-allocated standbys stay
    independent.
    """
    if not _registries_shared(a, b):
        raise RegistryMismatch("coupled sampling needs one shared registry")
    descriptors = {n.descriptor() for s in (a, b) for n in s.nodes if n.standby is not None}
    id_col, desc_col, channels = _channel_layout(a.registry, descriptors)
    u = stream.block(count, channels)
    t_a = _system_lifetimes(a, u, id_col, desc_col)
    t_b = _system_lifetimes(b, u, id_col, desc_col)
    return t_a, t_b


def coupled_sample(a: SystemSpec, b: SystemSpec, stream) -> tuple[float, float]:
    t_a, t_b = coupled_sample_many(a, b, stream, 1)
    return float(t_a[0]), float(t_b[0])


# -- Model III parallel factorization ---------------------------------------

def _paired_cdf(base: LifetimeDistribution, standby: LifetimeDistribution,
                mf: ModelFunction, t: float, quadrature: QuadratureSettings) -> float:
    """F_{X (*) Y}(t) = int_0^t F_Y(t - delta(u)) dF_X(u), valid when omega == gamma."""
    if t == 0.0:
        return 0.0
    ls_y = standby._log_survival
    lf_x = base._log_density
    omega = mf.omega

    def integrand(u):
        w = np.asarray(omega(u), dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            log_f_y = np.log(-np.expm1(ls_y((t - u) + w)))
            return np.exp(log_f_y + lf_x(u))

    lower = 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        if not np.isfinite(base.density(0.0)):
            lower = min(base.inverse_cdf(quadrature.tol * 1e-3), 0.5 * t)
    val = adaptive_simpson_graded(integrand, lower, t, tol=quadrature.tol,
                                  max_depth=quadrature.max_depth)
    return float(min(1.0, max(val, 0.0)))


def q_parallel_cdf(family: AllocationFamily, t: float,
                   audit_points: int = 257) -> tuple[float, float]:
    """(F_Q1, F_Q2) of the Model III parallel pair via the factorized integrals.

    Requires omega == gamma (audited on [0, t]); each pairing's CDF is a single
    integral of F_Y(t - delta(u)) against dF_X, and the system CDF factorizes
    into the product of pairing CDFs times the CDF of the remaining components.
    """
    if family.model is not Model.III or family.topology is not Topology.PARALLEL:
        raise ArityMismatch("q_parallel_cdf applies to Model III parallel families")
    if t < 0:
        raise NegativeTime(f"t must be nonnegative, got {t}")
    cross, straight = family.candidates
    quadrature = cross.quadrature
    registry = family.registry

    audit_ts = np.linspace(0.0, max(t, 1e-6), audit_points)
    mfs = {n.mf.fingerprint(): n.mf for s in (cross, straight)
           for n in s.nodes if n.mf is not None}
    for mf in mfs.values():
        audit = validate_model_function(mf, audit_ts)
        if not audit.omega_equals_gamma:
            raise ModelFunctionMismatch(
                "factorized Model III CDF requires omega == gamma on [0, t]")

    def family_cdf(spec: SystemSpec) -> float:
        log_f = 0.0
        for node in spec.nodes:
            if node.standby is None:
                log_f += registry[node.component].log_cdf(t)
            else:
                f = _paired_cdf(registry[node.component], registry[node.standby],
                                node.mf, t, quadrature)
                with np.errstate(divide="ignore"):
                    log_f += float(np.log(f)) if f > 0 else -np.inf
        return float(np.exp(log_f))

    return family_cdf(cross), family_cdf(straight)
