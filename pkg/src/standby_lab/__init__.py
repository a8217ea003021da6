"""standby-lab: lifetimes of series/parallel systems with warm standby units.

Core pieces: lifetime laws evaluated through log-survival, the warm-standby
reliability integral and a faithful coupled Monte Carlo sampler, allocation
models over series/parallel systems, and grid-based stochastic-order checks.
"""

from .errors import (ArityMismatch, ConfigError, ConstraintViolation, DeadAtAge,
                     DegenerateGrid, InvalidModelFunction, InvalidSystemPattern,
                     ModelFunctionMismatch, NegativeTime, NumericalUnderflow,
                     OutOfRange, QuadratureFailure, RegistryMismatch,
                     StandbyLabError, TruncationWarning, UnknownHypothesis)
from .grids import GridSpec, default_grid
from .lifetimes import (EvalRecord, Exponential, HazardPair,
                        LifetimeDistribution, PiecewiseSurvival, ResidualLife,
                        ShapeProperty, ShapeVerdict, Weibull, evaluate,
                        inverse_survival, residual, sample, sample_many,
                        shape_check)
from .orders import (Direction, ImplicationAudit, OrderKind, OrderVerdict,
                     SpDelta2Result, SpVerdict, check_order, implication_audit,
                     pointwise_dominance, sp_series_delta2)
from .rng import SeedStream
from .standby import (COLD_MF, HOT_MF, MapKind, MfEval, ModelFunction,
                      ModelFunctionAudit, QuadratureSettings, SpecialStructure,
                      StandbyComposite, TimeMap, identity_map, linear_map,
                      log_map, model_function_eval, reduce_special, table_map,
                      validate_model_function, warm_sample, warm_sample_many,
                      warm_survival, zero_map)
from .systems import (AllocationFamily, Model, Node, SystemSpec, Topology,
                      coupled_sample, coupled_sample_many,
                      enumerate_allocations, q_parallel_cdf, system_sample_many,
                      system_survival)
from .verdicts import Status, Verdict

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
