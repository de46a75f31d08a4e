"""
Intrinsic LMO descent loop: x_{t+1} = R_x(-eta_t xi_t*), deterministic and
stochastic variants, step schedules, momentum and trajectory recording.
"""
import logging
import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, List, Optional, Protocol, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

import imuon.configuration.config as config
import imuon.backend.manifold_part.manifolds as manifolds
from imuon.backend.kernel_part.norms import SPECTRAL, NormSpec
from imuon.backend.manifold_part.manifolds import LmoResult, ManifoldPoint, PolarMethod
from imuon.backend.utility.errors import DivergedError, InvalidInput

logger = logging.getLogger(__name__)


# =====================================================
# CONFIGURATION AND RECORDS
# =====================================================

class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    THEOREM_CONSTANT = "theorem_constant"
    DECAYING = "decaying"
    THEOREM_DECAYING = "theorem_decaying"


class OptimizerConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    norm: NormSpec = SPECTRAL
    tau: float = Field(config.DEFAULT_TAU, gt=0)
    schedule: ScheduleKind = ScheduleKind.CONSTANT
    eta: Optional[float] = Field(None, gt=0)
    eta0: Optional[float] = Field(None, gt=0)
    L_est: Optional[float] = Field(None, gt=0)
    delta0_est: Optional[float] = Field(None, gt=0)
    momentum_beta: float = Field(0.0, ge=0.0, lt=1.0)
    spectron_momentum: bool = False
    max_iters: int = Field(100, ge=0)
    seed: int = 0
    record_every: int = Field(config.DEFAULT_RECORD_EVERY, ge=1)
    polar: PolarMethod = PolarMethod.EXACT
    gram_root: bool = False

    @model_validator(mode="after")
    def _check_schedule(self) -> "OptimizerConfig":
        if self.schedule == ScheduleKind.CONSTANT and self.eta is None:
            raise ValueError("constant schedule needs eta")
        if self.schedule == ScheduleKind.DECAYING and self.eta0 is None:
            raise ValueError("decaying schedule needs eta0")
        if self.schedule in (ScheduleKind.THEOREM_CONSTANT, ScheduleKind.THEOREM_DECAYING):
            if self.L_est is None or self.delta0_est is None:
                raise ValueError(f"{self.schedule.value} schedule needs L_est and delta0_est")
        return self

    @classmethod
    def build(cls, **kwargs) -> "OptimizerConfig":
        """Construct, converting validation errors to InvalidInput"""
        try:
            return cls(**kwargs)
        except ValidationError as e:
            raise InvalidInput(f"Invalid optimizer config: {e.errors()[0]['msg']}") from e


class TrajectoryRecord(BaseModel):
    t: int
    f_value: float
    dual_value: float
    H_dual: float
    H_dual_sum: float
    riem_norm_sq: float
    step_eta: float
    wall_time: float
    full_H_dual: Optional[float] = None
    metric: Optional[float] = None


@dataclass
class RunResult:
    trajectory: List[TrajectoryRecord]
    final_point: ManifoldPoint
    iterations: int

    @property
    def min_h_dual(self) -> float:
        return min(r.H_dual for r in self.trajectory)

    @property
    def min_h_dual_sum(self) -> float:
        return min(r.H_dual_sum for r in self.trajectory)


class Problem(Protocol):
    def value(self, x: ManifoldPoint) -> float: ...

    def egrad(self, x: ManifoldPoint) -> Any: ...


class GradientSampler(Protocol):
    def sample(self, x: ManifoldPoint, rng: np.random.Generator) -> Any: ...


# step(x, egrad, t) -> (next point, LmoResult at x for the true gradient, or None)
StepFunction = Callable[[ManifoldPoint, Any, int], Tuple[ManifoldPoint, Optional[LmoResult]]]


# =====================================================
# STEP SIZES
# =====================================================

def theorem_constant_c(cfg: OptimizerConfig, c_phi: Optional[float]) -> float:
    """c = sqrt(2 Delta0 / (L C_phi))"""
    if c_phi is None or c_phi <= 0:
        raise InvalidInput(f"Theorem schedules need an analytic C_phi, got {c_phi} for {cfg.norm}")
    return math.sqrt(2.0 * cfg.delta0_est / (cfg.L_est * c_phi))


def step_size(cfg: OptimizerConfig, t: int, c_phi: Optional[float] = None) -> float:
    """Step size eta_t of the configured schedule at iteration t (0-based)"""
    schedule = cfg.schedule
    if schedule == ScheduleKind.CONSTANT:
        return float(cfg.eta)
    if schedule == ScheduleKind.DECAYING:
        return float(cfg.eta0) / math.sqrt(t + 1)
    c = theorem_constant_c(cfg, c_phi)
    if schedule == ScheduleKind.THEOREM_CONSTANT:
        return c / (cfg.tau * math.sqrt(max(cfg.max_iters, 1)))
    return c / (cfg.tau * math.sqrt(t + 1))


# =====================================================
# MOMENTUM
# =====================================================

@dataclass
class MomentumState:
    """Zero-initialized momentum buffers matching the gradient structure"""
    buffers: Optional[Tuple[np.ndarray, ...]] = None
    steps: int = 0


def momentum_combine(state: MomentumState, grads, beta: float, point: Optional[ManifoldPoint] = None):
    """
    Update M <- beta M + G in place and return G + beta M.

    grads may be one matrix or a tuple of matrices. When point is a
    FixedRankPoint and grads is the factor pair (G_B, G_A), the ambient
    direction G~_B A + B G~_A is returned instead.
    """
    if not 0.0 <= beta < 1.0:
        raise InvalidInput(f"beta must lie in [0, 1), got {beta}")
    single = isinstance(grads, np.ndarray)
    parts = (grads,) if single else tuple(grads)
    if beta == 0.0:
        combined = parts
    else:
        if state.buffers is None:
            state.buffers = tuple(np.zeros_like(g) for g in parts)
        state.buffers = tuple(beta * M + g for M, g in zip(state.buffers, parts))
        combined = tuple(g + beta * M for g, M in zip(parts, state.buffers))
    state.steps += 1
    if isinstance(point, manifolds.FixedRankPoint) and len(combined) == 2:
        G_B, G_A = combined
        return G_B @ point.A + point.B @ G_A
    return combined[0] if single else combined


# =====================================================
# STEPS
# =====================================================

def imuon_step(x: ManifoldPoint, egrad, cfg: OptimizerConfig, t: int, c_phi: Optional[float] = None) -> Tuple[ManifoldPoint, LmoResult]:
    """One step x -> R_x(-eta_t xi*) with xi* the intrinsic LMO direction"""
    result = manifolds.lmo_direction(x, egrad, cfg.norm, cfg.tau, polar=cfg.polar, gram_root=cfg.gram_root)
    eta = step_size(cfg, t, c_phi)
    x_next = manifolds.retract(x, manifolds.scale_tangent(result.xi_star, -1.0), eta)
    return x_next, result


def make_imuon_step(cfg: OptimizerConfig, x0: ManifoldPoint) -> StepFunction:
    """Step closure carrying its own momentum state"""
    c = manifolds.c_phi(x0, cfg.norm) if cfg.schedule in (ScheduleKind.THEOREM_CONSTANT, ScheduleKind.THEOREM_DECAYING) else None
    state = MomentumState()

    def step(x, egrad, t):
        if cfg.momentum_beta == 0.0:
            return imuon_step(x, egrad, cfg, t, c)
        if isinstance(x, manifolds.FixedRankPoint):
            effective = momentum_combine(state, (egrad @ x.A.T, x.B.T @ egrad), cfg.momentum_beta, point=x)
        else:
            effective = momentum_combine(state, egrad, cfg.momentum_beta)
        x_next, _ = imuon_step(x, effective, cfg, t, c)
        return x_next, None

    return step


# =====================================================
# RUN LOOPS
# =====================================================

def _value_grad(problem, x):
    if hasattr(problem, "value_grad"):
        return problem.value_grad(x)
    return problem.value(x), problem.egrad(x)


def _monitor(x, egrad, cfg: OptimizerConfig) -> LmoResult:
    return manifolds.lmo_direction(x, egrad, cfg.norm, cfg.tau, polar=cfg.polar, gram_root=cfg.gram_root)


def _run(problem, x0, cfg: OptimizerConfig, step: StepFunction, sampler=None) -> RunResult:
    c = None
    if cfg.schedule in (ScheduleKind.THEOREM_CONSTANT, ScheduleKind.THEOREM_DECAYING):
        c = manifolds.c_phi(x0, cfg.norm)
    rng = np.random.default_rng(cfg.seed)
    metric_fn = getattr(problem, "metric", None)
    trajectory: List[TrajectoryRecord] = []
    x = x0
    start = time.perf_counter()
    T = cfg.max_iters

    for t in range(T + 1):
        f_value, full_grad = _value_grad(problem, x)
        if not math.isfinite(f_value):
            logger.error(f"Non-finite objective at iteration {t}")
            raise DivergedError(f"Objective became non-finite at iteration {t}", trajectory, x)

        record_now = t == 0 or t == T or t % cfg.record_every == 0
        if t < T:
            egrad = full_grad if sampler is None else sampler.sample(x, rng)
            x_next, step_result = step(x, egrad, t)
        else:
            egrad, x_next, step_result = full_grad, x, None

        if record_now:
            monitor = step_result if step_result is not None else _monitor(x, egrad, cfg)
            full_h = _monitor(x, full_grad, cfg).H_dual if sampler is not None else None
            trajectory.append(TrajectoryRecord(
                t=t,
                f_value=float(f_value),
                dual_value=monitor.dual_value,
                H_dual=monitor.H_dual,
                H_dual_sum=monitor.H_dual_sum,
                riem_norm_sq=monitor.riem_norm_sq,
                step_eta=step_size(cfg, t, c) if t < T else 0.0,
                wall_time=time.perf_counter() - start,
                full_H_dual=full_h,
                metric=float(metric_fn(x)) if metric_fn is not None else None,
            ))
            logger.debug(f"t={t} f={f_value:.6e} H_dual={monitor.H_dual:.6e}")
        x = x_next

    return RunResult(trajectory=trajectory, final_point=x, iterations=T)


def run_deterministic(problem, x0: ManifoldPoint, cfg: OptimizerConfig, step: Optional[StepFunction] = None) -> RunResult:
    """
    Run T = cfg.max_iters full-gradient steps, recording at t = 0, every
    record_every steps and at T

    Raises:
        DivergedError: first non-finite objective value
    """
    step = step or make_imuon_step(cfg, x0)
    return _run(problem, x0, cfg, step)


def run_stochastic(problem, sampler, x0: ManifoldPoint, cfg: OptimizerConfig, step: Optional[StepFunction] = None) -> RunResult:
    """
    Run with sampled gradients from sampler.sample(x, rng), rng seeded by cfg.seed.
    Records also carry the full-batch H_dual.
    """
    if cfg.schedule not in (ScheduleKind.DECAYING, ScheduleKind.THEOREM_DECAYING):
        raise InvalidInput("Stochastic runs need a decaying schedule")
    step = step or make_imuon_step(cfg, x0)
    return _run(problem, x0, cfg, step, sampler=sampler)


# =====================================================
# PRE-PASS ESTIMATES
# =====================================================

def estimate_smoothness(
    problem,
    x0: ManifoldPoint,
    norm: NormSpec,
    tau: float,
    eta_max: float,
    samples: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Sample points around x0 and step sizes in (0, eta_max]; return the largest
    L with f(R_x(-eta xi)) <= f(x) - eta g(xi, grad f) + L/2 eta^2 ||xi||^2
    """
    samples = config.SMOOTHNESS_SAMPLES if samples is None else samples
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(samples):
        wander = manifolds.lmo_direction(x0, manifolds.random_egrad(x0, rng), norm, tau)
        x = manifolds.retract(x0, wander.xi_star, float(rng.uniform(0.0, eta_max)))
        f_x, g = _value_grad(problem, x)
        result = manifolds.lmo_direction(x, g, norm, tau)
        if result.riem_norm_sq <= 0.0:
            continue
        eta = float(rng.uniform(0.0, eta_max)) or eta_max
        f_next = problem.value(manifolds.retract(x, manifolds.scale_tangent(result.xi_star, -1.0), eta))
        curvature = 2.0 * (f_next - f_x + eta * result.dual_value) / (eta ** 2 * result.riem_norm_sq)
        if math.isfinite(curvature):
            best = max(best, curvature)
    logger.info(f"Estimated smoothness L={best:.4e} from {samples} samples")
    return max(best, np.finfo(np.float64).tiny)


def estimate_delta0(problem, x0: ManifoldPoint, f_star: Optional[float] = None, pilot: Optional[OptimizerConfig] = None) -> float:
    """
    f(x0) - f_star; without f_star, the best value of a pilot run stands in
    """
    f0 = float(problem.value(x0))
    if f_star is None:
        pilot = pilot or OptimizerConfig.build(
            norm=NormSpec.parse("frobenius"), schedule="decaying", eta0=1.0, max_iters=200, record_every=1,
        )
        run = run_deterministic(problem, x0, pilot)
        f_star = min(r.f_value for r in run.trajectory)
    return max(f0 - f_star, np.finfo(np.float64).tiny)
