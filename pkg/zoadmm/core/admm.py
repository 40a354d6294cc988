"""Zeroth-order ADMM engine.

Each iteration performs a Gauss-Seidel sweep over the y-blocks, one
linearized x-step driven by a zeroth-order gradient estimate and a dual
ascent step. With ``G = r I - rho eta A^T A`` and
``H_j = h_j I - rho B_j^T B_j`` both subproblems are closed form:

    y_j+ = prox_{psi_j / h_j}(y_j - B_j^T (rho v_j - lambda) / h_j)
    x+   = x - (eta / r) (g - A^T lambda + rho A^T (A x + sum_j B_j y_j+ - c))

The four variants differ only in how ``g`` is estimated.
"""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .diagnostics import (
    GapReport,
    IterationTrace,
    StatePair,
    lagrangian_value,
    objective_value,
    stationarity_gap,
    theta,
)
from .errors import (
    Diverged,
    InvalidAlpha,
    InvalidConfig,
    InvalidExponent,
    InvalidL,
    NonFiniteValue,
)
from .gradients import (
    SagaTable,
    SvrgSnapshot,
    _saga_direction,
    estimate_full_gradient,
    estimate_minibatch_gradient,
    saga_update,
    svrg_gradient,
)
from .problem import ConstrainedProblem, SmoothingSchedule, validate_problem

logger = logging.getLogger(__name__)

CURVATURE_MARGIN = 1.01
H_FLOOR = 1e-8


class Variant(StrEnum):
    ZO_ADMM = "zo_admm"
    ZO_SGD_ADMM = "zo_sgd_admm"
    ZO_SVRG_ADMM = "zo_svrg_admm"
    ZO_SAGA_ADMM = "zo_saga_admm"


class OutputRule(StrEnum):
    LAST = "last"
    ARGMIN_THETA = "argmin_theta"
    UNIFORM_RANDOM = "uniform_random"


class SolverConfig(BaseModel):
    """Solver hyperparameters.

    ``r`` and ``h`` default to 1% above their lower bounds
    (``rho eta sigma_max(A^T A) + 1`` and ``rho sigma_max(B_j^T B_j)``);
    ``epoch_length`` defaults to ``ceil(n^(1/3))`` and ``trace_stride`` to
    ``max(1, iterations // 100)``.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    variant: Variant = Variant.ZO_SVRG_ADMM
    eta: float = Field(default=0.1, gt=0)
    rho: float = Field(default=1.0, gt=0)
    r: float | None = Field(default=None, gt=0)
    h: tuple[float, ...] | None = None
    batch_size: int = Field(default=20, ge=1)
    epoch_length: int | None = Field(default=None, ge=1)
    iterations: int = Field(default=100, ge=0)
    smoothing: SmoothingSchedule = Field(default_factory=SmoothingSchedule)
    seed: int = 0
    output_rule: OutputRule = OutputRule.ARGMIN_THETA
    trace_stride: int | None = Field(default=None, ge=1)
    eval_budget: int | None = Field(default=None, ge=1)
    divergence_threshold: float = Field(default=1e12, gt=0)
    workers: int | None = Field(default=None, ge=1)


@dataclass(frozen=True)
class ResolvedConfig:
    """A :class:`SolverConfig` checked against one problem, with ``r`` and ``h_j`` fixed."""

    config: SolverConfig
    r: float
    h: tuple[float, ...]
    batch_size: int
    epoch_length: int
    trace_stride: int
    sigma_min_G: float
    sigma_max_G: float

    @property
    def eta(self) -> float:
        return self.config.eta

    @property
    def rho(self) -> float:
        return self.config.rho

    def G_times(self, problem: ConstrainedProblem, v: np.ndarray) -> np.ndarray:
        """``G v`` for ``G = r I - rho eta A^T A``."""

        return self.r * v - self.rho * self.eta * (problem.A.T @ (problem.A @ v))


def _ceil(value: float) -> int:
    nearest = round(value)
    if abs(value - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(value))


def resolve_config(problem: ConstrainedProblem, config: SolverConfig) -> ResolvedConfig:
    """Fill defaults that depend on the problem and check the curvature invariants."""

    rho, eta = config.rho, config.eta
    lower_r = rho * eta * problem.sigma_A_max + 1.0
    r = config.r if config.r is not None else CURVATURE_MARGIN * lower_r
    if not r > lower_r:
        raise InvalidConfig(f"r={r:.6g} debe superar rho*eta*sigma_max(A^T A)+1={lower_r:.6g}")

    if config.h is not None:
        if len(config.h) != problem.k:
            raise InvalidConfig(f"h tiene {len(config.h)} valores, el problema {problem.k} bloques")
        h = tuple(float(v) for v in config.h)
    else:
        h = tuple(CURVATURE_MARGIN * rho * s + H_FLOOR for s in problem.sigma_B_max)
    for j, (hj, s) in enumerate(zip(h, problem.sigma_B_max, strict=True)):
        if not hj > rho * s:
            raise InvalidConfig(f"h_{j}={hj:.6g} debe superar rho*sigma_max(B^T B)={rho * s:.6g}")

    n = problem.objective.n
    if config.batch_size > n:
        raise InvalidConfig(f"batch_size={config.batch_size} supera n={n}")
    epoch = config.epoch_length or max(1, _ceil(n ** (1.0 / 3.0)))
    stride = config.trace_stride or max(1, config.iterations // 100)
    return ResolvedConfig(
        config=config,
        r=float(r),
        h=h,
        batch_size=config.batch_size,
        epoch_length=epoch,
        trace_stride=stride,
        sigma_min_G=r - rho * eta * problem.sigma_A_max,
        sigma_max_G=r - rho * eta * problem.sigma_A_min,
    )


def _resolved(
    problem: ConstrainedProblem, config: SolverConfig | ResolvedConfig
) -> ResolvedConfig:
    if isinstance(config, ResolvedConfig):
        return config
    return resolve_config(problem, config)


@dataclass
class SolverState:
    x: np.ndarray
    y: list[np.ndarray]
    lam: np.ndarray
    x_prev: np.ndarray
    t: int = 0
    s: int = 0
    memory: SvrgSnapshot | SagaTable | None = None
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @classmethod
    def initial(
        cls,
        problem: ConstrainedProblem,
        *,
        seed: int = 0,
        x0: np.ndarray | None = None,
        y0: Sequence[np.ndarray] | None = None,
        lam0: np.ndarray | None = None,
    ) -> SolverState:
        x, y, lam = problem.zero_point()
        if x0 is not None:
            x = np.array(x0, dtype=float, copy=True)
        if y0 is not None:
            y = [np.array(v, dtype=float, copy=True) for v in y0]
        if lam0 is not None:
            lam = np.array(lam0, dtype=float, copy=True)
        return cls(x=x, y=y, lam=lam, x_prev=x.copy(), rng=np.random.default_rng(seed))


# ----------------------------------------------------------------------
# Single steps
# ----------------------------------------------------------------------
def update_y_block(
    problem: ConstrainedProblem,
    state: SolverState,
    j: int,
    config: SolverConfig | ResolvedConfig,
) -> np.ndarray:
    """Closed-form y_j step; ``state.y[:j]`` must already hold this sweep's values."""

    params = _resolved(problem, config)
    block = problem.blocks[j]
    v = problem.constraint_residual(state.x, state.y)
    hj = params.h[j]
    point = state.y[j] - (block.B.T @ (params.rho * v - state.lam)) / hj
    return block.prox(point, 1.0 / hj)


def update_x(
    problem: ConstrainedProblem,
    state: SolverState,
    g_hat: np.ndarray,
    config: SolverConfig | ResolvedConfig,
) -> np.ndarray:
    """Minimizer of the linearized augmented Lagrangian; all y-blocks already updated."""

    params = _resolved(problem, config)
    residual = problem.constraint_residual(state.x, state.y)
    step = g_hat - problem.A.T @ state.lam + params.rho * (problem.A.T @ residual)
    return state.x - (params.eta / params.r) * step


def update_dual(
    problem: ConstrainedProblem,
    state: SolverState,
    config: SolverConfig | ResolvedConfig,
) -> np.ndarray:
    params = _resolved(problem, config)
    return state.lam - params.rho * problem.constraint_residual(state.x, state.y)


# ----------------------------------------------------------------------
# Driver
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class IterationEvent:
    """Handed to the per-iteration callback after the dual step."""

    pair: StatePair
    g_hat: np.ndarray
    params: ResolvedConfig
    theta: float
    trace: IterationTrace


@dataclass(frozen=True)
class SolverResult:
    x: np.ndarray
    y: tuple[np.ndarray, ...]
    lam: np.ndarray
    iteration: int
    output_rule: OutputRule
    objective: float
    theta: float | None
    gap: GapReport | None
    iterations_run: int
    evals: int
    diag_evals: int
    wall_seconds: float
    params: ResolvedConfig


Callback = Callable[[IterationEvent], bool | None]


def _estimate(
    problem: ConstrainedProblem,
    state: SolverState,
    params: ResolvedConfig,
    mu: float,
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    """Return ``(g_hat, batch, batch_rows)`` for the configured variant."""

    oracle = problem.objective
    config = params.config
    workers = config.workers
    if config.variant is Variant.ZO_ADMM:
        return estimate_full_gradient(oracle, state.x, mu, workers=workers), None, None
    batch = state.rng.integers(0, oracle.n, size=params.batch_size)
    if config.variant is Variant.ZO_SGD_ADMM:
        g = estimate_minibatch_gradient(oracle, batch, state.x, mu, workers=workers)
        return g, batch, None
    if config.variant is Variant.ZO_SVRG_ADMM:
        assert isinstance(state.memory, SvrgSnapshot)
        return svrg_gradient(oracle, batch, state.x, state.memory, mu, workers=workers), batch, None
    assert isinstance(state.memory, SagaTable)
    g, rows = _saga_direction(oracle, batch, state.x, state.memory, mu, workers=workers)
    return g, batch, rows


def _sweep(
    problem: ConstrainedProblem,
    state: SolverState,
    params: ResolvedConfig,
) -> list[np.ndarray]:
    y_new = [v.copy() for v in state.y]
    sweep_state = SolverState(x=state.x, y=y_new, lam=state.lam, x_prev=state.x_prev)
    for j in range(problem.k):
        y_new[j] = update_y_block(problem, sweep_state, j, params)
    return y_new


def _memory_displacement(memory: SvrgSnapshot | SagaTable | None, x: np.ndarray) -> float:
    if isinstance(memory, SvrgSnapshot):
        return memory.sq_distance(x)
    if isinstance(memory, SagaTable):
        return memory.mean_sq_distance(x)
    return 0.0


def run(
    problem: ConstrainedProblem,
    config: SolverConfig,
    *,
    x0: np.ndarray | None = None,
    y0: Sequence[np.ndarray] | None = None,
    lam0: np.ndarray | None = None,
    callback: Callback | None = None,
) -> tuple[SolverResult, list[IterationTrace]]:
    """Run the configured variant and return the selected iterate plus its trace."""

    validate_problem(problem)
    params = resolve_config(problem, config)
    oracle = problem.objective
    d = problem.d
    state = SolverState.initial(problem, seed=config.seed, x0=x0, y0=y0, lam0=lam0)
    evals0, diag0 = oracle.eval_count, oracle.diag_eval_count
    started = time.perf_counter()
    traces: list[IterationTrace] = []

    logger.info(
        "Ejecutando %s sobre %s: T=%d b=%d eta=%.4g rho=%.4g r=%.4g",
        config.variant.value,
        problem.name,
        config.iterations,
        params.batch_size,
        config.eta,
        config.rho,
        params.r,
    )

    if config.iterations == 0:
        objective = objective_value(problem, state.x, state.y)
        result = SolverResult(
            x=state.x,
            y=tuple(state.y),
            lam=state.lam,
            iteration=0,
            output_rule=config.output_rule,
            objective=objective,
            theta=None,
            gap=None,
            iterations_run=0,
            evals=oracle.eval_count - evals0,
            diag_evals=oracle.diag_eval_count - diag0,
            wall_seconds=time.perf_counter() - started,
            params=params,
        )
        return result, traces

    if config.variant is Variant.ZO_SAGA_ADMM:
        mu_init = config.smoothing.value(1, d)
        state.memory = SagaTable.initialize(oracle, state.x, mu_init, workers=config.workers)

    pick_rng = np.random.default_rng([config.seed, 7919])
    best_theta = math.inf
    selected: StatePair | None = None
    selected_theta: float | None = None
    previous_pair: StatePair | None = None
    prev_saga_disp = 0.0
    seen = 0

    for t in range(config.iterations):
        mu = config.smoothing.value(t + 1, d)
        if config.variant is Variant.ZO_SVRG_ADMM and t % params.epoch_length == 0:
            state.s += 1
            state.memory = SvrgSnapshot.take(oracle, state.x, mu, workers=config.workers)
            logger.debug("Época %d: snapshot en t=%d (mu=%.3g)", state.s, t, mu)

        try:
            g_hat, batch, rows = _estimate(problem, state, params, mu)
        except NonFiniteValue as exc:
            raise Diverged(t + 1, math.nan, float(np.linalg.norm(state.lam))) from exc
        saga_disp_now = (
            state.memory.mean_sq_distance(state.x) if isinstance(state.memory, SagaTable) else 0.0
        )

        y_new = _sweep(problem, state, params)
        x_old, y_old, lam_old = state.x, state.y, state.lam
        state.y = y_new
        x_new = update_x(problem, state, g_hat, params)
        state.x = x_new
        lam_new = update_dual(problem, state, params)
        state.lam = lam_new

        pair = StatePair(
            t_before=t,
            t_after=t + 1,
            x_before_prev=state.x_prev,
            x_before=x_old,
            x_after=x_new,
            y_before=tuple(y_old),
            y_after=tuple(y_new),
            lam_before=lam_old,
            lam_after=lam_new,
            prev_displacement=prev_saga_disp,
        )
        theta_t = theta(pair, state.memory, batch_size=params.batch_size)

        if isinstance(state.memory, SagaTable) and batch is not None:
            saga_update(state.memory, batch, x_old, mu, gradients=rows)
            prev_saga_disp = saga_disp_now

        dual_norm = float(np.linalg.norm(lam_new))
        try:
            f_value = oracle.mean_value(x_new, diagnostic=True)
        except NonFiniteValue as exc:
            raise Diverged(t + 1, math.nan, dual_norm) from exc
        objective = f_value + problem.penalty_value(y_new)
        residual = problem.constraint_residual(x_new, y_new)
        limit = config.divergence_threshold
        if not (math.isfinite(objective) and abs(objective) <= limit and dual_norm <= limit):
            raise Diverged(t + 1, objective, dual_norm)
        lagrangian = lagrangian_value(problem, x_new, y_new, lam_new, config.rho, f_value=f_value)

        sampled = (t + 1) % params.trace_stride == 0 or t + 1 == config.iterations
        gap_value: float | None = None
        if sampled:
            g_full = estimate_full_gradient(
                oracle, x_new, mu, diagnostic=True, workers=config.workers
            )
            gap_value = stationarity_gap(problem, pair, g_full, rho=config.rho, h=params.h).total
            logger.debug("t=%d objetivo=%.6g gap=%.3e", t + 1, objective, gap_value)

        row = IterationTrace(
            iter=t + 1,
            epoch=state.s,
            evals=oracle.eval_count - evals0,
            diag_evals=oracle.diag_eval_count - diag0,
            wall_s=time.perf_counter() - started,
            objective=objective,
            lagrangian=lagrangian,
            primal_res=float(np.linalg.norm(residual)),
            stat_gap=gap_value,
            theta=theta_t,
            sampled=sampled,
        )
        traces.append(row)

        # theta_t scores the state at t, i.e. the "after" side of the previous pair.
        if previous_pair is not None and theta_t < best_theta:
            best_theta = theta_t
            if config.output_rule is OutputRule.ARGMIN_THETA:
                selected, selected_theta = previous_pair, theta_t
        seen += 1
        if config.output_rule is OutputRule.UNIFORM_RANDOM and pick_rng.random() * seen < 1.0:
            selected, selected_theta = pair, None

        state.x_prev = x_old
        state.t = t + 1
        previous_pair = pair

        stop = False
        if callback is not None:
            stop = bool(
                callback(
                    IterationEvent(
                        pair=pair, g_hat=g_hat, params=params, theta=theta_t, trace=row
                    )
                )
            )
        if config.eval_budget is not None and oracle.eval_count - evals0 >= config.eval_budget:
            logger.debug("Presupuesto de evaluaciones agotado en t=%d", t + 1)
            stop = True
        if stop:
            break

    assert previous_pair is not None
    if selected is None:
        selected = previous_pair
    g_sel = estimate_full_gradient(
        oracle,
        selected.x_after,
        config.smoothing.value(selected.t_after, d),
        diagnostic=True,
        workers=config.workers,
    )
    gap = stationarity_gap(problem, selected, g_sel, rho=config.rho, h=params.h)
    objective = objective_value(problem, selected.x_after, selected.y_after)
    result = SolverResult(
        x=selected.x_after,
        y=selected.y_after,
        lam=selected.lam_after,
        iteration=selected.t_after,
        output_rule=config.output_rule,
        objective=objective,
        theta=selected_theta,
        gap=gap,
        iterations_run=len(traces),
        evals=oracle.eval_count - evals0,
        diag_evals=oracle.diag_eval_count - diag0,
        wall_seconds=time.perf_counter() - started,
        params=params,
    )
    logger.info(
        "%s terminado: %d iteraciones, %d evaluaciones, objetivo=%.6g (iterado %d)",
        config.variant.value,
        result.iterations_run,
        result.evals,
        result.objective,
        result.iteration,
    )
    return result, traces


# ----------------------------------------------------------------------
# Hyperparameter prescription
# ----------------------------------------------------------------------
_ALLOWED_EXPONENTS = (0.0, 0.5, 1.0)
_SVRG_ETA_DIVISOR = 9.0
_SAGA_ETA_DIVISOR = 33.0
_SVRG_RHO_FACTOR = 6.0 * math.sqrt(71.0)
_SAGA_RHO_FACTOR = 6.0 * math.sqrt(791.0)


@dataclass(frozen=True)
class Prescription:
    variant: Variant
    exponent: float
    eta: float
    rho: float
    batch_size: int
    epoch_length: int | None
    sigma_min_G: float
    kappa_G: float
    r: float | None = None
    mu: float | None = None

    def overrides(self) -> dict[str, object]:
        """Fields ready to merge into a :class:`SolverConfig`."""

        data: dict[str, object] = {
            "eta": self.eta,
            "rho": self.rho,
            "batch_size": self.batch_size,
        }
        if self.epoch_length is not None:
            data["epoch_length"] = self.epoch_length
        return data


def auto_exponent(n: int, d: int, variant: Variant) -> float:
    """Pick ``l`` from the dimension regimes in which each rate is stated."""

    if variant is Variant.ZO_SVRG_ADMM:
        if d < n ** (1.0 / 3.0):
            return 0.0
        return 0.5 if d < n ** (2.0 / 3.0) else 1.0
    if d < n:
        return 0.0
    return 0.5 if d < n**2 else 1.0


def _parse_exponent(raw: float | str, n: int, d: int, variant: Variant) -> float:
    if isinstance(raw, str) and raw.strip().lower() == "auto":
        return auto_exponent(n, d, variant)
    try:
        value = float(raw)
    except ValueError as exc:
        raise InvalidExponent(f"l={raw!r} no es 0, 0.5, 1 ni 'auto'") from exc
    if value not in _ALLOWED_EXPONENTS:
        raise InvalidExponent(f"l={value} debe ser 0, 0.5 o 1")
    return value


def prescribe_hyperparameters(
    n: int,
    d: int,
    L: float,
    *,
    variant: Variant = Variant.ZO_SVRG_ADMM,
    alpha: float = 1.0,
    exponent: float | str = 0.0,
    kappa_G: float = 1.0,
    sigma_A_min: float = 1.0,
    sigma_A_max: float | None = None,
    iterations: int | None = None,
) -> Prescription:
    """Step size, penalty, batch and epoch length from the convergence bounds.

    ZO-SVRG-ADMM uses the SVRG constants; the other variants share the loop
    of the SAGA algorithm and take its constants (ZO-ADMM with a full batch).
    ``sigma_min(G)`` is taken at its lower bound 1 to compute ``eta``; when
    ``sigma_A_max`` is known the spectrum of the resulting ``G`` is reported.
    """

    if not (0.0 < alpha <= 1.0):
        raise InvalidAlpha(f"alpha={alpha} debe estar en (0, 1]")
    if not (L > 0 and math.isfinite(L)):
        raise InvalidL(f"L={L} debe ser positivo y finito")
    if n < 1 or d < 1:
        raise InvalidConfig("n y d deben ser positivos")
    if not sigma_A_min > 0:
        raise InvalidConfig("sigma_A_min debe ser positivo")
    variant = Variant(variant)
    lv = _parse_exponent(exponent, n, d, variant)
    dl = d**lv
    sigma_min_G = 1.0

    epoch_length: int | None
    if variant is Variant.ZO_SVRG_ADMM:
        eta = alpha * sigma_min_G / (_SVRG_ETA_DIVISOR * dl * L)
        rho = _SVRG_RHO_FACTOR * kappa_G * dl * L / (sigma_A_min * alpha)
        batch = min(n, _ceil(d ** (1.0 - lv) * n ** (2.0 / 3.0)))
        epoch_length = _ceil(n ** (1.0 / 3.0))
    else:
        eta = alpha * sigma_min_G / (_SAGA_ETA_DIVISOR * dl * L)
        rho = _SAGA_RHO_FACTOR * kappa_G * dl * L / (sigma_A_min * alpha)
        batch = min(n, _ceil(n ** (2.0 / 3.0) * d ** ((1.0 - lv) / 3.0)))
        if variant is Variant.ZO_ADMM:
            batch = n
        epoch_length = None

    r: float | None = None
    kappa = kappa_G
    if sigma_A_max is not None:
        r = CURVATURE_MARGIN * (rho * eta * sigma_A_max + 1.0)
        sigma_min_G = r - rho * eta * sigma_A_max
        kappa = (r - rho * eta * sigma_A_min) / sigma_min_G

    mu = None if iterations is None else 1.0 / (d * math.sqrt(max(iterations, 1)))
    return Prescription(
        variant=variant,
        exponent=lv,
        eta=eta,
        rho=rho,
        batch_size=max(1, batch),
        epoch_length=epoch_length,
        sigma_min_G=sigma_min_G,
        kappa_G=kappa,
        r=r,
        mu=mu,
    )
