"""Stationarity measurement, theta and per-iteration trace records."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import MismatchedStates, NonFiniteValue
from .gradients import SagaTable, SvrgSnapshot
from .problem import ConstrainedProblem

TRACE_COLUMNS: tuple[str, ...] = (
    "iter",
    "epoch",
    "evals",
    "diag_evals",
    "wall_s",
    "objective",
    "lagrangian",
    "primal_res",
    "stat_gap",
    "theta",
)


@dataclass(frozen=True)
class StatePair:
    """Two consecutive iterates ``t`` and ``t+1`` of one run.

    ``x_before_prev`` is ``x_{t-1}`` and ``prev_displacement`` the memory
    displacement measured at ``t-1`` (only SAGA needs it: the table it was
    measured against has since been refreshed).
    """

    t_before: int
    t_after: int
    x_before_prev: np.ndarray
    x_before: np.ndarray
    x_after: np.ndarray
    y_before: tuple[np.ndarray, ...]
    y_after: tuple[np.ndarray, ...]
    lam_before: np.ndarray
    lam_after: np.ndarray
    prev_displacement: float = 0.0


@dataclass(frozen=True)
class GapReport:
    total: float
    x_residual: float
    y_residuals: tuple[float, ...]
    lambda_residual: float


@dataclass(frozen=True)
class IterationTrace:
    iter: int
    epoch: int
    evals: int
    diag_evals: int
    wall_s: float
    objective: float
    lagrangian: float
    primal_res: float
    stat_gap: float | None
    theta: float
    sampled: bool = False

    def as_row(self) -> list[str]:
        gap = "" if self.stat_gap is None else repr(float(self.stat_gap))
        return [
            str(self.iter),
            str(self.epoch),
            str(self.evals),
            str(self.diag_evals),
            f"{self.wall_s:.6f}",
            repr(float(self.objective)),
            repr(float(self.lagrangian)),
            repr(float(self.primal_res)),
            gap,
            repr(float(self.theta)),
        ]


def _sq(v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    return float(v @ v)


def stationarity_gap(
    problem: ConstrainedProblem,
    pair: StatePair,
    g_full: np.ndarray,
    *,
    rho: float,
    h: Sequence[float],
) -> GapReport:
    """Squared distance of ``0`` to the Lagrangian subdifferential at ``t+1``.

    Measured through the optimality residuals of the y-sweep, the
    x-step and the dual step; *g_full* must be a full zeroth-order gradient
    at ``pair.x_after``.
    """

    if pair.t_after != pair.t_before + 1:
        raise MismatchedStates(
            f"los estados {pair.t_before} y {pair.t_after} no son consecutivos"
        )
    blocks = problem.blocks
    if len(pair.y_before) != len(blocks) or len(pair.y_after) != len(blocks):
        raise MismatchedStates("el número de bloques y no coincide con el problema")

    x_res = _sq(problem.A.T @ pair.lam_after - np.asarray(g_full, dtype=float))

    dx_image = problem.A @ (pair.x_after - pair.x_before)
    dy = [ya - yb for ya, yb in zip(pair.y_after, pair.y_before, strict=True)]
    dy_images = [block.B @ step for block, step in zip(blocks, dy, strict=True)]
    tail = np.zeros(problem.p)
    y_res: list[float] = [0.0] * len(blocks)
    for j in range(len(blocks) - 1, -1, -1):
        B = blocks[j].B
        h_step = h[j] * dy[j] - rho * (B.T @ dy_images[j])
        y_res[j] = _sq(rho * (B.T @ dx_image) + rho * (B.T @ tail) - h_step)
        tail = tail + dy_images[j]

    lam_res = _sq(problem.constraint_residual(pair.x_after, pair.y_after))
    total = x_res + sum(y_res) + lam_res
    return GapReport(
        total=total,
        x_residual=x_res,
        y_residuals=tuple(y_res),
        lambda_residual=lam_res,
    )


def theta(
    pair: StatePair,
    memory: SvrgSnapshot | SagaTable | None,
    *,
    batch_size: int,
) -> float:
    """Single-sample displacement aggregate used to pick the reported iterate.

    ``||x_{t+1}-x_t||^2 + ||x_t-x_{t-1}||^2 + (d/b)(D_t + D_{t-1})
    + sum_j ||y_j^t - y_j^{t+1}||^2`` where ``D`` is the distance to the
    SVRG snapshot or the mean squared distance to the SAGA reference points
    (zero without variance-reduction memory).
    """

    value = _sq(pair.x_after - pair.x_before) + _sq(pair.x_before - pair.x_before_prev)
    d = pair.x_before.size
    if isinstance(memory, SvrgSnapshot):
        now = memory.sq_distance(pair.x_before)
        prev = memory.sq_distance(pair.x_before_prev)
        value += d / batch_size * (now + prev)
    elif isinstance(memory, SagaTable):
        now = memory.mean_sq_distance(pair.x_before)
        value += d / batch_size * (now + pair.prev_displacement)
    for yb, ya in zip(pair.y_before, pair.y_after, strict=True):
        value += _sq(yb - ya)
    return value


def objective_value(
    problem: ConstrainedProblem,
    x: np.ndarray,
    y: Sequence[np.ndarray],
    *,
    diagnostic: bool = True,
) -> float:
    """``f(x) + sum_j psi_j(y_j)``; costs ``n`` evaluations."""

    value = problem.objective.mean_value(x, diagnostic=diagnostic) + problem.penalty_value(y)
    if not math.isfinite(value):
        raise NonFiniteValue(f"objetivo no finito: {value!r}")
    return value


def lagrangian_value(
    problem: ConstrainedProblem,
    x: np.ndarray,
    y: Sequence[np.ndarray],
    lam: np.ndarray,
    rho: float,
    *,
    f_value: float | None = None,
) -> float:
    """Augmented Lagrangian ``L_rho``; pass *f_value* to reuse an already measured ``f(x)``."""

    if f_value is None:
        f_value = problem.objective.mean_value(x, diagnostic=True)
    residual = problem.constraint_residual(x, y)
    return (
        f_value
        + problem.penalty_value(y)
        - float(lam @ residual)
        + 0.5 * rho * _sq(residual)
    )
