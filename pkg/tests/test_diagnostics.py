from __future__ import annotations

import numpy as np
import pytest

from zoadmm.benchmarks.problems import build_lasso_problem
from zoadmm.core.admm import (
    SolverConfig,
    SolverState,
    resolve_config,
    update_dual,
    update_x,
    update_y_block,
)
from zoadmm.core.diagnostics import (
    TRACE_COLUMNS,
    IterationTrace,
    StatePair,
    lagrangian_value,
    objective_value,
    stationarity_gap,
    theta,
)
from zoadmm.core.errors import MismatchedStates
from zoadmm.core.gradients import SvrgSnapshot
from zoadmm.core.oracle import FunctionOracle


def _problem(tau: float = 0.1):
    oracle = FunctionOracle([lambda x: 0.5 * float(x @ x), lambda x: float(x.sum())], dim=3)
    return build_lasso_problem(oracle, tau)


def _pair(x0, x1, y0, y1, lam0, lam1, *, t=4, x_prev=None) -> StatePair:
    return StatePair(
        t_before=t,
        t_after=t + 1,
        x_before_prev=x0 if x_prev is None else x_prev,
        x_before=x0,
        x_after=x1,
        y_before=(y0,),
        y_after=(y1,),
        lam_before=lam0,
        lam_after=lam1,
    )


def test_gap_vanishes_at_a_fixed_point() -> None:
    problem = _problem()
    x = np.array([1.0, -2.0, 0.5])
    g = np.array([0.3, 0.1, -0.2])
    # A = I, so A^T lam = g means lam = g; y = x keeps the constraint satisfied.
    pair = _pair(x, x, x.copy(), x.copy(), g, g)
    report = stationarity_gap(problem, pair, g, rho=1.0, h=(2.0,))
    assert report.total == pytest.approx(0.0, abs=1e-24)

    shifted = _pair(x, x, x.copy(), x.copy(), g, g + np.array([0.0, 0.2, 0.0]))
    report = stationarity_gap(problem, shifted, g, rho=1.0, h=(2.0,))
    assert report.x_residual == pytest.approx(0.04)
    assert report.lambda_residual == 0.0


def test_gap_components_add_up() -> None:
    problem = _problem()
    rng = np.random.default_rng(0)
    pair = _pair(*(rng.normal(size=3) for _ in range(6)))
    report = stationarity_gap(problem, pair, rng.normal(size=3), rho=0.7, h=(1.5,))
    expected = report.x_residual + sum(report.y_residuals) + report.lambda_residual
    assert report.total == pytest.approx(expected)
    residual = pair.x_after - pair.y_after[0]
    assert report.lambda_residual == pytest.approx(float(residual @ residual))



def _subgradient_distance_sq(y: np.ndarray, target: np.ndarray, tau: float) -> float:
    """min over xi in tau * d||y||_1 of ||xi - target||^2, by grid search on flat coordinates."""

    grid = np.linspace(-tau, tau, 4001)
    total = 0.0
    for yi, ti in zip(y, target, strict=True):
        if yi != 0.0:
            total += (tau * np.sign(yi) - ti) ** 2
        else:
            total += float(np.min((grid - ti) ** 2))
    return total


def test_gap_matches_brute_force_subdifferential_distance() -> None:
    tau = 0.05
    oracle = FunctionOracle([lambda x: 0.5 * float(x @ x), lambda x: float(x[0] - x[1])], dim=2)
    problem = build_lasso_problem(oracle, tau)
    params = resolve_config(problem, SolverConfig(eta=0.5, rho=1.0, batch_size=1))
    rng = np.random.default_rng(8)
    dense = 0
    for _ in range(40):
        state = SolverState(
            x=rng.normal(size=2),
            y=[rng.normal(size=2) * rng.integers(0, 2, size=2)],
            lam=rng.normal(size=2),
            x_prev=np.zeros(2),
        )
        x0, y0, lam0 = state.x.copy(), state.y[0].copy(), state.lam.copy()
        state.y[0] = update_y_block(problem, state, 0, params)
        g = rng.normal(size=2)
        state.x = update_x(problem, state, g, params)
        state.lam = update_dual(problem, state, params)
        pair = _pair(x0, state.x, y0, state.y[0], lam0, state.lam)
        report = stationarity_gap(problem, pair, g, rho=params.rho, h=params.h)

        # A = I and B = -I: the x and y parts read g - lam and xi + lam
        brute = float((g - state.lam) @ (g - state.lam))
        brute += _subgradient_distance_sq(state.y[0], -state.lam, tau)
        residual = problem.constraint_residual(state.x, state.y)
        brute += float(residual @ residual)
        assert brute <= report.total + 1e-6
        if np.all(state.y[0] != 0.0):
            dense += 1
            assert report.total == pytest.approx(brute, abs=1e-6)
    assert dense > 0

def test_gap_rejects_non_consecutive_states() -> None:
    problem = _problem()
    z = np.zeros(3)
    pair = StatePair(2, 4, z, z, z, (z,), (z,), z, z)
    with pytest.raises(MismatchedStates):
        stationarity_gap(problem, pair, z, rho=1.0, h=(2.0,))


def test_theta_without_memory() -> None:
    x_prev, x0, x1 = np.zeros(2), np.array([1.0, 0.0]), np.array([1.0, 2.0])
    y0, y1 = np.array([0.0]), np.array([3.0])
    pair = _pair(x0, x1, y0, y1, np.zeros(2), np.zeros(2), x_prev=x_prev)
    assert theta(pair, None, batch_size=4) == pytest.approx(4.0 + 1.0 + 9.0)


def test_theta_with_svrg_snapshot() -> None:
    x_prev, x0, x1 = np.zeros(2), np.array([1.0, 0.0]), np.array([1.0, 0.0])
    snapshot = SvrgSnapshot(x_tilde=np.array([0.0, 1.0]), g_tilde=np.zeros(2), mu=1e-3)
    pair = _pair(x0, x1, np.zeros(1), np.zeros(1), np.zeros(2), np.zeros(2), x_prev=x_prev)
    # ||x0 - x_prev||^2 = 1, D_t = 2, D_{t-1} = 1, d/b = 2/4.
    assert theta(pair, snapshot, batch_size=4) == pytest.approx(1.0 + 0.5 * 3.0)


def test_objective_and_lagrangian() -> None:
    problem = _problem(tau=0.5)
    x = np.array([1.0, 1.0, 0.0])
    y = [np.array([0.0, 1.0, 0.0])]
    lam = np.array([1.0, 0.0, 2.0])
    f = (0.5 * 2.0 + 2.0) / 2.0
    assert objective_value(problem, x, y) == pytest.approx(f + 0.5)
    residual = x - y[0]
    expected = f + 0.5 - float(lam @ residual) + 0.5 * 2.0 * float(residual @ residual)
    assert lagrangian_value(problem, x, y, lam, 2.0) == pytest.approx(expected)
    assert lagrangian_value(problem, x, y, lam, 2.0, f_value=f) == pytest.approx(expected)


def test_trace_row_format() -> None:
    row = IterationTrace(3, 1, 120, 40, 0.5, 1.25, 1.5, 0.0, None, 0.25)
    assert len(row.as_row()) == len(TRACE_COLUMNS)
    assert row.as_row()[8] == ""
    assert row.as_row()[4] == "0.500000"
