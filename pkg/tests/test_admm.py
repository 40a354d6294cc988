from __future__ import annotations

import math

import numpy as np
import pytest

from zoadmm.benchmarks.datasets import synth_dataset
from zoadmm.benchmarks.losses import QuadraticOracle
from zoadmm.benchmarks.problems import build_lasso_problem
from zoadmm.core.admm import (
    OutputRule,
    SolverConfig,
    SolverState,
    Variant,
    auto_exponent,
    prescribe_hyperparameters,
    resolve_config,
    run,
    update_dual,
    update_x,
    update_y_block,
)
from zoadmm.core.diagnostics import lagrangian_value
from zoadmm.core.errors import (
    Diverged,
    InvalidAlpha,
    InvalidConfig,
    InvalidExponent,
    InvalidL,
)
from zoadmm.core.oracle import FunctionOracle
from zoadmm.core.penalties import L1Penalty, PenaltyBlock
from zoadmm.core.problem import ConstrainedProblem, SmoothingSchedule


def _lasso(n: int = 30, d: int = 5, seed: int = 0, tau: float = 0.01) -> ConstrainedProblem:
    dataset, _ = synth_dataset(n, d, seed=seed)
    return build_lasso_problem(QuadraticOracle(dataset.features, dataset.labels), tau)


def _random_two_block(rng: np.random.Generator) -> ConstrainedProblem:
    d = int(rng.integers(1, 4))
    p = int(rng.integers(d, 6))
    q1, q2 = (int(v) for v in rng.integers(1, 6, size=2))
    A = rng.normal(size=(p, d)) + np.eye(p, d) * 2.0
    oracle = FunctionOracle([lambda x: 0.5 * float(x @ x)] * 20, dim=d)
    blocks = [
        PenaltyBlock(rng.normal(size=(p, q1)), L1Penalty(0.05)),
        PenaltyBlock(rng.normal(size=(p, q2)), L1Penalty(0.05)),
    ]
    return ConstrainedProblem(objective=oracle, blocks=blocks, A=A, c=rng.normal(size=p))


def _random_state(problem: ConstrainedProblem, rng: np.random.Generator) -> SolverState:
    return SolverState(
        x=rng.normal(size=problem.d),
        y=[rng.normal(size=block.q) for block in problem.blocks],
        lam=rng.normal(size=problem.p),
        x_prev=np.zeros(problem.d),
    )


# ----------------------------------------------------------------------
# Subproblems
# ----------------------------------------------------------------------
def test_y_update_satisfies_block_optimality() -> None:
    rng = np.random.default_rng(0)
    for _ in range(50):
        problem = _random_two_block(rng)
        config = SolverConfig(eta=float(rng.uniform(0.05, 1.0)), rho=float(rng.uniform(0.2, 3.0)))
        params = resolve_config(problem, config)
        state = _random_state(problem, rng)
        old = [v.copy() for v in state.y]
        for j, block in enumerate(problem.blocks):
            y_new = update_y_block(problem, state, j, params)
            state.y[j] = y_new
            B = block.B.toarray()
            residual = problem.constraint_residual(state.x, state.y)
            H = params.h[j] * np.eye(block.q) - params.rho * B.T @ B
            grad = -B.T @ state.lam + params.rho * B.T @ residual + H @ (y_new - old[j])
            tau = block.penalty.weight
            active = np.abs(y_new) > 1e-12
            assert np.all(np.abs(grad[active] + tau * np.sign(y_new[active])) <= 1e-6)
            assert np.all(np.abs(grad[~active]) <= tau + 1e-6)


def test_x_update_matches_direct_linear_solve() -> None:
    rng = np.random.default_rng(1)
    for _ in range(50):
        problem = _random_two_block(rng)
        config = SolverConfig(eta=float(rng.uniform(0.05, 1.0)), rho=float(rng.uniform(0.2, 3.0)))
        params = resolve_config(problem, config)
        state = _random_state(problem, rng)
        g_hat = rng.normal(size=problem.d)
        x_new = update_x(problem, state, g_hat, params)

        A = problem.A.toarray()
        eta, rho = params.eta, params.rho
        G_over_eta = (params.r / eta) * np.eye(problem.d) - rho * A.T @ A
        by = sum(block.B @ y for block, y in zip(problem.blocks, state.y, strict=True))
        rhs = G_over_eta @ state.x - g_hat + A.T @ state.lam - rho * A.T @ (by - problem.c)
        x_direct = np.linalg.solve(rho * A.T @ A + G_over_eta, rhs)
        assert np.max(np.abs(x_new - x_direct)) <= 1e-10 * (1.0 + np.max(np.abs(x_direct)))



def _scalar_problem() -> ConstrainedProblem:
    oracle = FunctionOracle([lambda x: 0.5 * float(x @ x)], dim=1)
    block = PenaltyBlock(-np.eye(1), L1Penalty(1.0))
    return ConstrainedProblem(objective=oracle, blocks=[block], A=np.eye(1), c=np.zeros(1))


def test_y_update_soft_thresholds_shifted_point() -> None:
    problem = _scalar_problem()
    config = SolverConfig(rho=1.0, h=(2.0,), batch_size=1)
    state = SolverState(x=np.array([3.0]), y=[np.zeros(1)], lam=np.zeros(1), x_prev=np.zeros(1))
    # B^T(rho v - lam) = -3, so the prox point is 1.5 and the threshold 0.5
    assert update_y_block(problem, state, 0, config) == pytest.approx([1.0])


def test_x_update_hand_computed_step() -> None:
    problem = _scalar_problem()
    config = SolverConfig(eta=0.5, rho=1.0, r=2.0, batch_size=1)
    state = SolverState(x=np.array([1.0]), y=[np.zeros(1)], lam=np.zeros(1), x_prev=np.zeros(1))
    assert update_x(problem, state, np.zeros(1), config) == pytest.approx([0.75])


def test_y_sweep_decreases_augmented_lagrangian() -> None:
    rng = np.random.default_rng(5)
    for _ in range(50):
        problem = _random_two_block(rng)
        params = resolve_config(problem, SolverConfig(rho=float(rng.uniform(0.2, 3.0))))
        state = _random_state(problem, rng)
        before = lagrangian_value(problem, state.x, state.y, state.lam, params.rho, f_value=0.0)
        proximal = 0.0
        for j, block in enumerate(problem.blocks):
            y_new = update_y_block(problem, state, j, params)
            B = block.B.toarray()
            H = params.h[j] * np.eye(block.q) - params.rho * B.T @ B
            dy = y_new - state.y[j]
            proximal += 0.5 * float(dy @ H @ dy)
            state.y[j] = y_new
        after = lagrangian_value(problem, state.x, state.y, state.lam, params.rho, f_value=0.0)
        assert after <= before - proximal + 1e-10 * (1.0 + abs(before))

def test_dual_update_is_ascent_on_residual() -> None:
    rng = np.random.default_rng(2)
    problem = _random_two_block(rng)
    state = _random_state(problem, rng)
    config = SolverConfig(rho=2.0)
    expected = state.lam - 2.0 * problem.constraint_residual(state.x, state.y)
    assert np.allclose(update_dual(problem, state, config), expected)


def test_resolve_config_defaults_and_errors() -> None:
    problem = _lasso()
    params = resolve_config(problem, SolverConfig(eta=0.5, rho=2.0))
    assert params.r == pytest.approx(1.01 * (2.0 * 0.5 * 1.0 + 1.0))
    assert params.h[0] == pytest.approx(1.01 * 2.0 + 1e-8)
    assert params.epoch_length == math.ceil(30 ** (1 / 3))
    assert params.sigma_min_G == pytest.approx(params.r - 1.0)
    with pytest.raises(InvalidConfig):
        resolve_config(problem, SolverConfig(eta=0.5, rho=2.0, r=1.5))
    with pytest.raises(InvalidConfig):
        resolve_config(problem, SolverConfig(h=(1.0, 1.0)))
    with pytest.raises(InvalidConfig):
        resolve_config(problem, SolverConfig(rho=1.0, h=(0.5,)))
    with pytest.raises(InvalidConfig):
        resolve_config(problem, SolverConfig(batch_size=31))


# ----------------------------------------------------------------------
# Driver
# ----------------------------------------------------------------------
def test_linearization_identity_holds_every_iteration() -> None:
    problem = _lasso()
    config = SolverConfig(
        variant=Variant.ZO_SVRG_ADMM, eta=0.2, rho=1.0, batch_size=5, iterations=500
    )
    worst = {"value": 0.0}

    def check(event):
        pair = event.pair
        dx = pair.x_after - pair.x_before
        lhs = problem.A.T @ pair.lam_after
        rhs = event.g_hat + event.params.G_times(problem, dx) / event.params.eta
        ratio = np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(event.g_hat))
        worst["value"] = max(worst["value"], float(ratio))

    _, traces = run(problem, config, callback=check)
    assert len(traces) == 500
    assert worst["value"] <= 1e-8


def test_zero_iterations_returns_initial_point() -> None:
    problem = _lasso()
    x0 = np.full(problem.d, 0.3)
    result, traces = run(problem, SolverConfig(iterations=0), x0=x0)
    assert traces == []
    assert np.array_equal(result.x, x0)
    assert result.iteration == 0


def test_trace_rows_and_sampling() -> None:
    problem = _lasso()
    config = SolverConfig(variant=Variant.ZO_SGD_ADMM, iterations=10, trace_stride=3, batch_size=4)
    _, traces = run(problem, config)
    assert [row.iter for row in traces] == list(range(1, 11))
    sampled = [row.iter for row in traces if row.stat_gap is not None]
    assert sampled == [3, 6, 9, 10]


@pytest.mark.parametrize(
    ("variant", "expected"),
    [
        (Variant.ZO_ADMM, 6 * 2 * 5 * 30),
        (Variant.ZO_SGD_ADMM, 6 * 2 * 5 * 2),
        (Variant.ZO_SVRG_ADMM, 2 * (2 * 5 * 30) + 6 * 4 * 5 * 2),
        (Variant.ZO_SAGA_ADMM, 2 * 5 * 30 + 6 * 2 * 5 * 2),
    ],
)
def test_evaluation_cost_per_variant(variant, expected) -> None:
    problem = _lasso()
    config = SolverConfig(variant=variant, iterations=6, batch_size=2, epoch_length=3)
    result, traces = run(problem, config)
    assert result.evals == expected
    assert traces[-1].evals == expected
    assert result.diag_evals > 0


def test_same_seed_gives_identical_traces() -> None:
    problem = _lasso()
    config = SolverConfig(variant=Variant.ZO_SAGA_ADMM, iterations=40, batch_size=3, seed=7)
    _, first = run(problem, config)
    _, second = run(problem, config)
    _, threaded = run(problem, config.model_copy(update={"workers": 3}))
    strip = [row.as_row()[:4] + row.as_row()[5:] for row in first]
    assert strip == [row.as_row()[:4] + row.as_row()[5:] for row in second]
    assert strip == [row.as_row()[:4] + row.as_row()[5:] for row in threaded]


def test_eval_budget_stops_run() -> None:
    problem = _lasso()
    config = SolverConfig(
        variant=Variant.ZO_SGD_ADMM, iterations=100, batch_size=2, eval_budget=5 * 2 * 5 * 2
    )
    result, traces = run(problem, config)
    assert len(traces) == 5
    assert result.iterations_run == 5


def test_callback_can_stop_run() -> None:
    problem = _lasso()
    result, traces = run(problem, SolverConfig(iterations=50), callback=lambda event: True)
    assert len(traces) == 1
    assert result.iteration == 1


def test_output_rules() -> None:
    problem = _lasso()
    base = SolverConfig(variant=Variant.ZO_SVRG_ADMM, iterations=30, batch_size=5, seed=3)
    last, traces = run(problem, base.model_copy(update={"output_rule": OutputRule.LAST}))
    assert last.iteration == 30
    assert last.objective == pytest.approx(traces[-1].objective)
    best, _ = run(problem, base)
    assert 1 <= best.iteration <= 30
    assert best.theta is not None
    picked, _ = run(problem, base.model_copy(update={"output_rule": OutputRule.UNIFORM_RANDOM}))
    again, _ = run(problem, base.model_copy(update={"output_rule": OutputRule.UNIFORM_RANDOM}))
    assert picked.iteration == again.iteration
    assert best.gap is not None and best.gap.total >= 0.0


def test_divergence_is_reported() -> None:
    oracle = FunctionOracle([lambda x: -5e3 * float(x @ x)] * 4, dim=2)
    problem = build_lasso_problem(oracle, 0.0, lipschitz_L=1e4)
    config = SolverConfig(
        variant=Variant.ZO_ADMM,
        eta=1.0,
        rho=1.0,
        batch_size=4,
        iterations=50,
        smoothing=SmoothingSchedule(mu0=1e-3),
        divergence_threshold=1e6,
    )
    with pytest.raises(Diverged) as info:
        run(problem, config, x0=np.ones(2))
    assert info.value.iteration <= 50


# ----------------------------------------------------------------------
# Prescription
# ----------------------------------------------------------------------
def test_prescription_svrg_batch_and_epoch() -> None:
    p = prescribe_hyperparameters(1000, 200, 1.0, variant=Variant.ZO_SVRG_ADMM, exponent=1)
    assert p.epoch_length == 10
    assert p.batch_size == 100
    assert p.eta == pytest.approx(1.0 / (9 * 200))
    assert p.rho == pytest.approx(6 * math.sqrt(71) * 200)


def test_prescription_saga_step() -> None:
    p = prescribe_hyperparameters(1000, 1, 1.0, variant=Variant.ZO_SAGA_ADMM, exponent=0)
    assert p.eta == pytest.approx(1.0 / 33.0)
    assert p.rho == pytest.approx(6 * math.sqrt(791))
    assert p.batch_size == 100
    assert p.epoch_length is None


def test_prescription_full_batch_and_mu() -> None:
    p = prescribe_hyperparameters(50, 4, 2.0, variant=Variant.ZO_ADMM, iterations=100)
    assert p.batch_size == 50
    assert p.mu == pytest.approx(1.0 / (4 * 10))


def test_prescription_reports_g_spectrum() -> None:
    p = prescribe_hyperparameters(100, 5, 1.0, sigma_A_min=1.0, sigma_A_max=3.0)
    assert p.r is not None
    assert p.sigma_min_G >= 1.0
    assert p.kappa_G >= 1.0


def test_prescription_errors() -> None:
    with pytest.raises(InvalidAlpha):
        prescribe_hyperparameters(10, 2, 1.0, alpha=0.0)
    with pytest.raises(InvalidAlpha):
        prescribe_hyperparameters(10, 2, 1.0, alpha=1.5)
    with pytest.raises(InvalidL):
        prescribe_hyperparameters(10, 2, 0.0)
    with pytest.raises(InvalidExponent):
        prescribe_hyperparameters(10, 2, 1.0, exponent=0.7)
    with pytest.raises(InvalidExponent):
        prescribe_hyperparameters(10, 2, 1.0, exponent="uno")


def test_auto_exponent_regimes() -> None:
    assert auto_exponent(1000, 5, Variant.ZO_SVRG_ADMM) == 0.0
    assert auto_exponent(1000, 50, Variant.ZO_SVRG_ADMM) == 0.5
    assert auto_exponent(1000, 500, Variant.ZO_SVRG_ADMM) == 1.0
    assert auto_exponent(100, 50, Variant.ZO_SAGA_ADMM) == 0.0
    assert auto_exponent(100, 5000, Variant.ZO_SAGA_ADMM) == 0.5
    assert auto_exponent(100, 50000, Variant.ZO_SAGA_ADMM) == 1.0
    p = prescribe_hyperparameters(1000, 500, 1.0, exponent="auto")
    assert p.exponent == 1.0
