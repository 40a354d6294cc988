"""Long trend checks; run with ``pytest -m slow``."""

from __future__ import annotations

import numpy as np
import pytest

from zoadmm.benchmarks.datasets import synth_dataset
from zoadmm.benchmarks.losses import QuadraticOracle
from zoadmm.benchmarks.problems import build_lasso_problem
from zoadmm.benchmarks.reference import lasso_objective, reference_lasso_solution
from zoadmm.benchmarks.suite import BenchSettings, compare_variants, wins_over
from zoadmm.core.admm import OutputRule, SolverConfig, Variant, run
from zoadmm.core.problem import ConstrainedProblem

pytestmark = pytest.mark.slow

TAU = 0.01


def _surrogate(seed: int) -> tuple[QuadraticOracle, ConstrainedProblem]:
    dataset, _ = synth_dataset(200, 20, seed=seed)
    oracle = QuadraticOracle(dataset.features, dataset.labels)
    return oracle, build_lasso_problem(oracle, TAU)


def test_full_batch_reaches_reference_objective() -> None:
    oracle, problem = _surrogate(0)
    reference = reference_lasso_solution(oracle, TAU)
    assert reference.converged
    config = SolverConfig(
        variant=Variant.ZO_ADMM,
        eta=0.1,
        rho=1.0,
        batch_size=oracle.n,
        iterations=2000,
        output_rule=OutputRule.LAST,
        trace_stride=500,
    )
    result, _ = run(problem, config)
    achieved = lasso_objective(oracle, result.x, TAU)
    assert abs(achieved - reference.objective) / abs(reference.objective) <= 1e-3


def test_stationarity_gap_decays_at_least_like_one_over_t() -> None:
    horizons = [250, 500, 1000, 2000]
    mean_gaps = []
    for T in horizons:
        gaps = []
        for seed in range(5):
            oracle, problem = _surrogate(seed)
            config = SolverConfig(
                variant=Variant.ZO_ADMM,
                eta=0.005,
                rho=1.0,
                batch_size=oracle.n,
                iterations=T,
                seed=seed,
                trace_stride=T,
            )
            result, _ = run(problem, config)
            assert result.gap is not None
            gaps.append(result.gap.total)
        mean_gaps.append(float(np.mean(gaps)))
    slope, _ = np.polyfit(np.log(horizons), np.log(mean_gaps), 1)
    assert slope <= -0.8


def test_variance_reduction_beats_plain_sgd_at_equal_budget() -> None:
    rows = compare_variants(range(10), BenchSettings())
    assert wins_over(rows, Variant.ZO_SVRG_ADMM, Variant.ZO_SGD_ADMM) >= 8
    assert wins_over(rows, Variant.ZO_SAGA_ADMM, Variant.ZO_SGD_ADMM) >= 8
