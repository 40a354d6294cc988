"""Desk-scale comparison of the stochastic variants on a fused-lasso model."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

from ..core.admm import OutputRule, SolverConfig, SolverResult, Variant, run
from ..core.diagnostics import IterationTrace
from ..core.problem import ConstrainedProblem, SmoothingKind, SmoothingSchedule
from .datasets import synth_dataset
from .graphs import build_graph
from .losses import correntropy_oracle
from .problems import DEFAULT_TAU, build_fused_lasso_problem

logger = logging.getLogger(__name__)

STOCHASTIC_VARIANTS: tuple[Variant, ...] = (
    Variant.ZO_SGD_ADMM,
    Variant.ZO_SVRG_ADMM,
    Variant.ZO_SAGA_ADMM,
)


@dataclass(frozen=True)
class BenchSettings:
    n: int = 2000
    d: int = 50
    sparsity: float = 0.2
    noise: float = 0.1
    correlation: float = 0.5
    graph_threshold: float = 0.3
    sigma: float = 1.0
    tau1: float = DEFAULT_TAU
    tau2: float = DEFAULT_TAU
    batch_size: int = 20
    # n / batch_size: one epoch sees every component once in expectation
    epoch_length: int = 100
    # plain SGD keeps the small step; SVRG and SAGA run with vr_eta
    eta: float = 0.01
    vr_eta: float = 0.03
    rho: float = 1.0
    # Oracle evaluations per run, as multiples of one full gradient (2dn).
    budget_passes: float = 40.0


@dataclass(frozen=True)
class ComparisonRow:
    seed: int
    variant: Variant
    objective: float
    gap_to_best: float
    evals: int
    iterations: int
    result: SolverResult
    traces: tuple[IterationTrace, ...]


def build_bench_problem(settings: BenchSettings, seed: int) -> ConstrainedProblem:
    dataset, _ = synth_dataset(
        settings.n,
        settings.d,
        sparsity=settings.sparsity,
        noise=settings.noise,
        seed=seed,
        correlation=settings.correlation,
    )
    graph = build_graph(dataset, settings.graph_threshold)
    oracle = correntropy_oracle(dataset, settings.sigma)
    return build_fused_lasso_problem(oracle, graph, settings.tau1, settings.tau2)


def budget_for(settings: BenchSettings) -> int:
    return int(settings.budget_passes * 2 * settings.d * settings.n)


def bench_config(settings: BenchSettings, variant: Variant, seed: int, budget: int) -> SolverConfig:
    """Equal-budget settings for one variant; SVRG and SAGA get the larger ``vr_eta``."""

    per_iteration = 2 * settings.d * settings.batch_size
    iterations = budget // per_iteration + 1
    return SolverConfig(
        variant=variant,
        eta=settings.eta if variant is Variant.ZO_SGD_ADMM else settings.vr_eta,
        rho=settings.rho,
        batch_size=settings.batch_size,
        epoch_length=settings.epoch_length,
        iterations=iterations,
        smoothing=SmoothingSchedule(kind=SmoothingKind.DECAYING),
        seed=seed,
        output_rule=OutputRule.LAST,
        trace_stride=iterations,
        eval_budget=budget,
    )


def compare_variants(
    seeds: Sequence[int],
    settings: BenchSettings | None = None,
    *,
    variants: Sequence[Variant] = STOCHASTIC_VARIANTS,
    budget: int | None = None,
) -> list[ComparisonRow]:
    """Run every variant on the same problem per seed with an equal evaluation budget.

    ``gap_to_best`` is the final objective minus the best final objective
    observed for that seed.
    """

    settings = settings or BenchSettings()
    budget = budget or budget_for(settings)
    rows: list[ComparisonRow] = []
    for seed in seeds:
        problem = build_bench_problem(settings, seed)
        per_seed: list[tuple[Variant, SolverResult, list[IterationTrace]]] = []
        for variant in variants:
            problem.objective.reset_counters()
            result, traces = run(problem, bench_config(settings, variant, seed, budget))
            per_seed.append((variant, result, traces))
        best = min(result.objective for _, result, _ in per_seed)
        for variant, result, traces in per_seed:
            rows.append(
                ComparisonRow(
                    seed=seed,
                    variant=variant,
                    objective=result.objective,
                    gap_to_best=result.objective - best,
                    evals=result.evals,
                    iterations=result.iterations_run,
                    result=result,
                    traces=tuple(traces),
                )
            )
        logger.info(
            "Semilla %d: %s",
            seed,
            ", ".join(f"{v.value}={r.objective:.6g}" for v, r, _ in per_seed),
        )
    return rows


def wins_over(rows: Sequence[ComparisonRow], winner: Variant, loser: Variant) -> int:
    """Number of seeds where *winner* ends with a strictly lower objective than *loser*."""

    by_seed: dict[int, dict[Variant, float]] = {}
    for row in rows:
        by_seed.setdefault(row.seed, {})[row.variant] = row.objective
    return sum(
        1
        for values in by_seed.values()
        if winner in values and loser in values and values[winner] < values[loser]
    )
