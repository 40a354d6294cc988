from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import typer
from dotenv import load_dotenv
from rich.logging import RichHandler
from rich.table import Table
from tqdm import tqdm

from ..benchmarks.datasets import synth_dataset
from ..benchmarks.losses import LinearModelOracle, make_oracle
from ..benchmarks.suite import BenchSettings, budget_for, compare_variants
from ..core.admm import SolverResult, Variant, prescribe_hyperparameters, run
from ..core.errors import (
    ConfigError,
    DataError,
    Diverged,
    InvalidConfig,
    PrescriptionError,
    ProblemError,
)
from ..core.gradients import estimate_component_gradient
from ..core.traces import append_summary, summary_row, trace_path, write_trace
from .config import (
    RunConfig,
    build_problem,
    load_config,
    load_dataset,
    parse_seeds,
    solver_config_for,
)

app = typer.Typer(help="ZO-ADMM: ADMM estocástico de orden cero")
load_dotenv()
logging.basicConfig(level=logging.INFO, format="%(message)s", handlers=[RichHandler()])
logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4
EXIT_BOUND = 5


def _fail(message: str, code: int) -> typer.Exit:
    typer.secho(message, fg=typer.colors.RED, err=True)
    return typer.Exit(code=code)


# ----------------------------------------------------------------------
# run
# ----------------------------------------------------------------------
def _run_seed(
    config: RunConfig, seed: int, out_dir: Path
) -> tuple[int, SolverResult, list[str]]:
    problem = build_problem(config.problem, seed)
    solver = solver_config_for(config, problem, seed)
    result, traces = run(problem, solver)
    write_trace(traces, trace_path(out_dir, seed))
    return seed, result, summary_row(seed, solver.variant, result)


@app.command("run")
def run_cmd(
    config_path: Path = typer.Option(..., "--config", help="Archivo YAML de configuración"),
    out: Path | None = typer.Option(None, "--out", help="Carpeta de salida (prioriza output_dir)"),
    seeds: str | None = typer.Option(None, "--seeds", help="Semillas separadas por comas"),
    variant: Variant | None = typer.Option(None, "--variant", help="Variante del solver"),
    jobs: int = typer.Option(1, "--jobs", min=1, help="Semillas ejecutadas en paralelo"),
) -> None:
    """Ejecuta el solver para cada semilla y escribe trazas CSV y summary.csv."""

    try:
        config = load_config(config_path)
        if seeds is not None:
            config = config.model_copy(update={"seeds": parse_seeds(seeds)})
        if variant is not None:
            solver = config.solver.model_copy(update={"variant": variant})
            config = config.model_copy(update={"solver": solver})
    except ConfigError as exc:
        raise _fail(f"Error de configuración: {exc}", EXIT_CONFIG) from exc

    out_dir = out or config.output_dir
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "summary.csv").unlink(missing_ok=True)
    except OSError as exc:
        raise _fail(f"No se pudo crear {out_dir}: {exc}", EXIT_IO) from exc

    results: list[tuple[int, SolverResult, list[str]]] = []
    try:
        if jobs > 1 and len(config.seeds) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_seed, config, s, out_dir) for s in config.seeds]
                results = [f.result() for f in tqdm(futures, desc="Semillas", unit="seed")]
        else:
            for s in tqdm(config.seeds, desc="Semillas", unit="seed"):
                results.append(_run_seed(config, s, out_dir))
        # summary rows follow seed order whatever order the workers finish in
        results.sort(key=lambda item: item[0])
        for _, _, row in results:
            append_summary(row, out_dir / "summary.csv")
    except Diverged as exc:
        raise _fail(f"El solver divergió: {exc}", EXIT_DIVERGED) from exc
    except (ConfigError, InvalidConfig, PrescriptionError, ProblemError) as exc:
        raise _fail(f"Error de configuración: {exc}", EXIT_CONFIG) from exc
    except DataError as exc:
        raise _fail(f"Error en los datos: {exc}", EXIT_CONFIG) from exc
    except OSError as exc:
        raise _fail(f"Error de E/S: {exc}", EXIT_IO) from exc

    table = Table(title=f"Resumen ({config.solver.variant.value})")
    table.add_column("Semilla")
    table.add_column("Iter.")
    table.add_column("Evaluaciones")
    table.add_column("Objetivo")
    table.add_column("Gap")
    for seed, result, _ in results:
        gap = "" if result.gap is None else f"{result.gap.total:.3e}"
        table.add_row(
            str(seed),
            str(result.iteration),
            str(result.evals),
            f"{result.objective:.6g}",
            gap,
        )
    logger.info(table)
    logger.info("Trazas en %s", out_dir)


# ----------------------------------------------------------------------
# prescribe
# ----------------------------------------------------------------------
@app.command()
def prescribe(
    n: int = typer.Option(..., "--n", min=1, help="Número de componentes"),
    d: int = typer.Option(..., "--d", min=1, help="Dimensión de x"),
    lipschitz: float = typer.Option(..., "--L", help="Constante de Lipschitz del gradiente"),
    alpha: float = typer.Option(1.0, "--alpha", help="Factor alpha en (0, 1]"),
    exponent: str = typer.Option("0", "--l", help="Exponente l: 0, 0.5, 1 o auto"),
    variant: Variant = typer.Option(Variant.ZO_SVRG_ADMM, "--variant"),
    iterations: int | None = typer.Option(None, "--iterations", help="T para recomendar mu"),
    sigma_a_min: float = typer.Option(1.0, "--sigma-a-min", help="sigma_min(A^T A)"),
    sigma_a_max: float | None = typer.Option(None, "--sigma-a-max", help="sigma_max(A^T A)"),
    kappa_g: float = typer.Option(1.0, "--kappa-g", help="Número de condición de G"),
) -> None:
    """Imprime m, b, eta, rho y mu según las cotas de convergencia."""

    try:
        p = prescribe_hyperparameters(
            n,
            d,
            lipschitz,
            variant=variant,
            alpha=alpha,
            exponent=exponent,
            kappa_G=kappa_g,
            sigma_A_min=sigma_a_min,
            sigma_A_max=sigma_a_max,
            iterations=iterations,
        )
    except (PrescriptionError, InvalidConfig) as exc:
        raise _fail(f"Parámetros inválidos: {exc}", EXIT_CONFIG) from exc

    lines = [
        f"variant: {p.variant.value}",
        f"l: {p.exponent:g}",
        f"eta: {p.eta!r}",
        f"rho: {p.rho!r}",
        f"batch_size: {p.batch_size}",
    ]
    if p.epoch_length is not None:
        lines.append(f"epoch_length: {p.epoch_length}")
    if p.r is not None:
        lines.append(f"r: {p.r!r}")
    lines.append(f"sigma_min_G: {p.sigma_min_G!r}")
    lines.append(f"kappa_G: {p.kappa_G!r}")
    if p.mu is not None:
        lines.append(f"mu: {p.mu!r}")
    else:
        lines.append("mu: 1/(d*sqrt(T))  # --iterations T fija el valor")
    typer.echo("\n".join(lines))


# ----------------------------------------------------------------------
# check-gradient
# ----------------------------------------------------------------------
def _gradient_oracle(
    config_path: Path | None, loss: str, n: int, d: int, sigma: float, seed: int
) -> LinearModelOracle:
    if config_path is not None:
        config = load_config(config_path)
        section = config.problem
        dataset = load_dataset(section, seed)
        return make_oracle(section.loss, dataset, sigma=section.sigma)
    dataset, _ = synth_dataset(n, d, seed=seed)
    return make_oracle(loss, dataset, sigma=sigma)


@app.command("check-gradient")
def check_gradient(
    config_path: Path | None = typer.Option(None, "--config", help="Toma el problema del YAML"),
    loss: str = typer.Option("correntropy", "--loss", help="correntropy|logistic|quadratic"),
    n: int = typer.Option(50, "--n", min=1),
    d: int = typer.Option(10, "--d", min=1),
    sigma: float = typer.Option(1.0, "--sigma"),
    mu: float = typer.Option(1e-3, "--mu", help="Parámetro de suavizado"),
    trials: int = typer.Option(100, "--trials", min=1),
    lipschitz: float | None = typer.Option(None, "--lipschitz", help="Sustituye la cota de L"),
    seed: int = typer.Option(0, "--seed"),
) -> None:
    """Compara el estimador por coordenadas con el gradiente analítico (cota L*mu/2)."""

    if not mu > 0:
        raise _fail("mu debe ser positivo", EXIT_CONFIG)
    try:
        oracle = _gradient_oracle(config_path, loss, n, d, sigma, seed)
    except (ConfigError, DataError, ValueError) as exc:
        raise _fail(f"Error de configuración: {exc}", EXIT_CONFIG) from exc
    except OSError as exc:
        raise _fail(f"Error de E/S: {exc}", EXIT_IO) from exc

    L = lipschitz if lipschitz is not None else oracle.lipschitz_bound()
    bound = L * mu / 2.0
    rng = np.random.default_rng(seed)
    worst = (0.0, -1, -1)
    for trial in range(trials):
        i = int(rng.integers(oracle.n))
        x = rng.standard_normal(oracle.dim)
        estimate = estimate_component_gradient(oracle, i, x, mu, diagnostic=True)
        error = np.abs(estimate - oracle.gradient(i, x))
        j = int(np.argmax(error))
        if error[j] > worst[0]:
            worst = (float(error[j]), trial, j)

    typer.echo(f"oracle: {oracle.name} n={oracle.n} d={oracle.dim}")
    typer.echo(f"L: {L!r}")
    typer.echo(f"mu: {mu!r}")
    typer.echo(f"max_error: {worst[0]!r}")
    typer.echo(f"bound: {bound!r}")
    if worst[0] > bound:
        typer.secho(
            f"Cota violada en el ensayo {worst[1]} (coordenada {worst[2]}): "
            f"{worst[0]:.3e} > {bound:.3e}",
            fg=typer.colors.RED,
        )
        raise typer.Exit(code=EXIT_BOUND)
    typer.secho(f"Cota respetada en {trials} ensayos", fg=typer.colors.GREEN)


# ----------------------------------------------------------------------
# bench
# ----------------------------------------------------------------------
@app.command()
def bench(
    seeds: str = typer.Option("0,1,2", "--seeds", help="Semillas separadas por comas"),
    budget: int | None = typer.Option(None, "--budget", help="Evaluaciones por variante"),
    out: Path | None = typer.Option(None, "--out", help="Carpeta para trazas y summary.csv"),
    n: int = typer.Option(2000, "--n", min=1),
    d: int = typer.Option(50, "--d", min=1),
) -> None:
    """Compara ZO-SGD/SVRG/SAGA-ADMM con igual presupuesto de evaluaciones."""

    try:
        seed_list = parse_seeds(seeds)
    except ConfigError as exc:
        raise _fail(f"Error de configuración: {exc}", EXIT_CONFIG) from exc
    settings = BenchSettings(n=n, d=d)
    total_budget = budget or budget_for(settings)
    logger.info("Presupuesto por variante: %d evaluaciones", total_budget)
    try:
        rows = compare_variants(seed_list, settings, budget=total_budget)
    except Diverged as exc:
        raise _fail(f"El solver divergió: {exc}", EXIT_DIVERGED) from exc
    except (InvalidConfig, ProblemError, DataError) as exc:
        raise _fail(f"Error de configuración: {exc}", EXIT_CONFIG) from exc

    if out is not None:
        try:
            for row in rows:
                write_trace(row.traces, out / f"trace_{row.seed}_{row.variant.value}.csv")
                append_summary(summary_row(row.seed, row.variant, row.result), out / "summary.csv")
        except OSError as exc:
            raise _fail(f"Error de E/S: {exc}", EXIT_IO) from exc

    table = Table(title=f"Comparación con presupuesto {total_budget}")
    table.add_column("Semilla")
    table.add_column("Variante")
    table.add_column("Iter.")
    table.add_column("Objetivo")
    table.add_column("Gap al mejor")
    for row in rows:
        table.add_row(
            str(row.seed),
            row.variant.value,
            str(row.iterations),
            f"{row.objective:.6g}",
            f"{row.gap_to_best:.3e}",
        )
    logger.info(table)
