"""YAML run configuration for ``zoadmm run``.

Unknown keys anywhere in the file are rejected with the dotted path of the
offending key, so a typo never silently falls back to a default.
"""

from __future__ import annotations

import logging
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..benchmarks.datasets import Dataset, load_libsvm, synth_dataset
from ..benchmarks.graphs import build_graph
from ..benchmarks.losses import LOSSES, make_oracle
from ..benchmarks.problems import (
    DEFAULT_TAU,
    build_fused_lasso_problem,
    build_group_split_problem,
    build_lasso_problem,
)
from ..core.admm import SolverConfig, prescribe_hyperparameters
from ..core.errors import ConfigError
from ..core.problem import ConstrainedProblem

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Builder(StrEnum):
    FUSED_LASSO = "fused_lasso"
    GROUP_SPLIT = "group_split"
    LASSO = "lasso"


class SyntheticData(_Strict):
    n: int = Field(default=2000, ge=1)
    d: int = Field(default=50, ge=1)
    sparsity: float = Field(default=0.2, ge=0, le=1)
    noise: float = Field(default=0.1, ge=0)
    correlation: float = Field(default=0.0, gt=-1, lt=1)
    # Por defecto se usa la semilla de la ejecución.
    seed: int | None = None


class LibsvmData(_Strict):
    path: Path
    scale: bool = False


class DataSource(_Strict):
    synthetic: SyntheticData | None = None
    libsvm: LibsvmData | None = None

    @model_validator(mode="after")
    def _exactly_one(self) -> DataSource:
        if (self.synthetic is None) == (self.libsvm is None):
            raise ValueError("indica exactamente una fuente: synthetic o libsvm")
        return self


class ProblemSection(_Strict):
    builder: Builder = Builder.FUSED_LASSO
    data: DataSource
    loss: Literal["correntropy", "logistic", "quadratic"] = "correntropy"
    sigma: float = Field(default=1.0, gt=0)
    tau1: float = Field(default=DEFAULT_TAU, ge=0)
    tau2: float = Field(default=DEFAULT_TAU, ge=0)
    graph_threshold: float = Field(default=0.3, gt=0, lt=1)
    groups: list[list[int]] | None = None
    group_weight: float = Field(default=DEFAULT_TAU, ge=0)
    lipschitz: float | None = Field(default=None, gt=0)


class RunConfig(_Strict):
    problem: ProblemSection
    solver: SolverConfig = Field(default_factory=SolverConfig)
    prescribe: bool = False
    prescribe_alpha: float = 1.0
    prescribe_l: float | Literal["auto"] = 0.0
    seeds: list[int] = Field(default_factory=lambda: [0])
    trace_stride: int | None = Field(default=None, ge=1)
    output_dir: Path = Path("runs")

    @model_validator(mode="after")
    def _seeds_nonempty(self) -> RunConfig:
        if not self.seeds:
            raise ValueError("seeds no puede estar vacío")
        return self


def _first_error(exc: ValidationError) -> ConfigError:
    err = exc.errors()[0]
    key = ".".join(str(part) for part in err["loc"]) or None
    if err["type"] == "extra_forbidden":
        message = f"clave desconocida '{key}'"
    else:
        message = f"valor inválido en '{key}': {err['msg']}"
    return ConfigError(message, key=key)


def parse_config(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("la configuración debe ser un mapeo YAML")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _first_error(exc) from exc


def load_config(path: Path) -> RunConfig:
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"no existe el archivo de configuración {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML inválido en {path}: {exc}") from exc
    return parse_config(data)


def parse_seeds(raw: str) -> list[int]:
    try:
        seeds = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"lista de semillas inválida: {raw!r}", key="seeds") from exc
    if not seeds:
        raise ConfigError("seeds no puede estar vacío", key="seeds")
    return seeds


# ----------------------------------------------------------------------
# Builders
# ----------------------------------------------------------------------
def load_dataset(section: ProblemSection, seed: int) -> Dataset:
    source = section.data
    if source.libsvm is not None:
        return load_libsvm(source.libsvm.path, scale=source.libsvm.scale)
    assert source.synthetic is not None
    syn = source.synthetic
    dataset, _ = synth_dataset(
        syn.n,
        syn.d,
        sparsity=syn.sparsity,
        noise=syn.noise,
        seed=seed if syn.seed is None else syn.seed,
        correlation=syn.correlation,
    )
    return dataset


def build_problem(section: ProblemSection, seed: int) -> ConstrainedProblem:
    if section.loss not in LOSSES:
        raise ConfigError(f"pérdida desconocida {section.loss!r}", key="problem.loss")
    dataset = load_dataset(section, seed)
    oracle = make_oracle(section.loss, dataset, sigma=section.sigma)
    L = section.lipschitz
    if section.builder is Builder.FUSED_LASSO:
        graph = build_graph(dataset, section.graph_threshold)
        return build_fused_lasso_problem(oracle, graph, section.tau1, section.tau2, lipschitz_L=L)
    if section.builder is Builder.GROUP_SPLIT:
        if section.groups is None:
            raise ConfigError("group_split necesita 'groups'", key="problem.groups")
        return build_group_split_problem(
            oracle, section.groups, section.group_weight, lipschitz_L=L
        )
    return build_lasso_problem(oracle, section.tau1, lipschitz_L=L)


def solver_config_for(config: RunConfig, problem: ConstrainedProblem, seed: int) -> SolverConfig:
    """Per-seed solver settings, with prescribed hyperparameters merged when requested."""

    update: dict[str, object] = {"seed": seed}
    if config.trace_stride is not None:
        update["trace_stride"] = config.trace_stride
    solver = config.solver
    if config.prescribe:
        prescription = prescribe_hyperparameters(
            problem.objective.n,
            problem.d,
            problem.lipschitz_L,
            variant=solver.variant,
            alpha=config.prescribe_alpha,
            exponent=config.prescribe_l,
            sigma_A_min=problem.sigma_A_min,
            sigma_A_max=problem.sigma_A_max,
            iterations=solver.iterations,
        )
        update.update(prescription.overrides())
        logger.info(
            "Hiperparámetros prescritos: eta=%.4g rho=%.4g b=%d",
            prescription.eta,
            prescription.rho,
            prescription.batch_size,
        )
    return solver.model_copy(update=update)
