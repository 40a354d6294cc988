"""Problem model: ``min f(x) + sum_j psi_j(y_j)  s.t.  A x + sum_j B_j y_j = c``."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from .errors import DimensionMismatch, RankDeficient
from .oracle import BlackBoxObjective
from .penalties import PenaltyBlock

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10
_DENSE_SPECTRUM_LIMIT = 2000


def singular_extremes(M: sparse.spmatrix | np.ndarray) -> tuple[float, float]:
    """Smallest and largest singular value of ``M`` in the column-rank sense.

    A matrix with fewer rows than columns reports ``0`` as its smallest value.
    Dense ``svdvals`` is used while the short side stays within a few thousand;
    beyond that the extremes come from ``svds``. Working on ``M`` rather than
    ``M^T M`` keeps the rank decision at the precision of ``M`` itself.
    """

    M = sparse.csr_matrix(M, dtype=float)
    rows, cols = M.shape
    if rows == 0 or cols == 0:
        return 0.0, 0.0
    if min(rows, cols) <= _DENSE_SPECTRUM_LIMIT:
        s = linalg.svdvals(M.toarray())
        s_max = float(s[0])
        s_min = float(s[-1]) if rows >= cols else 0.0
        return s_min, s_max
    top = sparse_linalg.svds(M, k=1, which="LM", return_singular_vectors=False)
    if rows < cols:
        return 0.0, float(top[0])
    bottom = sparse_linalg.svds(M, k=1, which="SM", return_singular_vectors=False)
    return float(bottom[0]), float(top[0])


def gram_extremes(M: sparse.spmatrix | np.ndarray) -> tuple[float, float]:
    """Smallest and largest eigenvalue of ``M^T M``, as squared singular values."""

    s_min, s_max = singular_extremes(M)
    return s_min**2, s_max**2


def spectral_norm_sq(M: sparse.spmatrix | np.ndarray) -> float:
    """``sigma_max(M^T M)``."""

    return singular_extremes(M)[1] ** 2


class SmoothingKind(StrEnum):
    FIXED = "fixed"
    DECAYING = "decaying"


class SmoothingSchedule(BaseModel):
    """Uniform per-coordinate smoothing parameter ``mu_j = mu``.

    ``fixed`` returns ``mu0`` at every iteration; ``decaying`` follows
    ``1 / (d * sqrt(t))`` for ``t >= 1`` (``t = 0`` is treated as ``t = 1``).
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: SmoothingKind = SmoothingKind.FIXED
    mu0: float = Field(default=1e-3, gt=0)

    def value(self, t: int, d: int) -> float:
        if self.kind is SmoothingKind.FIXED:
            return float(self.mu0)
        return 1.0 / (d * math.sqrt(max(int(t), 1)))


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    objective: BlackBoxObjective
    blocks: tuple[PenaltyBlock, ...]
    A: sparse.csr_matrix
    c: np.ndarray
    lipschitz_L: float = 1.0
    name: str = "problem"
    metadata: dict[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        object.__setattr__(self, "A", sparse.csr_matrix(self.A, dtype=float))
        c = np.asarray(self.c, dtype=float).reshape(-1)
        c.setflags(write=False)
        object.__setattr__(self, "c", c)
        if not self.blocks:
            raise DimensionMismatch("se necesita al menos un bloque de penalización")
        if not (self.lipschitz_L > 0 and math.isfinite(self.lipschitz_L)):
            raise ValueError("lipschitz_L debe ser positivo y finito")

    @property
    def d(self) -> int:
        return self.objective.dim

    @property
    def p(self) -> int:
        return int(self.A.shape[0])

    @property
    def k(self) -> int:
        return len(self.blocks)

    @cached_property
    def a_singular_extremes(self) -> tuple[float, float]:
        return singular_extremes(self.A)

    @property
    def sigma_A_min(self) -> float:
        return self.a_singular_extremes[0] ** 2

    @property
    def sigma_A_max(self) -> float:
        return self.a_singular_extremes[1] ** 2

    @cached_property
    def sigma_B_max(self) -> tuple[float, ...]:
        return tuple(spectral_norm_sq(block.B) for block in self.blocks)

    # ------------------------------------------------------------------
    # Linear algebra helpers used by the engine and diagnostics
    # ------------------------------------------------------------------
    def constraint_residual(self, x: np.ndarray, y: Sequence[np.ndarray]) -> np.ndarray:
        """``A x + sum_j B_j y_j - c``."""

        r = self.A @ x - self.c
        for block, yj in zip(self.blocks, y, strict=True):
            r = r + block.B @ yj
        return np.asarray(r, dtype=float)

    def penalty_value(self, y: Sequence[np.ndarray]) -> float:
        return float(sum(block.psi(yj) for block, yj in zip(self.blocks, y, strict=True)))

    def zero_point(self) -> tuple[np.ndarray, list[np.ndarray], np.ndarray]:
        return (
            np.zeros(self.d),
            [np.zeros(block.q) for block in self.blocks],
            np.zeros(self.p),
        )


@dataclass(frozen=True)
class ValidationReport:
    sigma_A_min: float
    sigma_A_max: float
    p: int
    d: int
    block_sizes: tuple[int, ...]
    sigma_B_max: tuple[float, ...]


def validate_problem(problem: ConstrainedProblem) -> ValidationReport:
    """Check dimensions and the full-column-rank requirement on ``A``."""

    p, d = problem.A.shape
    if d != problem.objective.dim:
        raise DimensionMismatch(
            f"A tiene {d} columnas pero el oráculo tiene dimensión {problem.objective.dim}"
        )
    if problem.c.shape != (p,):
        raise DimensionMismatch(f"c tiene longitud {problem.c.size}, se esperaba {p}")
    for j, block in enumerate(problem.blocks):
        if block.p != p:
            raise DimensionMismatch(f"B_j tiene {block.p} filas, se esperaban {p}", j)

    s_min, s_max = problem.a_singular_extremes
    if s_max <= 0 or s_min < RANK_TOLERANCE * s_max:
        raise RankDeficient(s_min, s_max)
    lam_min, lam_max = problem.sigma_A_min, problem.sigma_A_max

    report = ValidationReport(
        sigma_A_min=lam_min,
        sigma_A_max=lam_max,
        p=p,
        d=d,
        block_sizes=tuple(block.q for block in problem.blocks),
        sigma_B_max=problem.sigma_B_max,
    )
    logger.debug(
        "Problema %s válido: p=%d d=%d k=%d sigma_A=[%.3g, %.3g]",
        problem.name,
        p,
        d,
        problem.k,
        lam_min,
        lam_max,
    )
    return report


def probe_lipschitz(
    oracle: BlackBoxObjective,
    *,
    samples: int = 64,
    step: float = 1e-3,
    scale: float = 1.0,
    seed: int = 0,
) -> float:
    """Heuristic estimate of the gradient Lipschitz constant.

    Takes the largest finite-difference curvature ``|d^2 f_i / dx_j dx_k|``
    over random components, points and coordinate pairs. This is a lower
    estimate of the true constant, not a certificate; pass a known bound in
    the problem when one exists.
    """

    rng = np.random.default_rng(seed)
    d = oracle.dim
    best = 0.0
    for _ in range(samples):
        i = int(rng.integers(oracle.n))
        x = rng.normal(scale=scale, size=d)
        j, k = (int(v) for v in rng.integers(d, size=2))
        ej = np.zeros(d)
        ej[j] = step
        ek = np.zeros(d)
        ek[k] = step
        if j == k:
            pts = np.stack([x + ej, x, x - ej])
            fp, f0, fm = oracle.eval_batch([i] * 3, pts, diagnostic=True)
            curvature = (fp - 2.0 * f0 + fm) / step**2
        else:
            pts = np.stack([x + ej + ek, x + ej, x + ek, x])
            fjk, fj, fk, f0 = oracle.eval_batch([i] * 4, pts, diagnostic=True)
            curvature = (fjk - fj - fk + f0) / step**2
        best = max(best, abs(float(curvature)))
    logger.info("Estimación heurística de L: %.4g (%d muestras)", best, samples)
    return best
