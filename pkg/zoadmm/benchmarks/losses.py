"""Linear-model loss oracles ``f_i(x) = phi(a_i^T x; l_i)``.

The solver only sees values. The analytic gradients here exist for tests,
``check-gradient`` and the first-order reference solver.
"""

from __future__ import annotations

from abc import abstractmethod

import numpy as np
from scipy import sparse
from scipy.special import expit

from ..core.errors import DatasetError
from ..core.oracle import BlackBoxObjective
from .datasets import Dataset, Features

Margin = float | np.ndarray

_CURVATURE_GRID = np.linspace(-8.0, 8.0, 16001)


class LinearModelOracle(BlackBoxObjective):
    """Oracle over the rows ``a_i`` of a design matrix with one target per row."""

    name = "linear"

    def __init__(self, features: Features, targets: np.ndarray) -> None:
        n, d = features.shape
        super().__init__(n, d)
        self.features = (
            sparse.csr_matrix(features, dtype=float)
            if sparse.issparse(features)
            else np.asarray(features, dtype=float)
        )
        self.targets = np.asarray(targets, dtype=float).reshape(-1)
        if self.targets.size != n:
            raise DatasetError(f"{self.targets.size} objetivos para {n} filas")

    # ------------------------------------------------------------------
    def margins(self, indices: np.ndarray, points: np.ndarray) -> np.ndarray:
        rows = self.features[indices]
        if sparse.issparse(rows):
            return np.asarray(rows.multiply(points).sum(axis=1)).reshape(-1)
        return np.einsum("ij,ij->i", rows, points)

    def _values(self, indices: np.ndarray, points: np.ndarray) -> np.ndarray:
        return self.loss(self.margins(indices, points), self.targets[indices])

    def _row(self, i: int) -> np.ndarray:
        row = self.features[i]
        if sparse.issparse(row):
            return np.asarray(row.toarray()).reshape(-1)
        return np.asarray(row, dtype=float)

    def max_row_norm_sq(self) -> float:
        if sparse.issparse(self.features):
            norms = np.asarray(self.features.multiply(self.features).sum(axis=1)).reshape(-1)
        else:
            norms = np.einsum("ij,ij->i", self.features, self.features)
        return float(np.max(norms))

    def lipschitz_bound(self) -> float:
        """Certified bound ``max_i ||a_i||^2 * sup |phi''|``."""

        return self.max_row_norm_sq() * self.curvature_bound()

    def gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        """Analytic ``grad f_i(x)`` (not used by the solver)."""

        a = self._row(i)
        m = float(a @ np.asarray(x, dtype=float))
        return float(self.dloss(m, float(self.targets[i]))) * a

    def full_gradient(self, x: np.ndarray) -> np.ndarray:
        m = np.asarray(self.features @ np.asarray(x, dtype=float)).reshape(-1)
        weights = np.asarray(self.dloss(m, self.targets))
        return np.asarray(self.features.T @ weights).reshape(-1) / self.n

    # ------------------------------------------------------------------
    @abstractmethod
    def loss(self, margins: np.ndarray, targets: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def dloss(self, margin: Margin, target: Margin) -> Margin:
        """Derivative of the loss with respect to the margin (elementwise)."""

    @abstractmethod
    def curvature_bound(self) -> float: ...


class CorrentropyOracle(LinearModelOracle):
    """Bounded robust loss ``(sigma^2/2) (1 - exp(-(l - a^T x)^2 / sigma^2))``."""

    name = "correntropy"

    def __init__(self, features: Features, targets: np.ndarray, sigma: float = 1.0) -> None:
        if not sigma > 0:
            raise ValueError(f"sigma debe ser positivo (sigma={sigma!r})")
        super().__init__(features, targets)
        self.sigma = float(sigma)

    def loss(self, margins: np.ndarray, targets: np.ndarray) -> np.ndarray:
        s2 = self.sigma**2
        r = targets - margins
        return 0.5 * s2 * -np.expm1(-(r**2) / s2)

    def dloss(self, margin: Margin, target: Margin) -> Margin:
        r = target - margin
        return -r * np.exp(-(r**2) / self.sigma**2)

    def curvature_bound(self) -> float:
        # phi''(r) = exp(-r^2/s^2) (1 - 2 r^2 / s^2), scanned on r = s * u.
        u2 = _CURVATURE_GRID**2
        return float(np.max(np.abs(np.exp(-u2) * (1.0 - 2.0 * u2))))


class LogisticOracle(LinearModelOracle):
    name = "logistic"

    def loss(self, margins: np.ndarray, targets: np.ndarray) -> np.ndarray:
        return np.logaddexp(0.0, -targets * margins)

    def dloss(self, margin: Margin, target: Margin) -> Margin:
        return -target * expit(-target * margin)

    def curvature_bound(self) -> float:
        return 0.25


class QuadraticOracle(LinearModelOracle):
    """Least squares ``(1/2)(a^T x - b)^2``."""

    name = "quadratic"

    def loss(self, margins: np.ndarray, targets: np.ndarray) -> np.ndarray:
        return 0.5 * (margins - targets) ** 2

    def dloss(self, margin: Margin, target: Margin) -> Margin:
        return margin - target

    def curvature_bound(self) -> float:
        return 1.0


LOSSES: dict[str, type[LinearModelOracle]] = {
    CorrentropyOracle.name: CorrentropyOracle,
    LogisticOracle.name: LogisticOracle,
    QuadraticOracle.name: QuadraticOracle,
}


def correntropy_oracle(dataset: Dataset, sigma: float = 1.0) -> CorrentropyOracle:
    return CorrentropyOracle(dataset.features, dataset.labels, sigma=sigma)


def make_oracle(loss: str, dataset: Dataset, *, sigma: float = 1.0) -> LinearModelOracle:
    try:
        cls = LOSSES[loss]
    except KeyError as exc:
        raise ValueError(f"pérdida desconocida {loss!r}; opciones: {sorted(LOSSES)}") from exc
    if cls is CorrentropyOracle:
        return CorrentropyOracle(dataset.features, dataset.labels, sigma=sigma)
    return cls(dataset.features, dataset.labels)
