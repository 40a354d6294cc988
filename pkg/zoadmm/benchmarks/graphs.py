"""Feature graphs for the graph-guided fused lasso penalty."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..core.errors import DegenerateFeature, GraphError
from .datasets import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GraphMatrix:
    """Edge-difference operator: row ``e`` is ``x_i - x_j`` for edge ``(i, j)``."""

    G: sparse.csr_matrix
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        G = sparse.csr_matrix(self.G, dtype=float)
        object.__setattr__(self, "G", G)
        if G.shape[0] != len(self.edges):
            raise GraphError("el número de filas no coincide con el de aristas")
        seen: set[tuple[int, int]] = set()
        for i, j in self.edges:
            if i == j:
                raise GraphError(f"auto-lazo en el nodo {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise GraphError(f"arista duplicada {key}")
            seen.add(key)
        counts = np.diff(G.indptr)
        if G.shape[0] and (np.any(counts != 2) or not np.allclose(G.sum(axis=1), 0.0)):
            raise GraphError("cada fila debe tener dos entradas +1/-1")

    @classmethod
    def from_edges(cls, edges: list[tuple[int, int]], d: int) -> GraphMatrix:
        e = len(edges)
        rows = np.repeat(np.arange(e), 2)
        cols = np.array([v for edge in edges for v in edge], dtype=np.int64)
        vals = np.tile([1.0, -1.0], e)
        G = sparse.csr_matrix((vals, (rows, cols)), shape=(e, d))
        return cls(G=G, edges=tuple(edges))

    @property
    def n_edges(self) -> int:
        return int(self.G.shape[0])

    @property
    def d(self) -> int:
        return int(self.G.shape[1])


def _correlation(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    centered = features - features.mean(axis=0)
    std = np.sqrt(np.mean(centered**2, axis=0))
    degenerate = std <= 1e-12 * max(1.0, float(np.max(np.abs(features), initial=0.0)))
    safe = np.where(degenerate, 1.0, std)
    normed = centered / safe
    corr = normed.T @ normed / features.shape[0]
    return corr, degenerate


def build_graph(dataset: Dataset, threshold: float = 0.3) -> GraphMatrix:
    """Connect features whose absolute Pearson correlation reaches *threshold*."""

    if not 0.0 < threshold < 1.0:
        raise GraphError(f"threshold={threshold} debe estar en (0, 1)")
    corr, degenerate = _correlation(dataset.dense())
    for j in np.flatnonzero(degenerate):
        warnings.warn(
            DegenerateFeature(f"la característica {int(j)} tiene varianza nula; se excluye"),
            stacklevel=2,
        )
    mask = np.abs(corr) >= threshold - 1e-12
    mask[degenerate, :] = False
    mask[:, degenerate] = False
    ii, jj = np.nonzero(np.triu(mask, k=1))
    edges = [(int(i), int(j)) for i, j in zip(ii, jj, strict=True)]
    logger.info("Grafo de %d nodos con %d aristas (umbral %.2f)", dataset.d, len(edges), threshold)
    return GraphMatrix.from_edges(edges, dataset.d)
