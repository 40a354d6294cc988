"""Binary-classification datasets: libsvm reader and synthetic generator."""

from __future__ import annotations

import gzip
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np
from scipy import sparse

from ..core.errors import DatasetError, NonAscendingIndex, ParseError

logger = logging.getLogger(__name__)

Features = sparse.csr_matrix | np.ndarray


@dataclass(frozen=True, eq=False)
class Dataset:
    features: Features
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=float).reshape(-1)
        if self.features.ndim != 2:
            raise DatasetError("las características deben ser una matriz n×d")
        n, d = self.features.shape
        if n == 0 or d == 0:
            raise DatasetError(f"dataset vacío ({n}×{d})")
        if labels.size != n:
            raise DatasetError(f"{labels.size} etiquetas para {n} filas")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise DatasetError("las etiquetas deben ser ±1")
        values = self.features.data if sparse.issparse(self.features) else self.features
        if np.isnan(values).any():
            raise DatasetError("el dataset contiene NaN")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.features)

    def dense(self) -> np.ndarray:
        if self.is_sparse:
            return np.asarray(self.features.toarray())
        return np.asarray(self.features)


def map_label(raw: float) -> float:
    """Sign mapping with ``0 -> -1``."""

    return 1.0 if raw > 0 else -1.0


def _open_text(path: Path) -> TextIO:
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return path.open("r", encoding="utf-8")


def load_libsvm(path: Path | str, *, scale: bool = False, n_features: int | None = None) -> Dataset:
    """Parse ``label idx:val ...`` lines (1-based, strictly ascending indices).

    ``.gz`` files are decompressed transparently. With ``scale=True`` each
    column is divided by its largest absolute value so features lie in
    ``[-1, 1]``.
    """

    path = Path(path)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    labels: list[float] = []
    max_col = 0
    with _open_text(path) as fh:
        for line_no, raw_line in enumerate(fh, start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            head, *pairs = line.split()
            try:
                label = float(head)
            except ValueError as exc:
                raise ParseError(line_no, f"etiqueta inválida {head!r}") from exc
            row = len(labels)
            labels.append(map_label(label))
            last = 0
            for pair in pairs:
                idx_txt, sep, val_txt = pair.partition(":")
                if not sep:
                    raise ParseError(line_no, f"entrada sin ':' ({pair!r})")
                try:
                    idx = int(idx_txt)
                    val = float(val_txt)
                except ValueError as exc:
                    raise ParseError(line_no, f"entrada inválida {pair!r}") from exc
                if idx < 1:
                    raise ParseError(line_no, f"índice {idx} fuera de rango (base 1)")
                if idx <= last:
                    raise NonAscendingIndex(line_no, f"índice {idx} tras {last}")
                if not math.isfinite(val):
                    raise ParseError(line_no, f"valor no finito en {pair!r}")
                last = idx
                rows.append(row)
                cols.append(idx - 1)
                vals.append(val)
            max_col = max(max_col, last)

    if not labels:
        raise DatasetError(f"{path} no contiene ejemplos")
    d = n_features if n_features is not None else max_col
    if d < max_col:
        raise DatasetError(f"n_features={d} menor que el índice máximo {max_col}")
    features = sparse.csr_matrix(
        (np.asarray(vals), (np.asarray(rows), np.asarray(cols))), shape=(len(labels), d)
    )
    features.sum_duplicates()
    if scale:
        features = _scale_columns(features)
    name = path.name.removesuffix(".gz")
    logger.info("Leído %s: n=%d d=%d (nnz=%d)", name, len(labels), d, features.nnz)
    return Dataset(features=features, labels=np.asarray(labels), name=name)


def _scale_columns(features: sparse.csr_matrix) -> sparse.csr_matrix:
    peak = np.asarray(abs(features).max(axis=0).todense()).reshape(-1)
    peak[peak == 0] = 1.0
    return sparse.csr_matrix(features @ sparse.diags(1.0 / peak))


def synth_dataset(
    n: int,
    d: int,
    *,
    sparsity: float = 0.2,
    noise: float = 0.1,
    seed: int = 0,
    correlation: float = 0.0,
) -> tuple[Dataset, np.ndarray]:
    """Gaussian design with a planted sparse separator.

    Rows are standard normal; with ``correlation != 0`` consecutive features
    follow an AR(1) chain ``a_j = c a_{j-1} + sqrt(1-c^2) e_j`` so marginal
    variances stay 1. Returns the dataset and the planted ``x*``.
    """

    if n < 1 or d < 1:
        raise DatasetError(f"n y d deben ser >= 1 (n={n}, d={d})")
    if not 0.0 <= sparsity <= 1.0:
        raise DatasetError("sparsity debe estar en [0, 1]")
    if not -1.0 < correlation < 1.0:
        raise DatasetError("correlation debe estar en (-1, 1)")
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((n, d))
    if correlation:
        innovation = math.sqrt(1.0 - correlation**2)
        for j in range(1, d):
            features[:, j] = correlation * features[:, j - 1] + innovation * features[:, j]

    support_size = max(1, math.ceil(sparsity * d)) if sparsity > 0 else 0
    x_star = np.zeros(d)
    if support_size:
        support = rng.choice(d, size=support_size, replace=False)
        x_star[support] = rng.standard_normal(support_size)
    eps = rng.standard_normal(n)
    labels = np.where(features @ x_star + noise * eps > 0, 1.0, -1.0)
    dataset = Dataset(features=features, labels=labels, name=f"synth-n{n}-d{d}-s{seed}")
    return dataset, x_star
