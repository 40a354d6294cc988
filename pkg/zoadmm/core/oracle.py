"""Black-box component oracles.

A :class:`BlackBoxObjective` exposes ``n`` component functions ``f_i`` that
can only be queried by value. Every single-component evaluation bumps an
atomic counter; evaluations requested by diagnostics go to a separate
counter so the main budget stays comparable across solver variants.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, NonFiniteValue

ComponentFn = Callable[[np.ndarray], float]


class BlackBoxObjective(ABC):
    """Finite sum ``f(x) = (1/n) sum_i f_i(x)`` available through values only."""

    def __init__(self, n: int, dim: int) -> None:
        if n < 1 or dim < 1:
            raise DimensionMismatch(f"n y d deben ser positivos (n={n}, d={dim})")
        self.n = int(n)
        self.dim = int(dim)
        self._lock = threading.Lock()
        self._eval_count = 0
        self._diag_eval_count = 0

    # ------------------------------------------------------------------
    # Counters
    # ------------------------------------------------------------------
    @property
    def eval_count(self) -> int:
        return self._eval_count

    @property
    def diag_eval_count(self) -> int:
        return self._diag_eval_count

    def reset_counters(self) -> None:
        with self._lock:
            self._eval_count = 0
            self._diag_eval_count = 0

    def _charge(self, amount: int, diagnostic: bool) -> None:
        with self._lock:
            if diagnostic:
                self._diag_eval_count += amount
            else:
                self._eval_count += amount

    # ------------------------------------------------------------------
    # Evaluation
    # ------------------------------------------------------------------
    @abstractmethod
    def _values(self, indices: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Return ``f_{indices[r]}(points[r])`` for every row ``r``."""

    def eval_batch(
        self,
        indices: Sequence[int] | np.ndarray,
        points: np.ndarray,
        *,
        diagnostic: bool = False,
    ) -> np.ndarray:
        """Evaluate one component per row of *points*; costs ``len(indices)`` evaluations."""

        idx = np.asarray(indices, dtype=np.int64).reshape(-1)
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape != (idx.size, self.dim):
            raise DimensionMismatch(
                f"se esperaban puntos de forma ({idx.size}, {self.dim}), llegó {pts.shape}"
            )
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError(f"índice de componente fuera de [0, {self.n})")
        values = np.asarray(self._values(idx, pts), dtype=float)
        self._charge(idx.size, diagnostic)
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise NonFiniteValue(
                f"el oráculo devolvió {values[bad]!r} para la componente {int(idx[bad])}"
            )
        return values

    def eval(self, i: int, x: np.ndarray, *, diagnostic: bool = False) -> float:
        """Value of ``f_i`` at ``x`` (one evaluation)."""

        point = np.asarray(x, dtype=float).reshape(1, -1)
        return float(self.eval_batch([i], point, diagnostic=diagnostic)[0])

    def mean_value(self, x: np.ndarray, *, diagnostic: bool = True) -> float:
        """``f(x)`` averaged over all components (``n`` evaluations)."""

        point = np.asarray(x, dtype=float)
        points = np.broadcast_to(point, (self.n, self.dim))
        values = self.eval_batch(np.arange(self.n), points, diagnostic=diagnostic)
        return float(np.mean(values))


class FunctionOracle(BlackBoxObjective):
    """Oracle built from plain Python callables, one per component."""

    def __init__(self, functions: Sequence[ComponentFn], dim: int) -> None:
        super().__init__(len(functions), dim)
        self._functions = list(functions)

    def _values(self, indices: np.ndarray, points: np.ndarray) -> np.ndarray:
        return np.array(
            [float(self._functions[int(i)](points[r])) for r, i in enumerate(indices)],
            dtype=float,
        )
