"""Convex nonsmooth penalties with closed-form proximal maps."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .errors import DimensionMismatch, ProxUnavailable


def prox_l1(v: np.ndarray, tau: float) -> np.ndarray:
    """Soft threshold: ``sign(v) * max(|v| - tau, 0)`` componentwise."""

    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def prox_group_l2(v: np.ndarray, tau: float) -> np.ndarray:
    """Block shrinkage ``v * max(1 - tau/||v||, 0)``; zero when ``||v|| <= tau``."""

    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm <= tau:
        return np.zeros_like(v)
    return v * (1.0 - tau / norm)


class Penalty(ABC):
    """A convex, lower-bounded psi with a closed-form prox."""

    @abstractmethod
    def value(self, y: np.ndarray) -> float: ...

    @abstractmethod
    def prox(self, v: np.ndarray, tau: float) -> np.ndarray:
        """argmin_y psi(y) + ||y - v||^2 / (2 tau)."""


class ZeroPenalty(Penalty):
    def value(self, y: np.ndarray) -> float:
        return 0.0

    def prox(self, v: np.ndarray, tau: float) -> np.ndarray:
        return np.array(v, dtype=float, copy=True)

    def __repr__(self) -> str:
        return "ZeroPenalty()"


@dataclass(frozen=True)
class L1Penalty(Penalty):
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ValueError("el peso de la penalización debe ser >= 0")

    def value(self, y: np.ndarray) -> float:
        return self.weight * float(np.sum(np.abs(y)))

    def prox(self, v: np.ndarray, tau: float) -> np.ndarray:
        return prox_l1(v, self.weight * tau)


@dataclass(frozen=True)
class GroupL2Penalty(Penalty):
    """``weight * ||y||_2`` over the whole block (one group per block)."""

    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.weight < 0:
            raise ValueError("el peso de la penalización debe ser >= 0")

    def value(self, y: np.ndarray) -> float:
        return self.weight * float(np.linalg.norm(y))

    def prox(self, v: np.ndarray, tau: float) -> np.ndarray:
        return prox_group_l2(v, self.weight * tau)


@dataclass(frozen=True, eq=False)
class PenaltyBlock:
    """One ``psi_j(y_j)`` term together with its constraint matrix ``B_j`` (p x q_j)."""

    B: sparse.csr_matrix
    penalty: Penalty = field(default_factory=ZeroPenalty)

    def __post_init__(self) -> None:
        if not isinstance(self.penalty, Penalty):
            raise ProxUnavailable(
                f"{type(self.penalty).__name__} no implementa un prox cerrado; "
                "solo se aceptan subclases de Penalty"
            )
        B = sparse.csr_matrix(self.B, dtype=float)
        if B.ndim != 2:
            raise DimensionMismatch("B_j debe ser una matriz")
        object.__setattr__(self, "B", B)

    @property
    def p(self) -> int:
        return int(self.B.shape[0])

    @property
    def q(self) -> int:
        return int(self.B.shape[1])

    def psi(self, y: np.ndarray) -> float:
        return self.penalty.value(y)

    def prox(self, v: np.ndarray, tau: float) -> np.ndarray:
        return self.penalty.prox(v, tau)
