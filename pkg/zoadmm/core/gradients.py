"""Coordinate-smoothing zeroth-order gradient estimators.

Every estimate is built from central differences

    g_j = (f_i(x + mu e_j) - f_i(x - mu e_j)) / (2 mu)

so one component gradient costs exactly ``2d`` oracle evaluations. The
mini-batch, SVRG and SAGA compositions below only combine such component
estimates; none of them touches an analytic gradient.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBatch
from .oracle import BlackBoxObjective
from .workers import ordered_map, resolve_workers

logger = logging.getLogger(__name__)

# Upper bound on perturbed points evaluated per oracle call.
_MAX_POINTS_PER_CALL = 1 << 15

IndexBatch = Sequence[int] | np.ndarray


def _as_indices(batch: IndexBatch) -> np.ndarray:
    return np.asarray(batch, dtype=np.int64).reshape(-1)


def _chunks(indices: np.ndarray, dim: int, workers: int) -> list[np.ndarray]:
    per_call = max(1, _MAX_POINTS_PER_CALL // (2 * dim))
    if workers > 1:
        per_call = max(1, min(per_call, -(-indices.size // workers)))
    return [indices[start : start + per_call] for start in range(0, indices.size, per_call)]


def estimate_component_gradients(
    oracle: BlackBoxObjective,
    indices: IndexBatch,
    x: np.ndarray,
    mu: float,
    *,
    diagnostic: bool = False,
    workers: int | None = None,
) -> np.ndarray:
    """Row ``r`` holds the estimate for component ``indices[r]`` at ``x``.

    Costs ``2d * len(indices)`` evaluations. Chunks may be evaluated on a
    thread pool; rows are written back by position, so the output does not
    depend on the worker count.
    """

    if not mu > 0:
        raise ValueError(f"mu debe ser positivo (mu={mu!r})")
    idx = _as_indices(indices)
    x = np.asarray(x, dtype=float)
    d = oracle.dim
    out = np.empty((idx.size, d))
    if idx.size == 0:
        return out

    offsets = np.vstack([mu * np.eye(d), -mu * np.eye(d)])
    stencil = x + offsets
    n_workers = resolve_workers(workers)

    def _run(chunk: np.ndarray) -> np.ndarray:
        points = np.tile(stencil, (chunk.size, 1))
        comps = np.repeat(chunk, 2 * d)
        values = oracle.eval_batch(comps, points, diagnostic=diagnostic).reshape(chunk.size, 2, d)
        return (values[:, 0, :] - values[:, 1, :]) / (2.0 * mu)

    start = 0
    for rows in ordered_map(_run, _chunks(idx, d, n_workers), workers=n_workers):
        out[start : start + rows.shape[0]] = rows
        start += rows.shape[0]
    return out


def estimate_component_gradient(
    oracle: BlackBoxObjective,
    i: int,
    x: np.ndarray,
    mu: float,
    *,
    diagnostic: bool = False,
) -> np.ndarray:
    if not 0 <= int(i) < oracle.n:
        raise IndexError(f"componente {i} fuera de [0, {oracle.n})")
    return estimate_component_gradients(oracle, [i], x, mu, diagnostic=diagnostic)[0]


def estimate_minibatch_gradient(
    oracle: BlackBoxObjective,
    batch: IndexBatch,
    x: np.ndarray,
    mu: float,
    *,
    diagnostic: bool = False,
    workers: int | None = None,
) -> np.ndarray:
    """Mean of the component estimates over *batch* (duplicates count twice)."""

    idx = _as_indices(batch)
    if idx.size == 0:
        raise EmptyBatch("el mini-batch está vacío")
    rows = estimate_component_gradients(
        oracle, idx, x, mu, diagnostic=diagnostic, workers=workers
    )
    return rows.mean(axis=0)


def estimate_full_gradient(
    oracle: BlackBoxObjective,
    x: np.ndarray,
    mu: float,
    *,
    diagnostic: bool = False,
    workers: int | None = None,
) -> np.ndarray:
    """Average over all ``n`` components; ``2dn`` evaluations."""

    return estimate_minibatch_gradient(
        oracle, np.arange(oracle.n), x, mu, diagnostic=diagnostic, workers=workers
    )


# ----------------------------------------------------------------------
# SVRG
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SvrgSnapshot:
    x_tilde: np.ndarray
    g_tilde: np.ndarray
    mu: float

    @classmethod
    def take(
        cls,
        oracle: BlackBoxObjective,
        x: np.ndarray,
        mu: float,
        *,
        workers: int | None = None,
    ) -> SvrgSnapshot:
        x_tilde = np.array(x, dtype=float, copy=True)
        g_tilde = estimate_full_gradient(oracle, x_tilde, mu, workers=workers)
        return cls(x_tilde=x_tilde, g_tilde=g_tilde, mu=float(mu))

    def sq_distance(self, x: np.ndarray) -> float:
        diff = np.asarray(x) - self.x_tilde
        return float(diff @ diff)


def svrg_gradient(
    oracle: BlackBoxObjective,
    batch: IndexBatch,
    x: np.ndarray,
    snapshot: SvrgSnapshot,
    mu: float,
    *,
    workers: int | None = None,
) -> np.ndarray:
    """``grad_I(x) - grad_I(x_tilde) + g_tilde``; ``4d * |batch|`` fresh evaluations."""

    idx = _as_indices(batch)
    if idx.size == 0:
        raise EmptyBatch("el mini-batch está vacío")
    at_x = estimate_component_gradients(oracle, idx, x, mu, workers=workers)
    at_snapshot = estimate_component_gradients(oracle, idx, snapshot.x_tilde, mu, workers=workers)
    return (at_x - at_snapshot).mean(axis=0) + snapshot.g_tilde


# ----------------------------------------------------------------------
# SAGA
# ----------------------------------------------------------------------
@dataclass
class SagaTable:
    """Per-component reference points ``z_i`` and cached estimates ``g_i``.

    ``phi_hat`` is maintained incrementally. :meth:`mean_sq_distance` sums
    ``||x - z_i||^2`` directly over the table: no oracle calls, and no
    cancellation when the iterates sit far from the origin.
    """

    oracle: BlackBoxObjective = field(repr=False)
    z: np.ndarray
    grads: np.ndarray
    phi_hat: np.ndarray
    mu: np.ndarray

    @classmethod
    def initialize(
        cls,
        oracle: BlackBoxObjective,
        x0: np.ndarray,
        mu: float,
        *,
        workers: int | None = None,
    ) -> SagaTable:
        x0 = np.asarray(x0, dtype=float)
        z = np.tile(x0, (oracle.n, 1))
        grads = estimate_component_gradients(oracle, np.arange(oracle.n), x0, mu, workers=workers)
        return cls(
            oracle=oracle,
            z=z,
            grads=grads,
            phi_hat=grads.mean(axis=0),
            mu=np.full(oracle.n, float(mu)),
        )

    @property
    def n(self) -> int:
        return int(self.z.shape[0])

    def recomputed_phi(self) -> np.ndarray:
        return self.grads.mean(axis=0)

    def drift(self) -> float:
        """Largest gap between ``phi_hat`` and the mean recomputed from the table."""

        return float(np.max(np.abs(self.phi_hat - self.recomputed_phi())))

    def mean_sq_distance(self, x: np.ndarray) -> float:
        diff = self.z - np.asarray(x, dtype=float)
        return float(np.mean(np.einsum("ij,ij->i", diff, diff)))


def saga_gradient(
    oracle: BlackBoxObjective,
    batch: IndexBatch,
    x: np.ndarray,
    table: SagaTable,
    mu: float,
    *,
    workers: int | None = None,
) -> np.ndarray:
    """``(1/b) sum_{i in I} (grad_i(x) - g_i) + phi_hat``; leaves *table* untouched."""

    direction, _ = _saga_direction(oracle, batch, x, table, mu, workers=workers)
    return direction


def _saga_direction(
    oracle: BlackBoxObjective,
    batch: IndexBatch,
    x: np.ndarray,
    table: SagaTable,
    mu: float,
    *,
    workers: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    idx = _as_indices(batch)
    if idx.size == 0:
        raise EmptyBatch("el mini-batch está vacío")
    rows = estimate_component_gradients(oracle, idx, x, mu, workers=workers)
    return (rows - table.grads[idx]).mean(axis=0) + table.phi_hat, rows


def saga_update(
    table: SagaTable,
    batch: IndexBatch,
    x_prev: np.ndarray,
    mu: float,
    *,
    gradients: np.ndarray | None = None,
    workers: int | None = None,
) -> SagaTable:
    """Refresh ``z_i <- x_prev`` and ``g_i`` for each distinct index in *batch*.

    ``gradients`` may carry the estimates already measured at ``x_prev`` for
    the rows of *batch* (same order, same ``mu``); otherwise they are
    measured here, 2d evaluations per distinct index. The table is updated
    in place and returned.
    """

    idx = _as_indices(batch)
    if idx.size == 0:
        return table
    distinct, first = np.unique(idx, return_index=True)
    x_prev = np.asarray(x_prev, dtype=float)
    if gradients is None:
        fresh = estimate_component_gradients(table.oracle, distinct, x_prev, mu, workers=workers)
    else:
        fresh = np.asarray(gradients, dtype=float)[first]

    old_grads = table.grads[distinct]
    table.phi_hat = table.phi_hat - (old_grads - fresh).sum(axis=0) / table.n
    table.grads[distinct] = fresh
    table.z[distinct] = x_prev
    table.mu[distinct] = float(mu)
    return table
