"""Splittings of structured-sparsity models into ADMM form."""

from __future__ import annotations

import logging
from collections.abc import Sequence

import numpy as np
from scipy import sparse

from ..core.errors import CoverageError, DimensionMismatch
from ..core.oracle import BlackBoxObjective
from ..core.penalties import GroupL2Penalty, L1Penalty, PenaltyBlock
from ..core.problem import ConstrainedProblem, validate_problem
from .graphs import GraphMatrix
from .losses import LinearModelOracle

logger = logging.getLogger(__name__)

DEFAULT_TAU = 1e-5


def _lipschitz(oracle: BlackBoxObjective, lipschitz_L: float | None) -> float:
    if lipschitz_L is not None:
        return float(lipschitz_L)
    if isinstance(oracle, LinearModelOracle):
        return oracle.lipschitz_bound()
    return 1.0


def build_fused_lasso_problem(
    oracle: BlackBoxObjective,
    graph: GraphMatrix,
    tau1: float = DEFAULT_TAU,
    tau2: float = DEFAULT_TAU,
    *,
    lipschitz_L: float | None = None,
) -> ConstrainedProblem:
    """``f(x) + tau1 ||x||_1 + tau2 ||G x||_1`` with ``y1 = x`` and ``y2 = G x``.

    Encoded as ``A = [I; G]``, ``B1 = [-I; 0]``, ``B2 = [0; -I]``, ``c = 0``.
    An empty graph drops the second block.
    """

    d = oracle.dim
    if graph.d != d:
        raise DimensionMismatch(f"el grafo tiene {graph.d} nodos, el oráculo dimensión {d}")
    e = graph.n_edges
    eye = sparse.identity(d, format="csr")
    A = sparse.vstack([eye, graph.G], format="csr")
    blocks = [PenaltyBlock(sparse.vstack([-eye, sparse.csr_matrix((e, d))]), L1Penalty(tau1))]
    if e:
        B2 = sparse.vstack([sparse.csr_matrix((d, e)), -sparse.identity(e, format="csr")])
        blocks.append(PenaltyBlock(B2, L1Penalty(tau2)))
    else:
        logger.info("Grafo sin aristas: se omite el bloque de fused lasso")
    problem = ConstrainedProblem(
        objective=oracle,
        blocks=tuple(blocks),
        A=A,
        c=np.zeros(d + e),
        lipschitz_L=_lipschitz(oracle, lipschitz_L),
        name="fused-lasso",
        metadata={"tau1": tau1, "tau2": tau2, "edges": e},
    )
    validate_problem(problem)
    return problem


def fused_lasso_objective(
    oracle: BlackBoxObjective, graph: GraphMatrix, x: np.ndarray, tau1: float, tau2: float
) -> float:
    """The unsplit objective, for equivalence checks."""

    return (
        oracle.mean_value(x)
        + tau1 * float(np.sum(np.abs(x)))
        + tau2 * float(np.sum(np.abs(graph.G @ x)))
    )


def build_group_split_problem(
    oracle: BlackBoxObjective,
    groups: Sequence[Sequence[int]],
    tau: float = DEFAULT_TAU,
    *,
    lipschitz_L: float | None = None,
) -> ConstrainedProblem:
    """One ``y_g = S_g x`` block per (possibly overlapping) group, ``psi_g = tau ||.||_2``."""

    d = oracle.dim
    if not groups:
        raise CoverageError("se necesita al menos un grupo")
    covered: set[int] = set()
    selections = []
    for g, members in enumerate(groups):
        idx = [int(v) for v in members]
        if not idx:
            raise CoverageError(f"el grupo {g} está vacío")
        if min(idx) < 0 or max(idx) >= d:
            raise DimensionMismatch(f"el grupo {g} tiene índices fuera de [0, {d})", g)
        covered.update(idx)
        size = len(idx)
        selections.append(
            sparse.csr_matrix((np.ones(size), (np.arange(size), idx)), shape=(size, d))
        )
    missing = sorted(set(range(d)) - covered)
    if missing:
        raise CoverageError(f"los grupos no cubren las coordenadas {missing[:10]}")

    A = sparse.vstack(selections, format="csr")
    p = A.shape[0]
    blocks = []
    offset = 0
    for S in selections:
        q = S.shape[0]
        B = sparse.csr_matrix(
            (-np.ones(q), (np.arange(offset, offset + q), np.arange(q))), shape=(p, q)
        )
        blocks.append(PenaltyBlock(B, GroupL2Penalty(tau)))
        offset += q
    problem = ConstrainedProblem(
        objective=oracle,
        blocks=tuple(blocks),
        A=A,
        c=np.zeros(p),
        lipschitz_L=_lipschitz(oracle, lipschitz_L),
        name="group-split",
        metadata={"tau": tau, "groups": len(groups)},
    )
    validate_problem(problem)
    return problem


def build_lasso_problem(
    oracle: BlackBoxObjective,
    tau: float = DEFAULT_TAU,
    *,
    lipschitz_L: float | None = None,
) -> ConstrainedProblem:
    """``f(x) + tau ||y||_1`` subject to ``x - y = 0``."""

    d = oracle.dim
    eye = sparse.identity(d, format="csr")
    problem = ConstrainedProblem(
        objective=oracle,
        blocks=(PenaltyBlock(-eye, L1Penalty(tau)),),
        A=eye,
        c=np.zeros(d),
        lipschitz_L=_lipschitz(oracle, lipschitz_L),
        name="lasso",
        metadata={"tau": tau},
    )
    validate_problem(problem)
    return problem
