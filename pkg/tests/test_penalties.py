from __future__ import annotations

import numpy as np
import pytest
from scipy import sparse

from zoadmm.core.errors import ProxUnavailable
from zoadmm.core.penalties import (
    GroupL2Penalty,
    L1Penalty,
    PenaltyBlock,
    ZeroPenalty,
    prox_group_l2,
    prox_l1,
)


def test_prox_l1_soft_thresholds_each_coordinate() -> None:
    out = prox_l1(np.array([3.0, -0.5, 1.0, -2.0]), 1.0)
    assert np.allclose(out, [2.0, 0.0, 0.0, -1.0])


def test_prox_group_l2_shrinks_whole_block() -> None:
    assert np.allclose(prox_group_l2(np.array([3.0, 4.0]), 1.0), [2.4, 3.2])
    assert np.array_equal(prox_group_l2(np.array([0.3, 0.4]), 0.5), [0.0, 0.0])


@pytest.mark.parametrize("penalty", [L1Penalty(0.7), GroupL2Penalty(0.7), ZeroPenalty()])
def test_prox_minimizes_its_objective(penalty) -> None:
    rng = np.random.default_rng(3)
    tau = 0.4
    for _ in range(20):
        v = rng.normal(size=5)
        y = penalty.prox(v, tau)

        def objective(z):
            return penalty.value(z) + float((z - v) @ (z - v)) / (2 * tau)

        best = objective(y)
        for _ in range(50):
            assert best <= objective(y + 1e-3 * rng.normal(size=5)) + 1e-12


def test_penalty_values() -> None:
    y = np.array([3.0, -4.0])
    assert L1Penalty(2.0).value(y) == pytest.approx(14.0)
    assert GroupL2Penalty(2.0).value(y) == pytest.approx(10.0)
    assert ZeroPenalty().value(y) == 0.0


def test_negative_weight_rejected() -> None:
    with pytest.raises(ValueError):
        L1Penalty(-1.0)


def test_block_requires_closed_form_prox() -> None:
    class NotAPenalty:
        def value(self, y):
            return 0.0

    with pytest.raises(ProxUnavailable):
        PenaltyBlock(sparse.identity(2), NotAPenalty())  # type: ignore[arg-type]


def test_block_shapes_and_defaults() -> None:
    block = PenaltyBlock(np.ones((3, 2)))
    assert (block.p, block.q) == (3, 2)
    assert sparse.issparse(block.B)
    assert isinstance(block.penalty, ZeroPenalty)


@pytest.mark.parametrize("penalty", [L1Penalty(0.7), GroupL2Penalty(0.7), ZeroPenalty()])
def test_prox_beats_random_candidates_for_any_step(penalty) -> None:
    rng = np.random.default_rng(11)
    for _ in range(20):
        v = rng.normal(size=4) * 3.0
        tau = float(rng.uniform(1e-3, 10.0))
        p = penalty.prox(v, tau)
        best = penalty.value(p) + float((p - v) @ (p - v)) / (2 * tau)
        for _ in range(100):
            w = rng.normal(size=4) * 3.0
            assert best <= penalty.value(w) + float((w - v) @ (w - v)) / (2 * tau) + 1e-10


@pytest.mark.parametrize("penalty", [L1Penalty(0.7), GroupL2Penalty(0.7), ZeroPenalty()])
def test_prox_tends_to_identity_as_step_vanishes(penalty) -> None:
    v = np.array([1.5, -0.2, 0.03, -4.0])
    errors = [float(np.max(np.abs(penalty.prox(v, tau) - v))) for tau in (1e-2, 1e-4, 1e-6)]
    assert errors[-1] <= 1e-5
    assert errors == sorted(errors, reverse=True)
