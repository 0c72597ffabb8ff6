"""Training losses and their gradients with respect to predicted probabilities.

Cross-entropy is averaged over every predicted row (sample x link).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import DomainError

EPS = 1e-12

__all__ = [
    "EPS",
    "cross_entropy",
    "cross_entropy_grad",
    "l1_penalty",
    "loss_ce_l1",
    "sharing_penalty",
    "loss_ldp_shared",
    "neighbor_allocation_indicators",
]


def _rows(pred: np.ndarray) -> int:
    return int(np.prod(pred.shape[:-1]))


def cross_entropy(pred: np.ndarray, target: np.ndarray) -> float:
    return float(-(target * np.log(pred + EPS)).sum() / _rows(pred))


def cross_entropy_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    return -target / (pred + EPS) / _rows(pred)


def l1_penalty(weights: Sequence[np.ndarray]) -> float:
    return float(sum(np.abs(w).sum() for w in weights))


def loss_ce_l1(pred, target, weights: Sequence[np.ndarray], l1_weight: float) -> float:
    if l1_weight < 0:
        raise DomainError(f"l1_weight must be >= 0, got {l1_weight}")
    loss = cross_entropy(pred, target)
    if l1_weight:
        loss += l1_weight * l1_penalty(weights)
    return loss


def sharing_penalty(pred: np.ndarray, indicators: np.ndarray) -> float:
    """Expected fraction of links whose RB is already held by a conflicting neighbor.

    ``indicators[..., r] = 1`` when some neighbor of the link is allocated RB
    ``r`` in the target allocation.  Equals the hard collision fraction when
    ``pred`` is one-hot.
    """
    return float((pred * indicators).sum() / _rows(pred))


def loss_ldp_shared(pred, target, indicators, mu: float) -> float:
    if mu < 0:
        raise DomainError(f"mu must be >= 0, got {mu}")
    return cross_entropy(pred, target) + mu * sharing_penalty(pred, indicators)


def neighbor_allocation_indicators(adjacency: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``adjacency`` (n, L, L) against one-hot ``target`` (n, L, N) -> (n, L, N) in {0, 1}."""
    return (np.einsum("nij,njr->nir", adjacency, target) > 0).astype(float)
