"""Geometric pseudo-labeling from a bounded buffer of labeled latent points.

Unlabeled instances receive the inverse-distance-weighted vote of their k
nearest labeled neighbors in the copula latent space. Votes weaker than a
confidence threshold abstain, so uncertain neighborhoods contribute no
supervision at all.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

DEFAULT_K = 5
DEFAULT_MIN_CONF = 0.3
DEFAULT_CAPACITY = 200

_DIST_EPS = 1e-8


@dataclass(frozen=True)
class PseudoProposal:
    label: int
    confidence: float
    k_used: int


@dataclass(frozen=True)
class _Entry:
    z: np.ndarray
    label: int
    t: int


class LabelBuffer:
    """FIFO ring of recent labeled instances in latent coordinates."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY) -> None:
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.entries: deque[_Entry] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self.entries)

    def insert(self, z: np.ndarray, label: int, t: int) -> None:
        if label not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {label!r}")
        self.entries.append(_Entry(z=np.asarray(z, dtype=float), label=label, t=t))

    def clear(self) -> None:
        self.entries.clear()

    def propose(
        self,
        z: np.ndarray,
        k: int = DEFAULT_K,
        min_conf: float = DEFAULT_MIN_CONF,
    ) -> PseudoProposal | None:
        """Inverse-distance-weighted k-NN vote; None when the vote abstains.

        Neighbor ties at equal distance resolve toward the older timestamp,
        so the proposal is independent of insertion order.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if len(self.entries) < k:
            return None
        z = np.asarray(z, dtype=float)
        scored = sorted(
            ((float(np.linalg.norm(e.z - z)), e.t, e.label) for e in self.entries)
        )[:k]
        weights = np.array([1.0 / (dist + _DIST_EPS) for dist, _, _ in scored])
        labels = np.array([label for _, _, label in scored], dtype=float)
        vote = float(weights @ labels / weights.sum())
        if abs(vote) < min_conf or vote == 0.0:
            return None
        return PseudoProposal(
            label=1 if vote > 0 else -1,
            confidence=min(abs(vote), 1.0),
            k_used=k,
        )
