"""Two-learner weighted ensemble and the dual-signal drift detector.

The ensemble mixes tanh-squashed margins with multiplicative (hedge)
weights kept on the 2-simplex. Disagreement between the component labels,
weighted by those same simplex weights, gives the entropy drift signal;
the copula reconstruction error supplies the second signal. The detector
compares a trailing reference window against the current window and fires
when either the entropy mean shifts or the mismatch mean ratio explodes.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .learners import Prediction

DEFAULT_ETA = 0.1

SIMPLEX_TOL = 1e-9

TRIGGER_ENTROPY = "entropy"
TRIGGER_MISMATCH = "mismatch"
TRIGGER_BOTH = "both"


class EnsembleState:
    """Simplex weights over the two component learners plus loss accounting.

    Weights live in log space so long runs of multiplicative updates stay
    numerically exact; ``fixed_alpha`` pins the weights for ablation runs.
    """

    def __init__(
        self,
        eta: float = DEFAULT_ETA,
        fixed_alpha: tuple[float, float] | None = None,
    ) -> None:
        if eta <= 0:
            raise ValueError("eta must be positive")
        self.eta = eta
        self.fixed_alpha = fixed_alpha
        self.log_w = np.zeros(2)
        self.cumulative_losses = np.zeros(2)
        self._check_simplex()

    @property
    def alpha(self) -> tuple[float, float]:
        if self.fixed_alpha is not None:
            return self.fixed_alpha
        shifted = self.log_w - self.log_w.max()
        w = np.exp(shifted)
        w /= w.sum()
        return float(w[0]), float(w[1])

    def _check_simplex(self) -> None:
        a1, a2 = self.alpha
        if not (a1 >= 0.0 and a2 >= 0.0 and abs(a1 + a2 - 1.0) <= SIMPLEX_TOL):
            raise AssertionError(f"simplex invariant violated: {(a1, a2)}")

    def update_weights(self, loss_f: float, loss_l: float) -> None:
        """Multiplicative update alpha_i <- alpha_i * exp(-eta * loss_i)."""
        if not (0.0 <= loss_f <= 1.0 and 0.0 <= loss_l <= 1.0):
            raise ValueError("losses must lie in [0, 1]")
        self.cumulative_losses += (loss_f, loss_l)
        if self.fixed_alpha is None:
            self.log_w -= self.eta * np.array([loss_f, loss_l])
            self.log_w -= self.log_w.max()
        self._check_simplex()

    def reset(self) -> None:
        """Return to the uniform mixture (pinned runs stay pinned)."""
        self.log_w = np.zeros(2)
        self._check_simplex()


def combine(p_f: Prediction, p_l: Prediction, ens: EnsembleState) -> Prediction:
    """Mix tanh-squashed margins so neither learner's scale dominates."""
    a1, a2 = ens.alpha
    return Prediction(a1 * math.tanh(p_f.margin) + a2 * math.tanh(p_l.margin))


def ensemble_entropy(p_f: Prediction, p_l: Prediction, ens: EnsembleState) -> float:
    """Binary entropy of the weighted vote mass on label +1, in [0, 1]."""
    a1, a2 = ens.alpha
    q = a1 * (p_f.label == 1) + a2 * (p_l.label == 1)
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


@dataclass(frozen=True)
class DriftEvent:
    t: int
    trigger: str
    entropy_current: float
    entropy_reference: float
    mismatch_current: float
    mismatch_reference: float


@dataclass(frozen=True)
class DetectorParams:
    width: int = 100
    w_min: int = 50
    w_max: int = 400
    theta_entropy: float = 0.3
    theta_mismatch: float = 2.0
    mismatch_eps: float = 1e-6
    cooldown: int = 100

    def __post_init__(self) -> None:
        if not self.w_min <= self.width <= self.w_max:
            raise ValueError("need w_min <= width <= w_max")
        if self.w_min < 1 or self.cooldown < 0:
            raise ValueError("invalid detector geometry")


class _SignalWindow:
    """Deque of (entropy, mismatch) pairs with O(1) running means."""

    def __init__(self) -> None:
        self.buf: deque[tuple[float, float]] = deque()
        self.sum_entropy = 0.0
        self.sum_mismatch = 0.0

    def __len__(self) -> int:
        return len(self.buf)

    def push(self, pair: tuple[float, float]) -> None:
        self.buf.append(pair)
        self.sum_entropy += pair[0]
        self.sum_mismatch += pair[1]

    def pop_oldest(self) -> tuple[float, float]:
        pair = self.buf.popleft()
        self.sum_entropy -= pair[0]
        self.sum_mismatch -= pair[1]
        return pair

    def means(self) -> tuple[float, float]:
        n = len(self.buf)
        return self.sum_entropy / n, self.sum_mismatch / n

    def take_all(self) -> list[tuple[float, float]]:
        out = list(self.buf)
        self.buf.clear()
        self.sum_entropy = 0.0
        self.sum_mismatch = 0.0
        return out


class DriftDetector:
    """Adaptive two-window mean-shift detector over the paired drift signals.

    Pairs enter the sliding current window; its overflow cascades into the
    trailing reference window, so between firings the reference always holds
    the signals immediately preceding the current window and stale warmup
    behavior ages out of both. A firing promotes the current window to
    reference, clears the current window, halves the adaptive width toward
    w_min (fast re-confirmation on the fresh regime), and starts a cooldown
    during which nothing can fire. Quiet streaks of w_max observations after
    a firing relax the width back toward w_max. Detection requires both
    windows full, so it is impossible below w_min.
    """

    def __init__(self, params: DetectorParams | None = None) -> None:
        self.params = params or DetectorParams()
        self.width = self.params.width
        self.reference = _SignalWindow()
        self.current = _SignalWindow()
        self.cooldown_left = 0
        self.quiet_steps = 0
        self.events: list[DriftEvent] = []

    def observe(self, t: int, entropy: float, mismatch: float) -> DriftEvent | None:
        if not (math.isfinite(entropy) and math.isfinite(mismatch)):
            raise ValueError("drift signals must be finite")
        if entropy < 0.0 or mismatch < 0.0:
            raise ValueError("drift signals must be nonnegative")
        blocked = self.cooldown_left > 0
        if blocked:
            self.cooldown_left -= 1

        self.current.push((entropy, mismatch))
        if len(self.current) > self.width:
            self.reference.push(self.current.pop_oldest())
        while len(self.reference) > self.width:
            self.reference.pop_oldest()

        event = None
        if (
            not blocked
            and len(self.current) == self.width
            and len(self.reference) == self.width
        ):
            ent_cur, mis_cur = self.current.means()
            ent_ref, mis_ref = self.reference.means()
            ent_fire = ent_cur - ent_ref > self.params.theta_entropy
            mis_fire = (
                mis_cur / max(mis_ref, self.params.mismatch_eps)
                > self.params.theta_mismatch
            )
            if ent_fire or mis_fire:
                trigger = (
                    TRIGGER_BOTH
                    if ent_fire and mis_fire
                    else TRIGGER_ENTROPY if ent_fire else TRIGGER_MISMATCH
                )
                event = DriftEvent(
                    t=t,
                    trigger=trigger,
                    entropy_current=ent_cur,
                    entropy_reference=ent_ref,
                    mismatch_current=mis_cur,
                    mismatch_reference=mis_ref,
                )
                self._fire_reset()
                self.events.append(event)

        if event is None and self.events:
            # width relaxation is part of the post-firing recovery cycle
            self.quiet_steps += 1
            if self.quiet_steps >= self.params.w_max:
                self.quiet_steps = 0
                if self.width < self.params.w_max:
                    self.width = min(self.params.w_max, self.width + self.params.w_min)
        return event

    def _fire_reset(self) -> None:
        # The promoted window captures the post-shift regime; everything older
        # belongs to the dead regime and is discarded.
        promoted = self.current.take_all()
        self.width = max(self.params.w_min, self.width // 2)
        self.reference = _SignalWindow()
        for pair in promoted[-self.width :]:
            self.reference.push(pair)
        self.cooldown_left = self.params.cooldown
        self.quiet_steps = 0
