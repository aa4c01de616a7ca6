"""Online linear classifiers used as ensemble components and baselines.

All learners share one weight layout: a dense vector of length d plus a
separate bias term (held as the last entry of the internal array). Updates
accept a confidence weight in (0, 1]; weight 1 reproduces the textbook
step and the step size shrinks linearly as the weight approaches 0. The
passive-aggressive learner follows the budget form of PA-I and leaves the
bias untouched, so its closed-form step depends only on the feature norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOGISTIC = "logistic"
PASSIVE_AGGRESSIVE = "passive_aggressive"
PERCEPTRON = "perceptron"
RIDGE_SGD = "ridge_sgd"
HINGE_SGD = "hinge_sgd"

KINDS = (LOGISTIC, PASSIVE_AGGRESSIVE, PERCEPTRON, RIDGE_SGD, HINGE_SGD)

DEFAULT_LEARNING_RATE = 0.1
DEFAULT_L2 = 1e-4
DEFAULT_PA_C = 1.0


@dataclass(frozen=True)
class Prediction:
    margin: float

    @property
    def label(self) -> int:
        return 1 if self.margin >= 0.0 else -1


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


class LinearLearner:
    """One online linear model; kind selects the update rule."""

    def __init__(
        self,
        kind: str,
        dim: int,
        learning_rate: float = DEFAULT_LEARNING_RATE,
        l2: float = DEFAULT_L2,
        pa_c: float = DEFAULT_PA_C,
    ) -> None:
        if kind not in KINDS:
            raise ValueError(f"unknown learner kind {kind!r}")
        self.kind = kind
        self.dim = dim
        self.learning_rate = learning_rate
        self.l2 = l2
        self.pa_c = pa_c
        # feature weights then bias; fixed length dim + 1
        self.w = np.zeros(dim + 1)
        self.update_count = 0
        self.rate_boost = 1.0

    def clone(self) -> "LinearLearner":
        other = LinearLearner(
            self.kind, self.dim, self.learning_rate, self.l2, self.pa_c
        )
        other.w = self.w.copy()
        other.update_count = self.update_count
        other.rate_boost = self.rate_boost
        return other

    @property
    def bias(self) -> float:
        return float(self.w[-1])

    def margin(self, x: np.ndarray) -> float:
        return float(self.w[:-1] @ x + self.w[-1])

    def predict(self, x: np.ndarray) -> Prediction:
        if len(x) != self.dim:
            raise ValueError(f"expected {self.dim} features, got {len(x)}")
        return Prediction(self.margin(x))

    def update(self, x: np.ndarray, y: int, weight: float = 1.0) -> None:
        """Apply one confidence-weighted step of this learner's rule.

        A step that would leave non-finite or astronomically large weights
        (constant-rate squared loss can blow up on large-norm inputs) is
        rolled back, so the model stays usable even under a divergent
        hyperparameter choice.
        """
        if y not in (-1, 1):
            raise ValueError(f"label must be -1 or +1, got {y!r}")
        if not 0.0 < weight <= 1.0:
            raise ValueError(f"update weight must be in (0, 1], got {weight}")
        x = np.asarray(x, dtype=float)
        if len(x) != self.dim:
            raise ValueError(f"expected {self.dim} features, got {len(x)}")
        before = self.w.copy()
        with np.errstate(over="ignore", invalid="ignore"):
            self._apply_step(x, y, weight)
            bad = not np.all(np.isfinite(self.w)) or np.max(np.abs(self.w)) > 1e100
        if bad:
            self.w = before
        self.update_count += 1

    def _apply_step(self, x: np.ndarray, y: int, weight: float) -> None:
        m = self.margin(x)
        eta = self.learning_rate * self.rate_boost

        if self.kind == LOGISTIC:
            coef = eta * weight * y * _sigmoid(-y * m)
            self.w[:-1] += coef * x
            self.w[-1] += coef
        elif self.kind == PERCEPTRON:
            if y * m <= 0.0:
                self.w[:-1] += weight * y * x
                self.w[-1] += weight * y
        elif self.kind == PASSIVE_AGGRESSIVE:
            hinge = max(0.0, 1.0 - y * m)
            if hinge > 0.0:
                c_eff = self.pa_c * self.rate_boost
                tau = min(c_eff, hinge / (float(x @ x) + 1e-12)) * weight
                self.w[:-1] += tau * y * x
        elif self.kind == RIDGE_SGD:
            resid = m - y
            self.w[:-1] -= eta * weight * (resid * x + self.l2 * self.w[:-1])
            self.w[-1] -= eta * weight * resid
        elif self.kind == HINGE_SGD:
            self.w[:-1] *= 1.0 - eta * weight * self.l2
            if y * m < 1.0:
                self.w[:-1] += eta * weight * y * x
                self.w[-1] += eta * weight * y

    def snapshot_row(self) -> list[float]:
        """Weights as a flat row (features then bias) for checkpoint CSVs."""
        return [float(v) for v in self.w]


# Table-style method ids for the baseline classifiers.
BASELINE_KINDS = {
    "lr": LOGISTIC,
    "pac": PASSIVE_AGGRESSIVE,
    "perceptron": PERCEPTRON,
    "ridge": RIDGE_SGD,
    "sgdc": HINGE_SGD,
}
