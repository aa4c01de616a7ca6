"""Stream synthesis: turn a static dataset into an evolving-feature stream.

Two regimes are supported. Capricious streams expose a random feature
subset per instance; trapezoidal streams grow the visible feature prefix
in contiguous chunks. Label masking is independent of feature masking so
the same seed yields the same feature exposure at every missing ratio.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import Dataset

CAPRICIOUS = "capricious"
TRAPEZOIDAL = "trapezoidal"

_FEATURE_STREAM = 0
_LABEL_STREAM = 1


@dataclass(frozen=True)
class StreamConfig:
    regime: str = CAPRICIOUS
    keep_prob: float = 0.5
    n_chunks: int = 10
    label_missing_ratio: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.regime not in (CAPRICIOUS, TRAPEZOIDAL):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.regime == CAPRICIOUS and not 0.0 < self.keep_prob <= 1.0:
            raise ValueError("keep_prob must be in (0, 1]")
        if self.regime == TRAPEZOIDAL and self.n_chunks < 1:
            raise ValueError("n_chunks must be >= 1")
        if not 0.0 <= self.label_missing_ratio < 1.0:
            raise ValueError("label_missing_ratio must be in [0, 1)")


@dataclass
class Instance:
    """One stream element; true_label is held back for evaluation only."""

    t: int
    observed: dict[int, float]
    label: int | None
    true_label: int

    def dense(self, d: int) -> np.ndarray:
        """Observed values scattered into a zero-filled length-d vector."""
        x = np.zeros(d)
        for j, v in self.observed.items():
            x[j] = v
        return x


def _rng(seed: int, stream: int) -> np.random.Generator:
    # Philox is counter-based, so substreams never collide.
    child = np.random.SeedSequence(seed).spawn(2)[stream]
    return np.random.Generator(np.random.Philox(child))


def make_capricious(dataset: Dataset, config: StreamConfig) -> list[Instance]:
    """Expose each present feature independently with probability keep_prob.

    An instance that would end up empty gets one uniformly chosen present
    feature force-revealed, so every instance shows at least one feature.
    """
    if config.regime != CAPRICIOUS:
        raise ValueError("config regime is not capricious")
    rng = _rng(config.seed, _FEATURE_STREAM)
    out = []
    for t, (rec, label) in enumerate(zip(dataset.records, dataset.labels)):
        present = sorted(rec)
        keep = rng.random(len(present)) < config.keep_prob
        observed = {j: rec[j] for j, k in zip(present, keep) if k}
        if not observed:
            j = present[int(rng.integers(len(present)))]
            observed = {j: rec[j]}
        out.append(Instance(t=t, observed=observed, label=label, true_label=label))
    return mask_labels(out, config.label_missing_ratio, config.seed)


def trapezoid_chunk_sizes(n: int, n_chunks: int) -> list[int]:
    base, rem = divmod(n, n_chunks)
    return [base + 1 if i < rem else base for i in range(n_chunks)]


def make_trapezoidal(dataset: Dataset, config: StreamConfig) -> list[Instance]:
    """Expose the feature prefix [0, ceil(i*d/n_chunks)) in chunk i (1-based).

    Chunks are contiguous and near-equal, earlier chunks absorbing the
    remainder. If a sparse record has nothing inside the prefix, its
    lowest-indexed present feature is revealed instead so the instance is
    never empty.
    """
    if config.regime != TRAPEZOIDAL:
        raise ValueError("config regime is not trapezoidal")
    n_chunks = config.n_chunks
    if n_chunks > dataset.n:
        raise ValueError(f"n_chunks={n_chunks} exceeds dataset size {dataset.n}")
    sizes = trapezoid_chunk_sizes(dataset.n, n_chunks)
    out = []
    t = 0
    for i, size in enumerate(sizes, start=1):
        width = -(-i * dataset.d // n_chunks)  # ceil
        for _ in range(size):
            rec = dataset.records[t]
            label = dataset.labels[t]
            observed = {j: v for j, v in rec.items() if j < width}
            if not observed:
                j = min(rec)
                observed = {j: rec[j]}
            out.append(
                Instance(t=t, observed=observed, label=label, true_label=label)
            )
            t += 1
    return mask_labels(out, config.label_missing_ratio, config.seed)


def mask_labels(stream: list[Instance], ratio: float, seed: int) -> list[Instance]:
    """Remove each instance's label independently with probability ratio."""
    if not 0.0 <= ratio < 1.0:
        raise ValueError("ratio must be in [0, 1)")
    if ratio == 0.0:
        return stream
    rng = _rng(seed, _LABEL_STREAM)
    drop = rng.random(len(stream)) < ratio
    return [
        Instance(
            t=inst.t,
            observed=inst.observed,
            label=None if hide else inst.label,
            true_label=inst.true_label,
        )
        for inst, hide in zip(stream, drop)
    ]


def synthesize(dataset: Dataset, config: StreamConfig) -> list[Instance]:
    if config.regime == CAPRICIOUS:
        return make_capricious(dataset, config)
    return make_trapezoidal(dataset, config)


def export_stream(stream: list[Instance], path: str | Path) -> None:
    """Write one JSON object per line for cross-implementation diffing."""
    with open(path, "w") as fh:
        for inst in stream:
            row = {
                "t": inst.t,
                "x": {str(j): inst.observed[j] for j in sorted(inst.observed)},
                "y": inst.label,
                "y_true": inst.true_label,
            }
            fh.write(json.dumps(row) + "\n")


def load_stream(path: str | Path) -> list[Instance]:
    out = []
    with open(path) as fh:
        for line in fh:
            row = json.loads(line)
            out.append(
                Instance(
                    t=row["t"],
                    observed={int(j): v for j, v in row["x"].items()},
                    label=row["y"],
                    true_label=row["y_true"],
                )
            )
    return out
