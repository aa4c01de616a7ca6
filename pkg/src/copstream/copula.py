"""Online Gaussian-copula latent space over mixed-type, partially observed data.

Each feature keeps a bounded marginal sketch (a sliding reservoir for
continuous features, level counts for ordinal/binary ones). Observed values
map into a shared latent Gaussian space: continuous values become points
z = ndtri(rank / (m + 1)), discrete levels become truncation intervals from
cumulative level frequencies. A d x d latent correlation matrix is learned
online by blending decayed rank-one moments and re-projecting onto the set
of valid correlation matrices. Conditional means under that matrix fill in
unobserved coordinates and drive the latent-mismatch drift signal.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ColdStartError, SchemaError
from .ingest import CONTINUOUS, TypedSchema
from .streams import Instance

Z_CLIP = 6.0
EIG_FLOOR = 1e-6
RIDGE = 1e-6
DEFAULT_WINDOW = 256
DEFAULT_DECAY_FLOOR = 0.01

_SNAPSHOT_VERSION = 1


def _phi(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def truncated_normal_mean(a: float, b: float) -> float:
    """Mean of a standard normal truncated to [a, b]."""
    mass = ndtr(b) - ndtr(a)
    if mass <= 0.0:
        return 0.5 * (a + b)
    return (_phi(a) - _phi(b)) / mass


def project_to_correlation(mat: np.ndarray) -> np.ndarray:
    """Nearest-in-spirit valid correlation matrix: symmetric, PSD, unit diagonal."""
    sym = 0.5 * (mat + mat.T)
    evals, evecs = np.linalg.eigh(sym)
    evals = np.clip(evals, EIG_FLOOR, None)
    out = (evecs * evals) @ evecs.T
    scale = np.sqrt(np.diag(out))
    out = out / np.outer(scale, scale)
    out = np.clip(0.5 * (out + out.T), -1.0, 1.0)
    np.fill_diagonal(out, 1.0)
    return out


@dataclass
class MarginalSketch:
    """Bounded empirical marginal for one feature."""

    feature_id: int
    kind: str
    capacity: int = DEFAULT_WINDOW
    values: deque = field(default_factory=deque)
    levels: dict = field(default_factory=dict)
    count: int = 0
    _sorted: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_empty(self) -> bool:
        return self.count == 0

    def observe(self, value: float) -> None:
        if self.kind == CONTINUOUS:
            if len(self.values) >= self.capacity:
                self.values.popleft()
            self.values.append(float(value))
            self._sorted = None
        else:
            key = float(value)
            self.levels[key] = self.levels.get(key, 0) + 1
        self.count += 1

    def sorted_values(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(np.asarray(self.values, dtype=float))
        return self._sorted

    def continuous_to_z(self, x: float) -> float:
        s = self.sorted_values()
        m = len(s)
        rank = int(np.searchsorted(s, x, side="right"))
        u = rank / (m + 1)
        return float(np.clip(ndtri(u), -Z_CLIP, Z_CLIP))

    def level_interval(self, level: float) -> tuple[float, float]:
        level = float(level)
        if level not in self.levels:
            raise ColdStartError(
                f"feature {self.feature_id}: level {level} never observed"
            )
        total = sum(self.levels.values())
        below = sum(c for v, c in self.levels.items() if v < level)
        incl = below + self.levels[level]
        a = -Z_CLIP if below == 0 else float(ndtri(below / total))
        b = Z_CLIP if incl == total else float(ndtri(incl / total))
        a = float(np.clip(a, -Z_CLIP, Z_CLIP))
        b = float(np.clip(b, -Z_CLIP, Z_CLIP))
        if b <= a:  # degenerate tail mass after clipping
            a, b = a - 1e-9, a + 1e-9
        return a, b

    def z_to_value(self, z: float) -> float:
        """Inverse empirical transform; prior-mean value 0 when unseen."""
        if self.is_empty:
            return 0.0
        u = float(ndtr(z))
        if self.kind == CONTINUOUS:
            s = self.sorted_values()
            m = len(s)
            k = int(np.clip(round(u * (m + 1)), 1, m))
            return float(s[k - 1])
        total = sum(self.levels.values())
        acc = 0
        ordered = sorted(self.levels)
        for v in ordered:
            acc += self.levels[v]
            if u < acc / total:
                return v
        return ordered[-1]


@dataclass
class LatentObservation:
    """Latent-space view of one instance: points, intervals, and the gaps."""

    points: dict[int, float]
    intervals: dict[int, tuple[float, float]]
    missing: frozenset[int]

    @property
    def observed_ids(self) -> list[int]:
        return sorted(set(self.points) | set(self.intervals))

    def z_observed(self) -> np.ndarray:
        """Point coordinates as-is, interval coordinates as truncated means."""
        out = []
        for j in self.observed_ids:
            if j in self.points:
                out.append(self.points[j])
            else:
                out.append(truncated_normal_mean(*self.intervals[j]))
        return np.asarray(out, dtype=float)


@dataclass
class ImputeResult:
    z: np.ndarray
    x_rec: np.ndarray
    prior_only: bool = False


class CopulaState:
    """Marginal sketches plus the latent correlation matrix for one run."""

    def __init__(
        self,
        schema: TypedSchema,
        window: int = DEFAULT_WINDOW,
        decay_floor: float = DEFAULT_DECAY_FLOOR,
    ) -> None:
        if not 0.0 < decay_floor <= 1.0:
            raise ValueError("decay_floor must be in (0, 1]")
        self.schema = schema
        self.window = window
        self.decay_floor = decay_floor
        self.sketches = [
            MarginalSketch(j, schema.kind(j), capacity=window)
            for j in range(schema.d)
        ]
        self.sigma = np.eye(schema.d)
        self.step = 0

    @property
    def d(self) -> int:
        return self.schema.d

    # -- marginals ---------------------------------------------------------

    def update_marginal(self, feature_id: int, value: float) -> None:
        if not 0 <= feature_id < self.d:
            raise SchemaError(f"unknown feature id {feature_id}")
        self.sketches[feature_id].observe(value)

    # -- latent transforms -------------------------------------------------

    def to_latent(self, instance: Instance) -> LatentObservation:
        points: dict[int, float] = {}
        intervals: dict[int, tuple[float, float]] = {}
        for j in sorted(instance.observed):
            sketch = self.sketches[j]
            if sketch.is_empty:
                raise ColdStartError(
                    f"feature {j} observed before any marginal update"
                )
            v = instance.observed[j]
            if sketch.kind == CONTINUOUS:
                points[j] = sketch.continuous_to_z(v)
            else:
                intervals[j] = sketch.level_interval(v)
        seen = set(points) | set(intervals)
        missing = frozenset(j for j in range(self.d) if j not in seen)
        return LatentObservation(points=points, intervals=intervals, missing=missing)

    def impute(self, obs: LatentObservation) -> ImputeResult:
        """Complete the latent vector and map it back to observed space.

        Observed coordinates keep their latent value (interval coordinates use
        the single-coordinate truncated-normal mean); missing coordinates get
        the conditional Gaussian mean under the current correlation matrix.
        """
        z = np.zeros(self.d)
        obs_ids = obs.observed_ids
        if not obs_ids:
            x_rec = np.array([s.z_to_value(0.0) for s in self.sketches])
            return ImputeResult(z=z, x_rec=x_rec, prior_only=True)
        z_obs = obs.z_observed()
        z[obs_ids] = z_obs
        miss_ids = sorted(obs.missing)
        if miss_ids:
            sub = self.sigma[np.ix_(obs_ids, obs_ids)].copy()
            sub[np.diag_indices_from(sub)] += RIDGE
            w = np.linalg.solve(sub, z_obs)
            z[miss_ids] = self.sigma[np.ix_(miss_ids, obs_ids)] @ w
        x_rec = np.array([s.z_to_value(zj) for s, zj in zip(self.sketches, z)])
        return ImputeResult(z=z, x_rec=x_rec, prior_only=False)

    # -- correlation learning ----------------------------------------------

    def update_correlation(self, obs: LatentObservation) -> None:
        """Blend the imputed rank-one moment into sigma and re-project."""
        z = self.impute(obs).z
        self.step += 1
        gamma = max(self.decay_floor, 1.0 / self.step)
        blended = (1.0 - gamma) * self.sigma + gamma * np.outer(z, z)
        self.sigma = project_to_correlation(blended)

    def latent_mismatch(
        self, window: list[tuple[LatentObservation, np.ndarray]]
    ) -> float:
        """Mean per-coordinate conditional reconstruction error of observed coords.

        For each windowed observation, every observed coordinate is predicted
        from the other observed coordinates under sigma; the residual norm is
        scaled by sqrt(#observed). Large scores mean the current correlation
        model no longer explains incoming data.
        """
        if not window:
            raise ValueError("mismatch window must be nonempty")
        total = 0.0
        for obs, _z_full in window:
            obs_ids = obs.observed_ids
            if not obs_ids:
                continue
            z_obs = obs.z_observed()
            sub = self.sigma[np.ix_(obs_ids, obs_ids)].copy()
            sub[np.diag_indices_from(sub)] += RIDGE
            lam = np.linalg.inv(sub)
            resid = (lam @ z_obs) / np.diag(lam)
            total += float(np.linalg.norm(resid)) / math.sqrt(len(obs_ids))
        return total / len(window)

    # -- invariants & snapshots ----------------------------------------------

    def check_invariants(self, tol: float = 1e-8) -> None:
        if not np.allclose(self.sigma, self.sigma.T, atol=1e-12):
            raise AssertionError("sigma not symmetric")
        if np.max(np.abs(np.diag(self.sigma) - 1.0)) >= 1e-9:
            raise AssertionError("sigma diagonal not unit")
        if np.min(np.linalg.eigvalsh(self.sigma)) < -tol:
            raise AssertionError("sigma not PSD")

    def to_snapshot(self) -> str:
        sketches = []
        for s in self.sketches:
            entry: dict = {"kind": s.kind, "count": s.count}
            if s.kind == CONTINUOUS:
                entry["reservoir"] = list(s.values)
            else:
                entry["levels"] = {repr(v): c for v, c in sorted(s.levels.items())}
            sketches.append(entry)
        payload = {
            "version": _SNAPSHOT_VERSION,
            "d": self.d,
            "window": self.window,
            "decay_floor": self.decay_floor,
            "step": self.step,
            "sigma": [float(v) for v in self.sigma.ravel()],
            "sketches": sketches,
            "schema": [
                {"kind": f.kind, "levels": f.levels} for f in self.schema.features
            ],
        }
        return json.dumps(payload)

    @classmethod
    def from_snapshot(cls, text: str) -> "CopulaState":
        from .ingest import FeatureType

        payload = json.loads(text)
        if payload.get("version") != _SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {payload.get('version')}")
        schema = TypedSchema(
            tuple(FeatureType(f["kind"], f["levels"]) for f in payload["schema"])
        )
        state = cls(
            schema, window=payload["window"], decay_floor=payload["decay_floor"]
        )
        state.step = payload["step"]
        d = payload["d"]
        state.sigma = np.asarray(payload["sigma"], dtype=float).reshape(d, d)
        for sketch, entry in zip(state.sketches, payload["sketches"]):
            sketch.count = entry["count"]
            if sketch.kind == CONTINUOUS:
                sketch.values = deque(entry["reservoir"])
            else:
                sketch.levels = {float(v): c for v, c in entry["levels"].items()}
        return state

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_snapshot())

    @classmethod
    def load(cls, path: str | Path) -> "CopulaState":
        return cls.from_snapshot(Path(path).read_text())
