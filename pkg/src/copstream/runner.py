"""Experiment runner: wires all components into the online protocol.

Each run follows predict-then-learn: per instance the copula state absorbs
the observed features, the learners predict before any label is revealed,
the mistake against the held-back true label feeds the cumulative error
rate, and only then does supervision (true or pseudo label) update the
models. The full method additionally tracks drift signals and reacts to
detector firings with a plasticity boost instead of a model wipe.
"""

from __future__ import annotations

import hashlib
import json
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .copula import DEFAULT_DECAY_FLOOR, DEFAULT_WINDOW, CopulaState
from .ensemble import (
    DEFAULT_ETA,
    DetectorParams,
    DriftDetector,
    DriftEvent,
    EnsembleState,
    combine,
    ensemble_entropy,
)
from .errors import ConfigError
from .ingest import (
    DEFAULT_ORDINAL_MAX_LEVELS,
    Dataset,
    infer_feature_types,
    parse_dataset,
    standardize,
)
from .learners import (
    BASELINE_KINDS,
    DEFAULT_L2,
    DEFAULT_LEARNING_RATE,
    DEFAULT_PA_C,
    LOGISTIC,
    LinearLearner,
)
from .pseudo import DEFAULT_CAPACITY, DEFAULT_K, DEFAULT_MIN_CONF, LabelBuffer
from .streams import CAPRICIOUS, TRAPEZOIDAL, Instance, StreamConfig, synthesize

OL_METHODS = ("ol_mdisf", "ol_mdisf_f", "ol_mdisf_l")
METHODS = OL_METHODS + tuple(BASELINE_KINDS)

_FIXED_ALPHA = {"ol_mdisf": None, "ol_mdisf_f": (1.0, 0.0), "ol_mdisf_l": (0.0, 1.0)}


@dataclass
class CopulaParams:
    window: int = DEFAULT_WINDOW
    decay_floor: float = DEFAULT_DECAY_FLOOR
    mismatch_window: int = 1


@dataclass
class LearnerParams:
    kind_f: str = LOGISTIC
    kind_l: str = LOGISTIC
    learning_rate: float = DEFAULT_LEARNING_RATE
    l2: float = DEFAULT_L2
    pa_c: float = DEFAULT_PA_C


@dataclass
class EnsembleParams:
    eta: float = DEFAULT_ETA


@dataclass
class DriftParams:
    enabled: bool = True
    width: int = 100
    w_min: int = 50
    w_max: int = 400
    theta_entropy: float = 0.3
    theta_mismatch: float = 2.0
    mismatch_eps: float = 1e-6
    cooldown: int = 100
    lr_boost: float = 3.0
    decay_floor_boost: float = 0.2

    def detector_params(self) -> DetectorParams:
        return DetectorParams(
            width=self.width,
            w_min=self.w_min,
            w_max=self.w_max,
            theta_entropy=self.theta_entropy,
            theta_mismatch=self.theta_mismatch,
            mismatch_eps=self.mismatch_eps,
            cooldown=self.cooldown,
        )


@dataclass
class PseudoParams:
    enabled: bool = True
    k: int = DEFAULT_K
    min_conf: float = DEFAULT_MIN_CONF
    capacity: int = DEFAULT_CAPACITY


@dataclass
class RunConfig:
    dataset: str = ""
    method: str = "ol_mdisf"
    regime: str = CAPRICIOUS
    format: str | None = None
    keep_prob: float = 0.5
    n_chunks: int = 10
    label_missing_ratio: float = 0.0
    seed: int = 0
    ordinal_max_levels: int = DEFAULT_ORDINAL_MAX_LEVELS
    copula: CopulaParams = field(default_factory=CopulaParams)
    learner: LearnerParams = field(default_factory=LearnerParams)
    ensemble: EnsembleParams = field(default_factory=EnsembleParams)
    drift: DriftParams = field(default_factory=DriftParams)
    pseudo: PseudoParams = field(default_factory=PseudoParams)
    weight_snapshot_every: int = 0
    out_dir: str | None = None

    def stream_config(self) -> StreamConfig:
        return StreamConfig(
            regime=self.regime,
            keep_prob=self.keep_prob,
            n_chunks=self.n_chunks,
            label_missing_ratio=self.label_missing_ratio,
            seed=self.seed,
        )

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; pick one of {METHODS}")
        if self.regime not in (CAPRICIOUS, TRAPEZOIDAL):
            raise ConfigError(f"unknown regime {self.regime!r}")
        if not 0.0 <= self.label_missing_ratio < 1.0:
            raise ConfigError("label_missing_ratio must be in [0, 1)")
        if self.regime == CAPRICIOUS and not 0.0 < self.keep_prob <= 1.0:
            raise ConfigError("keep_prob must be in (0, 1]")
        if self.regime == TRAPEZOIDAL and self.n_chunks < 1:
            raise ConfigError("n_chunks must be >= 1")
        if self.copula.window < 1 or self.copula.mismatch_window < 1:
            raise ConfigError("copula windows must be >= 1")
        if not 0.0 < self.copula.decay_floor <= 1.0:
            raise ConfigError("decay_floor must be in (0, 1]")
        if self.pseudo.k < 1 or self.pseudo.capacity < 1:
            raise ConfigError("pseudo k and capacity must be >= 1")
        if self.drift.lr_boost < 1.0:
            raise ConfigError("lr_boost must be >= 1")
        try:
            self.drift.detector_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data)
        kwargs = {}
        nested = {
            "copula": CopulaParams,
            "learner": LearnerParams,
            "ensemble": EnsembleParams,
            "drift": DriftParams,
            "pseudo": PseudoParams,
        }
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in data.items():
            if key in nested and value is not None:
                sub_known = {f.name for f in fields(nested[key])}
                sub_unknown = set(value) - sub_known
                if sub_unknown:
                    raise ConfigError(
                        f"unknown {key} config keys: {sorted(sub_unknown)}"
                    )
                kwargs[key] = nested[key](**value)
            else:
                kwargs[key] = value
        return cls(**kwargs)


def config_hash(config: RunConfig) -> str:
    canon = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def run_id(config: RunConfig) -> str:
    stem = Path(config.dataset).stem if config.dataset else "dataset"
    pct = round(config.label_missing_ratio * 100)
    return f"{stem}_{config.regime}_m{pct}_{config.method}_s{config.seed}"


class CerTracker:
    """Cumulative error rate: mistakes / predictions seen."""

    def __init__(self) -> None:
        self.mistakes = 0
        self.seen = 0

    def update(self, mistake: bool) -> float:
        self.seen += 1
        self.mistakes += int(mistake)
        return self.mistakes / self.seen

    @property
    def cer(self) -> float:
        return self.mistakes / self.seen if self.seen else 0.0


@dataclass
class RunResult:
    run_id: str
    config: dict
    n: int
    final_cer: float
    cer_trajectory: list[float]
    alpha_trajectory: list[float] | None
    drift_events: list[DriftEvent]
    pseudo_proposals: int
    pseudo_correct: int
    trace: list[dict]
    weight_snapshots: list[list]
    wall_clock_s: float


def _default_factory(params: LearnerParams):
    def make(kind: str, dim: int) -> LinearLearner:
        return LinearLearner(
            kind,
            dim,
            learning_rate=params.learning_rate,
            l2=params.l2,
            pa_c=params.pa_c,
        )

    return make


@dataclass
class StepOutcome:
    prediction_label: int
    entropy: float | None
    mismatch: float | None
    event: DriftEvent | None
    pseudo_label: int | None
    pseudo_conf: float | None


class OnlinePipeline:
    """Mutable per-run state of the full copula + ensemble method."""

    def __init__(self, schema, config: RunConfig, learner_factory=None) -> None:
        d = schema.d
        make = learner_factory or _default_factory(config.learner)
        self.config = config
        self.learner_f = make(config.learner.kind_f, d)
        self.learner_l = make(config.learner.kind_l, d)
        self.ensemble = EnsembleState(
            config.ensemble.eta, fixed_alpha=_FIXED_ALPHA[config.method]
        )
        self.copula = CopulaState(
            schema,
            window=config.copula.window,
            decay_floor=config.copula.decay_floor,
        )
        self._base_decay_floor = config.copula.decay_floor
        self.detector = (
            DriftDetector(config.drift.detector_params())
            if config.drift.enabled
            else None
        )
        self.buffer = LabelBuffer(config.pseudo.capacity) if config.pseudo.enabled else None
        self._mismatch_buf = deque(maxlen=config.copula.mismatch_window)
        self.boost_until: int | None = None
        self.drift_events: list[DriftEvent] = []
        self.pseudo_proposals = 0
        self.pseudo_correct = 0

    def _apply_boost_schedule(self, t: int) -> None:
        active = self.boost_until is not None and t <= self.boost_until
        mult = self.config.drift.lr_boost if active else 1.0
        self.learner_f.rate_boost = mult
        self.learner_l.rate_boost = mult
        self.copula.decay_floor = (
            max(self._base_decay_floor, self.config.drift.decay_floor_boost)
            if active
            else self._base_decay_floor
        )

    def on_drift(self, event: DriftEvent) -> None:
        """Non-destructive drift response: reset mixture, boost plasticity.

        Learner weights and the copula state survive; only the ensemble
        mixture returns to uniform, the stale label buffer is dropped, and
        update step sizes are boosted for the next detector-width instances.
        """
        self.drift_events.append(event)
        self.ensemble.reset()
        if self.buffer is not None:
            self.buffer.clear()
        width = self.detector.width if self.detector is not None else 0
        self.boost_until = event.t + width

    def step(self, inst: Instance) -> StepOutcome:
        self._apply_boost_schedule(inst.t)

        for j in sorted(inst.observed):
            self.copula.update_marginal(j, inst.observed[j])
        obs = self.copula.to_latent(inst)
        self.copula.update_correlation(obs)
        imp = self.copula.impute(obs)

        p_f = self.learner_f.predict(imp.x_rec)
        p_l = self.learner_l.predict(imp.z)
        p = combine(p_f, p_l, self.ensemble)

        losses = None
        pseudo = None
        if inst.label is not None:
            y = inst.label
            losses = (float(p_f.label != y), float(p_l.label != y))
            self.learner_f.update(imp.x_rec, y, 1.0)
            self.learner_l.update(imp.z, y, 1.0)
            if self.buffer is not None:
                self.buffer.insert(imp.z, y, inst.t)
        elif self.buffer is not None:
            pseudo = self.buffer.propose(
                imp.z, self.config.pseudo.k, self.config.pseudo.min_conf
            )
            if pseudo is not None:
                self.learner_f.update(imp.x_rec, pseudo.label, pseudo.confidence)
                self.learner_l.update(imp.z, pseudo.label, pseudo.confidence)
                self.pseudo_proposals += 1
                self.pseudo_correct += int(pseudo.label == inst.true_label)

        entropy = ensemble_entropy(p_f, p_l, self.ensemble)
        self._mismatch_buf.append((obs, imp.z))
        mismatch = self.copula.latent_mismatch(list(self._mismatch_buf))

        event = None
        if self.detector is not None:
            event = self.detector.observe(inst.t, entropy, mismatch)
            if event is not None:
                self.on_drift(event)
        if losses is not None:
            self.ensemble.update_weights(*losses)

        return StepOutcome(
            prediction_label=p.label,
            entropy=entropy,
            mismatch=mismatch,
            event=event,
            pseudo_label=pseudo.label if pseudo else None,
            pseudo_conf=pseudo.confidence if pseudo else None,
        )


def _trace_row(
    t: int,
    cer: float,
    mistake: bool,
    alpha1: float | None,
    outcome: StepOutcome | None,
    true_label: int,
) -> dict:
    return {
        "t": t,
        "cer": cer,
        "mistake": int(mistake),
        "alpha1": alpha1,
        "entropy": outcome.entropy if outcome else None,
        "mismatch": outcome.mismatch if outcome else None,
        "drift": int(outcome.event is not None) if outcome else None,
        "drift_trigger": outcome.event.trigger if outcome and outcome.event else "",
        "pseudo_label": outcome.pseudo_label if outcome else None,
        "pseudo_conf": outcome.pseudo_conf if outcome else None,
        "pseudo_true": (
            true_label if outcome and outcome.pseudo_label is not None else None
        ),
    }


def prepare_dataset(config: RunConfig, dataset: Dataset | None = None) -> Dataset:
    ds = dataset if dataset is not None else parse_dataset(config.dataset, config.format)
    if ds.schema is None:
        schema = infer_feature_types(ds, config.ordinal_max_levels)
        ds = standardize(ds, schema)
    return ds


def run_experiment(
    config: RunConfig,
    dataset: Dataset | None = None,
    learner_factory=None,
) -> RunResult:
    """Execute one (dataset, regime, missing-ratio, method) cell."""
    config.validate()
    started = time.perf_counter()
    ds = prepare_dataset(config, dataset)
    stream = synthesize(ds, config.stream_config())

    tracker = CerTracker()
    trace: list[dict] = []
    cer_traj: list[float] = []
    alpha_traj: list[float] | None = None
    snapshots: list[list] = []
    every = config.weight_snapshot_every

    if config.method in BASELINE_KINDS:
        make = learner_factory or _default_factory(config.learner)
        model = make(BASELINE_KINDS[config.method], ds.d)
        for inst in stream:
            x = inst.dense(ds.d)
            p = model.predict(x)
            mistake = p.label != inst.true_label
            cer = tracker.update(mistake)
            if inst.label is not None:
                model.update(x, inst.label, 1.0)
            cer_traj.append(cer)
            trace.append(_trace_row(inst.t, cer, mistake, None, None, inst.true_label))
            if every and (inst.t + 1) % every == 0:
                snapshots.append([inst.t, config.method] + model.snapshot_row())
        pipeline = None
    else:
        pipeline = OnlinePipeline(ds.schema, config, learner_factory)
        alpha_traj = []
        for inst in stream:
            out = pipeline.step(inst)
            mistake = out.prediction_label != inst.true_label
            cer = tracker.update(mistake)
            alpha1 = pipeline.ensemble.alpha[0]
            cer_traj.append(cer)
            alpha_traj.append(alpha1)
            trace.append(
                _trace_row(inst.t, cer, mistake, alpha1, out, inst.true_label)
            )
            if every and (inst.t + 1) % every == 0:
                snapshots.append([inst.t, "F"] + pipeline.learner_f.snapshot_row())
                snapshots.append([inst.t, "L"] + pipeline.learner_l.snapshot_row())

    return RunResult(
        run_id=run_id(config),
        config=config.to_dict(),
        n=len(stream),
        final_cer=tracker.cer,
        cer_trajectory=cer_traj,
        alpha_trajectory=alpha_traj,
        drift_events=list(pipeline.drift_events) if pipeline else [],
        pseudo_proposals=pipeline.pseudo_proposals if pipeline else 0,
        pseudo_correct=pipeline.pseudo_correct if pipeline else 0,
        trace=trace,
        weight_snapshots=snapshots,
        wall_clock_s=time.perf_counter() - started,
    )


@dataclass
class GridCell:
    config: RunConfig
    result: RunResult | None
    error: str | None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run_cell(config_dict: dict) -> tuple[dict | None, str | None]:
    config = RunConfig.from_dict(config_dict)
    try:
        result = run_experiment(config)
        return result.__dict__, None
    except Exception as exc:  # per-cell isolation: the grid must not abort
        return None, f"{type(exc).__name__}: {exc}"


def run_grid(configs: list[RunConfig], parallelism: int = 1) -> list[GridCell]:
    """Run independent cells, optionally in parallel; order follows the input."""
    payloads = [c.to_dict() for c in configs]
    if parallelism > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            raw = list(pool.map(_run_cell, payloads))
    else:
        raw = [_run_cell(p) for p in payloads]
    cells = []
    for config, (result_dict, error) in zip(configs, raw):
        result = RunResult(**result_dict) if result_dict is not None else None
        cells.append(GridCell(config=config, result=result, error=error))
    return cells
