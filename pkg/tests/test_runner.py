from __future__ import annotations

import numpy as np
import pytest

from copstream.ensemble import DriftEvent
from copstream.errors import ConfigError
from copstream.learners import Prediction
from copstream.runner import (
    CerTracker,
    OnlinePipeline,
    RunConfig,
    config_hash,
    prepare_dataset,
    run_experiment,
    run_grid,
)
from copstream.streams import StreamConfig, synthesize
from copstream.synthetic import make_cluster_dataset, make_drift_dataset

from conftest import build_dataset


def _cfg(**kwargs) -> RunConfig:
    base = dict(dataset="mem.csv", method="ol_mdisf", regime="capricious", seed=1)
    base.update(kwargs)
    return RunConfig.from_dict(base)


def _sign_dataset(n: int = 300, d: int = 3, seed: int = 0):
    """Labels are the sign of the first feature; features are unique reals."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    labels = [1 if row[0] >= 0 else -1 for row in x]
    return build_dataset(x.tolist(), labels)


class _OracleLearner:
    """Test hook: computes labels from a lookup keyed by the input vector."""

    def __init__(self, lookup):
        self.lookup = lookup

    def predict(self, x) -> Prediction:
        return Prediction(float(self.lookup[tuple(np.round(x, 9))]))

    def update(self, x, y, weight=1.0) -> None:
        pass


class _LeakProbe:
    """Memorizes labels on update; exposes them only for inputs already seen."""

    def __init__(self):
        self.memory = {}

    def predict(self, x) -> Prediction:
        return Prediction(float(self.memory.get(tuple(x), 1.0)))

    def update(self, x, y, weight=1.0) -> None:
        self.memory[tuple(x)] = y


def test_cer_tracker_examples():
    tracker = CerTracker()
    values = [tracker.update(i < 3) for i in range(10)]
    assert values[-1] == pytest.approx(0.3)
    clean = CerTracker()
    assert [clean.update(False) for _ in range(7)][-1] == 0.0
    dirty = CerTracker()
    assert [dirty.update(True) for _ in range(4)][-1] == 1.0


def test_trajectory_lengths_match_stream():
    ds = make_cluster_dataset(n=120, d=3, seed=2)
    res = run_experiment(_cfg(keep_prob=0.8), dataset=ds)
    assert res.n == 120
    assert len(res.cer_trajectory) == 120
    assert len(res.alpha_trajectory) == 120
    assert len(res.trace) == 120


def test_oracle_learner_yields_zero_cer():
    ds = _sign_dataset()
    cfg = _cfg(method="perceptron", keep_prob=1.0)
    prepared = prepare_dataset(cfg, ds)
    lookup = {
        tuple(np.round(
            [rec.get(j, 0.0) for j in range(prepared.d)], 9
        )): label
        for rec, label in zip(prepared.records, prepared.labels)
    }
    res = run_experiment(
        cfg, dataset=ds, learner_factory=lambda kind, dim: _OracleLearner(lookup)
    )
    assert res.final_cer == 0.0


def test_no_label_leakage_into_predictions():
    # random labels on unique inputs: a memorizing learner can only score
    # ~0.5 if each prediction happens before that instance's label is shown
    rng = np.random.default_rng(3)
    x = rng.normal(size=(400, 3))
    labels = [1 if rng.random() < 0.5 else -1 for _ in range(400)]
    ds = build_dataset(x.tolist(), labels)
    res = run_experiment(
        _cfg(method="perceptron", keep_prob=1.0),
        dataset=ds,
        learner_factory=lambda kind, dim: _LeakProbe(),
    )
    assert res.final_cer >= 0.4


def test_cer_trajectory_is_running_mistake_mean():
    ds = make_drift_dataset(n=400, flip_at=200, seed=4)
    res = run_experiment(_cfg(keep_prob=0.7, seed=5), dataset=ds)
    mistakes = np.array([row["mistake"] for row in res.trace])
    recomputed = np.cumsum(mistakes) / np.arange(1, len(mistakes) + 1)
    assert np.array_equal(recomputed, np.array(res.cer_trajectory))


def test_runs_are_deterministic():
    ds = make_drift_dataset(n=300, flip_at=150, seed=6)
    a = run_experiment(_cfg(seed=7), dataset=ds)
    b = run_experiment(_cfg(seed=7), dataset=ds)
    assert a.trace == b.trace
    assert a.final_cer == b.final_cer


def test_ablation_methods_equal_pinned_full_pipeline():
    ds = make_drift_dataset(n=400, flip_at=200, seed=8)
    for method, alpha in [("ol_mdisf_f", (1.0, 0.0)), ("ol_mdisf_l", (0.0, 1.0))]:
        cfg_ab = _cfg(method=method, seed=9)
        res_ab = run_experiment(cfg_ab, dataset=ds)

        cfg_full = _cfg(method="ol_mdisf", seed=9)
        prepared = prepare_dataset(cfg_full, ds)
        stream = synthesize(prepared, cfg_full.stream_config())
        pipeline = OnlinePipeline(prepared.schema, cfg_full)
        pipeline.ensemble.fixed_alpha = alpha
        tracker = CerTracker()
        pinned_traj = [
            tracker.update(pipeline.step(inst).prediction_label != inst.true_label)
            for inst in stream
        ]
        assert pinned_traj == res_ab.cer_trajectory


def test_alpha_pinned_for_ablations():
    ds = make_cluster_dataset(n=150, d=3, seed=10)
    res_f = run_experiment(_cfg(method="ol_mdisf_f"), dataset=ds)
    assert set(res_f.alpha_trajectory) == {1.0}
    res_l = run_experiment(_cfg(method="ol_mdisf_l"), dataset=ds)
    assert set(res_l.alpha_trajectory) == {0.0}


def test_on_drift_resets_mixture_and_boosts_rates():
    ds = make_cluster_dataset(n=200, d=3, seed=11)
    cfg = _cfg(keep_prob=1.0)
    prepared = prepare_dataset(cfg, ds)
    stream = synthesize(prepared, cfg.stream_config())
    pipeline = OnlinePipeline(prepared.schema, cfg)
    for inst in stream[:50]:
        pipeline.step(inst)
    for _ in range(5):
        pipeline.ensemble.update_weights(1.0, 0.0)
    assert pipeline.ensemble.alpha[0] < 0.5
    pipeline.buffer.insert(np.zeros(prepared.d), 1, 49)

    event = DriftEvent(49, "entropy", 0.9, 0.1, 0.5, 0.5)
    pipeline.on_drift(event)
    assert pipeline.ensemble.alpha == pytest.approx((0.5, 0.5))
    assert len(pipeline.buffer) == 0
    width = pipeline.detector.width

    boosted = []
    for inst in stream[50 : 50 + width + 2]:
        pipeline.step(inst)
        boosted.append(pipeline.learner_f.rate_boost)
    assert boosted[0] == cfg.drift.lr_boost
    assert boosted[width - 1] == cfg.drift.lr_boost
    assert boosted[width] == 1.0  # boost expires after `width` instances
    assert pipeline.copula.decay_floor == cfg.copula.decay_floor


def test_baseline_rows_leave_pipeline_columns_empty():
    ds = make_cluster_dataset(n=80, d=3, seed=12)
    res = run_experiment(_cfg(method="ridge"), dataset=ds)
    assert res.alpha_trajectory is None
    assert all(row["alpha1"] is None for row in res.trace)
    assert all(row["entropy"] is None for row in res.trace)
    assert res.drift_events == []


def test_weight_snapshots_recorded():
    ds = make_cluster_dataset(n=100, d=3, seed=13)
    res = run_experiment(_cfg(weight_snapshot_every=25), dataset=ds)
    assert len(res.weight_snapshots) == 4 * 2  # F and L per checkpoint
    res_b = run_experiment(_cfg(method="lr", weight_snapshot_every=25), dataset=ds)
    assert len(res_b.weight_snapshots) == 4
    assert len(res_b.weight_snapshots[0]) == 2 + 3 + 1  # t, name, weights, bias


def test_config_validation_rejects_nonsense():
    with pytest.raises(ConfigError):
        _cfg(method="gradient_boosting").validate()
    with pytest.raises(ConfigError):
        _cfg(regime="sawtooth").validate()
    with pytest.raises(ConfigError):
        _cfg(label_missing_ratio=1.0).validate()
    with pytest.raises(ConfigError):
        _cfg(keep_prob=0.0).validate()
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"dataset": "x.csv", "methodd": "lr"})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"dataset": "x.csv", "drift": {"widht": 10}})


def test_config_round_trips_through_dict():
    cfg = _cfg(
        method="ol_mdisf_l",
        regime="trapezoidal",
        n_chunks=5,
        copula={"window": 64},
        drift={"enabled": False},
    )
    again = RunConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)
    assert again.copula.window == 64
    assert again.drift.enabled is False


def test_grid_runs_cells_in_order_and_isolates_failures(tmp_path):
    ds_path = tmp_path / "tiny.csv"
    from copstream.ingest import write_dataset

    write_dataset(make_cluster_dataset(n=60, d=3, seed=14), ds_path)
    ok_a = RunConfig(dataset=str(ds_path), method="lr", seed=1)
    bad = RunConfig(dataset=str(tmp_path / "missing.csv"), method="lr", seed=1)
    ok_b = RunConfig(dataset=str(ds_path), method="pac", seed=1)
    cells = run_grid([ok_a, bad, ok_b])
    assert [cell.ok for cell in cells] == [True, False, True]
    assert "FileNotFoundError" in cells[1].error
    assert cells[0].result.run_id.startswith("tiny_capricious")


def test_grid_parallelism_matches_serial(tmp_path):
    from copstream.ingest import write_dataset

    ds_path = tmp_path / "tiny.csv"
    write_dataset(make_drift_dataset(n=150, flip_at=75, seed=15), ds_path)
    configs = [
        RunConfig(dataset=str(ds_path), method=m, seed=3)
        for m in ("lr", "ol_mdisf", "ridge", "ol_mdisf_l")
    ]
    serial = run_grid(configs, parallelism=1)
    parallel = run_grid(configs, parallelism=4)
    for a, b in zip(serial, parallel):
        assert a.result.trace == b.result.trace


def test_empty_grid():
    assert run_grid([]) == []
