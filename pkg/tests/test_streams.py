from __future__ import annotations

import numpy as np
import pytest

from copstream.streams import (
    Instance,
    StreamConfig,
    export_stream,
    load_stream,
    make_capricious,
    make_trapezoidal,
    mask_labels,
    synthesize,
    trapezoid_chunk_sizes,
)
from copstream.synthetic import make_cluster_dataset

from conftest import build_dataset


def _dense_dataset(n: int, d: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n, d)).tolist()
    labels = [1 if v > 0 else -1 for v in rng.normal(size=n)]
    return build_dataset(rows, labels)


def test_keep_prob_one_exposes_everything():
    ds = _dense_dataset(50, 6)
    stream = make_capricious(ds, StreamConfig(regime="capricious", keep_prob=1.0, seed=1))
    assert all(len(inst.observed) == 6 for inst in stream)


def test_capricious_mean_exposure_matches_binomial():
    ds = _dense_dataset(1000, 30)
    stream = make_capricious(ds, StreamConfig(regime="capricious", keep_prob=0.5, seed=7))
    mean_observed = np.mean([len(inst.observed) for inst in stream])
    assert 14.0 <= mean_observed <= 16.0


def test_capricious_deterministic_under_seed():
    ds = _dense_dataset(200, 10)
    cfg = StreamConfig(regime="capricious", keep_prob=0.3, seed=42)
    a = make_capricious(ds, cfg)
    b = make_capricious(ds, cfg)
    assert all(x.observed == y.observed for x, y in zip(a, b))


def test_capricious_never_empty():
    ds = _dense_dataset(500, 8)
    stream = make_capricious(
        ds, StreamConfig(regime="capricious", keep_prob=0.01, seed=3)
    )
    assert all(len(inst.observed) >= 1 for inst in stream)


def test_capricious_values_match_source():
    ds = _dense_dataset(100, 5)
    stream = make_capricious(ds, StreamConfig(regime="capricious", keep_prob=0.5, seed=9))
    for inst in stream:
        for j, v in inst.observed.items():
            assert v == ds.records[inst.t][j]


def test_trapezoid_prefix_widths():
    ds = _dense_dataset(100, 20)
    cfg = StreamConfig(regime="trapezoidal", n_chunks=10, seed=0)
    stream = make_trapezoidal(ds, cfg)
    assert set(stream[0].observed) == {0, 1}
    assert set(stream[-1].observed) == set(range(20))


def test_trapezoid_single_chunk_exposes_all():
    ds = _dense_dataset(30, 7)
    stream = make_trapezoidal(ds, StreamConfig(regime="trapezoidal", n_chunks=1, seed=0))
    assert all(len(inst.observed) == 7 for inst in stream)


def test_trapezoid_ceiling_widths_d7_k3():
    ds = _dense_dataset(9, 7)
    stream = make_trapezoidal(ds, StreamConfig(regime="trapezoidal", n_chunks=3, seed=0))
    widths = [len(inst.observed) for inst in stream]
    assert widths == [3, 3, 3, 5, 5, 5, 7, 7, 7]


def test_trapezoid_chunk_sizes_take_remainder_early():
    assert trapezoid_chunk_sizes(10, 3) == [4, 3, 3]
    assert trapezoid_chunk_sizes(9, 3) == [3, 3, 3]


def test_trapezoid_exposure_monotone():
    ds = _dense_dataset(83, 13)
    stream = make_trapezoidal(ds, StreamConfig(regime="trapezoidal", n_chunks=7, seed=0))
    previous: set[int] = set()
    boundary_growth = []
    for inst in stream:
        current = set(inst.observed)
        if previous and not previous <= current:
            boundary_growth.append(inst.t)
        previous = current
    assert boundary_growth == []


def test_trapezoid_sparse_record_force_reveals_lowest():
    ds = build_dataset([[None, None, 1.5], [0.5, None, None]], [1, -1])
    stream = make_trapezoidal(ds, StreamConfig(regime="trapezoidal", n_chunks=2, seed=0))
    # chunk 1 exposes features {0} only; first record has nothing there
    assert stream[0].observed == {2: 1.5}
    assert stream[1].observed == {0: 0.5}


def test_mask_ratio_zero_keeps_all_labels():
    ds = _dense_dataset(100, 4)
    stream = synthesize(ds, StreamConfig(regime="capricious", keep_prob=1.0, seed=0))
    assert all(inst.label is not None for inst in stream)


def test_mask_ratio_point_nine_band():
    ds = _dense_dataset(1000, 4)
    stream = synthesize(
        ds,
        StreamConfig(
            regime="capricious", keep_prob=1.0, label_missing_ratio=0.9, seed=11
        ),
    )
    labeled = sum(inst.label is not None for inst in stream)
    assert 70 <= labeled <= 130


def test_masking_ratio_zero_is_identity():
    ds = _dense_dataset(50, 4)
    stream = synthesize(
        ds,
        StreamConfig(
            regime="capricious", keep_prob=0.7, label_missing_ratio=0.5, seed=2
        ),
    )
    again = mask_labels(stream, 0.0, seed=999)
    assert again is stream


def test_masking_preserves_true_label_and_feature_exposure():
    ds = _dense_dataset(300, 6)
    base = StreamConfig(regime="capricious", keep_prob=0.5, seed=5)
    masked_cfg = StreamConfig(
        regime="capricious", keep_prob=0.5, label_missing_ratio=0.7, seed=5
    )
    plain = synthesize(ds, base)
    masked = synthesize(ds, masked_cfg)
    for a, b in zip(plain, masked):
        assert a.observed == b.observed
        assert b.true_label == a.true_label == ds.labels[a.t]
        if b.label is not None:
            assert b.label == b.true_label
    assert any(b.label is None for b in masked)


def test_stream_length_equals_dataset_length():
    ds = _dense_dataset(123, 5)
    for regime, kwargs in (
        ("capricious", {"keep_prob": 0.4}),
        ("trapezoidal", {"n_chunks": 9}),
    ):
        stream = synthesize(ds, StreamConfig(regime=regime, seed=1, **kwargs))
        assert len(stream) == 123
        assert [inst.t for inst in stream] == list(range(123))


def test_export_import_round_trip(tmp_path):
    ds = make_cluster_dataset(n=40, d=3, seed=4)
    stream = synthesize(
        ds,
        StreamConfig(
            regime="capricious", keep_prob=0.6, label_missing_ratio=0.3, seed=8
        ),
    )
    path = tmp_path / "stream.jsonl"
    export_stream(stream, path)
    back = load_stream(path)
    assert back == stream


def test_stream_config_rejects_bad_fields():
    with pytest.raises(ValueError):
        StreamConfig(regime="capricious", keep_prob=0.0)
    with pytest.raises(ValueError):
        StreamConfig(regime="trapezoidal", n_chunks=0)
    with pytest.raises(ValueError):
        StreamConfig(regime="capricious", label_missing_ratio=1.0)
    with pytest.raises(ValueError):
        StreamConfig(regime="sawtooth")


def test_trapezoid_rejects_more_chunks_than_rows():
    ds = _dense_dataset(5, 3)
    with pytest.raises(ValueError):
        make_trapezoidal(ds, StreamConfig(regime="trapezoidal", n_chunks=6, seed=0))


def test_instance_dense_zero_fills():
    inst = Instance(t=0, observed={1: 2.5}, label=1, true_label=1)
    assert inst.dense(3).tolist() == [0.0, 2.5, 0.0]
