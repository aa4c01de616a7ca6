from __future__ import annotations

import numpy as np
import pytest

from copstream.ingest import Dataset


def build_dataset(
    rows: list[list[float | None]], labels: list[int], name: str = "toy"
) -> Dataset:
    """Dense rows with None for missing cells -> sparse Dataset."""
    d = len(rows[0])
    records = [
        {j: float(v) for j, v in enumerate(row) if v is not None} for row in rows
    ]
    return Dataset(name=name, records=records, labels=labels, d=d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
