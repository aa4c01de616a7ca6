"""Synthetic dataset generators for tests, demos, and the desk-scale corpus.

The classic small benchmark tables (wpbc, ionosphere, wdbc, wbc) are not
redistributable from here, so the corpus generator produces deterministic
stand-ins with the same shapes and type mixes: correlated latent Gaussian
draws pushed through per-column monotone transforms or quantile bins, with
labels from a noisy linear rule in latent space.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .ingest import Dataset, write_dataset


def random_correlation(d: int, rng: np.random.Generator, strength: float = 1.0) -> np.ndarray:
    """Random correlation matrix; strength scales the off-diagonal mass."""
    a = rng.normal(size=(d, max(1, d // 2)))
    cov = a @ a.T + np.eye(d) * d / max(1.0, 4.0 * strength)
    scale = np.sqrt(np.diag(cov))
    return cov / np.outer(scale, scale)


def equicorrelation(d: int, rho: float) -> np.ndarray:
    sigma = np.full((d, d), rho)
    np.fill_diagonal(sigma, 1.0)
    return sigma


def _quantile_bins(z: np.ndarray, levels: int, base: float = 0.0) -> np.ndarray:
    """Equiprobable discretization of standard normal draws into level values."""
    cuts = ndtri(np.arange(1, levels) / levels)
    return np.digitize(z, cuts).astype(float) + base


def gaussian_copula_dataset(
    sigma: np.ndarray,
    n: int,
    kinds: list[str],
    seed: int = 0,
    name: str = "copula",
    label_noise: float = 0.0,
) -> tuple[Dataset, np.ndarray]:
    """Sample a dataset with known latent correlation.

    ``kinds`` entries are ``"continuous"``, ``"continuous:exp"``,
    ``"binary"``, or ``"ordinal:<levels>"``. Returns the dataset together
    with the true latent draws so estimators can be scored against the
    latent-space oracle.
    """
    d = len(kinds)
    if sigma.shape != (d, d):
        raise ValueError("sigma shape does not match kinds")
    rng = np.random.default_rng(seed)
    z = rng.multivariate_normal(np.zeros(d), sigma, size=n)
    cols = np.empty_like(z)
    for j, kind in enumerate(kinds):
        base, _, arg = kind.partition(":")
        if base == "continuous":
            cols[:, j] = np.exp(z[:, j]) if arg == "exp" else z[:, j]
        elif base == "binary":
            cols[:, j] = (z[:, j] > 0).astype(float)
        elif base == "ordinal":
            cols[:, j] = _quantile_bins(z[:, j], int(arg))
        else:
            raise ValueError(f"unknown column kind {kind!r}")
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    margins = z @ w
    labels = np.where(margins >= 0, 1, -1)
    if label_noise > 0:
        flip = rng.random(n) < label_noise
        labels = np.where(flip, -labels, labels)
    records = [{j: float(cols[i, j]) for j in range(d)} for i in range(n)]
    return (
        Dataset(name=name, records=records, labels=[int(v) for v in labels], d=d),
        z,
    )


def make_drift_dataset(
    n: int = 2000,
    d_cont: int = 4,
    d_ord: int = 2,
    ordinal_levels: int = 4,
    flip_at: int = 1000,
    label_noise: float = 0.05,
    correlation: float = 0.5,
    margin: float = 0.0,
    seed: int = 0,
    name: str = "flipstream",
) -> Dataset:
    """Mixed-type table whose labeling rule reverses sign at row flip_at.

    ``margin`` > 0 rejection-samples rows until the labeling score clears
    that gap, yielding a cleanly separated concept on both sides of the flip.
    """
    d = d_cont + d_ord
    rng = np.random.default_rng(seed)
    sigma = equicorrelation(d, correlation)
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    rows = []
    while len(rows) < n:
        draw = rng.multivariate_normal(np.zeros(d), sigma, size=n)
        score = draw @ w
        keep = draw[np.abs(score) >= margin]
        rows.extend(keep.tolist())
    z = np.asarray(rows[:n])
    cols = z.copy()
    for j in range(d_cont, d):
        cols[:, j] = _quantile_bins(z[:, j], ordinal_levels)
    margins = z @ w
    labels = np.where(margins >= 0, 1, -1)
    labels[flip_at:] = -labels[flip_at:]
    if label_noise > 0:
        noisy = rng.random(n) < label_noise
        labels = np.where(noisy, -labels, labels)
    records = [{j: float(cols[i, j]) for j in range(d)} for i in range(n)]
    return Dataset(name=name, records=records, labels=[int(v) for v in labels], d=d)


def make_cluster_dataset(
    n: int = 1500,
    d: int = 4,
    separation: float = 3.0,
    seed: int = 0,
    name: str = "clusters",
) -> Dataset:
    """Two spherical Gaussian clusters; the label is the cluster identity."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    labels = np.where(rng.random(n) < 0.5, 1, -1)
    x = rng.normal(size=(n, d)) + np.outer(labels * separation / 2.0, direction)
    records = [{j: float(x[i, j]) for j in range(d)} for i in range(n)]
    return Dataset(name=name, records=records, labels=[int(v) for v in labels], d=d)


# (rows, continuous, ordinal with levels, binary, label noise) per stand-in.
_CORPUS_SHAPES = {
    "wpbc": (198, 30, (3, 5), 0, 0.20),
    "ionosphere": (351, 32, (0, 0), 2, 0.15),
    "wdbc": (569, 30, (0, 0), 0, 0.08),
    "wbc": (699, 0, (9, 10), 0, 0.10),
    "stream": (1000, 8, (2, 4), 0, 0.15),
}

CORPUS_NAMES = tuple(_CORPUS_SHAPES)


def make_corpus_dataset(name: str, seed: int = 7) -> Dataset:
    if name not in _CORPUS_SHAPES:
        raise ValueError(f"no stand-in shape for {name!r}")
    n, n_cont, (n_ord, levels), n_bin, noise = _CORPUS_SHAPES[name]
    kinds = (
        ["continuous"] * n_cont
        + [f"ordinal:{levels}"] * n_ord
        + ["binary"] * n_bin
    )
    d = len(kinds)
    rng = np.random.default_rng(seed + sum(map(ord, name)))
    sigma = random_correlation(d, rng)
    ds, _ = gaussian_copula_dataset(
        sigma,
        n,
        kinds,
        seed=seed + 1000 + sum(map(ord, name)),
        name=name,
        label_noise=noise,
    )
    if name == "stream":
        # the stand-in stream table carries a mid-table concept reversal
        half = n // 2
        ds.labels[half:] = [-y for y in ds.labels[half:]]
    return ds


def make_benchmark_corpus(
    out_dir: str | Path,
    names: tuple[str, ...] = ("wpbc", "ionosphere", "wdbc", "wbc"),
    seed: int = 7,
) -> list[Path]:
    """Write the stand-in corpus as CSV files and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in names:
        ds = make_corpus_dataset(name, seed=seed)
        path = out_dir / f"{name}.csv"
        write_dataset(ds, path, format="csv")
        paths.append(path)
    return paths
