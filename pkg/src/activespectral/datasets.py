"""Benchmark dataset helpers: bundled UCI sets and synthetic blob generators.

Everything here is reproducible offline: wine ships with scikit-learn,
balance-scale is fully determined by its generating rule, and blobs are
seeded draws.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .data import Dataset


def wine_dataset() -> Dataset:
    """UCI Wine: 178 samples, 13 features, 3 classes."""
    from sklearn.datasets import load_wine

    raw = load_wine()
    return Dataset(features=raw.data, labels=raw.target)


def balance_dataset() -> Dataset:
    """UCI Balance Scale: all 5^4 weight/distance combinations, 3 classes.

    The class is the side with the larger weight x distance torque (or
    balanced), so the full dataset can be enumerated instead of downloaded.
    """
    rows, labels = [], []
    for lw in range(1, 6):
        for ld in range(1, 6):
            for rw in range(1, 6):
                for rd in range(1, 6):
                    rows.append([lw, ld, rw, rd])
                    left, right = lw * ld, rw * rd
                    labels.append("B" if left == right else ("L" if left > right else "R"))
    return Dataset(features=np.array(rows, dtype=float), labels=np.array(labels))


def synthetic_blobs(
    n: int,
    classes: int,
    cluster_std: float = 1.0,
    box: float = 10.0,
    dim: int = 2,
    seed: int = 0,
) -> Dataset:
    """Isotropic Gaussian blobs with equal-ish class sizes."""
    from sklearn.datasets import make_blobs

    features, labels = make_blobs(
        n_samples=n, centers=classes, n_features=dim,
        cluster_std=cluster_std, center_box=(-box, box), random_state=seed,
    )
    return Dataset(features=features, labels=labels)


def write_csv(ds: Dataset, path, include_labels: bool = True) -> Path:
    """Write a dataset as feature columns plus (optionally) a final label column."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.features[i]]
            if include_labels and ds.labels is not None:
                row.append(int(ds.labels[i]))
            writer.writerow(row)
    return path


BUILTIN_DATASETS = {
    "wine": wine_dataset,
    "balance": balance_dataset,
}
