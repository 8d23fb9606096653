from __future__ import annotations

import numpy as np
import pytest

from activespectral import datasets


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def wine_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "wine.csv"
    datasets.write_csv(datasets.wine_dataset(), path)
    return path


@pytest.fixture(scope="session")
def balance_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "balance.csv"
    datasets.write_csv(datasets.balance_dataset(), path)
    return path


@pytest.fixture(scope="session")
def blobs3_csv(tmp_path_factory):
    """Three well-separated blobs, n=60."""
    path = tmp_path_factory.mktemp("data") / "blobs3.csv"
    ds = datasets.synthetic_blobs(n=60, classes=3, cluster_std=0.6, box=8.0, seed=7)
    datasets.write_csv(ds, path)
    return path
