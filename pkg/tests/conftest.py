import numpy as np
import pytest

from pathchain.geometry import KernelMatrix, PointCloud, gaussian_kernel, pairwise_distances


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the 20 x 20 Ising reproduction")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def random_kernel(n: int, seed: int) -> KernelMatrix:
    """Positive symmetric matrix with entries in (0.05, 1)."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.05, 1.0, size=(n, n))
    return KernelMatrix((w + w.T) / 2, "random")


def random_cloud(n: int, dim: int, seed: int) -> PointCloud:
    rng = np.random.default_rng(seed)
    return PointCloud.from_array(rng.normal(size=(n, dim)))


def two_blobs(n_per_blob: int = 20, seed: int = 0) -> PointCloud:
    rng = np.random.default_rng(seed)
    left = rng.normal(loc=(-2.0, 0.0), scale=0.5, size=(n_per_blob, 2))
    right = rng.normal(loc=(2.0, 0.0), scale=0.5, size=(n_per_blob, 2))
    labels = ["left"] * n_per_blob + ["right"] * n_per_blob
    ids = [f"p{i:03d}" for i in range(2 * n_per_blob)]
    return PointCloud.from_array(np.vstack([left, right]), ids=ids, labels=labels)


@pytest.fixture
def blobs() -> PointCloud:
    return two_blobs()


@pytest.fixture
def small_gaussian_kernel() -> KernelMatrix:
    cloud = random_cloud(30, 2, seed=3)
    return gaussian_kernel(pairwise_distances(cloud), 0.8)
