"""Point clouds, pairwise distances and affinity kernels."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

from pathchain.errors import DegenerateInputError, InputError, ParameterError

logger = logging.getLogger(__name__)

# Gaussian tails underflow to 0.0; the chain theory needs strictly positive kernels.
KERNEL_FLOOR = 1e-300


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    ids: tuple[str, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2:
            raise InputError(f"points must be an N x n matrix, got shape {points.shape}")
        n_points, n_dims = points.shape
        if n_points < 2:
            raise InputError(f"a point cloud needs at least 2 points, got {n_points}")
        if n_dims < 1:
            raise InputError("points need at least one coordinate")
        bad = np.argwhere(~np.isfinite(points))
        if bad.size:
            row = int(bad[0][0])
            raise InputError(f"non-finite coordinate at point {row} ({self.ids[row]!r})")
        if len(self.ids) != n_points:
            raise InputError(f"{len(self.ids)} ids for {n_points} points")
        if len(set(self.ids)) != n_points:
            raise InputError("point ids must be unique")
        if self.labels is not None and len(self.labels) != n_points:
            raise InputError(f"{len(self.labels)} labels for {n_points} points")
        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    @classmethod
    def from_array(cls, points, ids=None, labels=None) -> PointCloud:
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if ids is None:
            ids = [str(i) for i in range(points.shape[0])]
        return cls(points, tuple(ids), tuple(labels) if labels is not None else None)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def permuted(self, order) -> PointCloud:
        order = np.asarray(order)
        labels = tuple(self.labels[i] for i in order) if self.labels is not None else None
        return PointCloud(self.points[order], tuple(self.ids[i] for i in order), labels)


@dataclass(frozen=True)
class DistanceMatrix:
    d: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "d", _frozen(self.d))

    @property
    def size(self) -> int:
        return self.d.shape[0]

    def upper_triangle(self) -> np.ndarray:
        return self.d[np.triu_indices(self.size, k=1)]


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric strictly positive affinity matrix plus how it was built.

    `epsilon` is a scalar bandwidth for the Gaussian family and the per-point
    k-th neighbour distances for the PHATE family.
    """

    delta: np.ndarray
    family: str
    ids: tuple[str, ...] | None = None
    epsilon: float | np.ndarray | None = None
    alpha: float = 0.0
    beta: float | None = None
    k: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        delta = np.asarray(self.delta, dtype=float)
        if delta.ndim != 2 or delta.shape[0] != delta.shape[1]:
            raise InputError(f"kernel must be square, got shape {delta.shape}")
        if not np.all(np.isfinite(delta)):
            raise InputError("kernel has non-finite entries")
        if np.any(delta <= 0):
            raise InputError("kernel entries must be strictly positive")
        if not np.allclose(delta, delta.T, rtol=0, atol=1e-12 * max(1.0, float(delta.max()))):
            raise InputError("kernel must be symmetric")
        object.__setattr__(self, "delta", _frozen(delta))
        if isinstance(self.epsilon, np.ndarray):
            object.__setattr__(self, "epsilon", _frozen(self.epsilon))

    @property
    def size(self) -> int:
        return self.delta.shape[0]

    def describe(self) -> dict:
        eps = self.epsilon
        if isinstance(eps, np.ndarray):
            eps = {"min": float(eps.min()), "max": float(eps.max())}
        return {
            "family": self.family,
            "size": self.size,
            "epsilon": eps,
            "alpha": self.alpha,
            "beta": self.beta,
            "k": self.k,
            **self.meta,
        }


def pairwise_distances(cloud: PointCloud) -> DistanceMatrix:
    # pdist writes each pair independently, so the result does not depend on threading.
    d = squareform(pdist(cloud.points, metric="euclidean"))
    return DistanceMatrix(d, cloud.ids)


def bandwidth_percentile(distances: DistanceMatrix, pct: float) -> float:
    """Nearest-rank percentile of the strictly upper-triangle distances."""
    if not 0 < pct <= 100:
        raise ParameterError(f"percentile must be in (0, 100], got {pct}")
    values = np.sort(distances.upper_triangle())
    if values.size == 0 or values[-1] == 0:
        raise DegenerateInputError("all pairwise distances are zero")
    rank = max(math.ceil(pct / 100 * values.size), 1)
    eps = float(values[rank - 1])
    logger.debug("bandwidth: %.6g at percentile %g of %d pairs", eps, pct, values.size)
    return eps


def gaussian_kernel(distances: DistanceMatrix, epsilon: float) -> KernelMatrix:
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise ParameterError(f"bandwidth must be positive and finite, got {epsilon}")
    delta = np.exp(-(distances.d ** 2) / (2 * epsilon ** 2))
    np.maximum(delta, KERNEL_FLOOR, out=delta)
    return KernelMatrix(delta, "gaussian", ids=distances.ids, epsilon=float(epsilon))


def anisotropic_kernel(kernel: KernelMatrix, alpha: float) -> KernelMatrix:
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0:
        return kernel
    density = kernel.delta.sum(axis=1) ** alpha
    delta = kernel.delta / np.outer(density, density)
    np.maximum(delta, KERNEL_FLOOR, out=delta)
    return KernelMatrix(
        delta, kernel.family, ids=kernel.ids, epsilon=kernel.epsilon,
        alpha=alpha, beta=kernel.beta, k=kernel.k, meta=dict(kernel.meta),
    )


def knn_radius(distances: DistanceMatrix, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest neighbour, self excluded.

    Ties are broken by point index so the neighbour order is reproducible.
    """
    n = distances.size
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must be in [1, {n - 1}], got {k}")
    d = np.array(distances.d)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")
    return d[np.arange(n), order[:, k - 1]]


def phate_kernel(distances: DistanceMatrix, k: int, beta: float) -> KernelMatrix:
    if not beta > 0:
        raise ParameterError(f"shape parameter beta must be positive, got {beta}")
    radius = knn_radius(distances, k)
    zero = np.flatnonzero(radius == 0)
    if zero.size:
        a = int(zero[0])
        raise DegenerateInputError(
            f"point {distances.ids[a]!r} has a duplicate as its {k}-th nearest neighbour",
            index=a, point_id=distances.ids[a],
        )
    d = distances.d
    with np.errstate(over="ignore"):
        delta = np.exp(-((d / radius[:, None]) ** beta)) + np.exp(-((d / radius[None, :]) ** beta))
    np.maximum(delta, KERNEL_FLOOR, out=delta)
    return KernelMatrix(delta, "phate", ids=distances.ids, epsilon=radius, beta=float(beta), k=k)
