"""Seeded stand-in for single-cell abundance data with a branching lineage."""

from __future__ import annotations

import numpy as np

from pathchain.errors import ParameterError
from pathchain.geometry import PointCloud

# child -> parent; the root has the flattest abundance profile
LINEAGE = {
    "HSC": None,
    "LMPP": "HSC",
    "PreMegE": "HSC",
    "CLP": "LMPP",
    "GMP": "LMPP",
}

MARKERS_PER_TYPE = 3
MARKER_BOOST = 2.0
NOISE = 0.35


def branching_profiles(n_points: int = 500, n_features: int = 18, seed: int | None = 0) -> PointCloud:
    """Nonnegative abundance profiles of five cell types on a differentiation tree.

    Log-abundances start flat at the root; each descendant type switches on its
    own marker features on top of its parent's, so profiles lose entropy down
    the tree. Cells of a derived type are spread along the whole edge from the
    parent centre, so the tree is one connected continuum.
    """
    n_types = len(LINEAGE)
    if n_features < MARKERS_PER_TYPE * (n_types - 1):
        raise ParameterError(f"need at least {MARKERS_PER_TYPE * (n_types - 1)} features, got {n_features}")
    if n_points < 2 * n_types:
        raise ParameterError(f"need at least {2 * n_types} points, got {n_points}")

    rng = np.random.default_rng(seed)
    features = rng.permutation(n_features)
    centres: dict[str, np.ndarray] = {}
    for index, (name, parent) in enumerate(LINEAGE.items()):
        if parent is None:
            centres[name] = np.zeros(n_features)
            continue
        markers = features[(index - 1) * MARKERS_PER_TYPE: index * MARKERS_PER_TYPE]
        centre = centres[parent].copy()
        centre[markers] += MARKER_BOOST
        centres[name] = centre

    counts = np.full(n_types, n_points // n_types)
    counts[0] += n_points - counts.sum()
    points, labels = [], []
    for count, (name, parent) in zip(counts, LINEAGE.items()):
        if parent is None:
            base = np.repeat(centres[name][None, :], count, axis=0)
        else:
            t = rng.uniform(0.0, 1.0, size=(count, 1))
            base = centres[parent] + t * (centres[name] - centres[parent])
        points.append(np.exp(base + rng.normal(scale=NOISE, size=base.shape)))
        labels.extend([name] * count)

    ids = [f"c{i:04d}" for i in range(n_points)]
    return PointCloud(np.vstack(points), tuple(ids), tuple(labels))


def separation_score(coords, labels) -> float:
    """Mean distance between cluster centroids over the mean intra-cluster spread."""
    coords = np.asarray(coords, dtype=float)
    labels = np.asarray(labels)
    names = list(dict.fromkeys(labels.tolist()))
    if len(names) < 2:
        raise ParameterError("separation needs at least two clusters")
    centroids = np.array([coords[labels == name].mean(axis=0) for name in names])
    spreads = [
        np.linalg.norm(coords[labels == name] - centroid, axis=1).mean()
        for name, centroid in zip(names, centroids)
    ]
    iu = np.triu_indices(len(names), k=1)
    between = np.linalg.norm(centroids[:, None, :] - centroids[None, :, :], axis=-1)[iu].mean()
    return float(between / np.mean(spreads))
