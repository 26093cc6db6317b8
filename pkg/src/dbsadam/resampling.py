"""Data-level class rebalancing: SMOTE, ENN cleaning, SMOTE-ENN, and ADASYN.

Neighbor search is exact brute force under Euclidean distance, chunked so
pairwise distances never materialize a full N x N matrix for large N. Ties
resolve to the lower row index and a point is never its own neighbor.
"""

from __future__ import annotations

import warnings

import numpy as np

from .data import LabeledDataset
from .numerics import SeededRng

_CHUNK = 512


class NeighborIndex:
    """Brute-force k-nearest-neighbor index over a feature matrix."""

    def __init__(self, features: np.ndarray):
        self.features = np.asarray(features, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got {self.features.shape}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    def query(
        self, point: np.ndarray, k: int, exclude: int | None = None
    ) -> tuple[np.ndarray, np.ndarray]:
        """k nearest rows to `point`, optionally excluding one row (self).

        Returns (indices, distances) sorted by non-decreasing distance with
        ties broken by lower row index.
        """
        available = self.n - (1 if exclude is not None else 0)
        if k < 1 or k > available:
            raise ValueError(f"k={k} out of range for {available} candidate rows")
        diff = self.features - np.asarray(point, dtype=np.float64)
        dist = np.sqrt(np.sum(diff * diff, axis=1))
        if exclude is not None:
            dist[exclude] = np.inf
        order = np.argsort(dist, kind="stable")[:k]
        return order, dist[order]


def knn_query(
    index: NeighborIndex, point: np.ndarray, k: int, exclude: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Functional wrapper over NeighborIndex.query."""
    return index.query(point, k, exclude=exclude)


def _neighbor_table(features: np.ndarray, k: int) -> np.ndarray:
    """Indices (N, k) of each row's k nearest other rows, computed in chunks."""
    n = features.shape[0]
    sq = np.sum(features * features, axis=1)
    out = np.zeros((n, k), dtype=np.int64)
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        block = features[start:stop]
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (block @ features.T)
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        out[start:stop] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def smote_generate(
    data: LabeledDataset,
    target_class: int,
    n_synthetic: int,
    k: int,
    rng: SeededRng,
) -> np.ndarray:
    """Synthetic rows for one class by segment interpolation.

    Each synthetic point is x_i + lam * (x_nn - x_i) with lam ~ U[0, 1],
    where x_i is a class member and x_nn one of its k nearest same-class
    neighbors. Draw order per synthetic batch: member indices, neighbor
    slots, lambdas.
    """
    members = np.flatnonzero(data.labels == target_class)
    m = members.size
    if m < 2:
        raise ValueError(
            f"class {target_class} has {m} samples, need at least 2 to interpolate"
        )
    if k < 1 or k > m - 1:
        raise ValueError(f"k={k} out of range for class of {m} samples")
    if n_synthetic == 0:
        return np.zeros((0, data.n_features))

    class_feats = data.features[members]
    neighbors = _neighbor_table(class_feats, k)

    anchor = rng.integers(0, m, size=n_synthetic)
    slot = rng.integers(0, k, size=n_synthetic)
    lam = rng.uniform(size=n_synthetic)
    x_i = class_feats[anchor]
    x_nn = class_feats[neighbors[anchor, slot]]
    return x_i + lam[:, None] * (x_nn - x_i)


def enn_filter(data: LabeledDataset, k: int = 3) -> tuple[LabeledDataset, np.ndarray]:
    """Remove samples whose k-NN majority vote disagrees with their label.

    Single pass; votes exclude the sample itself; a tied vote counts as
    disagreement, so a sample survives only when its own class strictly
    outnumbers every other class among its k neighbors. Returns the cleaned
    dataset and the removed row indices.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if data.n_samples <= k:
        raise ValueError(f"need more than k={k} samples, have {data.n_samples}")
    neighbors = _neighbor_table(data.features, k)
    neighbor_labels = data.labels[neighbors]  # (N, k)
    keep = np.zeros(data.n_samples, dtype=bool)
    for c in range(data.n_classes):
        own = (neighbor_labels == c).sum(axis=1)
        rival_best = np.zeros(data.n_samples, dtype=np.int64)
        for other in range(data.n_classes):
            if other == c:
                continue
            rival_best = np.maximum(rival_best, (neighbor_labels == other).sum(axis=1))
        keep |= (data.labels == c) & (own > rival_best)
    removed = np.flatnonzero(~keep)
    return data.subset(np.flatnonzero(keep)), removed


def smote_enn(
    data: LabeledDataset,
    smote_k: int = 5,
    enn_k: int = 3,
    rng: SeededRng | None = None,
) -> LabeledDataset:
    """Oversample every minority class to the majority count, then ENN-clean.

    Each class draws from its own substream of the given rng, so results do
    not depend on class processing order. Synthetic rows are appended after
    the originals, grouped by class id.
    """
    if rng is None:
        rng = SeededRng(0)
    counts = np.bincount(data.labels, minlength=data.n_classes)
    majority = int(counts.max())
    feature_blocks = [data.features]
    label_blocks = [data.labels]
    for c in range(data.n_classes):
        deficit = majority - int(counts[c])
        if deficit <= 0:
            continue
        if counts[c] < 2:
            raise ValueError(
                f"class {c} has {int(counts[c])} samples, need at least 2 "
                f"(counts: {counts.tolist()})"
            )
        k = min(smote_k, int(counts[c]) - 1)
        synth = smote_generate(data, c, deficit, k, rng.child(c))
        feature_blocks.append(synth)
        label_blocks.append(np.full(deficit, c, dtype=np.int64))
    merged = LabeledDataset(
        np.concatenate(feature_blocks, axis=0),
        np.concatenate(label_blocks),
        list(data.class_names),
    )
    cleaned, _ = enn_filter(merged, enn_k)
    return cleaned


def adasyn_generate(
    data: LabeledDataset,
    target_class: int,
    total_synthetic: int,
    k: int,
    rng: SeededRng,
) -> np.ndarray:
    """Adaptive oversampling weighted toward boundary minority samples.

    Each target-class sample x_i gets a share of the synthetic budget
    proportional to the fraction of its k nearest neighbors (over the whole
    dataset) that carry the majority-class label; shares are rounded half-up.
    Interpolation partners come from the sample's nearest same-class
    neighbors, as in smote_generate.
    """
    members = np.flatnonzero(data.labels == target_class)
    m = members.size
    if m < 2:
        raise ValueError(f"class {target_class} has {m} samples, need at least 2")
    if total_synthetic < 0:
        raise ValueError(f"total_synthetic must be >= 0, got {total_synthetic}")
    if total_synthetic == 0:
        return np.zeros((0, data.n_features))
    counts = np.bincount(data.labels, minlength=data.n_classes)
    majority_class = int(np.argmax(counts))

    index = NeighborIndex(data.features)
    k_all = min(k, data.n_samples - 1)
    r = np.zeros(m)
    for j, i in enumerate(members):
        nn, _ = index.query(data.features[i], k_all, exclude=int(i))
        r[j] = np.mean(data.labels[nn] == majority_class)
    r_sum = r.sum()
    if r_sum == 0.0:
        warnings.warn(
            f"class {target_class}: no sample borders the majority class, "
            "generating nothing"
        )
        return np.zeros((0, data.n_features))
    shares = r / r_sum
    per_sample = np.floor(shares * total_synthetic + 0.5).astype(np.int64)

    class_feats = data.features[members]
    k_syn = min(k, m - 1)
    neighbors = _neighbor_table(class_feats, k_syn)
    rows = []
    for j in range(m):
        g = int(per_sample[j])
        if g == 0:
            continue
        slot = rng.integers(0, k_syn, size=g)
        lam = rng.uniform(size=g)
        x_i = class_feats[j]
        x_nn = class_feats[neighbors[j, slot]]
        rows.append(x_i + lam[:, None] * (x_nn - x_i))
    if not rows:
        return np.zeros((0, data.n_features))
    return np.concatenate(rows, axis=0)
