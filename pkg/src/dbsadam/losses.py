"""Softmax head and classification losses with analytic logit gradients.

Three loss kinds are supported: plain categorical cross-entropy, class-weighted
cross-entropy, and multiclass focal loss. Every loss reduces over the batch by
the mean, and every analytic gradient is checked against central differences
in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Probabilities are floored here before every log so a confident wrong
# prediction yields a large but finite loss.
PROB_FLOOR = 1e-12

LOSS_KINDS = ("cross_entropy", "weighted_cross_entropy", "focal")


@dataclass
class LossConfig:
    """Selects and parameterizes a loss.

    class_weights applies to weighted_cross_entropy; gamma/alpha to focal.
    alpha may be a scalar applied uniformly or a per-class vector.
    """

    kind: str = "cross_entropy"
    class_weights: np.ndarray | None = None
    gamma: float = 2.0
    alpha: float | np.ndarray = 0.25

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.kind!r}, expected one of {LOSS_KINDS}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.class_weights is not None:
            self.class_weights = np.asarray(self.class_weights, dtype=np.float64)
            if np.any(self.class_weights <= 0):
                raise ValueError("class weights must be strictly positive")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Exp-normalize logits with max subtraction; rows sum to 1.

    Accepts a single vector (C,) or a batch (N, C).
    """
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """Integer labels (N,) -> one-hot matrix (N, C)."""
    labels = np.asarray(labels)
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _as_batch(probs: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    if probs.shape != labels.shape:
        raise ValueError(f"probs shape {probs.shape} != labels shape {labels.shape}")
    return probs, labels


def cross_entropy_per_sample(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    probs, labels = _as_batch(probs, labels)
    return -np.sum(labels * np.log(np.maximum(probs, PROB_FLOOR)), axis=1)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean categorical cross-entropy over the batch."""
    return float(np.mean(cross_entropy_per_sample(probs, labels)))


def weighted_cross_entropy_per_sample(
    probs: np.ndarray, labels: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    probs, labels = _as_batch(probs, labels)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (probs.shape[1],):
        raise ValueError(
            f"weight vector length {weights.shape} does not match {probs.shape[1]} classes"
        )
    return -np.sum(weights * labels * np.log(np.maximum(probs, PROB_FLOOR)), axis=1)


def weighted_cross_entropy(probs: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    """Class-weighted cross-entropy, -(1/N) sum_i sum_c w_c y_ic log p_ic."""
    return float(np.mean(weighted_cross_entropy_per_sample(probs, labels, weights)))


def default_class_weights(class_counts: np.ndarray) -> np.ndarray:
    """Inverse-frequency weights w_c = N / (N_c * C)."""
    counts = np.asarray(class_counts, dtype=np.float64)
    if np.any(counts <= 0):
        raise ValueError(f"class weights undefined for zero counts: {counts.tolist()}")
    return counts.sum() / (counts * counts.size)


def focal_loss_per_sample(
    probs: np.ndarray, labels: np.ndarray, gamma: float = 2.0, alpha=0.25
) -> np.ndarray:
    """Per-sample focal term -alpha_c (1 - p_t)^gamma log(p_t).

    Multiclass one-hot form: only the true-class term survives the class sum.
    alpha is a scalar or a length-C vector.
    """
    probs, labels = _as_batch(probs, labels)
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    alpha_c = _alpha_per_sample(alpha, labels)
    p_t = np.sum(probs * labels, axis=1)
    log_p = np.log(np.maximum(p_t, PROB_FLOOR))
    return -alpha_c * (1.0 - p_t) ** gamma * log_p


def focal_loss(probs: np.ndarray, labels: np.ndarray, gamma: float = 2.0, alpha=0.25) -> float:
    """Mean focal loss over the batch."""
    return float(np.mean(focal_loss_per_sample(probs, labels, gamma, alpha)))


def _alpha_per_sample(alpha, labels: np.ndarray) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 0:
        return np.full(labels.shape[0], float(alpha))
    if alpha.shape != (labels.shape[1],):
        raise ValueError(f"alpha vector length {alpha.shape} does not match {labels.shape[1]} classes")
    return labels @ alpha


def batch_mean_loss(per_sample_losses: np.ndarray) -> float:
    """Mean of the per-sample losses; the batch size must be >= 1."""
    v = np.asarray(per_sample_losses, dtype=np.float64)
    if v.size == 0:
        raise ValueError("batch_mean_loss of an empty batch")
    return float(np.mean(v))


def loss_per_sample(config: LossConfig, probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-sample loss values under the configured loss."""
    if config.kind == "cross_entropy":
        return cross_entropy_per_sample(probs, labels)
    if config.kind == "weighted_cross_entropy":
        if config.class_weights is None:
            raise ValueError("weighted_cross_entropy requires class_weights")
        return weighted_cross_entropy_per_sample(probs, labels, config.class_weights)
    return focal_loss_per_sample(probs, labels, config.gamma, config.alpha)


def loss_value(config: LossConfig, probs: np.ndarray, labels: np.ndarray) -> float:
    """Batch-mean loss under the configured loss."""
    return batch_mean_loss(loss_per_sample(config, probs, labels))


def loss_gradient(config: LossConfig, logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Analytic gradient of the batch-mean loss with respect to the logits.

    For plain cross-entropy each row is (softmax(z) - y) / N. The weighted
    and focal forms scale that row by the true-class weight and by the focal
    chain-rule factor respectively.
    """
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    if logits.shape != labels.shape:
        raise ValueError(f"logits shape {logits.shape} != labels shape {labels.shape}")
    n, _ = logits.shape
    probs = softmax(logits)

    if config.kind == "cross_entropy":
        return (probs - labels) / n

    if config.kind == "weighted_cross_entropy":
        if config.class_weights is None:
            raise ValueError("weighted_cross_entropy requires class_weights")
        w = np.asarray(config.class_weights, dtype=np.float64)
        if w.shape != (logits.shape[1],):
            raise ValueError(f"weight vector length {w.shape} does not match {logits.shape[1]} classes")
        # per-sample true-class weight scales the plain CE row
        w_t = labels @ w
        return w_t[:, None] * (probs - labels) / n

    # focal: dl/dz_j = dl/dp_t * p_t * (delta_tj - p_j)
    gamma = config.gamma
    alpha_c = _alpha_per_sample(config.alpha, labels)
    p_t = np.sum(probs * labels, axis=1)
    p_t_f = np.maximum(p_t, PROB_FLOOR)
    u = 1.0 - p_t
    log_p = np.log(p_t_f)
    # u^(gamma-1) -> 0 as p_t -> 1 for gamma > 0 (log p_t vanishes faster),
    # so the u == 0 branch takes the correct limit instead of 0^negative.
    if gamma == 0.0:
        term1 = np.zeros_like(u)
    else:
        u_pow_gm1 = np.where(u > 0.0, np.where(u > 0.0, u, 1.0) ** (gamma - 1.0), 0.0)
        term1 = gamma * u_pow_gm1 * log_p
    dl_dpt = alpha_c * (term1 - (u**gamma) / p_t_f)
    grad = dl_dpt[:, None] * p_t[:, None] * (labels - probs)
    return grad / n
