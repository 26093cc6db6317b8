"""Classification metrics, stratified splitting, and seed-paired statistics.

The t-distribution tail probability is evaluated through the regularized
incomplete beta function (continued fraction, modified Lentz), accurate to
about 1e-8, so no statistics library is needed at runtime; the test suite
cross-checks it against an independent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .numerics import SeededRng


@dataclass
class MetricsReport:
    """Per-class and aggregate classification metrics for one evaluation."""

    accuracy: float
    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    mean_loss: float

    def scalar_metrics(self) -> dict[str, float]:
        """The headline scalars used for optimizer comparison (weighted
        aggregates, matching how multi-class results are usually reported)."""
        return {
            "accuracy": self.accuracy,
            "precision": self.weighted_precision,
            "recall": self.weighted_recall,
            "f1": self.weighted_f1,
            "loss": self.mean_loss,
        }


@dataclass
class SignificanceResult:
    """Seed-paired comparison of one metric between two configurations."""

    mean_difference: float
    t_statistic: float
    p_value: float
    cohens_d: float
    significant: bool
    degenerate: bool = False


def confusion_matrix(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """Count grid (n_classes, n_classes) indexed [true][predicted]."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError(f"label arrays differ in length: {t.shape} vs {p.shape}")
    if t.size and (t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes):
        raise ValueError(f"labels outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def metrics_from_confusion(cm: np.ndarray, per_sample_losses=None) -> MetricsReport:
    """Precision/recall/F1 per class plus weighted and macro aggregates.

    Zero denominators yield 0 (a class never predicted scores precision 0, a
    class with no support scores recall 0). Weighted averages use true-class
    support.
    """
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(cm).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)

    with np.errstate(divide="ignore", invalid="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        pr_sum = precision + recall
        f1 = np.where(pr_sum > 0, 2.0 * precision * recall / np.where(pr_sum > 0, pr_sum, 1.0), 0.0)

    weights = support / total
    mean_loss = float(np.mean(per_sample_losses)) if per_sample_losses is not None else float("nan")
    return MetricsReport(
        accuracy=float(tp.sum() / total),
        precision=[float(x) for x in precision],
        recall=[float(x) for x in recall],
        f1=[float(x) for x in f1],
        support=[int(x) for x in support],
        weighted_precision=float(np.sum(weights * precision)),
        weighted_recall=float(np.sum(weights * recall)),
        weighted_f1=float(np.sum(weights * f1)),
        macro_precision=float(np.mean(precision)),
        macro_recall=float(np.mean(recall)),
        macro_f1=float(np.mean(f1)),
        mean_loss=mean_loss,
    )


def split_indices(
    labels: np.ndarray, test_fraction: float, rng: SeededRng
) -> tuple[np.ndarray, np.ndarray]:
    """Stratified index split; a pure function of (labels, rng stream).

    Per-class test counts are round(count * fraction) with ties going to
    train. Class index order inside each side follows the rng permutation.
    """
    if not (0.0 <= test_fraction < 1.0):
        raise ValueError(f"test_fraction must lie in [0, 1), got {test_fraction}")
    labels = np.asarray(labels, dtype=np.int64)
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        if test_fraction > 0 and members.size < 2:
            raise ValueError(f"class {int(c)} has {members.size} samples, cannot stratify")
        shuffled = members[rng.permutation(members.size)]
        n_test = math.ceil(members.size * test_fraction - 0.5)  # round half-down
        test_parts.append(shuffled[:n_test])
        train_parts.append(shuffled[n_test:])
    return np.concatenate(train_parts), np.concatenate(test_parts)


def stratified_split(
    data: LabeledDataset, test_fraction: float, rng: SeededRng
) -> tuple[LabeledDataset, LabeledDataset]:
    """Class-proportion-preserving train/test split of a dataset."""
    train_idx, test_idx = split_indices(data.labels, test_fraction, rng)
    return data.subset(train_idx), data.subset(test_idx)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 400):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            return h
    raise RuntimeError(f"betacf failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to roughly 1e-8 over the t-test parameter range."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t with df degrees of freedom."""
    if df < 1:
        raise ValueError(f"degrees of freedom must be >= 1, got {df}")
    if t == 0.0:
        return 1.0
    x = df / (df + t * t)
    return regularized_incomplete_beta(df / 2.0, 0.5, x)


def cohens_d(a, b) -> float:
    """Paired effect size: mean(a - b) / sample-std(a - b).

    Zero variance with zero mean returns 0; zero variance with nonzero mean
    returns a signed infinity (callers flag this as degenerate).
    """
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    if d.size < 2:
        raise ValueError(f"need at least 2 paired values, got {d.size}")
    sd = float(d.std(ddof=1))
    mean = float(d.mean())
    if sd == 0.0:
        return 0.0 if mean == 0.0 else math.copysign(math.inf, mean)
    return mean / sd


def paired_t_test(a, b, alpha: float = 0.05) -> SignificanceResult:
    """Two-sided paired t-test between same-length per-seed metric vectors.

    Identical inputs give t = 0, p = 1, d = 0. Zero variance with a nonzero
    mean difference is reported as p = 0 with the degenerate flag set.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in shape: {a.shape} vs {b.shape}")
    n = a.size
    if n < 2:
        raise ValueError(f"need at least 2 pairs, got {n}")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return SignificanceResult(0.0, 0.0, 1.0, 0.0, False, degenerate=False)
        t = math.copysign(math.inf, mean)
        return SignificanceResult(mean, t, 0.0, cohens_d(a, b), True, degenerate=True)
    t = mean * math.sqrt(n) / sd
    p = student_t_two_sided_p(t, n - 1)
    return SignificanceResult(mean, t, p, cohens_d(a, b), p < alpha)


def aggregate_runs(reports: list[MetricsReport]) -> dict[str, tuple[float, float | None]]:
    """Mean and sample standard deviation of each headline metric.

    With a single run the std is reported as None.
    """
    if not reports:
        raise ValueError("no runs to aggregate")
    keys = reports[0].scalar_metrics().keys()
    out: dict[str, tuple[float, float | None]] = {}
    for key in keys:
        values = np.array([r.scalar_metrics()[key] for r in reports])
        std = float(values.std(ddof=1)) if values.size >= 2 else None
        out[key] = (float(values.mean()), std)
    return out
