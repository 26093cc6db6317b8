"""Dataset container, CSV ingestion, feature encoding, and the synthetic task.

CSV loading is schema-driven: a schema maps each column to one of the roles
feature_categorical, feature_numeric, label, or ignore. Rows with missing or
unparseable values in used columns are dropped and counted. Encoding fits
one-hot category sets and z-score statistics on the training split only and
can be serialized so later transforms reuse the same parameters.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import SeededRng

COLUMN_ROLES = ("feature_categorical", "feature_numeric", "label", "ignore")


@dataclass
class LabeledDataset:
    """Numeric feature matrix (N, F) with integer class labels (N,)."""

    features: np.ndarray
    labels: np.ndarray
    class_names: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match {self.features.shape[0]} rows"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise ValueError("labels outside [0, n_classes)")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx], list(self.class_names))


def class_distribution(data: LabeledDataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-class (counts, percentages); percentages are all zero when empty."""
    counts = np.bincount(data.labels, minlength=data.n_classes).astype(np.int64)
    total = counts.sum()
    if total == 0:
        return counts, np.zeros(data.n_classes)
    return counts, 100.0 * counts / total


@dataclass
class FeatureSchema:
    """Ordered column -> role map for CSV ingestion."""

    roles: dict[str, str]

    def __post_init__(self):
        for col, role in self.roles.items():
            if role not in COLUMN_ROLES:
                raise ValueError(f"column {col!r} has unknown role {role!r}")
        labels = [c for c, r in self.roles.items() if r == "label"]
        if len(labels) != 1:
            raise ValueError(f"schema must declare exactly one label column, found {labels}")

    @property
    def label_column(self) -> str:
        return next(c for c, r in self.roles.items() if r == "label")

    @property
    def feature_columns(self) -> list[str]:
        return [c for c, r in self.roles.items() if r.startswith("feature_")]

    @classmethod
    def from_file(cls, path: str) -> "FeatureSchema":
        """Parse a schema file of "column: role" lines (# starts a comment)."""
        roles: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if ":" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'column: role'")
                col, role = (part.strip() for part in line.split(":", 1))
                roles[col] = role
        return cls(roles)


@dataclass
class RawTable:
    """String-valued feature rows straight from a CSV, pre-encoding."""

    columns: list[str]
    rows: list[list[str]]
    labels: np.ndarray
    class_names: list[str]
    raw_row_count: int
    dropped_rows: int

    @property
    def n_samples(self) -> int:
        return len(self.rows)

    def subset(self, indices: np.ndarray) -> "RawTable":
        idx = np.asarray(indices, dtype=np.int64)
        return RawTable(
            columns=list(self.columns),
            rows=[self.rows[i] for i in idx],
            labels=self.labels[idx],
            class_names=list(self.class_names),
            raw_row_count=self.raw_row_count,
            dropped_rows=self.dropped_rows,
        )


def load_csv_dataset(
    path: str, schema: FeatureSchema, drop_labels: tuple[str, ...] = ()
) -> RawTable:
    """Read a CSV into a RawTable, dropping rows with missing/invalid values.

    A cell is missing when empty (after stripping); a feature_numeric cell is
    invalid when it does not parse as a float. Label strings map to dense
    integer ids in first-appearance order. Labels listed in drop_labels are
    filtered out (their rows are excluded, not counted as dropped-for-
    missingness).
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, expected a header row")
        header = [name.strip() for name in reader.fieldnames]
        missing_cols = [c for c in (*schema.feature_columns, schema.label_column) if c not in header]
        if missing_cols:
            raise ValueError(f"{path}: schema columns absent from header: {missing_cols}")

        feature_cols = schema.feature_columns
        numeric_cols = {c for c in feature_cols if schema.roles[c] == "feature_numeric"}
        label_col = schema.label_column
        dropped = set(drop_labels)

        rows: list[list[str]] = []
        label_strings: list[str] = []
        raw_count = 0
        invalid = 0
        for record in reader:
            raw_count += 1
            values = {c: (record.get(c) or "").strip() for c in (*feature_cols, label_col)}
            label = values[label_col]
            if label in dropped:
                continue
            row_bad = label == ""
            for c in feature_cols:
                cell = values[c]
                if cell == "":
                    row_bad = True
                elif c in numeric_cols:
                    try:
                        float(cell)
                    except ValueError:
                        row_bad = True
            if row_bad:
                invalid += 1
                continue
            rows.append([values[c] for c in feature_cols])
            label_strings.append(label)

    class_names: list[str] = []
    seen: dict[str, int] = {}
    for s in label_strings:
        if s not in seen:
            seen[s] = len(class_names)
            class_names.append(s)
    labels = np.array([seen[s] for s in label_strings], dtype=np.int64)
    if not rows:
        raise ValueError(f"{path}: no usable rows after cleaning")
    return RawTable(
        columns=feature_cols,
        rows=rows,
        labels=labels,
        class_names=class_names,
        raw_row_count=raw_count,
        dropped_rows=invalid,
    )


@dataclass
class FeatureEncoder:
    """One-hot + z-score transform fitted on a training table.

    categories holds the per-column category list seen at fit time (order of
    first appearance); numeric_stats the (mean, std) pairs with std floored
    at 1e-12 so constant columns transform to zeros.
    """

    schema: FeatureSchema
    categories: dict[str, list[str]] = field(default_factory=dict)
    numeric_stats: dict[str, tuple[float, float]] = field(default_factory=dict)

    STD_FLOOR = 1e-12

    def fit(self, table: RawTable) -> "FeatureEncoder":
        col_index = {c: i for i, c in enumerate(table.columns)}
        for col in self.schema.feature_columns:
            values = [row[col_index[col]] for row in table.rows]
            if self.schema.roles[col] == "feature_categorical":
                cats: list[str] = []
                seen: set[str] = set()
                for v in values:
                    if v not in seen:
                        seen.add(v)
                        cats.append(v)
                self.categories[col] = cats
            else:
                arr = np.array([float(v) for v in values])
                self.numeric_stats[col] = (float(arr.mean()), max(float(arr.std()), self.STD_FLOOR))
        return self

    def transform(self, table: RawTable) -> LabeledDataset:
        col_index = {c: i for i, c in enumerate(table.columns)}
        blocks: list[np.ndarray] = []
        for col in self.schema.feature_columns:
            values = [row[col_index[col]] for row in table.rows]
            if self.schema.roles[col] == "feature_categorical":
                cats = self.categories[col]
                block = np.zeros((len(values), len(cats)))
                lookup = {c: i for i, c in enumerate(cats)}
                unseen = 0
                for r, v in enumerate(values):
                    j = lookup.get(v)
                    if j is None:
                        unseen += 1
                    else:
                        block[r, j] = 1.0
                if unseen:
                    warnings.warn(
                        f"column {col!r}: {unseen} values unseen at fit time encoded as all-zeros"
                    )
            else:
                mean, std = self.numeric_stats[col]
                block = ((np.array([float(v) for v in values]) - mean) / std)[:, None]
            blocks.append(block)
        features = np.concatenate(blocks, axis=1) if blocks else np.zeros((table.n_samples, 0))
        return LabeledDataset(features, table.labels, list(table.class_names))

    def to_json(self) -> str:
        return json.dumps(
            {
                "roles": self.schema.roles,
                "categories": self.categories,
                "numeric_stats": {k: list(v) for k, v in self.numeric_stats.items()},
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureEncoder":
        payload = json.loads(text)
        enc = cls(schema=FeatureSchema(payload["roles"]))
        enc.categories = {k: list(v) for k, v in payload["categories"].items()}
        enc.numeric_stats = {k: (float(v[0]), float(v[1])) for k, v in payload["numeric_stats"].items()}
        return enc


def encode_features(table: RawTable, schema: FeatureSchema, encoder: FeatureEncoder | None = None):
    """Encode a raw table; fit a new encoder if none is given.

    Returns (LabeledDataset, FeatureEncoder). Fit the encoder on the training
    split and pass it back in for validation/test so category sets and
    z-score statistics come from training data only.
    """
    if encoder is None:
        encoder = FeatureEncoder(schema=schema).fit(table)
    return encoder.transform(table), encoder


def to_sequences(features: np.ndarray, chunks: int) -> np.ndarray:
    """Reshape flat rows (N, F) into sequences (N, chunks, ceil(F/chunks)).

    F is zero-padded up to a multiple of the chunk count when needed.
    """
    if chunks < 1:
        raise ValueError(f"chunks must be >= 1, got {chunks}")
    n, width = features.shape
    per = -(-width // chunks)  # ceil
    padded = np.zeros((n, per * chunks))
    padded[:, :width] = features
    return padded.reshape(n, chunks, per)


def synthetic_benchmark(
    n_samples: int = 1000,
    n_features: int = 12,
    priors: tuple[float, ...] = (0.70, 0.25, 0.05),
    separation: float = 4.0,
    seed: int = 7,
) -> LabeledDataset:
    """Imbalanced Gaussian classification task, deterministic in the seed.

    Class means sit on orthogonal axes scaled so every pair of means is
    exactly `separation` apart in units of the per-dimension noise sigma (1).
    """
    if n_features < len(priors):
        raise ValueError(f"need at least {len(priors)} features for {len(priors)} class axes")
    rng = SeededRng(seed)
    priors_arr = np.asarray(priors, dtype=np.float64)
    priors_arr = priors_arr / priors_arr.sum()
    cumulative = np.cumsum(priors_arr)
    draws = rng.uniform(size=n_samples)
    labels = np.searchsorted(cumulative, draws, side="right")
    labels = np.minimum(labels, len(priors) - 1)

    scale = separation / np.sqrt(2.0)
    means = np.zeros((len(priors), n_features))
    for c in range(len(priors)):
        means[c, c] = scale
    features = means[labels] + rng.normal(size=(n_samples, n_features))
    names = [f"class_{chr(ord('a') + c)}" for c in range(len(priors))]
    return LabeledDataset(features, labels, names)
