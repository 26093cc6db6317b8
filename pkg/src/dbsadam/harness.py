"""Experiment runner: config, training loop, multi-seed comparison, reports.

A run is fully determined by (config, seed): the train/test split, validation
carve, resampling, weight initialization, batch order, and dropout masks each
draw from their own substream of the run seed. The split substream depends on
the seed alone, so every optimizer in a comparison sees identical splits —
the pairing assumption behind the seed-paired t-tests.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .data import (
    FeatureSchema,
    LabeledDataset,
    encode_features,
    load_csv_dataset,
    synthetic_benchmark,
    to_sequences,
)
from .evaluation import (
    MetricsReport,
    SignificanceResult,
    aggregate_runs,
    confusion_matrix,
    metrics_from_confusion,
    paired_t_test,
    split_indices,
)
from .losses import (
    LOSS_KINDS,
    LossConfig,
    default_class_weights,
    loss_gradient,
    loss_per_sample,
    one_hot,
    softmax,
)
from .models import AGGREGATIONS, SequenceNetwork, network_backward, network_forward
from .numerics import SeededRng
from .optimizers import (
    GRAD_NORM_MODES,
    OPTIMIZER_NAMES,
    OPTIMIZER_STEPS,
    DifficultyTracker,
    OptimizerConfig,
    OptimizerState,
    dbs_adam_step,
)

RESAMPLERS = ("none", "smote_enn", "adasyn")

# substream keys off the run seed
_STREAM_SPLIT = 0
_STREAM_VAL = 1
_STREAM_RESAMPLE = 2
_STREAM_INIT = 3
_STREAM_SHUFFLE = 4
_STREAM_DROPOUT = 5


class ConfigError(ValueError):
    """Invalid configuration or config file; exits with code 1 at the CLI."""


@dataclass
class ExperimentConfig:
    """Everything a run needs, flat so it maps 1:1 onto config-file keys."""

    # dataset: "synthetic" or a CSV path (schema_file required for CSV)
    dataset: str = "synthetic"
    schema_file: str = ""
    drop_labels: tuple[str, ...] = ()
    data_seed: int = 7
    synthetic_samples: int = 1000
    synthetic_features: int = 12
    synthetic_priors: tuple[float, ...] = (0.70, 0.25, 0.05)
    synthetic_separation: float = 4.0
    # preprocessing
    sequence_chunks: int = 1
    test_fraction: float = 0.2
    validation_fraction: float = 0.1
    # resampling (training portion only)
    resampler: str = "none"
    smote_k: int = 5
    enn_k: int = 3
    adasyn_k: int = 5
    # model
    hidden1: int = 256
    hidden2: int = 128
    dense_units: int = 64
    dropout_rate: float = 0.40
    aggregation: str = "last"
    # loss
    loss: str = "focal"
    gamma: float = 2.0
    focal_alpha: float = 0.25
    # optimizer
    optimizer: str = "dbs_adam"
    optimizers: tuple[str, ...] = ("adam", "amsgrad", "adamw", "adabound", "dbs_adam")
    base_lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    weight_decay: float = 0.01
    adabound_final_lr: float = 0.1
    adabound_gamma: float = 1e-3
    eps_inside_sqrt: bool = False
    # batch-difficulty scaling
    ema_beta: float = 0.95
    alpha_mix: float = 0.5
    clip_k: float = 5.0
    d_min: float = 0.1
    d_max: float = 1.0
    norm_epsilon: float = 1e-8
    warmup_batches: int = 10
    grad_norm_mode: str = "global_l2"
    # training
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 6
    seeds: tuple[int, ...] = (42, 123, 456, 789, 1024)
    # sensitivity sweep
    beta_grid: tuple[float, ...] = (0.8, 0.9, 0.95, 0.99)
    alpha_grid: tuple[float, ...] = (0.3, 0.5, 0.7)
    sweep_seeds: int = 2
    # output
    output_dir: str = "out"

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0 <= self.patience <= self.max_epochs):
            raise ConfigError(
                f"patience must lie in [0, max_epochs={self.max_epochs}], got {self.patience}"
            )
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {self.seeds}")
        if self.optimizer not in OPTIMIZER_NAMES:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}, expected one of {OPTIMIZER_NAMES}")
        for name in self.optimizers:
            if name not in OPTIMIZER_NAMES:
                raise ConfigError(f"unknown optimizer {name!r} in comparison list")
        if self.resampler not in RESAMPLERS:
            raise ConfigError(f"unknown resampler {self.resampler!r}, expected one of {RESAMPLERS}")
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"unknown loss {self.loss!r}, expected one of {LOSS_KINDS}")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")
        if self.grad_norm_mode not in GRAD_NORM_MODES:
            raise ConfigError(f"unknown grad_norm_mode {self.grad_norm_mode!r}")
        if not (0.0 < self.d_min <= self.d_max):
            raise ConfigError(f"need 0 < d_min <= d_max, got [{self.d_min}, {self.d_max}]")
        if not (0.0 <= self.test_fraction < 1.0 and 0.0 <= self.validation_fraction < 1.0):
            raise ConfigError("fractions must lie in [0, 1)")
        if self.dataset != "synthetic" and not self.schema_file:
            raise ConfigError("a CSV dataset requires schema_file")
        if self.sweep_seeds < 1:
            raise ConfigError(f"sweep_seeds must be >= 1, got {self.sweep_seeds}")


def _parse_value(raw: str, target_type) -> object:
    raw = raw.strip()
    if target_type is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected a boolean, got {raw!r}")
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    if target_type is str:
        return raw
    raise ConfigError(f"unsupported config type {target_type}")


_TUPLE_ELEM = {"drop_labels": str, "synthetic_priors": float, "optimizers": str,
               "seeds": int, "beta_grid": float, "alpha_grid": float}


def set_config_key(config: ExperimentConfig, key: str, raw: str) -> None:
    """Assign one config field from its textual form."""
    by_name = {f.name: f for f in fields(ExperimentConfig)}
    if key not in by_name:
        raise ConfigError(f"unknown config key {key!r}")
    current = getattr(config, key)
    if key in _TUPLE_ELEM:
        elem = _TUPLE_ELEM[key]
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        setattr(config, key, tuple(_parse_value(p, elem) for p in parts))
    else:
        setattr(config, key, _parse_value(raw, type(current)))


def load_config(path: str | None = None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Build a config from an optional key=value file plus override strings."""
    config = ExperimentConfig()
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, 1):
                    line = line.split("#", 1)[0].strip()
                    if not line:
                        continue
                    if "=" not in line:
                        raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
                    key, raw = (part.strip() for part in line.split("=", 1))
                    set_config_key(config, key, raw)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for key, raw in (overrides or {}).items():
        set_config_key(config, key, raw)
    config.validate()
    return config


@dataclass
class RunResult:
    """Outcome of one (config, seed) training run."""

    optimizer: str
    seed: int
    train_losses: list[float]
    val_losses: list[float]
    best_epoch: int
    epochs_run: int
    metrics: MetricsReport
    lr_trace: list[float] | None = None
    lr_summary: tuple[float, float, float] | None = None  # (min, mean, max)
    wall_clock: float = 0.0
    tag: str = ""


@dataclass
class ComparisonReport:
    """Aggregated runs, pairwise significance, and optional sweep cells."""

    runs: list[RunResult] = field(default_factory=list)
    aggregates: dict[str, dict[str, tuple[float, float | None]]] = field(default_factory=dict)
    significance: list[dict] = field(default_factory=list)
    sweep: list[dict] = field(default_factory=list)


def _load_full_dataset(config: ExperimentConfig):
    if config.dataset == "synthetic":
        return synthetic_benchmark(
            n_samples=config.synthetic_samples,
            n_features=config.synthetic_features,
            priors=config.synthetic_priors,
            separation=config.synthetic_separation,
            seed=config.data_seed,
        )
    schema = FeatureSchema.from_file(config.schema_file)
    return load_csv_dataset(config.dataset, schema, config.drop_labels), schema


def prepare_split(config: ExperimentConfig, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified train/test split; a function of (config, seed) only.

    For CSV data the encoder (one-hot categories, z-score statistics) is
    fitted on the training portion and reused for the test portion.
    """
    split_rng = SeededRng(seed).child(_STREAM_SPLIT)
    if config.dataset == "synthetic":
        data = _load_full_dataset(config)
        train_idx, test_idx = split_indices(data.labels, config.test_fraction, split_rng)
        return data.subset(train_idx), data.subset(test_idx)
    table, schema = _load_full_dataset(config)
    train_idx, test_idx = split_indices(table.labels, config.test_fraction, split_rng)
    train_encoded, encoder = encode_features(table.subset(train_idx), schema)
    test_encoded = encoder.transform(table.subset(test_idx))
    return train_encoded, test_encoded


def _resample_training(config: ExperimentConfig, train_ds: LabeledDataset, rng: SeededRng) -> LabeledDataset:
    if config.resampler == "none":
        return train_ds
    if config.resampler == "smote_enn":
        from .resampling import smote_enn

        return smote_enn(train_ds, config.smote_k, config.enn_k, rng)
    from .resampling import adasyn_generate

    counts = np.bincount(train_ds.labels, minlength=train_ds.n_classes)
    majority = int(counts.max())
    blocks_x = [train_ds.features]
    blocks_y = [train_ds.labels]
    for c in range(train_ds.n_classes):
        deficit = majority - int(counts[c])
        if deficit <= 0:
            continue
        synth = adasyn_generate(train_ds, c, deficit, config.adasyn_k, rng.child(c))
        if synth.shape[0]:
            blocks_x.append(synth)
            blocks_y.append(np.full(synth.shape[0], c, dtype=np.int64))
    return LabeledDataset(
        np.concatenate(blocks_x, axis=0), np.concatenate(blocks_y), list(train_ds.class_names)
    )


def _make_loss_config(config: ExperimentConfig, train_labels: np.ndarray, n_classes: int) -> LossConfig:
    if config.loss == "weighted_cross_entropy":
        counts = np.bincount(train_labels, minlength=n_classes)
        return LossConfig(kind=config.loss, class_weights=default_class_weights(counts))
    if config.loss == "focal":
        return LossConfig(kind=config.loss, gamma=config.gamma, alpha=config.focal_alpha)
    return LossConfig(kind=config.loss)


def _dataset_loss(net, xs, labels_1h, loss_config, batch_size) -> float:
    total = 0.0
    for start in range(0, xs.shape[0], batch_size):
        stop = min(start + batch_size, xs.shape[0])
        logits, _ = network_forward(net, xs[start:stop], mode="eval")
        per = loss_per_sample(loss_config, softmax(logits), labels_1h[start:stop])
        total += float(per.sum())
    return total / xs.shape[0]


def train(config: ExperimentConfig, seed: int) -> RunResult:
    """One full training run: split, resample, fit with early stopping,
    restore the best-validation weights, evaluate on the untouched test set."""
    config.validate()
    started = time.perf_counter()
    train_full, test_ds = prepare_split(config, seed)
    root = SeededRng(seed)

    keep_idx, val_idx = split_indices(
        train_full.labels, config.validation_fraction, root.child(_STREAM_VAL)
    )
    train_ds = train_full.subset(keep_idx)
    val_ds = train_full.subset(val_idx)
    train_ds = _resample_training(config, train_ds, root.child(_STREAM_RESAMPLE))

    n_classes = train_ds.n_classes
    x_train = to_sequences(train_ds.features, config.sequence_chunks)
    y_train = one_hot(train_ds.labels, n_classes)
    x_val = to_sequences(val_ds.features, config.sequence_chunks)
    y_val = one_hot(val_ds.labels, n_classes)
    x_test = to_sequences(test_ds.features, config.sequence_chunks)

    net = SequenceNetwork(
        input_size=x_train.shape[2],
        n_classes=n_classes,
        hidden1=config.hidden1,
        hidden2=config.hidden2,
        dense_units=config.dense_units,
        dropout_rate=config.dropout_rate,
        aggregation=config.aggregation,
        rng=root.child(_STREAM_INIT),
    )
    params = net.params()
    state = OptimizerState(params)
    opt_config = OptimizerConfig(
        base_lr=config.base_lr,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.epsilon,
        weight_decay=config.weight_decay,
        adabound_final_lr=config.adabound_final_lr,
        adabound_gamma=config.adabound_gamma,
        eps_inside_sqrt=config.eps_inside_sqrt,
    )
    is_dbs = config.optimizer == "dbs_adam"
    tracker = DifficultyTracker(
        ema_beta=config.ema_beta,
        alpha_mix=config.alpha_mix,
        clip_k=config.clip_k,
        d_min=config.d_min,
        d_max=config.d_max,
        norm_epsilon=config.norm_epsilon,
        warmup_batches=config.warmup_batches,
    ) if is_dbs else None
    loss_config = _make_loss_config(config, train_ds.labels, n_classes)

    shuffle_rng = root.child(_STREAM_SHUFFLE)
    dropout_rng = root.child(_STREAM_DROPOUT)
    n = x_train.shape[0]
    best_val = math.inf
    best_epoch = 0
    best_params = {k: v.copy() for k, v in params.items()}
    stale = 0
    train_losses: list[float] = []
    val_losses: list[float] = []
    lr_trace: list[float] = []

    epoch = 0
    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for batch_no, start in enumerate(range(0, n, config.batch_size)):
            batch = order[start : start + config.batch_size]
            try:
                xb, yb = x_train[batch], y_train[batch]
                logits, cache = network_forward(net, xb, mode="train", rng=dropout_rng)
                per = loss_per_sample(loss_config, softmax(logits), yb)
                batch_loss = float(per.mean())
                grads = network_backward(net, cache, loss_gradient(loss_config, logits, yb))
                if is_dbs:
                    lr = dbs_adam_step(
                        params, grads, state, opt_config, tracker, batch_loss,
                        grad_norm_mode=config.grad_norm_mode,
                    )
                    lr_trace.append(lr)
                else:
                    OPTIMIZER_STEPS[config.optimizer](params, grads, state, opt_config)
            except Exception as exc:
                raise RuntimeError(
                    f"run aborted (seed={seed}, epoch={epoch}, batch={batch_no}): {exc}"
                ) from exc
            epoch_loss += float(per.sum())
        train_losses.append(epoch_loss / n)

        val_loss = _dataset_loss(net, x_val, y_val, loss_config, config.batch_size)
        val_losses.append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break

    for k in params:
        params[k][...] = best_params[k]

    preds = np.zeros(x_test.shape[0], dtype=np.int64)
    per_sample = np.zeros(x_test.shape[0])
    y_test_1h = one_hot(test_ds.labels, n_classes)
    for start in range(0, x_test.shape[0], config.batch_size):
        stop = min(start + config.batch_size, x_test.shape[0])
        logits, _ = network_forward(net, x_test[start:stop], mode="eval")
        preds[start:stop] = np.argmax(logits, axis=1)
        per_sample[start:stop] = loss_per_sample(
            loss_config, softmax(logits), y_test_1h[start:stop]
        )
    cm = confusion_matrix(test_ds.labels, preds, n_classes)
    metrics = metrics_from_confusion(cm, per_sample)

    summary = None
    if lr_trace:
        summary = (min(lr_trace), float(np.mean(lr_trace)), max(lr_trace))
    return RunResult(
        optimizer=config.optimizer,
        seed=seed,
        train_losses=train_losses,
        val_losses=val_losses,
        best_epoch=best_epoch,
        epochs_run=epoch,
        metrics=metrics,
        lr_trace=lr_trace if is_dbs else None,
        lr_summary=summary,
        wall_clock=time.perf_counter() - started,
    )


METRIC_KEYS = ("accuracy", "precision", "recall", "f1", "loss")


def compare_optimizers(
    config: ExperimentConfig, seeds: tuple[int, ...] | None = None
) -> ComparisonReport:
    """Train every configured optimizer on every seed and compare pairwise.

    Splits depend on the seed alone, so per-seed metric vectors are paired
    across optimizers; each optimizer pair gets one t-test and effect size
    per metric.
    """
    config.validate()
    seeds = tuple(seeds) if seeds is not None else config.seeds
    if len(config.optimizers) < 2:
        raise ConfigError("comparison needs at least 2 optimizers")
    if len(seeds) < 2:
        raise ConfigError("comparison needs at least 2 seeds")

    report = ComparisonReport()
    by_name: dict[str, list[RunResult]] = {}
    for name in dict.fromkeys(config.optimizers):  # unique, order kept
        cfg = _with_optimizer(config, name)
        runs = [train(cfg, seed) for seed in seeds]
        by_name[name] = runs
        report.runs.extend(runs)
        report.aggregates[name] = aggregate_runs([r.metrics for r in runs])

    for a, b in itertools.combinations(config.optimizers, 2):
        for metric in METRIC_KEYS:
            va = [r.metrics.scalar_metrics()[metric] for r in by_name[a]]
            vb = [r.metrics.scalar_metrics()[metric] for r in by_name[b]]
            result = paired_t_test(va, vb)
            report.significance.append(
                {"optimizer_a": a, "optimizer_b": b, "metric": metric, "result": result}
            )
    return report


def _with_optimizer(config: ExperimentConfig, name: str) -> ExperimentConfig:
    clone = ExperimentConfig(**asdict(config))
    clone.optimizer = name
    return clone


def sensitivity_sweep(
    config: ExperimentConfig,
    beta_grid: tuple[float, ...] | None = None,
    alpha_grid: tuple[float, ...] | None = None,
    seeds: tuple[int, ...] | None = None,
) -> ComparisonReport:
    """Cross-product sweep of the EMA decay and mix weight for the
    difficulty-scaled optimizer; each cell aggregates over the sweep seeds."""
    config.validate()
    betas = tuple(beta_grid) if beta_grid is not None else config.beta_grid
    alphas = tuple(alpha_grid) if alpha_grid is not None else config.alpha_grid
    if not betas or not alphas:
        raise ConfigError("sweep grids must be non-empty")
    if seeds is None:
        if config.sweep_seeds > len(config.seeds):
            raise ConfigError(
                f"sweep_seeds={config.sweep_seeds} exceeds the {len(config.seeds)} configured seeds"
            )
        seeds = config.seeds[: config.sweep_seeds]
    seeds = tuple(seeds)

    report = ComparisonReport()
    for beta in betas:
        for alpha in alphas:
            cell_cfg = ExperimentConfig(**asdict(config))
            cell_cfg.optimizer = "dbs_adam"
            cell_cfg.ema_beta = beta
            cell_cfg.alpha_mix = alpha
            tag = f"beta={beta:g},alpha={alpha:g}"
            runs = []
            for seed in seeds:
                run = train(cell_cfg, seed)
                run.tag = tag
                runs.append(run)
            report.runs.extend(runs)
            cell = {"beta": beta, "alpha": alpha, "seeds": list(seeds)}
            cell["metrics"] = {
                k: list(v) for k, v in aggregate_runs([r.metrics for r in runs]).items()
            }
            report.sweep.append(cell)
    return report


def _jsonable(obj):
    """Recursively convert report objects to strictly valid JSON types."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if hasattr(obj, "__dataclass_fields__"):
        return _jsonable(asdict(obj))
    raise TypeError(f"cannot serialize {type(obj)}")


RUNS_CSV_COLUMNS = (
    "optimizer", "seed", "tag", "accuracy", "precision", "recall", "f1", "loss",
    "best_epoch", "epochs_run", "lr_min", "lr_mean", "lr_max", "wall_clock_s",
)


def emit_report(report: ComparisonReport, out_dir: str, formats: tuple[str, ...] = ("json", "csv")) -> list[str]:
    """Write report.json and/or the flat CSV views; returns the paths written.

    Output is deterministic for a given report: keys are sorted in the JSON
    and rows follow the report's run order.
    """
    os.makedirs(out_dir, exist_ok=True)
    written: list[str] = []
    try:
        if "json" in formats:
            path = os.path.join(out_dir, "report.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(_jsonable(report), fh, sort_keys=True, indent=2)
                fh.write("\n")
            written.append(path)
        if "csv" in formats:
            path = os.path.join(out_dir, "runs.csv")
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(RUNS_CSV_COLUMNS)
                for run in report.runs:
                    scalars = run.metrics.scalar_metrics()
                    lr = run.lr_summary or ("", "", "")
                    writer.writerow([
                        run.optimizer, run.seed, run.tag,
                        f"{scalars['accuracy']:.10g}", f"{scalars['precision']:.10g}",
                        f"{scalars['recall']:.10g}", f"{scalars['f1']:.10g}",
                        f"{scalars['loss']:.10g}",
                        run.best_epoch, run.epochs_run,
                        *(f"{v:.10g}" if v != "" else "" for v in lr),
                        f"{run.wall_clock:.6f}",
                    ])
            written.append(path)
            trace_path = os.path.join(out_dir, "lr_trace.csv")
            with open(trace_path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(("optimizer", "seed", "batch", "learning_rate"))
                for run in report.runs:
                    if run.lr_trace is None:
                        continue
                    for batch_no, lr in enumerate(run.lr_trace):
                        writer.writerow((run.optimizer, run.seed, batch_no, f"{lr:.10g}"))
            written.append(trace_path)
    except OSError as exc:
        raise RuntimeError(f"cannot write report to {out_dir}: {exc}") from exc
    return written


def report_from_json(path: str) -> ComparisonReport:
    """Rehydrate a ComparisonReport written by emit_report."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    runs = []
    for r in payload.get("runs", []):
        metrics = MetricsReport(**r.pop("metrics"))
        summary = r.pop("lr_summary")
        runs.append(RunResult(metrics=metrics,
                              lr_summary=tuple(summary) if summary else None, **r))
    significance = []
    for entry in payload.get("significance", []):
        entry = dict(entry)
        entry["result"] = SignificanceResult(**entry["result"])
        significance.append(entry)
    aggregates = {
        name: {metric: (pair[0], pair[1]) for metric, pair in metrics.items()}
        for name, metrics in payload.get("aggregates", {}).items()
    }
    return ComparisonReport(
        runs=runs,
        aggregates=aggregates,
        significance=significance,
        sweep=payload.get("sweep", []),
    )
