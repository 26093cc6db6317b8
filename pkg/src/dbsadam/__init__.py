"""Batch-difficulty-scaled Adam with its full experimental apparatus.

The package bundles, in pure NumPy:

- the Adam family (Adam, AMSGrad, AdamW, AdaBound) plus a variant whose
  global learning rate is rescaled per batch by a difficulty score built
  from EMA-normalized gradient norms and batch losses
- a stacked bidirectional LSTM classifier with exact hand-derived BPTT
  gradients, checked against central finite differences
- imbalance tooling: weighted cross-entropy, multiclass focal loss,
  SMOTE-ENN and ADASYN resampling
- evaluation and a multi-seed experiment harness with paired t-tests and
  Cohen's d effect sizes

See the demos/ directory for narrative walkthroughs and `python -m dbsadam`
for the experiment CLI.
"""

from .data import (
    FeatureEncoder,
    FeatureSchema,
    LabeledDataset,
    class_distribution,
    encode_features,
    load_csv_dataset,
    synthetic_benchmark,
    to_sequences,
)
from .evaluation import (
    MetricsReport,
    SignificanceResult,
    aggregate_runs,
    cohens_d,
    confusion_matrix,
    metrics_from_confusion,
    paired_t_test,
    split_indices,
    stratified_split,
    student_t_two_sided_p,
)
from .harness import (
    ComparisonReport,
    ConfigError,
    ExperimentConfig,
    RunResult,
    compare_optimizers,
    emit_report,
    load_config,
    sensitivity_sweep,
    train,
)
from .losses import (
    LossConfig,
    batch_mean_loss,
    cross_entropy,
    default_class_weights,
    focal_loss,
    loss_gradient,
    loss_per_sample,
    loss_value,
    one_hot,
    softmax,
    weighted_cross_entropy,
)
from .models import (
    LstmCellParams,
    LstmState,
    SequenceNetwork,
    bilstm_layer_forward,
    init_lstm_params,
    lstm_cell_forward,
    network_backward,
    network_forward,
)
from .numerics import (
    SeededRng,
    finite_difference_gradient,
    l2_norm,
    matmul,
    sigmoid,
    tanh,
)
from .optimizers import (
    DifficultyTracker,
    OptimizerConfig,
    OptimizerState,
    adabound_step,
    adam_step,
    adamw_step,
    amsgrad_step,
    dbs_adam_step,
    gradient_signal,
    observe_batch,
    scaled_learning_rate,
)
from .resampling import (
    NeighborIndex,
    adasyn_generate,
    enn_filter,
    knn_query,
    smote_enn,
    smote_generate,
)

__version__ = "0.1.0"
