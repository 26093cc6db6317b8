"""Adam-family optimizers plus the batch-difficulty learning-rate scaler.

Parameters and gradients travel as name -> ndarray dicts with matching keys
and shapes. All step functions mutate params and state in place. The
difficulty pipeline turns (gradient norm, batch loss) into a multiplier in
[d_min, d_max] that rescales the global learning rate per batch: batches the
model finds hard get larger steps, easy ones smaller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Params = dict[str, np.ndarray]

GRAD_NORM_MODES = ("global_l2", "mean_per_tensor")


@dataclass
class OptimizerConfig:
    """Shared hyperparameters for the Adam family.

    epsilon sits outside the square root by default (denominator
    sqrt(v_hat) + eps); set eps_inside_sqrt for the sqrt(v_hat + eps)
    variant. The two differ far below test tolerances at eps = 1e-7 but the
    placement is pinned for bit-reproducibility.
    """

    base_lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7
    weight_decay: float = 0.01          # adamw only
    adabound_final_lr: float = 0.1      # adabound only
    adabound_gamma: float = 1e-3        # adabound only
    eps_inside_sqrt: bool = False

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError(f"betas must lie in [0, 1): {self.beta1}, {self.beta2}")
        if self.base_lr <= 0:
            raise ValueError(f"base_lr must be positive, got {self.base_lr}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


class OptimizerState:
    """Per-parameter moment buffers and the step counter.

    v_max is allocated lazily on the first amsgrad step and holds the running
    elementwise maximum of the bias-corrected second moment.
    """

    def __init__(self, params: Params):
        self.m: Params = {k: np.zeros_like(v) for k, v in params.items()}
        self.v: Params = {k: np.zeros_like(v) for k, v in params.items()}
        self.v_max: Params | None = None
        self.t: int = 0


def _check_shapes(params: Params, grads: Params) -> None:
    if params.keys() != grads.keys():
        missing = sorted(set(params) ^ set(grads))
        raise ValueError(f"params/grads key mismatch: {missing}")
    for k in params:
        if params[k].shape != grads[k].shape:
            raise ValueError(
                f"shape mismatch for {k!r}: params {params[k].shape}, grads {grads[k].shape}"
            )
        if not np.all(np.isfinite(grads[k])):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(grads[k]))[0])
            raise ValueError(f"non-finite gradient in {k!r} at index {bad}")


def _denominator(v_hat: np.ndarray, config: OptimizerConfig) -> np.ndarray:
    if config.eps_inside_sqrt:
        return np.sqrt(v_hat + config.epsilon)
    return np.sqrt(v_hat) + config.epsilon


def _update_moments(grads: Params, state: OptimizerState, config: OptimizerConfig) -> tuple[Params, Params]:
    """Advance t and the moment EMAs; return bias-corrected (m_hat, v_hat)."""
    state.t += 1
    bc1 = 1.0 - config.beta1**state.t
    bc2 = 1.0 - config.beta2**state.t
    m_hat: Params = {}
    v_hat: Params = {}
    for k, g in grads.items():
        state.m[k] = config.beta1 * state.m[k] + (1.0 - config.beta1) * g
        state.v[k] = config.beta2 * state.v[k] + (1.0 - config.beta2) * (g * g)
        m_hat[k] = state.m[k] / bc1
        v_hat[k] = state.v[k] / bc2
    return m_hat, v_hat


def adam_step(
    params: Params,
    grads: Params,
    state: OptimizerState,
    config: OptimizerConfig,
    lr_override: float | None = None,
) -> None:
    """One Adam update: moment EMAs, bias correction, scaled step."""
    _check_shapes(params, grads)
    lr = config.base_lr if lr_override is None else lr_override
    m_hat, v_hat = _update_moments(grads, state, config)
    for k in params:
        params[k] -= lr * m_hat[k] / _denominator(v_hat[k], config)


def amsgrad_step(params: Params, grads: Params, state: OptimizerState, config: OptimizerConfig) -> None:
    """Adam with a non-increasing effective rate: the denominator uses the
    running max of the bias-corrected second moment."""
    _check_shapes(params, grads)
    m_hat, v_hat = _update_moments(grads, state, config)
    if state.v_max is None:
        state.v_max = {k: np.zeros_like(v) for k, v in params.items()}
    for k in params:
        state.v_max[k] = np.maximum(state.v_max[k], v_hat[k])
        params[k] -= config.base_lr * m_hat[k] / _denominator(state.v_max[k], config)


def adamw_step(params: Params, grads: Params, state: OptimizerState, config: OptimizerConfig) -> None:
    """Adam plus decoupled weight decay: theta -= lr * wd * theta, applied to
    the pre-step parameters outside the moment machinery."""
    _check_shapes(params, grads)
    m_hat, v_hat = _update_moments(grads, state, config)
    for k in params:
        decay = config.base_lr * config.weight_decay * params[k]
        params[k] -= config.base_lr * m_hat[k] / _denominator(v_hat[k], config) + decay


def adabound_bounds(t: int, config: OptimizerConfig) -> tuple[float, float]:
    """Per-step learning-rate clip interval; both bounds -> final_lr as t grows."""
    final_lr = config.adabound_final_lr
    gamma = config.adabound_gamma
    lower = final_lr * (1.0 - 1.0 / (gamma * t + 1.0))
    upper = final_lr * (1.0 + 1.0 / (gamma * t))
    return lower, upper


def adabound_step(params: Params, grads: Params, state: OptimizerState, config: OptimizerConfig) -> None:
    """Adam-style step with the per-coordinate rate clipped into a band that
    tightens around adabound_final_lr."""
    _check_shapes(params, grads)
    m_hat, v_hat = _update_moments(grads, state, config)
    lower, upper = adabound_bounds(state.t, config)
    for k in params:
        rate = np.clip(config.base_lr / _denominator(v_hat[k], config), lower, upper)
        params[k] -= rate * m_hat[k]


@dataclass
class DifficultyTracker:
    """Running EMA statistics that turn raw batch signals into a difficulty score.

    A batch is scored from two signals, the gradient norm G and the batch
    loss L. Each is z-scored against EMA running statistics, clipped to
    [-clip_k, clip_k], rescaled into [0, 1], and the two are mixed with
    weight alpha_mix on the gradient side. The mix is finally clipped to
    [d_min, d_max]. The running "deviation" is an EMA of absolute deviation
    from the running mean, updated after the mean (mean first, then
    deviation and z-score against the fresh mean).

    The first warmup_batches observations return the neutral midpoint while
    statistics accumulate; z-scores against a near-zero deviation would be
    meaningless.
    """

    ema_beta: float = 0.95
    alpha_mix: float = 0.5
    clip_k: float = 5.0
    d_min: float = 0.1
    d_max: float = 1.0
    norm_epsilon: float = 1e-8
    warmup_batches: int = 10
    mu_g: float = 0.0
    sigma_g: float = 0.0
    mu_l: float = 0.0
    sigma_l: float = 0.0
    batches_seen: int = 0

    def __post_init__(self):
        if not (0.0 < self.d_min <= self.d_max):
            raise ValueError(f"need 0 < d_min <= d_max, got [{self.d_min}, {self.d_max}]")
        if not (0.0 <= self.alpha_mix <= 1.0):
            raise ValueError(f"alpha_mix must lie in [0, 1], got {self.alpha_mix}")
        if self.clip_k <= 0:
            raise ValueError(f"clip_k must be positive, got {self.clip_k}")

    def difficulty(self, grad_norm: float, batch_loss: float) -> float:
        """Score a batch against the current statistics without updating them."""
        g_hat = self._rescale((grad_norm - self.mu_g) / (self.sigma_g + self.norm_epsilon))
        l_hat = self._rescale((batch_loss - self.mu_l) / (self.sigma_l + self.norm_epsilon))
        # written as l + a*(g - l) rather than a*g + (1-a)*l so equal inputs
        # produce that exact value for any alpha
        mixed = l_hat + self.alpha_mix * (g_hat - l_hat)
        return float(np.clip(mixed, self.d_min, self.d_max))

    def _rescale(self, z: float) -> float:
        k = self.clip_k
        return (float(np.clip(z, -k, k)) + k) / (2.0 * k)

    def neutral(self) -> float:
        return float(np.clip(0.5, self.d_min, self.d_max))


def observe_batch(tracker: DifficultyTracker, grad_norm: float, batch_loss: float) -> float:
    """Fold one batch into the tracker and return its clipped difficulty.

    Update order per step: mean EMA first, then deviation EMA against the
    freshly updated mean, then the z-score. Statistics start at the first
    observation (mean = value, deviation = 0). Warm-up batches still update
    statistics but score as the neutral midpoint.
    """
    if grad_norm < 0:
        raise ValueError(f"gradient norm must be >= 0, got {grad_norm}")
    if not np.isfinite(batch_loss):
        raise ValueError(f"batch loss must be finite, got {batch_loss}")

    one_minus_beta = 1.0 - tracker.ema_beta
    if tracker.batches_seen == 0:
        tracker.mu_g = float(grad_norm)
        tracker.mu_l = float(batch_loss)
        tracker.sigma_g = 0.0
        tracker.sigma_l = 0.0
    else:
        # incremental form mu += (1-beta)(x - mu): exact no-op when x == mu
        tracker.mu_g += one_minus_beta * (grad_norm - tracker.mu_g)
        tracker.sigma_g += one_minus_beta * (abs(grad_norm - tracker.mu_g) - tracker.sigma_g)
        tracker.mu_l += one_minus_beta * (batch_loss - tracker.mu_l)
        tracker.sigma_l += one_minus_beta * (abs(batch_loss - tracker.mu_l) - tracker.sigma_l)
    tracker.batches_seen += 1

    if tracker.batches_seen <= tracker.warmup_batches:
        return tracker.neutral()
    return tracker.difficulty(grad_norm, batch_loss)


def scaled_learning_rate(tracker: DifficultyTracker, base_lr: float, difficulty: float) -> float:
    """Per-batch learning rate: base rate times the clipped difficulty."""
    if not (tracker.d_min <= difficulty <= tracker.d_max):
        raise ValueError(
            f"difficulty {difficulty} outside [{tracker.d_min}, {tracker.d_max}]"
        )
    return base_lr * difficulty


def gradient_signal(grads: Params, mode: str = "global_l2") -> float:
    """Scalar gradient-magnitude signal for difficulty scoring.

    global_l2 is the L2 norm of the full concatenated gradient;
    mean_per_tensor averages the per-tensor norms instead.
    """
    if mode == "global_l2":
        total = 0.0
        for g in grads.values():
            total += float(np.sum(np.square(g)))
        return float(np.sqrt(total))
    if mode == "mean_per_tensor":
        norms = [float(np.sqrt(np.sum(np.square(g)))) for g in grads.values()]
        return float(np.mean(norms)) if norms else 0.0
    raise ValueError(f"unknown grad_norm_mode {mode!r}, expected one of {GRAD_NORM_MODES}")


def dbs_adam_step(
    params: Params,
    grads: Params,
    state: OptimizerState,
    config: OptimizerConfig,
    tracker: DifficultyTracker,
    batch_loss: float,
    grad_norm_mode: str = "global_l2",
) -> float:
    """Difficulty-scaled Adam step; returns the learning rate actually used.

    batch_loss must be the mean loss of the same batch that produced grads.
    """
    _check_shapes(params, grads)
    grad_norm = gradient_signal(grads, grad_norm_mode)
    difficulty = observe_batch(tracker, grad_norm, batch_loss)
    lr = scaled_learning_rate(tracker, config.base_lr, difficulty)
    adam_step(params, grads, state, config, lr_override=lr)
    return lr


# baseline steps sharing the signature (params, grads, state, config)
OPTIMIZER_STEPS = {
    "adam": adam_step,
    "amsgrad": amsgrad_step,
    "adamw": adamw_step,
    "adabound": adabound_step,
}

OPTIMIZER_NAMES = (*OPTIMIZER_STEPS, "dbs_adam")
