import numpy as np
import pytest

from dbsadam.losses import LossConfig, loss_gradient, loss_value, one_hot, softmax
from dbsadam.models import (
    LstmCellParams,
    LstmState,
    SequenceNetwork,
    bilstm_layer_forward,
    init_lstm_params,
    lstm_cell_forward,
    network_backward,
    network_forward,
)
from dbsadam.numerics import (
    SeededRng,
    finite_difference_gradient,
    flatten_arrays,
    sigmoid,
    unflatten_arrays,
)


def zero_cell(hidden, inputs):
    w = np.zeros((hidden, hidden + inputs))
    b = np.zeros(hidden)
    return LstmCellParams(w.copy(), w.copy(), w.copy(), w.copy(),
                          b.copy(), b.copy(), b.copy(), b.copy())


def random_cell(hidden, inputs, seed):
    return init_lstm_params(hidden, inputs, SeededRng(seed))


def oracle_cell_step(params, h_prev, c_prev, x):
    # literal transcription of the gate equations, kept independent of the
    # implementation under test
    z = np.concatenate([h_prev, x])
    f = 1.0 / (1.0 + np.exp(-(params.W_f @ z + params.b_f)))
    i = 1.0 / (1.0 + np.exp(-(params.W_i @ z + params.b_i)))
    c_tilde = np.tanh(params.W_c @ z + params.b_c)
    o = 1.0 / (1.0 + np.exp(-(params.W_o @ z + params.b_o)))
    c = f * c_prev + i * c_tilde
    h = o * np.tanh(c)
    return h, c


class TestLstmCell:
    def test_all_zero_parameters(self):
        cell = zero_cell(3, 2)
        state, gates = lstm_cell_forward(cell, LstmState(np.zeros(3), np.zeros(3)), np.zeros(2))
        for g in ("f", "i", "o"):
            assert np.allclose(gates[g], 0.5)
        assert np.allclose(gates["c_tilde"], 0.0)
        assert np.allclose(state.c, 0.0)
        assert np.allclose(state.h, 0.0)

    def test_zero_weights_nonzero_cell_state(self):
        cell = zero_cell(2, 2)
        c0 = np.array([0.8, -1.2])
        state, _ = lstm_cell_forward(cell, LstmState(np.zeros(2), c0), np.zeros(2))
        assert np.allclose(state.c, 0.5 * c0)
        assert np.allclose(state.h, 0.5 * np.tanh(0.5 * c0))

    def test_matches_straight_line_oracle(self):
        rng = SeededRng(21)
        for seed in range(5):
            cell = random_cell(3, 4, seed)
            h_prev = rng.normal(size=3) * 0.5
            c_prev = rng.normal(size=3) * 0.5
            x = rng.normal(size=4)
            state, _ = lstm_cell_forward(cell, LstmState(h_prev, c_prev), x)
            h_ref, c_ref = oracle_cell_step(cell, h_prev, c_prev, x)
            assert np.allclose(state.h, h_ref, atol=1e-12)
            assert np.allclose(state.c, c_ref, atol=1e-12)

    def test_gate_ranges_and_hidden_bound(self):
        rng = SeededRng(22)
        cell = random_cell(4, 3, 7)
        state = LstmState(np.zeros(4), np.zeros(4))
        for _ in range(20):
            state, gates = lstm_cell_forward(cell, state, rng.normal(size=3) * 3)
            for g in ("f", "i", "o"):
                assert np.all((gates[g] > 0) & (gates[g] < 1))
            assert np.all(np.abs(state.h) < 1)
            assert np.all(np.isfinite(state.c))

    def test_shape_mismatch_rejected(self):
        cell = zero_cell(3, 2)
        with pytest.raises(ValueError):
            lstm_cell_forward(cell, LstmState(np.zeros(3), np.zeros(3)), np.zeros(5))


class TestBilstmLayer:
    def test_length_one_sequence(self):
        fwd = random_cell(3, 2, 1)
        bwd = random_cell(3, 2, 2)
        x = SeededRng(3).normal(size=(1, 2))
        out = bilstm_layer_forward(fwd, bwd, x)
        sf, _ = lstm_cell_forward(fwd, LstmState(np.zeros(3), np.zeros(3)), x[0])
        sb, _ = lstm_cell_forward(bwd, LstmState(np.zeros(3), np.zeros(3)), x[0])
        assert np.allclose(out[0], sf.h + sb.h, atol=1e-12)

    def test_palindrome_symmetry_with_tied_directions(self):
        cell = random_cell(3, 2, 5)
        rng = SeededRng(6)
        half = rng.normal(size=(3, 2))
        xs = np.concatenate([half, half[::-1]], axis=0)  # palindrome, T=6
        out = bilstm_layer_forward(cell, cell, xs)
        assert np.allclose(out, out[::-1], atol=1e-12)

    def test_zero_parameters_give_zero_outputs(self):
        out = bilstm_layer_forward(zero_cell(2, 3), zero_cell(2, 3), SeededRng(7).normal(size=(4, 3)))
        assert np.allclose(out, 0.0)

    def test_zero_backward_direction_degenerates_to_forward_lstm(self):
        fwd = random_cell(3, 2, 8)
        xs = SeededRng(9).normal(size=(5, 2))
        out = bilstm_layer_forward(fwd, zero_cell(3, 2), xs)
        state = LstmState(np.zeros(3), np.zeros(3))
        for t in range(5):
            state, _ = lstm_cell_forward(fwd, state, xs[t])
            assert np.allclose(out[t], state.h, atol=1e-12)

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            bilstm_layer_forward(zero_cell(2, 2), zero_cell(2, 2), np.zeros((0, 2)))


def tiny_network(seed, dropout=0.0, **kwargs):
    defaults = dict(input_size=3, n_classes=3, hidden1=3, hidden2=2, dense_units=4)
    defaults.update(kwargs)
    return SequenceNetwork(dropout_rate=dropout, rng=SeededRng(seed), **defaults)


class TestNetworkForward:
    def test_eval_mode_ignores_rng(self):
        net = tiny_network(1, dropout=0.5)
        xs = SeededRng(2).normal(size=(2, 4, 3))
        a, _ = network_forward(net, xs, mode="eval")
        b, _ = network_forward(net, xs, mode="eval", rng=SeededRng(99))
        assert np.array_equal(a, b)

    def test_train_with_zero_rate_equals_eval(self):
        net = tiny_network(1, dropout=0.0)
        xs = SeededRng(2).normal(size=(2, 4, 3))
        train_logits, _ = network_forward(net, xs, mode="train", rng=SeededRng(5))
        eval_logits, _ = network_forward(net, xs, mode="eval")
        assert np.array_equal(train_logits, eval_logits)

    def test_same_seed_same_masks(self):
        net = tiny_network(1, dropout=0.4)
        xs = SeededRng(2).normal(size=(2, 4, 3))
        a, _ = network_forward(net, xs, mode="train", rng=SeededRng(7))
        b, _ = network_forward(net, xs, mode="train", rng=SeededRng(7))
        assert np.array_equal(a, b)

    def test_train_mode_requires_rng(self):
        net = tiny_network(1, dropout=0.4)
        with pytest.raises(ValueError, match="rng"):
            network_forward(net, np.zeros((1, 2, 3)), mode="train")

    def test_width_mismatch_rejected(self):
        net = tiny_network(1)
        with pytest.raises(ValueError):
            network_forward(net, np.zeros((1, 2, 5)))


def gradient_check(net, xs, labels, loss_config, mode="eval", mask_seed=0, tol=1e-5):
    params = net.params()
    flat, layout = flatten_arrays(params)

    def assign(theta):
        values = unflatten_arrays(theta, layout)
        for k in params:
            params[k][...] = values[k]

    def f(theta):
        assign(theta)
        rng = SeededRng(mask_seed) if mode == "train" else None
        logits, _ = network_forward(net, xs, mode=mode, rng=rng)
        return loss_value(loss_config, softmax(logits), labels)

    base = flat.copy()
    numeric = finite_difference_gradient(f, base, h=1e-5)
    assign(base)
    rng = SeededRng(mask_seed) if mode == "train" else None
    logits, cache = network_forward(net, xs, mode=mode, rng=rng)
    grads = network_backward(net, cache, loss_gradient(loss_config, logits, labels))
    analytic, _ = flatten_arrays({k: grads[k] for k in params})
    # scaled residual: < 1e-5 iff |a - n| < 1e-8 + 1e-5 * max(|a|, |n|); the
    # absolute escape covers coordinates below the h=1e-5 central-difference
    # noise floor (~1e-11) where a pure ratio is meaningless
    denom = np.maximum(np.abs(numeric), np.abs(analytic)) + 1e-3
    return float(np.max(np.abs(analytic - numeric) / denom))


class TestNetworkBackward:
    def test_gradients_match_finite_differences(self):
        labels = one_hot(np.array([0, 2]), 3)
        for seed, config in [
            (1, LossConfig(kind="cross_entropy")),
            (2, LossConfig(kind="focal", gamma=2.0, alpha=0.25)),
            (3, LossConfig(kind="weighted_cross_entropy", class_weights=np.array([0.5, 1.5, 2.0]))),
        ]:
            net = tiny_network(seed)
            xs = SeededRng(seed + 50).normal(size=(2, 4, 3))
            assert gradient_check(net, xs, labels, config) < 1e-5

    def test_gradients_through_dropout_masks(self):
        # fixed mask seed makes the dropped network a deterministic function,
        # so central differences remain valid through the masks
        net = tiny_network(4, dropout=0.4)
        xs = SeededRng(60).normal(size=(2, 3, 3))
        labels = one_hot(np.array([1, 0]), 3)
        err = gradient_check(net, xs, labels, LossConfig(kind="cross_entropy"),
                             mode="train", mask_seed=13)
        assert err < 1e-5

    def test_mean_aggregation_gradients(self):
        net = tiny_network(5, aggregation="mean")
        xs = SeededRng(61).normal(size=(2, 4, 3))
        labels = one_hot(np.array([2, 1]), 3)
        assert gradient_check(net, xs, labels, LossConfig(kind="cross_entropy")) < 1e-5

    def test_zero_upstream_gives_zero_gradients(self):
        net = tiny_network(6)
        xs = SeededRng(62).normal(size=(2, 4, 3))
        _, cache = network_forward(net, xs)
        grads = network_backward(net, cache, np.zeros((2, 3)))
        assert all(np.all(g == 0) for g in grads.values())

    def test_duplicated_batch_equals_single_sample(self):
        # mean reduction: gradients of [x, x] equal gradients of [x]
        net = tiny_network(7)
        x = SeededRng(63).normal(size=(1, 4, 3))
        xs = np.concatenate([x, x], axis=0)
        config = LossConfig(kind="cross_entropy")
        logits1, cache1 = network_forward(net, x)
        g1 = network_backward(net, cache1, loss_gradient(config, logits1, one_hot(np.array([1]), 3)))
        logits2, cache2 = network_forward(net, xs)
        g2 = network_backward(net, cache2, loss_gradient(config, logits2, one_hot(np.array([1, 1]), 3)))
        for k in g1:
            assert np.allclose(g1[k], g2[k], atol=1e-12)

    def test_mismatched_cache_rejected(self):
        net = tiny_network(8)
        _, cache = network_forward(net, SeededRng(64).normal(size=(2, 4, 3)))
        with pytest.raises(ValueError, match="cached batch"):
            network_backward(net, cache, np.zeros((5, 3)))


class TestInitialization:
    def test_forget_bias_starts_at_one(self):
        cell = init_lstm_params(4, 3, SeededRng(9))
        assert np.all(cell.b_f == 1.0)
        assert np.all(cell.b_i == 0.0)

    def test_seeded_init_reproducible(self):
        a = tiny_network(11)
        b = tiny_network(11)
        for k, v in a.params().items():
            assert np.array_equal(v, b.params()[k])

    def test_invalid_dropout_rejected(self):
        with pytest.raises(ValueError):
            tiny_network(1, dropout=1.0)

    def test_invalid_aggregation_rejected(self):
        with pytest.raises(ValueError):
            tiny_network(1, aggregation="first")
