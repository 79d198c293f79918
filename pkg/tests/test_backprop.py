import math

import numpy as np
import pytest

from temposnn.backprop import (
    DEFAULT_SIGMA,
    SurrogateConfig,
    backward,
    forward_relaxed,
    grad_check,
    smooth_step,
    surrogate_derivative,
)
from temposnn.errors import ArgumentError
from temposnn.losses import association_loss, rate_softmax_ce
from temposnn.network import init_weights, forward
from temposnn.neuron import NeuronConfig


def binary_frames(rng, steps, channels, rate=0.3):
    return (rng.random((steps, channels)) < rate).astype(np.float64)


class TestSurrogateDerivative:
    def test_peak_is_one_at_default_sigma(self):
        assert surrogate_derivative(0.0, DEFAULT_SIGMA) == pytest.approx(1.0, abs=1e-15)

    def test_vanishes_far_from_threshold(self):
        assert surrogate_derivative(50.0, DEFAULT_SIGMA) == pytest.approx(0.0, abs=1e-100)
        assert surrogate_derivative(-50.0, DEFAULT_SIGMA) == pytest.approx(0.0, abs=1e-100)

    def test_one_sigma_reference(self):
        sigma = DEFAULT_SIGMA
        peak = surrogate_derivative(0.0, sigma)
        assert surrogate_derivative(sigma, sigma) == pytest.approx(
            math.exp(-0.5) * peak, abs=1e-12)

    def test_positive_and_symmetric(self):
        xs = np.linspace(-3, 3, 41)
        vals = surrogate_derivative(xs, 0.7)
        assert (vals > 0).all()
        assert np.allclose(vals, vals[::-1], atol=1e-15)

    def test_is_derivative_of_smooth_step(self):
        eps = 1e-6
        for x in (-1.2, -0.3, 0.0, 0.4, 2.0):
            fd = (smooth_step(x + eps, 0.8) - smooth_step(x - eps, 0.8)) / (2 * eps)
            assert surrogate_derivative(x, 0.8) == pytest.approx(fd, abs=1e-8)

    def test_sigma_validation(self):
        with pytest.raises(ArgumentError):
            surrogate_derivative(0.0, 0.0)
        with pytest.raises(ArgumentError):
            SurrogateConfig(sigma=-1.0)


class TestBackward:
    def test_zero_upstream_gives_zero_gradients(self):
        rng = np.random.default_rng(1)
        net = init_weights([6, 10, 3], seed=2, gain=2.0)
        frames = binary_frames(rng, 20, 6)
        out, trace = forward(net, frames, record=True)
        grads = backward(net, trace, np.zeros_like(out))
        for g in grads:
            assert not g.any()

    def test_single_step_chain_rule_by_hand(self):
        # one layer, one neuron, one synapse, T=1:
        # dE/dw = dE/dO * eps(v - v_th) * k with k = 1, v = w
        w = 0.7
        cfg = NeuronConfig(tau=4, tau_r=4, theta=1, v_th=1)
        net = init_weights([1, 1], seed=0, gain=0.0, cfg=cfg)
        net.layers[0].weights[0, 0] = w
        frames = np.ones((1, 1))
        _, trace = forward(net, frames, record=True)
        upstream = np.full((1, 1), 2.5)
        grads = backward(net, trace, upstream)
        expected = 2.5 * surrogate_derivative(w - 1.0, DEFAULT_SIGMA) * 1.0
        assert grads[0][0, 0] == pytest.approx(expected, abs=1e-14)

    def test_linearity_in_upstream(self):
        rng = np.random.default_rng(3)
        net = init_weights([5, 8, 4], seed=4, gain=2.0)
        frames = binary_frames(rng, 15, 5)
        _, trace = forward(net, frames, record=True)
        g1 = rng.standard_normal((15, 4))
        g2 = rng.standard_normal((15, 4))
        combo = backward(net, trace, 0.3 * g1 - 1.7 * g2)
        a = backward(net, trace, g1)
        b = backward(net, trace, g2)
        for c, x, y in zip(combo, a, b):
            assert np.allclose(c, 0.3 * x - 1.7 * y, atol=1e-12)

    def test_silent_input_channel_gets_zero_gradient(self):
        rng = np.random.default_rng(5)
        net = init_weights([6, 9, 3], seed=6, gain=2.0)
        frames = binary_frames(rng, 20, 6)
        frames[:, 4] = 0.0
        _, trace = forward(net, frames, record=True)
        grads = backward(net, trace, rng.standard_normal((20, 3)))
        assert not grads[0][:, 4].any()
        assert grads[0][:, 0].any()

    def test_truncated_equals_full_when_filters_memoryless(self):
        # with both decay factors at zero the chains vanish and the full
        # reverse mode collapses onto the one-step delta recursion
        rng = np.random.default_rng(7)
        cfg = NeuronConfig(tau=1e-9, tau_r=1e-9, theta=1.0, v_th=1.0)
        net = init_weights([5, 8, 3], seed=8, gain=2.0, cfg=cfg)
        frames = binary_frames(rng, 15, 5, rate=0.5)
        _, trace = forward(net, frames, record=True)
        upstream = rng.standard_normal((15, 3))
        full = backward(net, trace, upstream, mode="full")
        truncated = backward(net, trace, upstream, mode="truncated")
        for a, b in zip(full, truncated):
            assert np.array_equal(a, b)

    def test_truncated_differs_with_filter_memory(self):
        rng = np.random.default_rng(9)
        net = init_weights([5, 8, 3], seed=8, gain=2.0)
        frames = binary_frames(rng, 15, 5, rate=0.5)
        _, trace = forward(net, frames, record=True)
        upstream = rng.standard_normal((15, 3))
        full = backward(net, trace, upstream, mode="full")
        truncated = backward(net, trace, upstream, mode="truncated")
        assert any(not np.allclose(a, b) for a, b in zip(full, truncated))

    def test_batched_backward_sums_per_sample_gradients(self):
        rng = np.random.default_rng(21)
        net = init_weights([6, 9, 3], seed=10, gain=2.0)
        batch = np.stack([binary_frames(rng, 18, 6) for _ in range(5)])
        upstream = rng.standard_normal((5, 18, 3))
        _, trace = forward(net, batch, record=True)
        combined = backward(net, trace, upstream)
        singles = [np.zeros_like(w.weights) for w in net.layers]
        for b in range(5):
            _, tr = forward(net, batch[b], record=True)
            for acc, g in zip(singles, backward(net, tr, upstream[b])):
                acc += g
        for a, b_ in zip(combined, singles):
            assert np.allclose(a, b_, atol=1e-12)

    def test_requires_recorded_trace(self):
        net = init_weights([4, 2], seed=0)
        _, trace = forward(net, np.zeros((5, 4)), record=False)
        with pytest.raises(ArgumentError):
            backward(net, trace, np.zeros((5, 2)))

    def test_shape_mismatch(self):
        net = init_weights([4, 2], seed=0)
        _, trace = forward(net, np.zeros((5, 4)), record=True)
        with pytest.raises(ArgumentError):
            backward(net, trace, np.zeros((6, 2)))


class TestGradCheck:
    def test_zero_network_zero_input(self):
        net = init_weights([4, 3], seed=0, gain=0.0)
        err = grad_check(net, lambda o: rate_softmax_ce(o, 0), np.zeros((5, 4)))
        assert err == 0.0

    def test_classification_loss_small_error(self):
        rng = np.random.default_rng(10)
        net = init_weights([8, 16, 4], seed=1, gain=2.0)
        frames = binary_frames(rng, 20, 8)
        err = grad_check(net, lambda o: rate_softmax_ce(o, 2), frames, eps=1e-5)
        assert err < 1e-5

    def test_association_loss_small_error(self):
        rng = np.random.default_rng(11)
        net = init_weights([8, 16, 4], seed=1, gain=2.0)
        frames = binary_frames(rng, 20, 8)
        targets = binary_frames(rng, 20, 4, rate=0.2)
        err = grad_check(net, lambda o: association_loss(o, targets), frames, eps=1e-5)
        assert err < 1e-5

    def test_three_layer_deep_chain(self):
        rng = np.random.default_rng(12)
        net = init_weights([6, 10, 10, 3], seed=3, gain=2.0)
        frames = binary_frames(rng, 25, 6)
        err = grad_check(net, lambda o: rate_softmax_ce(o, 1), frames, eps=1e-5)
        assert err < 1e-5

    def test_error_stable_when_eps_halved(self):
        rng = np.random.default_rng(13)
        net = init_weights([6, 8, 3], seed=5, gain=2.0)
        frames = binary_frames(rng, 12, 6)
        loss_fn = lambda o: rate_softmax_ce(o, 0)
        base = grad_check(net, loss_fn, frames, eps=1e-5, num_weights=40)
        halved = grad_check(net, loss_fn, frames, eps=5e-6, num_weights=40)
        assert halved <= max(4 * base, 1e-6)

    def test_invalid_eps(self):
        net = init_weights([4, 2], seed=0)
        with pytest.raises(ArgumentError):
            grad_check(net, lambda o: rate_softmax_ce(o, 0), np.zeros((5, 4)), eps=0.0)


class TestRelaxedForward:
    def test_outputs_strictly_inside_unit_interval(self):
        rng = np.random.default_rng(14)
        net = init_weights([5, 7, 2], seed=6, gain=2.0)
        out, trace = forward_relaxed(net, binary_frames(rng, 10, 5))
        assert (out > 0).all() and (out < 1).all()

    def test_smooth_step_limits(self):
        assert smooth_step(-40.0, DEFAULT_SIGMA) == pytest.approx(0.0, abs=1e-30)
        assert smooth_step(40.0, DEFAULT_SIGMA) == pytest.approx(1.0, abs=1e-15)
        assert smooth_step(0.0, DEFAULT_SIGMA) == pytest.approx(0.5, abs=1e-15)
