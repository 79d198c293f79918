import numpy as np
import pytest

from temposnn.errors import ArgumentError
from temposnn.network import Layer, Network, forward, init_weights
from temposnn.neuron import NeuronConfig


def random_frames(rng, steps, channels, rate=0.3):
    return (rng.random((steps, channels)) < rate).astype(np.float64)


class TestInitWeights:
    def test_same_seed_identical(self):
        a = init_weights([8, 16, 4], seed=5)
        b = init_weights([8, 16, 4], seed=5)
        for la, lb in zip(a.layers, b.layers):
            assert np.array_equal(la.weights, lb.weights)

    def test_zero_gain(self):
        net = init_weights([4, 4], seed=0, gain=0.0)
        assert not net.layers[0].weights.any()

    def test_fan_in_bound(self):
        net = init_weights([100, 10], seed=0, gain=1.0)
        assert np.max(np.abs(net.layers[0].weights)) <= 0.1

    def test_bad_architecture(self):
        with pytest.raises(ArgumentError):
            init_weights([8], seed=0)
        with pytest.raises(ArgumentError):
            init_weights([8, 0, 4], seed=0)

    def test_mismatched_layers_rejected(self):
        with pytest.raises(ArgumentError):
            Network([
                Layer(np.zeros((4, 8)), NeuronConfig()),
                Layer(np.zeros((2, 5)), NeuronConfig()),
            ])


class TestForward:
    def test_zero_input_zero_everything(self):
        net = init_weights([6, 8, 3], seed=1, gain=2.0)
        out, trace = forward(net, np.zeros((20, 6)), record=True)
        assert not out.any()
        for li in range(2):
            assert not trace.outputs[li].any()
            assert not trace.k[li].any()
            assert not trace.v[li].any()

    def test_matches_worked_neuron_example(self):
        cfg = NeuronConfig(tau=4, tau_r=4, theta=1, v_th=1)
        net = Network([Layer(np.array([[2.0]]), cfg)])
        frames = np.zeros((5, 1))
        frames[0, 0] = 1.0
        out, _ = forward(net, frames)
        assert list(out[:, 0]) == [1.0, 0.0, 0.0, 0.0, 0.0]

    def test_recording_is_observation_only(self):
        rng = np.random.default_rng(2)
        net = init_weights([5, 9, 2], seed=3, gain=2.0)
        frames = random_frames(rng, 25, 5)
        out_rec, trace = forward(net, frames, record=True)
        out_plain, none_trace = forward(net, frames, record=False)
        assert none_trace is None
        assert np.array_equal(out_rec, out_plain)
        assert np.array_equal(trace.outputs[-1][0], out_rec)

    def test_determinism(self):
        rng = np.random.default_rng(4)
        net = init_weights([5, 7, 3], seed=9, gain=2.0)
        frames = random_frames(rng, 30, 5)
        a, _ = forward(net, frames)
        b, _ = forward(net, frames)
        assert np.array_equal(a, b)

    def test_layer_locality(self):
        rng = np.random.default_rng(6)
        net = init_weights([5, 8, 8, 2], seed=1, gain=2.0)
        frames = random_frames(rng, 20, 5)
        _, before = forward(net, frames, record=True)
        net.layers[2].weights = net.layers[2].weights * 3.0
        _, after = forward(net, frames, record=True)
        for li in range(2):
            assert np.array_equal(before.outputs[li], after.outputs[li])
        assert not np.array_equal(before.outputs[2], after.outputs[2])

    def test_spike_count_bounded_by_steps(self):
        rng = np.random.default_rng(7)
        net = init_weights([4, 6, 3], seed=2, gain=5.0)
        frames = random_frames(rng, 40, 4, rate=0.8)
        out, _ = forward(net, frames)
        assert out.sum(axis=0).max() <= 40

    def test_batched_matches_single(self):
        rng = np.random.default_rng(8)
        net = init_weights([6, 10, 4], seed=5, gain=2.0)
        batch = np.stack([random_frames(rng, 15, 6) for _ in range(7)])
        out_batch, _ = forward(net, batch)
        for i in range(7):
            single, _ = forward(net, batch[i])
            assert np.array_equal(out_batch[i], single)

    def test_channel_mismatch(self):
        net = init_weights([6, 4], seed=0)
        with pytest.raises(ArgumentError):
            forward(net, np.zeros((10, 5)))

    def test_strict_binary(self):
        net = init_weights([3, 2], seed=0)
        frames = np.zeros((4, 3))
        frames[0, 0] = 2.0
        with pytest.raises(ArgumentError):
            forward(net, frames, strict_binary=True)
        with pytest.warns(UserWarning, match="clamped"):
            out, _ = forward(net, frames)

    def test_count_frames_clamped(self):
        cfg = NeuronConfig(tau=4, tau_r=4, v_th=0.5)
        net = Network([Layer(np.array([[1.0]]), cfg)])
        frames = np.array([[3.0], [0.0]])
        with pytest.warns(UserWarning):
            out_counts, _ = forward(net, frames)
        out_binary, _ = forward(net, np.array([[1.0], [0.0]]))
        assert np.array_equal(out_counts, out_binary)


class TestHardResetVariant:
    def test_theta_irrelevant(self):
        rng = np.random.default_rng(11)
        frames = random_frames(rng, 30, 5)
        outs = []
        for theta in (0.0, 1.0, 7.5):
            cfg = NeuronConfig(tau=4, tau_r=4, theta=theta, v_th=1)
            net = init_weights([5, 8, 3], seed=4, gain=2.0, cfg=cfg)
            out, _ = forward(net, frames, variant="hard_reset")
            outs.append(out)
        assert np.array_equal(outs[0], outs[1])
        assert np.array_equal(outs[1], outs[2])

    def test_equals_adaptive_until_first_spike(self):
        # with no output spikes yet, the hard-reset membrane is exactly W k
        rng = np.random.default_rng(12)
        cfg = NeuronConfig(tau=4, tau_r=4, v_th=1e9)
        net = init_weights([4, 3], seed=6, gain=1.0, cfg=cfg)
        frames = random_frames(rng, 20, 4)
        _, tr_hr = forward(net, frames, variant="hard_reset", record=True)
        _, tr_ad = forward(net, frames, variant="adaptive", record=True)
        assert np.allclose(tr_hr.v[0], tr_ad.v[0], atol=1e-12)

    def test_unknown_variant(self):
        net = init_weights([3, 2], seed=0)
        with pytest.raises(ArgumentError):
            forward(net, np.zeros((4, 3)), variant="mystery")
