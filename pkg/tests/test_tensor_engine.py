"""Tensor engine tests: conv3d vs a naive looped reference, finite-difference
gradient checks in float64, loss values, and the Adam update trace."""
import math

import numpy as np
import pytest

from cvrdetect.errors import DataError, NumericError
from cvrdetect.nn import (AdamState, LayerSpec, adam_step, batch_bce,
                          build_network, conv3d_backward, conv3d_forward,
                          finite_difference_check, sigmoid, sigmoid_bce,
                          validate_chain)


def conv3d_reference(x, w, b, stride, padding):
    """Direct seven-loop cross-correlation; deliberately naive."""
    n, c, t, h, wd = x.shape
    o, _, kt, kh, kw = w.shape
    st, sh, sw = stride
    pt, ph, pw = padding
    xp = np.pad(x, ((0, 0), (0, 0), (pt, pt), (ph, ph), (pw, pw)))
    to = (t + 2 * pt - kt) // st + 1
    ho = (h + 2 * ph - kh) // sh + 1
    wo = (wd + 2 * pw - kw) // sw + 1
    out = np.zeros((n, o, to, ho, wo), dtype=np.float64)
    for ni in range(n):
        for oi in range(o):
            for ti in range(to):
                for hi in range(ho):
                    for wi in range(wo):
                        acc = 0.0
                        for ci in range(c):
                            for i in range(kt):
                                for j in range(kh):
                                    for k in range(kw):
                                        acc += (xp[ni, ci, ti * st + i, hi * sh + j, wi * sw + k]
                                                * w[oi, ci, i, j, k])
                        out[ni, oi, ti, hi, wi] = acc + b[oi]
    return out


class TestConv3dForward:
    def test_identity_kernel_on_impulse(self):
        x = np.zeros((1, 1, 3, 3, 3), dtype=np.float32)
        x[0, 0, 1, 1, 1] = 1.0
        w = np.ones((1, 1, 1, 1, 1), dtype=np.float32)
        b = np.zeros(1, dtype=np.float32)
        out = conv3d_forward(x, w, b)
        assert out.shape == (1, 1, 3, 3, 3)
        np.testing.assert_array_equal(out, x)

    def test_all_ones_sums_window(self):
        x = np.ones((1, 1, 2, 2, 2), dtype=np.float32)
        w = np.ones((1, 1, 2, 2, 2), dtype=np.float32)
        b = np.zeros(1, dtype=np.float32)
        out = conv3d_forward(x, w, b)
        assert out.shape == (1, 1, 1, 1, 1)
        assert out[0, 0, 0, 0, 0] == 8.0

    def test_matches_naive_reference(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((2, 3, 6, 8, 8)).astype(np.float32)
        w = rng.standard_normal((4, 3, 3, 3, 3)).astype(np.float32)
        b = rng.standard_normal(4).astype(np.float32)
        got = conv3d_forward(x, w, b, stride=(2, 2, 2), padding=(1, 1, 1))
        want = conv3d_reference(x.astype(np.float64), w.astype(np.float64),
                                b.astype(np.float64), (2, 2, 2), (1, 1, 1))
        np.testing.assert_allclose(got, want, rtol=1e-5, atol=1e-5)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((1, 2, 4, 5, 5)).astype(np.float32)
        y = rng.standard_normal((1, 2, 4, 5, 5)).astype(np.float32)
        w = rng.standard_normal((3, 2, 3, 3, 3)).astype(np.float32)
        b = np.zeros(3, dtype=np.float32)
        a, c = 1.7, -0.4
        lhs = conv3d_forward(a * x + c * y, w, b, padding=(1, 1, 1))
        rhs = (a * conv3d_forward(x, w, b, padding=(1, 1, 1))
               + c * conv3d_forward(y, w, b, padding=(1, 1, 1)))
        np.testing.assert_allclose(lhs, rhs, rtol=1e-5, atol=1e-5)

    def test_channel_mismatch_rejected(self):
        x = np.zeros((1, 2, 4, 4, 4), dtype=np.float32)
        w = np.zeros((1, 3, 3, 3, 3), dtype=np.float32)
        with pytest.raises(DataError):
            conv3d_forward(x, w, np.zeros(1, dtype=np.float32))

    def test_nonpositive_output_extent_rejected(self):
        x = np.zeros((1, 1, 2, 2, 2), dtype=np.float32)
        w = np.zeros((1, 1, 3, 3, 3), dtype=np.float32)
        with pytest.raises(DataError):
            conv3d_forward(x, w, np.zeros(1, dtype=np.float32))


class TestConv3dBackward:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((2, 2, 4, 5, 5))
        w = rng.standard_normal((3, 2, 3, 3, 3))
        b = rng.standard_normal(3)
        stride, padding = (1, 2, 2), (1, 1, 1)
        dout = rng.standard_normal(conv3d_forward(x, w, b, stride, padding).shape)

        dx, dw, db = conv3d_backward(x, w, dout, stride, padding)

        def loss(xx, ww, bb):
            return float(np.sum(conv3d_forward(xx, ww, bb, stride, padding) * dout))

        h = 1e-5
        for arr, grad in ((x, dx), (w, dw), (b, db)):
            flat = arr.reshape(-1)
            idxs = rng.choice(flat.size, size=min(40, flat.size), replace=False)
            for i in idxs:
                orig = flat[i]
                flat[i] = orig + h
                up = loss(x, w, b)
                flat[i] = orig - h
                dn = loss(x, w, b)
                flat[i] = orig
                num = (up - dn) / (2 * h)
                ana = grad.reshape(-1)[i]
                assert abs(num - ana) <= 1e-4 * max(1.0, abs(num)), (num, ana)


def toy_specs(in_channels=2):
    return [
        LayerSpec(kind="conv3d", in_channels=in_channels, out_channels=3,
                  kernel=(3, 3, 3), stride=(1, 2, 2), padding=(1, 1, 1)),
        LayerSpec(kind="relu"),
        LayerSpec(kind="conv3d", in_channels=3, out_channels=4,
                  kernel=(3, 3, 3), stride=(2, 2, 2), padding=(1, 1, 1)),
        LayerSpec(kind="relu"),
        LayerSpec(kind="flatten"),
        LayerSpec(kind="linear", in_features=4 * 2 * 2 * 2, out_features=1),
    ]


class TestNetwork:
    def test_zero_parameters_give_zero_logit(self):
        net = build_network(toy_specs(), seed=0, input_shape=(2, 4, 8, 8))
        net.set_parameters([np.zeros_like(p) for p in net.parameters()])
        x = np.random.default_rng(0).standard_normal((3, 2, 4, 8, 8)).astype(np.float32)
        logits = net.forward(x)
        np.testing.assert_array_equal(logits, np.zeros(3, dtype=np.float32))

    def test_single_linear_is_dot_product(self):
        specs = [LayerSpec(kind="flatten"),
                 LayerSpec(kind="linear", in_features=6, out_features=1)]
        net = build_network(specs, seed=1, input_shape=(6,))
        rng = np.random.default_rng(5)
        x = rng.standard_normal((2, 6)).astype(np.float32)
        w, b = net.parameters()
        logits = net.forward(x.reshape(2, 6))
        np.testing.assert_allclose(logits, x @ w[0] + b[0], rtol=1e-6)

    def test_forward_matches_composed_oracles(self):
        specs = [
            LayerSpec(kind="conv3d", in_channels=2, out_channels=3,
                      kernel=(2, 2, 2), stride=(1, 1, 1)),
            LayerSpec(kind="flatten"),
            LayerSpec(kind="linear", in_features=3 * 3 * 3 * 3, out_features=1),
        ]
        net = build_network(specs, seed=9, input_shape=(2, 4, 4, 4))
        rng = np.random.default_rng(9)
        x = rng.standard_normal((2, 2, 4, 4, 4)).astype(np.float32)
        conv, _, lin = (layer for _, layer in net.layers)
        ref = conv3d_reference(x.astype(np.float64), conv.w.astype(np.float64),
                               conv.b.astype(np.float64), (1, 1, 1), (0, 0, 0))
        ref = ref.reshape(2, -1) @ lin.w[0].astype(np.float64) + lin.b[0]
        np.testing.assert_allclose(net.forward(x), ref, rtol=1e-4, atol=1e-4)

    def test_chain_inconsistency_rejected(self):
        specs = [
            LayerSpec(kind="conv3d", in_channels=2, out_channels=3, kernel=(3, 3, 3)),
            LayerSpec(kind="flatten"),
            LayerSpec(kind="linear", in_features=10, out_features=1),
        ]
        with pytest.raises(DataError):
            validate_chain(specs, (2, 4, 8, 8))

    def test_backward_before_forward_rejected(self):
        net = build_network(toy_specs(), seed=0, input_shape=(2, 4, 8, 8))
        with pytest.raises(DataError):
            net.backward(np.ones(1))

    def test_nonfinite_input_rejected(self):
        net = build_network(toy_specs(), seed=0, input_shape=(2, 4, 8, 8))
        x = np.full((1, 2, 4, 8, 8), np.nan, dtype=np.float32)
        with pytest.raises(NumericError):
            net.forward(x)


class TestNetworkBackward:
    def test_stationary_point_has_zero_gradients(self):
        net = build_network(toy_specs(), seed=2, input_shape=(2, 4, 8, 8))
        x = np.random.default_rng(2).standard_normal((2, 2, 4, 8, 8)).astype(np.float32)
        logits = net.forward(x, keep_activations=True)
        # loss = (logit - c)^2 evaluated at logit == c
        net.backward(np.zeros_like(logits))
        for g in net.gradients():
            np.testing.assert_array_equal(g, np.zeros_like(g))

    def test_single_linear_bce_closed_form(self):
        specs = [LayerSpec(kind="flatten"),
                 LayerSpec(kind="linear", in_features=4, out_features=1)]
        net = build_network(specs, seed=3, input_shape=(4,))
        x = np.array([[0.5, -1.0, 2.0, 0.25]], dtype=np.float32)
        y = np.array([1.0])
        logit = net.forward(x, keep_activations=True)
        _, dlogit = batch_bce(logit, y)
        net.backward(dlogit)
        gw, gb = net.gradients()
        expect = (sigmoid(logit) - y)[0]
        np.testing.assert_allclose(gw, expect * x, rtol=1e-5)
        np.testing.assert_allclose(gb, [expect], rtol=1e-5)

    def test_full_toy_network_finite_differences(self):
        net = build_network(toy_specs(), seed=4, input_shape=(2, 4, 8, 8))
        x = np.random.default_rng(4).standard_normal((2, 2, 4, 8, 8))
        y = np.array([1.0, 0.0])
        checked = finite_difference_check(net, x, y, coords_per_tensor=35, seed=4)
        assert checked >= 100


class TestSigmoidBce:
    def test_logit_zero_label_one(self):
        loss, grad = sigmoid_bce(0.0, 1)
        assert loss == pytest.approx(math.log(2), abs=1e-12)
        assert grad == pytest.approx(-0.5, abs=1e-12)

    def test_logit_zero_any_label_is_ln2(self):
        for label in (0, 1):
            loss, _ = sigmoid_bce(0.0, label)
            assert loss == pytest.approx(math.log(2), abs=1e-12)

    def test_saturated_positive(self):
        loss, _ = sigmoid_bce(30.0, 1)
        assert 0 <= loss < 1e-12

    def test_negative_logit_label_zero(self):
        loss, grad = sigmoid_bce(-2.0, 0)
        assert loss == pytest.approx(math.log1p(math.exp(-2.0)), rel=1e-12)
        assert loss == pytest.approx(0.126928011042972, rel=1e-9)
        assert grad == pytest.approx(1 / (1 + math.exp(2.0)), rel=1e-9)

    def test_loss_nonnegative_randomized(self):
        rng = np.random.default_rng(8)
        logits = rng.standard_normal(200) * 15
        labels = rng.integers(0, 2, size=200)
        loss, _ = sigmoid_bce(logits, labels)
        assert np.all(loss >= 0)

    def test_bad_label_rejected(self):
        with pytest.raises(DataError):
            sigmoid_bce(0.0, 2)


class TestAdam:
    def test_zero_grads_leave_params_unchanged(self):
        params = [np.array([1.0, -2.0], dtype=np.float32)]
        state = AdamState.for_params(params, lr=0.1)
        out = adam_step(params, [np.zeros(2, dtype=np.float32)], state)
        np.testing.assert_array_equal(out[0], params[0])
        assert state.t == 1

    def test_first_step_magnitude_is_lr(self):
        params = [np.array([0.0], dtype=np.float64)]
        state = AdamState.for_params(params, lr=0.05)
        g = np.array([3.7])
        out = adam_step(params, [g], state)
        # step 1 bias correction makes m_hat=g, v_hat=g^2
        assert out[0][0] == pytest.approx(-0.05 * 3.7 / (3.7 + 1e-8), rel=1e-12)

    def test_two_step_scalar_trace(self):
        # independent scalar recomputation of two updates with g=1.0 twice
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        theta = 0.5
        m = v = 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * 1.0
            v = b2 * v + (1 - b2) * 1.0
            theta -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)

        params = [np.array([0.5])]
        state = AdamState.for_params(params, lr=lr, beta1=b1, beta2=b2, eps=eps)
        out = adam_step(params, [np.array([1.0])], state)
        out = adam_step(out, [np.array([1.0])], state)
        assert out[0][0] == pytest.approx(theta, abs=1e-7)

    def test_shape_mismatch_rejected(self):
        params = [np.zeros(3)]
        state = AdamState.for_params(params)
        with pytest.raises(DataError):
            adam_step(params, [np.zeros(2)], state)

    def test_nonfinite_grad_rejected(self):
        params = [np.zeros(2)]
        state = AdamState.for_params(params)
        with pytest.raises(NumericError):
            adam_step(params, [np.array([np.nan, 0.0])], state)


class TestLayerGradientChecks:
    """Per-layer-kind randomized finite-difference checks in float64."""

    @pytest.mark.parametrize("specs,shape", [
        ([LayerSpec(kind="conv3d", in_channels=2, out_channels=2, kernel=(2, 3, 3),
                    stride=(1, 2, 1), padding=(0, 1, 1)),
          LayerSpec(kind="flatten"),
          LayerSpec(kind="linear", in_features=2 * 3 * 3 * 7, out_features=1)],
         (2, 4, 6, 7)),
        ([LayerSpec(kind="relu"), LayerSpec(kind="flatten"),
          LayerSpec(kind="linear", in_features=24, out_features=1)], (2, 2, 2, 3)),
        ([LayerSpec(kind="flatten"),
          LayerSpec(kind="linear", in_features=12, out_features=5),
          LayerSpec(kind="relu"),
          LayerSpec(kind="linear", in_features=5, out_features=1)], (3, 4)),
    ])
    def test_finite_difference(self, specs, shape):
        net = build_network(specs, seed=6, input_shape=shape)
        x = np.random.default_rng(6).standard_normal((2, *shape))
        y = np.array([0.0, 1.0])
        assert finite_difference_check(net, x, y, coords_per_tensor=35, seed=6) > 0


def test_forward_determinism_bitwise():
    net = build_network(toy_specs(), seed=13, input_shape=(2, 4, 8, 8))
    x = np.random.default_rng(13).standard_normal((2, 2, 4, 8, 8)).astype(np.float32)
    a = net.forward(x)
    b = net.forward(x)
    assert a.tobytes() == b.tobytes()
