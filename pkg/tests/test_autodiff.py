"""Engine tests: primitive behavior, gradient oracles, loss contracts.

Every gradient is checked against central finite differences in 64-bit
mode.  Inputs for kinked primitives (relu, max, clamp) are constructed
away from their kinks so the numeric oracle is valid.
"""

from __future__ import annotations

import numpy as np
import numpy.testing as npt
import pytest

from tagflow.autodiff import (
    Tape,
    Tensor,
    add,
    backward,
    clamp_min,
    concat,
    constant,
    dropout,
    embedding_gather,
    gradcheck,
    kl_divergence,
    log,
    matmul,
    max_over_axis,
    mul,
    relu,
    reshape,
    sigmoid,
    slice_,
    softmax_last_axis,
    sub,
    sum_,
    tanh,
)


def _p(rng, *shape):
    """Random float64 parameter, bounded away from zero for kink safety."""
    data = rng.uniform(0.25, 1.0, size=shape) * rng.choice([-1.0, 1.0], size=shape)
    return Tensor(data, requires_grad=True, dtype=np.float64)


class TestTensorBasics:
    def test_default_dtype_is_float32(self):
        assert Tensor([1.0, 2.0]).dtype == np.float32

    def test_float64_preserved(self):
        assert Tensor(np.zeros(3, dtype=np.float64)).dtype == np.float64

    def test_grad_reads_zeros_before_backward(self):
        t = Tensor(np.ones((2, 2)), requires_grad=True)
        npt.assert_array_equal(t.grad, np.zeros((2, 2)))

    def test_non_scalar_backward_rejected(self):
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape():
            y = relu(x)
        with pytest.raises(ValueError, match="scalar"):
            backward(y)

    def test_backward_without_tape_rejected(self):
        x = Tensor(np.ones(3), requires_grad=True)
        y = sum_(relu(x))  # no tape active: nothing recorded
        with pytest.raises(ValueError, match="tape"):
            backward(y)


class TestForwardValues:
    def test_relu_definition(self):
        out = relu(constant([-3.0, 0.0, 2.0]))
        npt.assert_array_equal(out.data, [0.0, 0.0, 2.0])

    def test_softmax_uniform_over_71(self):
        out = softmax_last_axis(constant(np.full((1, 71), 3.25)))
        npt.assert_allclose(out.data, np.full((1, 71), 1.0 / 71), rtol=1e-6)

    def test_softmax_is_distribution_for_extreme_inputs(self):
        rng = np.random.default_rng(0)
        for scale in (1.0, 100.0, 10000.0):
            x = constant(rng.normal(scale=scale, size=(4, 9)))
            out = softmax_last_axis(x).data
            assert (out >= 0).all()
            npt.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)

    def test_max_over_axis_matches_direct_scan(self):
        rng = np.random.default_rng(1)
        x = constant(rng.normal(size=(3, 4)))
        out = max_over_axis(x, axis=0)
        expected = [max(x.data[i, j] for i in range(3)) for j in range(4)]
        npt.assert_array_equal(out.data, expected)
        assert out.data.shape == (4,)

    def test_sigmoid_stable_at_extremes(self):
        out = sigmoid(constant([-1000.0, 0.0, 1000.0]))
        npt.assert_allclose(out.data, [0.0, 0.5, 1.0], atol=1e-12)

    def test_matmul_shape_mismatch_reports_both_shapes(self):
        a, b = constant(np.ones((2, 3))), constant(np.ones((2, 3)))
        with pytest.raises(ValueError, match=r"\(2, 3\) x \(2, 3\)"):
            matmul(a, b)

    def test_add_shape_mismatch_reports_both_shapes(self):
        with pytest.raises(ValueError, match=r"\(2, 3\).*\(4, 5\)"):
            add(constant(np.ones((2, 3))), constant(np.ones((4, 5))))


class TestHandGradients:
    def test_linear_case_grad_matches_hand_derivative(self):
        # loss = sum(W @ x) => dloss/dW = column of ones times x^T (outer structure)
        rng = np.random.default_rng(2)
        w = Tensor(rng.normal(size=(3, 4)), requires_grad=True, dtype=np.float64)
        x = constant(rng.normal(size=(4, 1)).astype(np.float64))
        with Tape():
            loss = sum_(matmul(w, x))
        backward(loss)
        expected = np.tile(x.data.reshape(1, 4), (3, 1))
        npt.assert_allclose(w.grad, expected, rtol=1e-12)

    def test_tanh_grad_at_zero_is_one(self):
        w = Tensor(np.zeros(()), requires_grad=True, dtype=np.float64)
        with Tape():
            loss = tanh(w)
        backward(loss)
        npt.assert_allclose(w.grad, 1.0)

    def test_gradients_accumulate_when_tensor_reused(self):
        x = Tensor(np.array([3.0]), requires_grad=True, dtype=np.float64)
        with Tape():
            loss = sum_(mul(x, x))
        backward(loss)
        npt.assert_allclose(x.grad, [6.0])

    def test_unreachable_parameter_gets_zero_grad(self):
        x = Tensor(np.ones(2), requires_grad=True, dtype=np.float64)
        unused = Tensor(np.ones(2), requires_grad=True, dtype=np.float64)
        with Tape():
            loss = sum_(mul(x, x))
        backward(loss)
        npt.assert_array_equal(unused.grad, np.zeros(2))


class TestFiniteDifferenceOracle:
    """Central-difference verification, h = 1e-3, 64-bit, rtol 1e-4."""

    def test_matmul(self):
        rng = np.random.default_rng(3)
        a, b = _p(rng, 3, 4), _p(rng, 4, 2)
        gradcheck(lambda: sum_(matmul(a, b)), [a, b], samples=8)

    def test_add_with_broadcasting(self):
        rng = np.random.default_rng(4)
        a, b = _p(rng, 3, 4), _p(rng, 1, 4)
        gradcheck(lambda: sum_(mul(add(a, b), add(a, b))), [a, b], samples=8)

    def test_sub(self):
        rng = np.random.default_rng(5)
        a, b = _p(rng, 2, 3), _p(rng, 2, 3)
        gradcheck(lambda: sum_(mul(sub(a, b), sub(a, b))), [a, b], samples=6)

    def test_mul_with_broadcasting(self):
        rng = np.random.default_rng(6)
        a, b = _p(rng, 3, 4), _p(rng, 1, 4)
        gradcheck(lambda: sum_(mul(a, b)), [a, b], samples=8)

    @pytest.mark.parametrize("op", [tanh, sigmoid, relu])
    def test_elementwise_activations(self, op):
        rng = np.random.default_rng(7)
        x = _p(rng, 4, 5)  # bounded away from relu's kink
        gradcheck(lambda: sum_(op(x)), [x], samples=8)

    def test_log_on_positive_inputs(self):
        rng = np.random.default_rng(8)
        x = Tensor(rng.uniform(0.5, 2.0, size=(3, 3)), requires_grad=True, dtype=np.float64)
        gradcheck(lambda: sum_(log(x)), [x], samples=6)

    def test_clamp_min_away_from_boundary(self):
        rng = np.random.default_rng(9)
        x = _p(rng, 6)  # |x| >= 0.25, boundary at 0.1
        gradcheck(lambda: sum_(mul(clamp_min(x, 0.1), clamp_min(x, 0.1))), [x], samples=6)

    def test_concat_both_axes(self):
        rng = np.random.default_rng(10)
        a, b = _p(rng, 2, 3), _p(rng, 2, 2)
        gradcheck(lambda: sum_(mul(concat([a, b], axis=-1), concat([a, b], axis=-1))), [a, b], samples=8)
        c, d = _p(rng, 2, 3), _p(rng, 1, 3)
        gradcheck(lambda: sum_(mul(concat([c, d], axis=0), concat([c, d], axis=0))), [c, d], samples=8)

    def test_slice(self):
        rng = np.random.default_rng(11)
        x = _p(rng, 5, 4)
        key = (slice(1, 4), slice(0, 2))
        gradcheck(lambda: sum_(mul(slice_(x, key), slice_(x, key))), [x], samples=8)

    def test_reshape(self):
        rng = np.random.default_rng(12)
        x = _p(rng, 2, 6)
        gradcheck(lambda: sum_(mul(reshape(x, (3, 4)), reshape(x, (3, 4)))), [x], samples=8)

    def test_max_over_axis_with_separated_values(self):
        rng = np.random.default_rng(13)
        # entries spaced ~0.5 apart so +-1e-3 never flips the argmax
        base = rng.permutation(20).astype(np.float64).reshape(4, 5) * 0.5
        x = Tensor(base, requires_grad=True, dtype=np.float64)
        gradcheck(lambda: sum_(mul(max_over_axis(x, axis=0), max_over_axis(x, axis=0))), [x], samples=8)
        gradcheck(lambda: sum_(max_over_axis(x, axis=1)), [x], samples=8)

    def test_sum_all_and_axis(self):
        rng = np.random.default_rng(14)
        x = _p(rng, 3, 4)
        gradcheck(lambda: sum_(mul(x, x)), [x], samples=6)
        gradcheck(lambda: sum_(mul(sum_(x, axis=0), sum_(x, axis=0))), [x], samples=6)

    def test_softmax_last_axis(self):
        rng = np.random.default_rng(15)
        x = _p(rng, 2, 5)
        w = constant(rng.normal(size=(2, 5)))
        gradcheck(lambda: sum_(mul(softmax_last_axis(x), w)), [x], samples=10)

    def test_embedding_gather_with_repeats(self):
        rng = np.random.default_rng(16)
        table = _p(rng, 6, 3)
        idx = np.array([0, 2, 2, 5, 0])
        gradcheck(lambda: sum_(mul(embedding_gather(table, idx), embedding_gather(table, idx))), [table], samples=10)

    def test_dropout_with_fixed_stream(self):
        rng = np.random.default_rng(17)
        x = _p(rng, 4, 4)
        # the mask must be identical on every call for the oracle to hold
        gradcheck(lambda: sum_(dropout(x, 0.5, np.random.default_rng(99))), [x], samples=8)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_small_graph(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = _p(rng, 3, 4), _p(rng, 4, 3), _p(rng, 1, 3)

        def fn():
            h = tanh(matmul(a, b))
            h = add(h, c)
            s = softmax_last_axis(h)
            return sum_(mul(s, sigmoid(h)))

        gradcheck(fn, [a, b, c], samples=6)


class TestDropout:
    def test_p_zero_is_identity(self):
        x = Tensor(np.ones((3, 3)), requires_grad=True)
        assert dropout(x, 0.0, np.random.default_rng(0)) is x

    def test_fixed_seed_reproducible(self):
        x = constant(np.ones((100, 10)))
        a = dropout(x, 0.4, np.random.default_rng(7)).data
        b = dropout(x, 0.4, np.random.default_rng(7)).data
        npt.assert_array_equal(a, b)

    def test_kept_entries_scaled_by_inverse_keep_rate(self):
        x = constant(np.ones((200, 50)))
        out = dropout(x, 0.4, np.random.default_rng(3)).data
        kept = out[out != 0]
        npt.assert_allclose(kept, 1.0 / 0.6, rtol=1e-6)
        assert abs((out != 0).mean() - 0.6) < 0.02

    def test_invalid_rate_rejected(self):
        x = constant(np.ones(3))
        with pytest.raises(ValueError):
            dropout(x, 1.0, np.random.default_rng(0))


class TestKlDivergence:
    def test_identical_distributions_give_zero(self):
        d = np.array([0.2, 0.3, 0.5])
        assert float(kl_divergence(constant(d), constant(d)).data) == pytest.approx(0.0, abs=1e-12)

    def test_one_hot_versus_uniform_pair(self):
        loss = kl_divergence(constant([1.0, 0.0]), constant([0.5, 0.5]))
        assert float(loss.data) == pytest.approx(np.log(2.0), rel=1e-6)

    def test_zero_times_log_zero_is_zero(self):
        loss = kl_divergence(constant([1.0, 0.0]), constant([1.0, 0.0]))
        assert np.isfinite(float(loss.data))
        assert float(loss.data) == pytest.approx(0.0, abs=1e-9)

    def test_nonnegative_on_random_pairs(self):
        rng = np.random.default_rng(18)
        for _ in range(1000):
            n = int(rng.integers(2, 12))
            t = rng.random(n) + 1e-12
            p = rng.random(n) + 1e-12
            t, p = t / t.sum(), p / p.sum()
            value = float(kl_divergence(constant(t), constant(p)).data)
            assert value >= -1e-9

    def test_negative_entries_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            kl_divergence(constant([1.5, -0.5]), constant([0.5, 0.5]))

    def test_non_distribution_rejected(self):
        with pytest.raises(ValueError, match="summing to 1"):
            kl_divergence(constant([0.7, 0.7]), constant([0.5, 0.5]))

    def test_weights_of_one_reduce_to_plain_kl(self):
        t, p = np.array([0.25, 0.75]), np.array([0.5, 0.5])
        plain = float(kl_divergence(constant(t), constant(p)).data)
        weighted = float(kl_divergence(constant(t), constant(p), weights=np.ones(2)).data)
        assert weighted == pytest.approx(plain, rel=1e-12)

    def test_weight_scales_one_hot_loss_linearly(self):
        t, p = np.array([1.0, 0.0]), np.array([0.25, 0.75])
        w1 = float(kl_divergence(constant(t), constant(p), weights=np.array([1.0, 1.0])).data)
        w2 = float(kl_divergence(constant(t), constant(p), weights=np.array([2.0, 1.0])).data)
        assert w2 == pytest.approx(2.0 * w1, rel=1e-9)

    def test_gradient_through_softmax_composite(self):
        rng = np.random.default_rng(19)
        logits = _p(rng, 1, 6)
        t = rng.random(6)
        t /= t.sum()

        def fn():
            probs = reshape(softmax_last_axis(logits), (-1,))
            return kl_divergence(t, probs)

        gradcheck(fn, [logits], samples=6)

    def test_weighted_gradient_through_softmax_composite(self):
        rng = np.random.default_rng(20)
        logits = _p(rng, 1, 5)
        t = rng.random(5)
        t /= t.sum()
        w = rng.uniform(0.5, 3.0, size=5)

        def fn():
            probs = reshape(softmax_last_axis(logits), (-1,))
            return kl_divergence(t, probs, weights=w)

        gradcheck(fn, [logits], samples=6)
