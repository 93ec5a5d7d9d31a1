import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liprate.errors import (
    DimensionError,
    InvalidBoundError,
    InvalidClassCountError,
)
from liprate.lipschitz import (
    LossKind,
    LossSpec,
    RegKind,
    Regularization,
    compute_kz,
    lc_binary,
    lc_linear_regression,
    lc_multiclass,
    lc_nn_regression,
    loss_value,
    reg_increment,
)

pos = st.floats(0.05, 20, allow_nan=False)


class TestLinearRegression:
    def test_identity_example(self):
        est = lc_linear_regression(np.eye(2), [1.0, 1.0], 1.0, 2)
        assert est.lipschitz == pytest.approx(math.sqrt(2), rel=1e-12)
        assert est.lr == pytest.approx(1 / math.sqrt(2), rel=1e-12)

    def test_zero_targets_drop_second_term(self):
        X = np.array([[1.0, 2.0], [3.0, 4.0]])
        est = lc_linear_regression(X, [0.0, 0.0], 2.0, 2)
        assert est.lipschitz == pytest.approx(
            2.0 / 2 * np.linalg.norm(X.T @ X), rel=1e-12
        )

    def test_unit_case(self):
        assert lc_linear_regression([[1.0]], [0.0], 1.0, 1).lipschitz == 1.0

    def test_invalid_bound(self):
        with pytest.raises(InvalidBoundError):
            lc_linear_regression(np.eye(2), [1.0, 1.0], 0.0, 2)
        with pytest.raises(DimensionError):
            lc_linear_regression(np.eye(2), [1.0, 1.0], 1.0, 0)


class TestNnRegression:
    def test_hand_example(self):
        assert lc_nn_regression(2.0, [3.0], 4.0, 10).lipschitz == pytest.approx(2.0)

    def test_unit(self):
        assert lc_nn_regression(1.0, [0.0], 1.0, 1).lipschitz == 1.0

    def test_invalid(self):
        with pytest.raises(InvalidBoundError):
            lc_nn_regression(0.0, [1.0], 1.0, 1)


class TestClassificationConstants:
    def test_binary_identity(self):
        est = lc_binary(math.sqrt(2), 2)
        assert est.lipschitz == pytest.approx(math.sqrt(2) / 4, rel=1e-12)

    def test_binary_unit(self):
        assert lc_binary(1.0, 1).lipschitz == 0.5

    def test_binary_invalid(self):
        with pytest.raises(InvalidBoundError):
            lc_binary(0.0, 1)

    def test_multiclass_hand_example(self):
        est = lc_multiclass(math.sqrt(2), 3, 2)
        assert est.lipschitz == pytest.approx((2 / 6) * math.sqrt(2), rel=1e-12)

    def test_class_count_error(self):
        with pytest.raises(InvalidClassCountError):
            lc_multiclass(1.0, 1, 1)

    @given(pos, st.integers(1, 50))
    def test_two_class_reduction_exact(self, kz, m):
        assert lc_multiclass(kz, 2, m).lipschitz == lc_binary(kz, m).lipschitz

    @given(pos, st.integers(1, 20))
    def test_monotone_in_class_count(self, kz, m):
        values = [lc_multiclass(kz, k, m).lipschitz for k in range(2, 12)]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] < kz / m

    @given(pos, st.floats(0.1, 10))
    def test_scale_covariance(self, kz, c):
        assert lc_binary(c * kz, 5).lipschitz == pytest.approx(
            c * lc_binary(kz, 5).lipschitz, rel=1e-12
        )
        assert lc_multiclass(c * kz, 4, 5).lipschitz == pytest.approx(
            c * lc_multiclass(kz, 4, 5).lipschitz, rel=1e-12
        )


class TestRegIncrement:
    def test_l2(self):
        assert reg_increment(Regularization(RegKind.L2, lam=0.1), 2.0) == pytest.approx(0.2)

    def test_none(self):
        assert reg_increment(Regularization(), 5.0) == 0.0

    def test_tikhonov_hand_example(self):
        gamma = np.diag([1.0, 2.0])
        inc = reg_increment(Regularization(RegKind.TIKHONOV, gamma=gamma), 1.0)
        assert inc == pytest.approx(2 * math.sqrt(17), rel=1e-12)

    def test_additivity(self):
        est = lc_binary(3.0, 4)
        inc = reg_increment(Regularization(RegKind.L2, lam=0.5), 2.0)
        assert est.with_reg(inc).lipschitz - est.lipschitz == inc


class TestComputeKz:
    def test_input_matrix_for_single_layer(self, iris):
        assert compute_kz(iris.X) == pytest.approx(np.linalg.norm(iris.X), rel=1e-15)

    def test_small_example(self):
        assert compute_kz([[3.0, 4.0]]) == 5.0

    def test_zero_activations_return_zero(self):
        assert compute_kz(np.zeros((4, 2))) == 0.0

    def test_empty_errors(self):
        with pytest.raises(DimensionError):
            compute_kz(np.zeros((0, 2)))


class TestLossValue:
    def test_least_squares_zero_at_fit(self):
        spec = LossSpec(LossKind.LEAST_SQUARES)
        t = np.array([1.0, 2.0, 3.0])
        assert loss_value(spec, t, t, None, 3) == 0.0

    def test_binary_half_is_ln2(self):
        spec = LossSpec(LossKind.BINARY_CE)
        preds = np.full(2, 0.5)
        assert loss_value(spec, preds, np.array([0.0, 1.0]), None, 2) == pytest.approx(
            math.log(2), rel=1e-12
        )

    @pytest.mark.parametrize("k", [2, 3, 10])
    def test_multiclass_uniform_is_ln_k(self, k):
        spec = LossSpec(LossKind.MULTICLASS_CE)
        m = 6
        preds = np.full((m, k), 1.0 / k)
        Y = np.zeros((m, k))
        Y[np.arange(m), np.arange(m) % k] = 1.0
        assert loss_value(spec, preds, Y, None, m) == pytest.approx(math.log(k), rel=1e-12)

    def test_saturated_predictions_stay_finite(self):
        spec = LossSpec(LossKind.BINARY_CE)
        v = loss_value(spec, np.array([0.0, 1.0]), np.array([1.0, 0.0]), None, 2)
        assert np.isfinite(v)

    def test_l2_penalty_added(self):
        spec = LossSpec(LossKind.LEAST_SQUARES, Regularization(RegKind.L2, lam=2.0))
        t = np.array([1.0])
        w = [np.array([[3.0]])]
        assert loss_value(spec, t, t, w, 1) == pytest.approx(9.0)


class TestEquivalenceOfConstants:
    """The network-form and direct-form least-squares constants."""

    @given(
        st.integers(1, 8),
        pos,
        st.floats(-5, 5, allow_nan=False),
        st.integers(0, 10_000),
    )
    @settings(max_examples=100)
    def test_equal_on_single_example_instances(self, n, K, yval, seed):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-3, 3, (1, n))
        if np.linalg.norm(X) < 1e-9:
            X = X + 1.0
        y = np.array([yval])
        direct = lc_linear_regression(X, y, K, 1).lipschitz
        nx = np.linalg.norm(X)
        network = lc_nn_regression(K * nx, y, nx, 1).lipschitz
        assert network == pytest.approx(direct, rel=1e-12)

    @given(st.integers(2, 6), st.integers(2, 6), pos, st.integers(0, 10_000))
    @settings(max_examples=100)
    def test_network_form_dominates_in_general(self, m, n, K, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(0, 1, (m, n))
        y = rng.normal(0, 1, m)
        direct = lc_linear_regression(X, y, K, m).lipschitz
        nx = np.linalg.norm(X)
        network = lc_nn_regression(K * nx, y, nx, m).lipschitz
        assert network >= direct * (1 - 1e-12)


class TestSecantSlopeBound:
    """Loss-difference quotients stay below the least-squares constant for
    weights inside the assumed ball."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_linear_regression_secant(self, seed):
        rng = np.random.default_rng(seed)
        m, n = 12, 4
        X = rng.uniform(0, 1, (m, n))
        y = rng.uniform(-1, 1, m)
        K = 2.0
        L = lc_linear_regression(X, y, K, m).lipschitz

        def g(w):
            r = X @ w - y
            return float(r @ r) / (2 * m)

        for _ in range(2000):
            w = rng.normal(0, 1, n)
            v = rng.normal(0, 1, n)
            for u in (w, v):
                nrm = np.linalg.norm(u)
                if nrm > K:
                    u *= K / nrm
            dist = np.linalg.norm(w - v)
            if dist < 1e-9:
                continue
            assert abs(g(w) - g(v)) / dist <= L * (1 + 1e-9)
