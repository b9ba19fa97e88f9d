import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from copeda.benchmarks import (
    REGISTRY,
    UnknownBenchmarkError,
    f_sphere,
    f_summation_cancellation,
    get_benchmark,
)


class TestSphere:
    def test_origin(self):
        assert f_sphere(np.zeros(7)) == 0.0

    def test_arithmetic(self):
        assert f_sphere([1.0, 2.0, 3.0]) == pytest.approx(14.0)

    def test_two_dim_value(self):
        assert f_sphere([-2.20, -0.01]) == pytest.approx(4.8401)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=12))
    @settings(max_examples=50, deadline=None)
    def test_nonnegative_zero_only_at_origin(self, xs):
        val = f_sphere(xs)
        assert val >= 0.0
        if any(abs(x) > 1e-150 for x in xs):  # x^2 underflows below that
            assert val > 0.0


class TestSummationCancellation:
    def test_origin_value(self):
        assert f_summation_cancellation(np.zeros(10)) == pytest.approx(-1e5)

    def test_two_dim_recurrence(self):
        # y = (0.1, 0.0): sum |y| = 0.1
        assert f_summation_cancellation([0.1, -0.1]) == pytest.approx(
            -1.0 / (1e-5 + 0.1))

    @given(st.lists(st.floats(-0.16, 0.16), min_size=1, max_size=12))
    @settings(max_examples=50, deadline=None)
    def test_range(self, xs):
        val = f_summation_cancellation(xs)
        assert -1e5 <= val < 0.0

    def test_order_sensitivity(self):
        a = f_summation_cancellation([0.1, -0.1, 0.05])
        b = f_summation_cancellation([0.05, 0.1, -0.1])
        assert a != b


class TestRegistry:
    def test_defaults(self):
        sphere = get_benchmark("sphere")
        assert (sphere.default_lower, sphere.default_upper) == (-600.0, 600.0)
        assert sphere.target_eval == 0.0
        sc = get_benchmark("summation-cancellation")
        assert (sc.default_lower, sc.default_upper) == (-0.16, 0.16)
        assert sc.target_eval == -1e5

    def test_unknown_name_lists_registry(self):
        with pytest.raises(UnknownBenchmarkError, match="sphere"):
            get_benchmark("rosenbrock")

    def test_functions_are_registered_callables(self):
        for spec in REGISTRY.values():
            assert spec.func(np.zeros(3)) == pytest.approx(spec.target_eval)
