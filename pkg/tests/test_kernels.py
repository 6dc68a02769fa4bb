import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from igroup import (
    BOXCAR,
    EPANECHNIKOV,
    GAUSSIAN,
    Bandwidth,
    InvalidBandwidthError,
    InvalidInputError,
    KernelSpec,
    kernel_eval,
    kernel_weight,
    rule_of_thumb_bandwidth,
)

ALL = (GAUSSIAN, EPANECHNIKOV, BOXCAR)


def test_kernel_eval_known_values():
    assert kernel_eval(GAUSSIAN, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)
    assert kernel_eval(EPANECHNIKOV, 0.0) == 0.75
    assert kernel_eval(BOXCAR, 1.5) == 0.0
    assert kernel_eval(BOXCAR, 1.0) == 0.5
    assert kernel_eval(EPANECHNIKOV, 1.0001) == 0.0


def test_kernel_weight_known_values():
    assert kernel_weight(GAUSSIAN, 0.0, Bandwidth(1.0)) == pytest.approx(0.3989422804014327)
    assert kernel_weight(BOXCAR, 2.0, Bandwidth(1.0)) == 0.0
    # standard normal density at 0.5, cross-checked against exp/sqrt directly
    expected = math.exp(-0.125) / math.sqrt(2 * math.pi)
    assert expected == pytest.approx(0.3520653267642995, abs=1e-12)
    assert kernel_weight(GAUSSIAN, 1.0, Bandwidth(2.0)) == pytest.approx(expected, abs=1e-12)


def test_kernel_weight_equals_eval_exactly():
    rng = np.random.default_rng(0)
    for spec in ALL:
        for _ in range(50):
            d = float(rng.uniform(0, 5))
            b = float(rng.uniform(0.1, 3))
            assert kernel_weight(spec, d, Bandwidth(b)) == kernel_eval(spec, d / b)


def test_nonnegative_and_symmetric_grid():
    u = np.linspace(-50, 50, 4001)
    for spec in ALL:
        vals = kernel_eval(spec, u)
        assert np.all(vals >= 0)
        assert np.allclose(vals, vals[::-1])


def test_integrates_to_one_numerically():
    u = np.linspace(-50, 50, 200001)
    for spec in ALL:
        total = np.trapezoid(kernel_eval(spec, u), u)
        assert total == pytest.approx(1.0, abs=1e-3)


def test_tail_decay_condition():
    # u*K(u) -> 0; checked at |u| = 10 and 100
    for spec in ALL:
        for u in (10.0, 100.0, -10.0, -100.0):
            assert abs(u * kernel_eval(spec, u)) < 1e-6


def test_monotone_decay_on_positive_axis():
    u = np.linspace(0, 10, 1001)
    for spec in ALL:
        vals = kernel_eval(spec, u)
        assert np.all(np.diff(vals) <= 1e-15)


@given(st.floats(-1e6, 1e6))
def test_kernel_properties_random(u):
    for spec in ALL:
        v = kernel_eval(spec, u)
        assert v >= 0.0
        assert v == kernel_eval(spec, -u)


def test_invalid_inputs():
    with pytest.raises(InvalidInputError):
        kernel_eval(GAUSSIAN, float("nan"))
    with pytest.raises(InvalidInputError):
        kernel_eval(GAUSSIAN, float("inf"))
    with pytest.raises(InvalidInputError):
        KernelSpec("triangle")
    with pytest.raises(InvalidBandwidthError):
        Bandwidth(0.0)
    with pytest.raises(InvalidBandwidthError):
        Bandwidth(-1.0)
    with pytest.raises(InvalidBandwidthError):
        Bandwidth(1.0, scales=(1.0, -2.0))
    with pytest.raises(InvalidInputError):
        kernel_weight(GAUSSIAN, -0.5, Bandwidth(1.0))


def test_rule_of_thumb_bandwidth_univariate():
    rng = np.random.default_rng(1)
    x = rng.normal(size=400)
    b = rule_of_thumb_bandwidth(x)
    assert b.value == pytest.approx(1.06 * np.std(x, ddof=1) * 400 ** (-0.2))
    assert b.scales is None


def test_rule_of_thumb_bandwidth_multivariate():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(300, 3)) * np.array([1.0, 5.0, 0.2])
    b = rule_of_thumb_bandwidth(x)
    assert b.value == pytest.approx(1.06 * 300 ** (-1.0 / 7.0))
    assert len(b.scales) == 3
    assert b.scales[1] > b.scales[0] > b.scales[2]


def test_rule_of_thumb_degenerate_sample_stays_positive():
    b = rule_of_thumb_bandwidth(np.full(50, 3.0))
    assert b.value > 0
