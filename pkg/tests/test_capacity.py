import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsplace.capacity import channel_rate, equal_power_rate, singular_values, water_fill
from irsplace.channel import RadioParams
from irsplace.errors import NoChannelError


def bisection_water_fill(s, p, n):
    """Independent oracle: bisect on the water level."""
    floors = n / np.asarray(s, float) ** 2
    lo, hi = 0.0, floors.max() + p
    for _ in range(200):
        mu = (lo + hi) / 2
        if np.maximum(mu - floors, 0).sum() > p:
            hi = mu
        else:
            lo = mu
    powers = np.maximum(lo - floors, 0)
    return float(np.sum(np.log2(1 + powers / floors)))


def test_water_fill_two_equal_streams():
    a = water_fill([1.0, 1.0], 2.0, 1.0)
    np.testing.assert_allclose(a.powers, [1.0, 1.0])
    assert a.rate == pytest.approx(2.0)
    assert a.water_level == pytest.approx(2.0)


def test_water_fill_unequal_streams():
    a = water_fill([1.0, 2.0], 1.0, 1.0)
    # floors 0.25 and 1.0, level 1.125
    np.testing.assert_allclose(a.powers, [0.875, 0.125])
    assert a.rate == pytest.approx(math.log2(4.5) + math.log2(1.125), rel=1e-12)
    assert a.active_streams == 2


def test_water_fill_drops_weak_stream():
    a = water_fill([10.0, 0.1], 1.0, 1.0)
    # floors 0.01 and 100; one-stream level 1.01 < 100
    np.testing.assert_allclose(a.powers, [1.0, 0.0])
    assert a.rate == pytest.approx(math.log2(101.0))
    assert a.active_streams == 1


def test_water_fill_errors():
    with pytest.raises(NoChannelError):
        water_fill([0.0, 0.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        water_fill([1.0], 0.0, 1.0)
    with pytest.raises(NoChannelError):
        equal_power_rate([0.0], 1.0, 1.0)


def test_singular_value_floor():
    h = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]])
    s = singular_values(h)
    assert s[0] == pytest.approx(2.0)
    assert s[1] == 0.0
    with pytest.raises(ValueError):
        singular_values([[np.nan]])


def test_channel_rate_rank_one():
    p = RadioParams(6e9, 1.0, 1.0, 1.0, 1.0)
    a = channel_rate(np.ones((2, 2)) * 1e-3, p)
    assert a.active_streams == 1
    assert a.rate == pytest.approx(math.log2(1 + 4e-6), rel=1e-9)


svals = st.lists(st.floats(1e-6, 1e3), min_size=1, max_size=8)
power = st.floats(1e-6, 1e3)


@settings(max_examples=300)
@given(svals, power, power)
def test_water_fill_matches_bisection(s, p, n):
    assert water_fill(s, p, n).rate == pytest.approx(bisection_water_fill(s, p, n), rel=1e-7, abs=1e-9)


@settings(max_examples=300)
@given(svals, power, power)
def test_water_fill_kkt(s, p, n):
    a = water_fill(s, p, n)
    assert a.powers.sum() == pytest.approx(p, rel=1e-9)
    assert np.all(a.powers >= 0)
    floors = n / a.singular_values**2
    active = a.powers > 0
    np.testing.assert_allclose(a.powers[active] + floors[active], a.water_level, rtol=1e-9)
    assert np.all(floors[~active] >= a.water_level * (1 - 1e-12))
    assert a.rate >= equal_power_rate(s, p, n) - 1e-9


@settings(max_examples=100)
@given(st.lists(st.floats(1e-2, 1e3), min_size=1, max_size=8), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.floats(1.01, 10))
def test_rate_increases_with_power(s, p, n, k):
    assert water_fill(s, p * k, n).rate > water_fill(s, p, n).rate
