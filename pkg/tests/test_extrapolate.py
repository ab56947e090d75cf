import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairwire.extrapolate import CORNER_ORDER, aitken_box, ground_state_limit, observed_order, richardson


@settings(max_examples=50, deadline=None)
@given(
    limit=st.floats(-10, 10),
    C=st.floats(0.1, 10),
    p=st.floats(1.0, 4.0),
)
def test_richardson_exact_on_power_law(limit, C, p):
    vals = [limit + C * h**p for h in (0.4, 0.2, 0.1)]
    ex = richardson(vals)
    assert ex.order == pytest.approx(p, rel=1e-6)
    assert ex.value == pytest.approx(limit, abs=1e-8 * (1 + C))
    assert ex.margin == pytest.approx(C * 0.1**p, rel=1e-6)


def test_richardson_two_levels_uses_corner_order():
    vals = [1.0 + 0.2**CORNER_ORDER, 1.0 + 0.1**CORNER_ORDER]
    ex = richardson(vals)
    assert ex.order == CORNER_ORDER
    assert ex.value == pytest.approx(1.0, abs=1e-14)


def test_richardson_clamps_order():
    ex = richardson([1.0 + 0.5**8, 1.0 + 0.25**8, 1.0 + 0.125**8])
    assert ex.order == 4.0
    with pytest.raises(ValueError):
        richardson([1.0])


def test_observed_order_nonmonotone_is_nan():
    assert math.isnan(observed_order(1.0, 2.0, 1.5))


def test_aitken_exact_on_exponential():
    Ls = [10.0, 15.0, 20.0]
    ex = aitken_box(Ls, [2.0 + 3.0 * math.exp(-0.4 * L) for L in Ls])
    assert ex.value == pytest.approx(2.0, abs=1e-13)
    assert ex.order == pytest.approx(0.4, rel=1e-9)


def test_aitken_falls_back_at_noise_level():
    ex = aitken_box([10.0, 15.0, 20.0], [2.0, 2.0 + 1e-12, 2.0], noise=1e-9)
    assert ex.value == 2.0 and ex.margin == 1e-9
    with pytest.raises(ValueError):
        aitken_box([1.0, 2.0, 4.0], [1.0, 1.0, 1.0])


def test_ground_state_limit_is_below_fine_value():
    est = ground_state_limit(0.0, 1.0, 8.0, 8)
    assert sorted(est.mesh_values) == [2, 4, 8]
    assert est.value <= est.mesh_values[8]
    assert 1.0 <= est.h_order <= 4.0
    assert est.margin > 0
    with pytest.raises(ValueError):
        ground_state_limit(0.0, 1.0, 8.0, 6)
