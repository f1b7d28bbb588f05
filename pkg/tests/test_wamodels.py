import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import special, stats

from trimssd._binom import binomial_pmf, binomial_sf
from trimssd.errors import ModelBreakdownError
from trimssd.wamodels import hu_wa, lambert_w0, xiang_wa

BLOCKS = 1280
LADDER = (2, 4, 8, 16, 32, 64, 128, 256)


def table_config(n_p):
    """Fixed block count, so the device grows with n_p; u is 80% of it."""
    T = BLOCKS * n_p
    return T, int(0.8 * T)


def test_lambert_examples():
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(math.e) == pytest.approx(1.0, rel=1e-15)
    assert lambert_w0(-1 / math.e) == pytest.approx(-1.0, abs=1e-7)
    with pytest.raises(ValueError):
        lambert_w0(-0.37)


def test_lambert_round_trip_on_random_points():
    rng = np.random.default_rng(5)
    xs = np.concatenate([
        [-1 / math.e, 0.0, 1e6],
        -1 / math.e + rng.random(300) * 1e-6,
        rng.uniform(-1 / math.e, 0.0, 300),
        10 ** rng.uniform(-12, 6, 397),
    ])
    for x in xs:
        w = lambert_w0(float(x))
        assert w >= -1.0
        assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x))


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-1 / math.e, 1e8))
def test_lambert_matches_scipy(x):
    # scipy itself loses digits within ~1e-6 of the branch point
    assume(x > -1 / math.e + 1e-6)
    ref = special.lambertw(x, 0).real
    assert lambert_w0(x) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_lambert_near_branch_point_against_high_precision():
    mpmath.mp.dps = 40
    offsets = np.concatenate([[0.0, 5.6e-17], 10 ** np.linspace(-16, -2, 200)])
    for d in offsets:
        x = float(mpmath.mpf(-1) / mpmath.e + d)
        if x < -1 / math.e:
            continue
        ref = mpmath.lambertw(mpmath.mpf(x))
        if isinstance(ref, mpmath.mpc):
            # the double nearest -1/e lies just below it; clamped to the branch point
            assert lambert_w0(x) == -1.0
            continue
        assert abs(lambert_w0(x) - float(ref)) <= 1e-13


@pytest.mark.parametrize("n_p, printed", [(1, 1.936), (2, 1.937), (32, 1.938), (256, 1.938)])
def test_xiang_examples(n_p, printed):
    r = xiang_wa(*table_config(n_p), 0.1, n_p)
    assert abs(r.value - printed) <= 0.001
    assert 0 < r.intermediates["y"] <= n_p
    assert r.intermediates["w_argument"] < 0


def test_xiang_breakdown():
    with pytest.raises(ModelBreakdownError):
        xiang_wa(100, 1, 0.1, 4)


@pytest.mark.parametrize("n_p, printed", [(32, 1.732), (64, 1.793), (128, 1.828), (256, 1.847)])
def test_hu_examples(n_p, printed):
    assert abs(hu_wa(*table_config(n_p), 0.1, n_p).value - printed) <= 0.001


def test_hu_undefined_for_single_page_blocks():
    with pytest.raises(ModelBreakdownError):
        hu_wa(*table_config(1), 0.1, 1)
    with pytest.raises(ValueError):
        hu_wa(*table_config(4), 0.1, 4, w=0)


@pytest.mark.parametrize("n_p", LADDER)
def test_hu_victim_law_is_a_distribution(n_p):
    T, u = table_config(n_p)
    r = hu_wa(T, u, 0.1, n_p)
    p_star = r.intermediates["p_star"]
    assert len(p_star) == n_p + 1
    assert p_star.min() >= 0
    assert abs(math.fsum(p_star) - 1) <= 1e-9
    assert r.value >= 1
    assert r.intermediates["window"] == T // n_p


@pytest.mark.parametrize("n_p", [4, 32, 256])
def test_hu_window_saturation(n_p):
    T, u = table_config(n_p)
    p = hu_wa(T, u, 0.1, n_p).intermediates["p"]
    first_one = int(np.argmax(p == 1.0))
    assert p[first_one] == 1.0
    w = first_one + 1
    assert hu_wa(T, u, 0.1, n_p, w=w).value == hu_wa(T, u, 0.1, n_p, w=w + 100).value


def test_models_non_decreasing_in_np():
    xiang = [xiang_wa(*table_config(n), 0.1, n).value for n in LADDER]
    hu = [hu_wa(*table_config(n), 0.1, n).value for n in LADDER]
    assert all(b >= a for a, b in zip(xiang, xiang[1:]))
    assert all(b >= a for a, b in zip(hu, hu[1:]))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 300), p=st.floats(0.0, 1.0).filter(lambda p: p == 0 or p > 1e-300))
def test_binomial_pmf_is_normalized(n, p):
    pmf = binomial_pmf(n, p)
    assert abs(math.fsum(pmf) - 1) <= 1e-9
    assert np.allclose(pmf, stats.binom.pmf(np.arange(n + 1), n, p), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 300), p=st.floats(0.0, 1.0).filter(lambda p: p == 0 or p > 1e-300))
def test_binomial_tail(n, p):
    sf = binomial_sf(n, p)
    assert len(sf) == n
    assert np.allclose(sf, stats.binom.sf(np.arange(n), n, p), atol=1e-12)
