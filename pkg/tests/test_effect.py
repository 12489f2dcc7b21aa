import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from predeval.effect import SmallSampleWarning, categorize, glass_delta
from predeval.errors import DegenerateError

PUBLISHED_EFFECTS = [
    # treatment MAR, control mean MAR, control SD, magnitude
    (2265, 4149, 4220, 0.446),
    (1794, 4149, 4220, 0.558),
    (1346, 4149, 4220, 0.664),
    (1794, 2265, 2664, 0.177),
    (1346, 2265, 2664, 0.345),
]


@pytest.mark.parametrize("t, c, sd, expected", PUBLISHED_EFFECTS)
def test_published_magnitudes(t, c, sd, expected):
    e = glass_delta(t, c, sd)
    assert e.magnitude == pytest.approx(expected, abs=0.002)
    assert e.improved and e.delta < 0


@pytest.mark.parametrize(
    "magnitude, category",
    [(0.177, "negligible"), (0.345, "small"), (0.664, "medium"), (0.0, "negligible"),
     (0.2, "small"), (0.5, "medium"), (0.8, "large"), (0.19999, "negligible"), (0.79999, "medium"), (5.0, "large")],
)
def test_categories(magnitude, category):
    assert categorize(magnitude) == category


def test_negative_magnitude_rejected():
    with pytest.raises(ValueError):
        categorize(-0.1)


def test_equal_means_negligible():
    e = glass_delta(10.0, 10.0, 3.0)
    assert e.delta == 0 and e.category == "negligible" and not e.improved


def test_zero_sd_is_degenerate():
    with pytest.raises(DegenerateError):
        glass_delta(1.0, 2.0, 0.0)


def test_small_sample_warning():
    with pytest.warns(SmallSampleWarning):
        glass_delta(1.0, 2.0, 1.0, n_treatment=10, n_control=30)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        glass_delta(1.0, 2.0, 1.0, n_treatment=20, n_control=20)


def test_labels_carried():
    e = glass_delta(1.0, 2.0, 1.0, treatment_id="EBA", control_id="P0")
    assert (e.treatment_id, e.control_id) == ("EBA", "P0")


pos = st.floats(0.01, 1e5)


@given(pos, pos, pos, st.floats(0.001, 1e3))
def test_scale_invariance(t, c, sd, k):
    assert glass_delta(t * k, c * k, sd * k).delta == pytest.approx(glass_delta(t, c, sd).delta, rel=1e-9, abs=1e-12)


@given(pos, pos, pos)
def test_sign_coherence(t, c, sd):
    e = glass_delta(t, c, sd)
    assert e.improved == (e.delta < 0) == (t < c)
    assert e.magnitude == abs(e.delta)
    assert e.category == categorize(e.magnitude)
