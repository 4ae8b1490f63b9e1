import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from bhquench.special import FIRST_ZERO, j0


def test_j0_against_scipy_dense():
    x = np.linspace(0, 200, 20001)
    np.testing.assert_allclose(j0(x), scipy.special.j0(x), atol=1e-10)


def test_first_zero():
    assert abs(j0(FIRST_ZERO)) < 1e-14
    assert FIRST_ZERO == pytest.approx(scipy.special.jn_zeros(0, 1)[0], abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(-500, 500))
def test_j0_even_and_matches_scipy(x):
    assert j0(x) == pytest.approx(j0(-x), abs=1e-15)
    assert j0(x) == pytest.approx(scipy.special.j0(x), abs=1e-10)
