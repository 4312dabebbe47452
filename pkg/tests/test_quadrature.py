import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate as si

from arakzar.quadrature import integrate


@pytest.mark.parametrize("deg", [0, 1, 5, 13, 22])
def test_polynomials_exact(deg):
    val, err = integrate(lambda t: t**deg, [-1.0, 2.0])
    exact = (2.0 ** (deg + 1) - (-1.0) ** (deg + 1)) / (deg + 1)
    assert val == pytest.approx(exact, rel=1e-13, abs=1e-13)


def test_endpoint_singular_behaviour():
    val, _ = integrate(lambda t: np.where(t > 0, t * np.log(np.maximum(t, 1e-300)), 0.0), [0.0, 1.0])
    assert val == pytest.approx(-0.25, abs=1e-10)
    val, _ = integrate(np.sqrt, [0.0, 1.0])
    assert val == pytest.approx(2.0 / 3.0, abs=1e-10)


def test_kink_split_at_breakpoint():
    val, _ = integrate(np.abs, [-1.0, 0.0, 3.0])
    assert val == pytest.approx(5.0, abs=1e-14)


@given(st.floats(-3, 3), st.floats(0.1, 4), st.floats(0.1, 2))
def test_matches_scipy_quad(c, w, s):
    f = lambda t: np.log1p(np.exp(s * (t - c))) * np.exp(-(t**2) / w)
    ours, _ = integrate(f, [-10.0, c, 10.0])
    ref, _ = si.quad(lambda t: float(f(t)), -10, 10, points=[c], epsabs=1e-13, epsrel=1e-13, limit=200)
    assert ours == pytest.approx(ref, abs=1e-10)
