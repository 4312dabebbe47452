import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from arakzar import green_curve as gc
from arakzar import toric_model as tm

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("default")


@pytest.fixture
def fs():
    return tm.fubini_study()


@pytest.fixture
def ex08():
    return tm.fubini_study(0.8, 0.8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def brute_conjugate(u, x, window=None, n=200001):
    """sup_t (x t - u(t)) on a dense grid plus golden-section polishing."""
    L = (u.window + 40.0) if window is None else window
    ts = np.linspace(-L, L, n)
    vals = np.outer(np.atleast_1d(x), ts) - u(ts)[None, :]
    out = []
    for xi, row in zip(np.atleast_1d(x), vals):
        i = int(np.argmax(row))
        a, b = ts[max(i - 1, 0)], ts[min(i + 1, n - 1)]
        f = lambda t: -(xi * t - float(u(t)))
        g = (math.sqrt(5) - 1) / 2
        c, d = b - g * (b - a), a + g * (b - a)
        for _ in range(80):
            if f(c) < f(d):
                b = d
            else:
                a = c
            c, d = b - g * (b - a), a + g * (b - a)
        out.append(max(row[i], -f(0.5 * (a + b))))
    return np.array(out)


# strategies -----------------------------------------------------------------

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
positive = st.floats(0.2, 3.0, allow_nan=False, allow_infinity=False)


@st.composite
def convex_profiles(draw, a0=None, a1=None):
    """Sums of logexp and hinge terms plus an affine part: always convex."""
    a1 = draw(st.floats(-0.5, 1.5)) if a1 is None else a1
    d = draw(st.floats(0.3, 2.0)) if a0 is None else a0 + a1
    k = draw(st.integers(1, 3))
    w = draw(st.lists(st.floats(0.1, 1.0), min_size=k, max_size=k))
    w = [d * x / sum(w) for x in w]
    parts = [gc.Affine(-a1, draw(finite))]
    for wi in w:
        c = draw(finite)
        if draw(st.booleans()):
            parts.append(gc.Scale(wi, gc.LogExp(draw(positive), math.exp(-c))))
        else:
            parts.append(gc.Scale(wi, gc.Max([gc.Affine(0.0, 0.0), gc.Affine(1.0, -c)])))
    return gc.Sum(parts), d - a1, a1


@st.composite
def nonconvex_profiles(draw):
    u, a0, a1 = draw(convex_profiles())
    h = draw(st.floats(0.5, 2.0))
    bump = gc.tent(draw(st.floats(-2.0, 2.0)), draw(st.floats(0.3, 1.5)), h)
    return gc.Sum([u, bump]), a0, a1


@st.composite
def divisors(draw, convex=None):
    if convex is None:
        convex = draw(st.booleans())
    u, a0, a1 = draw(convex_profiles() if convex else nonconvex_profiles())
    fib = ()
    if draw(st.booleans()):
        fib = ((draw(st.sampled_from([2, 3, 5])), draw(st.floats(-0.5, 0.5))),)
    return tm.ToricArithDivisor(a0, a1, fib, u)


# acceptance outcomes, filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(k for k in ACCEPTANCE if isinstance(k, int)):
        passed, detail = ACCEPTANCE[key]
        tr.write_line(f"criterion {key}: {'PASS' if passed else 'FAIL'} | {detail}")
    for row in ACCEPTANCE.get("5-detail", []):
        tr.write_line(f"  criterion 5 {row}")
