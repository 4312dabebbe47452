"""Seeded divisor families and the explicit two-parameter example.

The random families feed the property harness. Samples too close to a
classification boundary (nef, pseudo-effective, convex) are redrawn, because
the predicates and the equality tests then sit at different tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import green_curve as gc
from .green_curve import Affine, LogExp, Splice
from .toric_model import RealPrincipal, ToricArithDivisor, principal_real

MARGIN = 0.02
PRIMES = (2, 3, 5)


def ramp(c: float, w: float) -> gc.GreenCurve:
    """Smooth step from 0 to w centred near c + w/2, slopes 0 at both ends."""
    return gc.Sum([LogExp(1.0, math.exp(-c)), gc.Scale(-1.0, LogExp(1.0, math.exp(-c - w)))])


def bump(c1: float, c2: float, w: float, height: float) -> gc.GreenCurve:
    return gc.Scale(height / w, gc.Sum([ramp(c1, w), gc.Scale(-1.0, ramp(c2, w))]))


def _convex_core(rng, a0: float, a1: float) -> gc.GreenCurve:
    d = a0 + a1
    parts = [Affine(-a1, float(rng.uniform(-1.0, 1.0)))]
    k = int(rng.integers(1, 4))
    w = rng.dirichlet(np.ones(k)) * d
    for wi in w:
        c = float(rng.uniform(-3.0, 3.0))
        if rng.random() < 0.25:
            # a genuine kink: wi * max(0, t - c)
            parts.append(gc.Scale(float(wi), gc.Max([Affine(0.0, 0.0), Affine(1.0, -c)])))
        else:
            parts.append(gc.Scale(float(wi), LogExp(float(rng.uniform(0.3, 3.0)), math.exp(-c))))
    return gc.Sum(parts)


def _perturbation(rng) -> gc.GreenCurve:
    amp = float(rng.uniform(0.1, 1.5)) * (1 if rng.random() < 0.6 else -1)
    if rng.random() < 0.5:
        return gc.tent(float(rng.uniform(-2.0, 2.0)), float(rng.uniform(0.3, 1.5)), amp)
    c1 = float(rng.uniform(-3.0, 1.0))
    return bump(c1, c1 + float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.2, 1.0)), amp)


def _fibers(rng):
    if rng.random() < 0.5:
        return ()
    ps = rng.choice(PRIMES, size=int(rng.integers(1, 3)), replace=False)
    return tuple((int(p), float(rng.uniform(-0.5, 0.5))) for p in ps)


def _well_separated(D: ToricArithDivisor) -> bool:
    from .volumes import okounkov

    u = D.green
    q = gc.convex_envelope(u)
    gap = gc.envelope_gap(u, q)
    if 1e-9 < gap < 1e-2:
        return False
    ok = okounkov(D)
    if ok.delta is None:
        return True
    if abs(ok.sup_G) < MARGIN:
        return False
    A = q.asymptotics
    C = D.fiber_log_sum
    ends = (C + 0.5 * A.beta_minus, C + 0.5 * A.beta_plus)
    return min(abs(e) for e in ends) >= MARGIN


def random_divisor(rng: np.random.Generator, nonconvex: float = 0.5) -> ToricArithDivisor:
    """Integrable divisor with deg(D_K) in [0.3, 2]."""
    while True:
        d = float(rng.uniform(0.3, 2.0))
        a1 = float(rng.uniform(-0.5, d + 0.5))
        a0 = d - a1
        u = _convex_core(rng, a0, a1)
        if rng.random() < nonconvex:
            u = gc.Sum([u, _perturbation(rng)])
        u = gc.Sum([u, Affine(0.0, float(rng.uniform(-1.5, 1.5)))])
        D = ToricArithDivisor(a0, a1, _fibers(rng), u)
        if _well_separated(D):
            return D


def random_degree_zero(rng: np.random.Generator, perturb: float = 0.6) -> ToricArithDivisor:
    """(psi)_R + (0, lambda), optionally plus a compactly concentrated bump."""
    while True:
        k = float(rng.uniform(-1.5, 1.5))
        exps = _fibers(rng)
        D = principal_real(RealPrincipal(k, exps))
        lam = float(rng.uniform(-1.5, 1.5))
        u = gc.Sum([D.green, Affine(0.0, lam)])
        if rng.random() < perturb:
            u = gc.Sum([u, _perturbation(rng)])
        E = ToricArithDivisor(D.a0, D.a1, D.fibers, u)
        if _well_separated(E):
            return E


def random_divisors(seed: int, count: int, **kw) -> list[ToricArithDivisor]:
    rng = np.random.default_rng(seed)
    return [random_divisor(rng, **kw) for _ in range(count)]


# ---------------------------------------------------------------------------
# explicit example: (H0, log(a0 + a1 |z|^2)) with a0, a1 < 1 <= a0 + a1


def example_divisor(a0: float = 0.8, a1: float = 0.8) -> ToricArithDivisor:
    return ToricArithDivisor(1.0, 0.0, (), LogExp(a0, a1))


def example_phi(a0: float, a1: float):
    def phi(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = -np.where(x < 1, (1 - x) * np.log1p(-x), 0.0) - np.where(x > 0, x * np.log(x), 0.0)
        return ent + (1 - x) * math.log(a0) + x * math.log(a1)

    return phi


def check_example_params(a0: float, a1: float):
    if not (0 < a0 < 1 and 0 < a1 < 1 and a0 + a1 >= 1):
        raise ValueError("example needs 0 < a0 < 1, 0 < a1 < 1 and a0 + a1 >= 1")


def example_bounds(a0: float, a1: float) -> tuple[float, float]:
    """(vartheta, theta): the ends of {phi >= 0}, by bracketing root search."""
    check_example_params(a0, a1)
    phi = example_phi(a0, a1)
    xm = a1 / (a0 + a1)
    if float(phi(xm)) <= 0.0:
        return xm, xm
    lo = brentq(lambda x: float(phi(x)), 0.0, xm, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    hi = brentq(lambda x: float(phi(x)), xm, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    return lo, hi


@dataclass(frozen=True)
class ExamplePieces:
    a0: float
    a1: float
    vartheta: float
    theta: float
    P: ToricArithDivisor
    N1: ToricArithDivisor
    N2: ToricArithDivisor

    @property
    def breakpoints(self) -> tuple[float, float]:
        """|z| at the two contact circles."""
        a0, a1, lo, hi = self.a0, self.a1, self.vartheta, self.theta
        return math.sqrt(a0 * lo / (a1 * (1 - lo))), math.sqrt(a0 * hi / (a1 * (1 - hi)))

    def gram_closed_form(self) -> np.ndarray:
        lo, hi, a0, a1 = self.vartheta, self.theta, self.a0, self.a1
        g11 = ((1 - lo) * math.log(1 - lo) + (math.log(a0) + 1) * lo) / 2
        g22 = (hi * math.log(hi) + (math.log(a1) + 1) * (1 - hi)) / 2
        return np.array([[g11, 0.0], [0.0, g22]])


def example_pieces(a0: float = 0.8, a1: float = 0.8) -> ExamplePieces:
    """P, N1, N2 written directly from their piecewise closed forms."""
    lo, hi = example_bounds(a0, a1)
    u = LogExp(a0, a1)
    t1 = math.log(a0 * lo / (a1 * (1 - lo)))
    t2 = math.log(a0 * hi / (a1 * (1 - hi)))
    p = Splice(Splice(Affine(lo, 0.0), u, t1, convex=True), Affine(hi, 0.0), t2, convex=True)
    n1 = Splice(gc.Sum([u, Affine(-lo, 0.0)]), Affine(0.0, 0.0), t1, convex=True)
    n2 = Splice(Affine(0.0, 0.0), gc.Sum([u, Affine(-hi, 0.0)]), t2, convex=True)
    P = ToricArithDivisor(hi, -lo, (), p)
    N1 = ToricArithDivisor(0.0, lo, (), n1)
    N2 = ToricArithDivisor(1.0 - hi, 0.0, (), n2)
    return ExamplePieces(a0, a1, lo, hi, P, N1, N2)
