"""Arithmetic intersection pairing, heights of rational points, Hodge index."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import green_curve as gc
from .quadrature import integrate
from .toric_model import RealPrincipal, ToricArithDivisor, ord_p, prime_factors


class NotIntegrableError(ValueError):
    pass


@dataclass(frozen=True)
class ReducedProfile:
    """w(t) = u(t) - a0 max(t, 0) - a1 max(-t, 0), a bounded profile."""

    divisor: ToricArithDivisor

    def __call__(self, t):
        D = self.divisor
        t = np.asarray(t, dtype=float)
        return D.green(t) - D.a0 * np.maximum(t, 0.0) - D.a1 * np.maximum(-t, 0.0)

    def slope(self, t):
        D = self.divisor
        t = np.asarray(t, dtype=float)
        return D.green.d1(t, 1) - np.where(t > 0, D.a0, -D.a1)

    @property
    def w0(self) -> float:
        return float(self.divisor.green(0.0))

    @property
    def energy_ready(self) -> bool:
        return gc.has_finite_energy(self.divisor.green)


def reduced_profile(D: ToricArithDivisor) -> ReducedProfile:
    return ReducedProfile(D)


def _check_integrable(D: ToricArithDivisor):
    if not gc.has_finite_energy(D.green):
        raise NotIntegrableError("pairing undefined for non-integrable divisor")


def dirichlet_pairing(D1: ToricArithDivisor, D2: ToricArithDivisor, tol: float = 1e-11) -> float:
    """Integral of w1' w2' dt over the real line."""
    w1, w2 = ReducedProfile(D1), ReducedProfile(D2)
    L = max(D1.green.window, D2.green.window) + 5.0
    k = np.concatenate([D1.green.kinks, D2.green.kinks, [0.0]])
    k = k[(k > -L) & (k < L)]
    bps = np.concatenate([[-L], k, [L]])
    val, _ = integrate(lambda t: w1.slope(t) * w2.slope(t), bps, tol=tol)
    return val


def intersect(D1: ToricArithDivisor, D2: ToricArithDivisor, tol: float = 1e-11) -> float:
    """deg(D1 . D2) for integrable toric divisors.

    Bilinear extension of the basis pairings: canonical sections pair to 0,
    a section against (F_p, 0) gives log p, a section against (0, w) gives
    w(0)/2, and two bounded profiles pair to -(1/2) int w1' w2' dt.
    """
    _check_integrable(D1)
    _check_integrable(D2)
    d1, d2 = D1.deg, D2.deg
    w1, w2 = float(D1.green(0.0)), float(D2.green(0.0))
    fibers = D1.fiber_log_sum * d2 + D2.fiber_log_sum * d1
    return 0.5 * (d1 * w2 + d2 * w1) + fibers - 0.5 * dirichlet_pairing(D1, D2, tol=tol)


def self_intersection(D: ToricArithDivisor) -> float:
    return intersect(D, D)


def height(D: ToricArithDivisor, zeta) -> float:
    """Height of the closure of the point z = zeta (a rational, or "inf").

    Points on the support of H0/H1 are first moved off it by a real power of z,
    which turns the archimedean term into the asymptotic intercept.
    """
    c_fib = D.fiber_log_sum
    if isinstance(zeta, str):
        if zeta not in ("inf", "oo", "infinity"):
            raise ValueError(f"malformed point {zeta!r}")
        return c_fib + 0.5 * D.green.asymptotics.beta_plus
    if zeta is None:
        raise ValueError("malformed point None")
    if isinstance(zeta, float) and math.isinf(zeta):
        return c_fib + 0.5 * D.green.asymptotics.beta_plus
    z = Fraction(zeta)
    if z == 0:
        return c_fib + 0.5 * D.green.asymptotics.beta_minus
    n, d = z.numerator, z.denominator
    # the section meets H0 over primes of the denominator, H1 over the numerator
    finite = 0.0
    for p in prime_factors(d):
        finite += D.a0 * ord_p(Fraction(d), p) * math.log(p)
    for p in prime_factors(n):
        finite += D.a1 * ord_p(Fraction(n), p) * math.log(p)
    t = 2.0 * math.log(abs(n) / d)
    return finite + c_fib + 0.5 * float(D.green(t))


@dataclass(frozen=True)
class HodgeResult:
    self_deg: float
    psi: RealPrincipal | None
    lam: float | None
    residual: float | None


def hodge_check(D: ToricArithDivisor, tol: float = 1e-9) -> HodgeResult:
    """Self-intersection of a degree-zero divisor and its equality structure.

    When the self-intersection vanishes, D = (psi)^ + (0, lam) with
    psi = z^{-a0} prod p^{c_p}; the reconstruction residual is reported.
    """
    if abs(D.deg) > tol:
        raise ValueError(f"hodge_check needs deg(D_K) = 0, got {D.deg}")
    _check_integrable(D)
    s = self_intersection(D)
    if s < -tol:
        return HodgeResult(s, None, None, None)
    psi = RealPrincipal(-D.a0, D.fibers)
    c = D.fiber_log_sum
    lam = D.green.asymptotics.beta_plus + 2.0 * c
    L = D.green.window + 5.0
    ts = np.linspace(-L, L, 4001)
    rest = D.green(ts) - D.a0 * ts + 2.0 * c
    residual = float(np.max(np.abs(rest - lam)))
    return HodgeResult(s, psi, lam, residual)
