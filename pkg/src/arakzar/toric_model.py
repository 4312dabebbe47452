"""Arithmetic R-divisors on P^1 over Z with rotation-invariant Green functions.

A divisor is ``a0 H0 + a1 H1 + sum_p c_p F_p`` together with a profile u(t),
where H0 is the section z = infinity, H1 the section z = 0, F_p the fiber over
p, and the Green function is g(z) = u(log|z|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import green_curve as gc
from .green_curve import Affine, GreenCurve

SLOPE_TOL = 1e-9


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    r = int(math.isqrt(p))
    return all(p % f for f in range(3, r + 1, 2))


def ord_p(q: Fraction, p: int) -> int:
    if q == 0:
        raise ValueError("ord of zero")
    n, d, k = abs(q.numerator), q.denominator, 0
    while n % p == 0:
        n //= p
        k += 1
    while d % p == 0:
        d //= p
        k -= 1
    return k


def prime_factors(n: int) -> list[int]:
    n, out, f = abs(n), [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class ToricArithDivisor:
    a0: float
    a1: float
    fibers: tuple = ()
    green: GreenCurve = field(default_factory=lambda: Affine(0.0, 0.0))

    def __post_init__(self):
        fib = self.fibers
        if isinstance(fib, Mapping):
            fib = fib.items()
        clean: dict[int, float] = {}
        for p, c in fib:
            p = int(p)
            if not is_prime(p):
                raise ValueError(f"fiber key {p} is not prime")
            clean[p] = clean.get(p, 0.0) + float(c)
        object.__setattr__(self, "fibers", tuple(sorted((p, c) for p, c in clean.items() if c != 0.0)))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a1", float(self.a1))
        s0, b0, s1, b1 = self.green.asymptotics
        if abs(s1 - self.a0) > SLOPE_TOL or abs(s0 + self.a1) > SLOPE_TOL:
            raise ValueError(
                f"green profile slopes ({s0}, {s1}) do not match (-a1, a0) = ({-self.a1}, {self.a0})"
            )
        if not (math.isfinite(b0) and math.isfinite(b1)):
            raise ValueError("green profile intercepts must be finite")

    @property
    def fiber_map(self) -> dict[int, float]:
        return dict(self.fibers)

    @property
    def deg(self) -> float:
        """Degree of the generic fiber divisor, a0 + a1."""
        return self.a0 + self.a1

    @property
    def fiber_log_sum(self) -> float:
        return sum(c * math.log(p) for p, c in self.fibers)

    def __add__(self, other: "ToricArithDivisor") -> "ToricArithDivisor":
        return linear_combine([(1.0, self), (1.0, other)])

    def __sub__(self, other: "ToricArithDivisor") -> "ToricArithDivisor":
        return linear_combine([(1.0, self), (-1.0, other)])

    def __mul__(self, k: float) -> "ToricArithDivisor":
        return linear_combine([(float(k), self)])

    __rmul__ = __mul__

    def add_constant(self, lam: float) -> "ToricArithDivisor":
        """D + (0, lam)."""
        green = self.green + float(lam)
        # the envelope commutes with adding a constant
        gc.inherit_envelopes(self.green, green, float(lam))
        return ToricArithDivisor(self.a0, self.a1, self.fibers, green)

    def to_json(self) -> dict:
        return {
            "a0": self.a0,
            "a1": self.a1,
            "fibers": [{"p": p, "c": c} for p, c in self.fibers],
            "green": self.green.to_json(),
        }

    @classmethod
    def from_json(cls, obj) -> "ToricArithDivisor":
        if not isinstance(obj, dict):
            raise ValueError("divisor specification must be a JSON object")
        missing = {"a0", "a1", "green"} - set(obj)
        if missing:
            raise ValueError(f"divisor specification lacks {sorted(missing)}")
        fibers = [(f["p"], f["c"]) for f in obj.get("fibers", [])]
        return cls(obj["a0"], obj["a1"], tuple(fibers), gc.from_json(obj["green"]))


@dataclass(frozen=True)
class PrincipalMonomial:
    """phi = q z^k with k integral and q a nonzero rational."""

    k: int
    q: Fraction

    def __post_init__(self):
        object.__setattr__(self, "q", Fraction(self.q))
        if self.q == 0:
            raise ValueError("principal monomial needs q != 0")
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class RealPrincipal:
    """An element z^k * prod p^e_p of Rat(X)^x tensor R (real exponents)."""

    k: float = 0.0
    exps: tuple = ()

    def __post_init__(self):
        e = self.exps.items() if isinstance(self.exps, Mapping) else self.exps
        object.__setattr__(self, "exps", tuple(sorted((int(p), float(c)) for p, c in e if c != 0)))
        object.__setattr__(self, "k", float(self.k))


def zero_divisor() -> ToricArithDivisor:
    return ToricArithDivisor(0.0, 0.0, (), Affine(0.0, 0.0))


def canonical_h0() -> ToricArithDivisor:
    """(H0, t+)."""
    return ToricArithDivisor(1.0, 0.0, (), gc.t_plus())


def canonical_h1() -> ToricArithDivisor:
    """(H1, max(-t, 0))."""
    return ToricArithDivisor(0.0, 1.0, (), gc.t_minus())


def fubini_study(a: float = 1.0, b: float = 1.0) -> ToricArithDivisor:
    """(H0, log(a + b|z|^2))."""
    return ToricArithDivisor(1.0, 0.0, (), gc.LogExp(a, b))


def constant_divisor(lam: float) -> ToricArithDivisor:
    return ToricArithDivisor(0.0, 0.0, (), gc.constant(lam))


def linear_combine(terms: Sequence[tuple[float, ToricArithDivisor]]) -> ToricArithDivisor:
    terms = [(float(c), D) for c, D in terms if float(c) != 0.0]
    if not terms:
        return zero_divisor()
    a0 = sum(c * D.a0 for c, D in terms)
    a1 = sum(c * D.a1 for c, D in terms)
    fib: dict[int, float] = {}
    for c, D in terms:
        for p, v in D.fibers:
            fib[p] = fib.get(p, 0.0) + c * v
    parts = [D.green if c == 1.0 else gc.Scale(c, D.green) for c, D in terms]
    green = parts[0] if len(parts) == 1 else gc.Sum(parts)
    return ToricArithDivisor(a0, a1, tuple(fib.items()), green)


def max_divisor(divisors: Sequence[ToricArithDivisor]) -> ToricArithDivisor:
    divisors = list(divisors)
    if not divisors:
        raise ValueError("max of an empty family of divisors")
    if len(divisors) == 1:
        return divisors[0]
    a0 = max(D.a0 for D in divisors)
    a1 = max(D.a1 for D in divisors)
    primes = sorted({p for D in divisors for p, _ in D.fibers})
    fib = tuple((p, max(D.fiber_map.get(p, 0.0) for D in divisors)) for p in primes)
    return ToricArithDivisor(a0, a1, fib, gc.Max([D.green for D in divisors]))


def principal(m: PrincipalMonomial) -> ToricArithDivisor:
    """The arithmetic principal divisor of q z^k."""
    q = Fraction(m.q)
    primes = prime_factors(q.numerator) + prime_factors(q.denominator)
    fib = tuple((p, float(ord_p(q, p))) for p in primes)
    green = Affine(-float(m.k), -2.0 * math.log(abs(q)))
    return ToricArithDivisor(-float(m.k), float(m.k), fib, green)


def principal_real(psi: RealPrincipal) -> ToricArithDivisor:
    """The R-principal divisor of z^k prod p^e_p."""
    c = sum(e * math.log(p) for p, e in psi.exps)
    return ToricArithDivisor(-psi.k, psi.k, psi.exps, Affine(-psi.k, -2.0 * c))


def is_effective(D: ToricArithDivisor, tol: float = 1e-9) -> bool:
    if D.a0 < -tol or D.a1 < -tol:
        return False
    if any(c < -tol for _, c in D.fibers):
        return False
    return gc.curve_min(D.green) >= -tol


def dominates(D: ToricArithDivisor, E: ToricArithDivisor, tol: float = 1e-9) -> bool:
    """D >= E in the divisor order (componentwise and pointwise)."""
    return is_effective(D - E, tol=tol)


def normalize_fibers(D: ToricArithDivisor):
    """Move every fiber into the Green function via principal divisors of primes.

    Returns ``(fiber_free, shift)`` with ``shift`` a list of
    ``(PrincipalMonomial(0, p), c_p)`` so that
    ``D = fiber_free + sum c_p * principal(p)``.
    """
    if not D.fibers:
        return D, []
    shift = [(PrincipalMonomial(0, p), c) for p, c in D.fibers]
    free = ToricArithDivisor(D.a0, D.a1, (), D.green + 2.0 * D.fiber_log_sum)
    return free, shift


def restore_fibers(free: ToricArithDivisor, shift) -> ToricArithDivisor:
    terms = [(1.0, free)] + [(c, principal(m)) for m, c in shift]
    return linear_combine(terms)


def profile_distance(D: ToricArithDivisor, E: ToricArithDivisor, n: int = 4001) -> float:
    """sup-distance of the profiles plus coefficient mismatch."""
    coef = abs(D.a0 - E.a0) + abs(D.a1 - E.a1)
    fd, fe = D.fiber_map, E.fiber_map
    coef += sum(abs(fd.get(p, 0.0) - fe.get(p, 0.0)) for p in set(fd) | set(fe))
    L = max(D.green.window, E.green.window) + 5.0
    ts = np.linspace(-L, L, n)
    return coef + float(np.max(np.abs(D.green(ts) - E.green(ts))))
