"""Okounkov interval, concave transform, arithmetic volumes and section counts.

For the full linear series of ``a0 H0 + a1 H1`` on P^1 the Okounkov body is the
interval [-a1, a0], and the concave transform is
``G(x) = sum_p c_p log p - u*(x) / 2``, where u* is the Legendre transform of
the profile. Volumes are ``2 int G+`` and ``2 int G``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import green_curve as gc
from .green_curve import Conjugate
from .toric_model import ToricArithDivisor

TOL = 1e-9


@dataclass(frozen=True)
class OkounkovData:
    delta: tuple[float, float] | None
    theta: tuple[float, float] | None
    conjugate: Conjugate | None
    fiber_const: float
    sup_G: float
    # slope-coordinate points whose subdifferentials contain the theta ends
    theta_t: tuple[float, float] | None = None

    def G(self, x):
        if self.delta is None:
            raise gc.DomainError("empty Okounkov interval")
        return self.fiber_const - 0.5 * self.conjugate(x)

    def samples(self, n: int = 101):
        if self.delta is None:
            return []
        lo, hi = self.delta
        xs = np.linspace(lo, hi, n) if hi > lo else np.array([lo])
        return [[float(x), float(g)] for x, g in zip(xs, np.atleast_1d(self.G(xs)))]


def _g_right(q, C, t):
    return C - 0.5 * (t * float(q.d1(t, 1)) - float(q(t)))


def _g_left(q, C, t):
    return C - 0.5 * (t * float(q.d1(t, -1)) - float(q(t)))


def _snap(q, t):
    # the bisection only locates a kink to within a few ulps
    k = q.kinks
    if k.size:
        i = int(np.argmin(np.abs(k - t)))
        if abs(k[i] - t) <= 1e-9 * (1.0 + abs(t)):
            return float(k[i])
    return t


def _crossing_x(q, C, t):
    """Where G vanishes inside the subdifferential of q at t."""
    lo, hi = float(q.d1(t, -1)), float(q.d1(t, 1))
    if abs(t) < 1e-300:
        return lo
    return min(max((2.0 * C + float(q(t))) / t, lo), hi)


def okounkov(D: ToricArithDivisor, tol: float = TOL, envelope=None) -> OkounkovData:
    C = D.fiber_log_sum
    if D.deg < -tol:
        return OkounkovData(None, None, None, C, -math.inf)
    conj = Conjugate(D.green, envelope)
    q = conj.q
    lo, hi = conj.lo, conj.hi
    if hi < lo:
        hi = lo = 0.5 * (lo + hi)
    delta = (lo, hi)
    A = q.asymptotics
    sup_G = C + 0.5 * float(q(0.0))
    if sup_G < -tol:
        return OkounkovData(delta, None, conj, C, sup_G)
    if sup_G <= tol:
        x0, x1 = float(q.d1(0.0, -1)), float(q.d1(0.0, 1))
        return OkounkovData(delta, (max(x0, lo), min(x1, hi)), conj, C, sup_G, (0.0, 0.0))

    L = conj.L
    # left end: G along t <= 0 is nondecreasing
    if C + 0.5 * A.beta_minus >= 0:
        x_lo, t_lo = lo, -L
    else:
        a, b = -L, 0.0
        for _ in range(200):
            mid = 0.5 * (a + b)
            if _g_right(q, C, mid) >= 0:
                b = mid
            else:
                a = mid
            if b - a < 1e-15 * (1.0 + abs(mid)):
                break
        t_lo = _snap(q, b)
        x_lo = _crossing_x(q, C, t_lo)
    if C + 0.5 * A.beta_plus >= 0:
        x_hi, t_hi = hi, L
    else:
        a, b = 0.0, L
        for _ in range(200):
            mid = 0.5 * (a + b)
            if _g_left(q, C, mid) >= 0:
                a = mid
            else:
                b = mid
            if b - a < 1e-15 * (1.0 + abs(mid)):
                break
        t_hi = _snap(q, a)
        x_hi = _crossing_x(q, C, t_hi)
    return OkounkovData(delta, (x_lo, x_hi), conj, C, sup_G, (t_lo, t_hi))


def _integral_G(ok: OkounkovData, x_lo: float, x_hi: float) -> float:
    if x_hi <= x_lo:
        return 0.0
    return ok.fiber_const * (x_hi - x_lo) - 0.5 * ok.conjugate.integral(x_lo, x_hi)


def vol(D: ToricArithDivisor, ok: OkounkovData | None = None) -> float:
    ok = okounkov(D) if ok is None else ok
    if ok.theta is None:
        return 0.0
    return max(0.0, 2.0 * _integral_G(ok, *ok.theta))


def vol_chi(D: ToricArithDivisor, ok: OkounkovData | None = None) -> float:
    ok = okounkov(D) if ok is None else ok
    if ok.delta is None:
        return 0.0
    return 2.0 * _integral_G(ok, *ok.delta)


def asymptotic_mult(D: ToricArithDivisor, xi: str, ok: OkounkovData | None = None) -> float:
    """Asymptotic multiplicity along H0 or H1 (inf when no small sections)."""
    ok = okounkov(D) if ok is None else ok
    if ok.theta is None:
        return math.inf
    if xi == "H1":
        return D.a1 + ok.theta[0]
    if xi == "H0":
        return D.a0 - ok.theta[1]
    raise ValueError(f"unknown horizontal curve {xi!r}")


# ---------------------------------------------------------------------------
# lattice counts


def _snap_floor(v: float) -> int:
    return int(math.floor(v + 1e-9 * max(1.0, v)))


@dataclass(frozen=True)
class SectionCount:
    log_count_lower: float
    log_count_upper: float
    exact: int | None
    ks: tuple = ()
    boxes: tuple = ()
    log_lambda: float = 0.0

    def __iter__(self):
        return iter((self.log_count_lower, self.log_count_upper, self.exact))


def monomial_range(D: ToricArithDivisor, m: int) -> range:
    k_lo = math.ceil(-m * D.a1 - 1e-9)
    k_hi = math.floor(m * D.a0 + 1e-9)
    return range(k_lo, k_hi + 1)


def _log_lambda(D: ToricArithDivisor, m: int):
    exps = {p: _snap_floor(m * c) for p, c in D.fibers}
    return exps, sum(e * math.log(p) for p, e in exps.items())


def _log_boxes(D: ToricArithDivisor, m: int, conj: Conjugate | None):
    ks = monomial_range(D, m)
    if len(ks) == 0:
        return np.empty(0, dtype=int), np.empty(0), 0.0
    _, log_lam = _log_lambda(D, m)
    conj = Conjugate(D.green) if conj is None else conj
    lo, hi = conj.domain
    xs = np.clip(np.array(ks, dtype=float) / m, lo, hi)
    log_b = -0.5 * m * np.atleast_1d(conj(xs))
    return np.array(ks, dtype=int), log_b, log_lam


def _log_2floor_plus_1(logv: np.ndarray):
    out = np.empty_like(logv)
    boxes = []
    for i, lv in enumerate(logv):
        if lv > 40.0:
            out[i] = math.log(2.0) + lv
            boxes.append(None)
        else:
            b = _snap_floor(math.exp(lv))
            out[i] = math.log(2 * b + 1)
            boxes.append(b)
    return out, boxes


def count_sections(D: ToricArithDivisor, m: int, cap: int = 10**6, conj: Conjugate | None = None) -> SectionCount:
    """Box bounds (and, when small, exact enumeration) of log #H^0(X, mD)-small.

    A section is sum_k q_k z^k with q_k in Lambda^{-1} Z; averaging over the
    circle gives |q_k| ||z^k|| <= ||phi||, the outer box, and the triangle
    inequality gives the inner box scaled by 1/(N+1).
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    if D.deg < -1e-12:
        return SectionCount(0.0, 0.0, 1)
    conj = Conjugate(D.green) if conj is None else conj
    ks, log_b, log_lam = _log_boxes(D, m, conj)
    if ks.size == 0:
        return SectionCount(0.0, 0.0, 1)
    N = ks.size
    upper_terms, boxes = _log_2floor_plus_1(log_b + log_lam)
    lower_terms, _ = _log_2floor_plus_1(log_b + log_lam - math.log(N + 1))
    upper = float(np.sum(upper_terms))
    lower = float(np.sum(lower_terms))
    exact = None
    if upper <= math.log(cap) and all(b is not None for b in boxes):
        exact = _enumerate(D, m, ks, boxes, log_b, log_lam)
    return SectionCount(lower, upper, exact, tuple(int(k) for k in ks), tuple(boxes), log_lam)


def _zoom_sup(u, m, ks_a, c, log_lam, t0, th0, dt, dth, levels=5, pts=21):
    """Local refinement of sup |sum c_k z^k| exp(-m u / 2) / Lambda near (t0, th0)."""
    best = -math.inf
    offs = np.linspace(-2.0, 2.0, pts)
    for _ in range(levels):
        ts = t0 + dt * offs
        ths = th0 + dth * offs
        lw = 0.5 * (ks_a[:, None] * ts[None, :] - m * u(ts)[None, :]) - log_lam
        vals = np.abs((c[:, None] * np.exp(lw)).T @ np.exp(1j * np.outer(ks_a, ths)))
        i, j = np.unravel_index(int(vals.argmax()), vals.shape)
        best = max(best, float(vals[i, j]))
        if best > 1.0 + 1e-9:
            break
        t0, th0 = ts[i], ths[j]
        dt, dth = dt / 5.0, dth / 5.0
    return best


def _enumerate(D, m, ks, boxes, log_b, log_lam) -> int:
    active = [i for i, b in enumerate(boxes) if b > 0]
    if not active:
        return 1
    ks_a = ks[active]
    u = D.green
    # exact sup over t of each weight, from the Legendre transform
    log_wmax = -log_b[active] - log_lam
    wmax = np.exp(log_wmax)
    L = u.window + 40.0

    def log_weights(ts):
        # log of exp(k t / 2 - m u(t) / 2) / Lambda per monomial and t
        return 0.5 * (ks_a[:, None] * ts[None, :] - m * u(ts)[None, :]) - log_lam

    coarse = np.linspace(-L, L, 801)
    t_k = coarse[np.argmax(log_weights(coarse), axis=1)]
    fine = np.linspace(float(t_k.min()) - 3.0, float(t_k.max()) + 3.0, 1201)
    ts = np.union1d(coarse, fine)
    logw = log_weights(ts)
    # columns where every weight is negligible cannot decide anything
    keep = np.max(logw - log_wmax[:, None], axis=0) > -30.0
    ts, logw = ts[keep], logw[:, keep]
    W = np.exp(logw)
    thetas = np.linspace(0.0, 2.0 * np.pi, 96, endpoint=False)
    dth = thetas[1] - thetas[0]
    phase = np.exp(1j * np.outer(ks_a, thetas))
    ranges = [range(-boxes[i], boxes[i] + 1) for i in active]
    count = 0
    for coeffs in itertools.product(*ranges):
        c = np.array(coeffs, dtype=float)
        if not c.any():
            count += 1
            continue
        if np.sum(np.abs(c) * wmax) <= 1.0 + 1e-9:
            count += 1
            continue
        vals = np.abs((W * c[:, None]).T @ phase)
        i_t, i_th = np.unravel_index(int(vals.argmax()), vals.shape)
        if vals[i_t, i_th] > 1.0 + 1e-9:
            continue
        dt = max(ts[min(i_t + 1, ts.size - 1)] - ts[i_t], ts[i_t] - ts[max(i_t - 1, 0)])
        if _zoom_sup(u, m, ks_a, c, log_lam, ts[i_t], thetas[i_th], dt, dth) <= 1.0 + 1e-9:
            count += 1
    return count


def chi_estimate(D: ToricArithDivisor, m: int, conj: Conjugate | None = None) -> tuple[float, float]:
    """Bracket of chi-hat(H^0(X, mD), sup norm) from inner/outer coefficient boxes."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    if D.deg < -1e-12:
        raise ValueError("chi_estimate needs deg(D_K) >= 0")
    ks, log_b, log_lam = _log_boxes(D, m, conj)
    N = ks.size
    if N == 0:
        return 0.0, 0.0
    center = float(np.sum(math.log(2.0) + log_b + log_lam))
    return center - N * math.log(N), center
