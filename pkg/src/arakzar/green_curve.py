"""Rotation-invariant Green profiles u(t), t = log|z|^2, and their convex analysis.

A profile is an immutable expression tree. Every node can evaluate its value,
one-sided first derivatives and the absolutely continuous part of its second
derivative on numpy arrays, and reports its kinks (points where the first
derivative may jump) together with a half-width ``window`` outside of which the
curve agrees with its asymptotic lines to double precision.
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .quadrature import integrate

# how far past the last feature an exponential tail is considered flat
_TAIL = 38.0
_TIE = 2e-15


class DomainError(ValueError):
    """Evaluation of a conjugate outside its closed domain."""


class Asymptotics(NamedTuple):
    s_minus: float
    beta_minus: float
    s_plus: float
    beta_plus: float


def _arr(t):
    return np.asarray(t, dtype=float)


class GreenCurve:
    """Base class of profile expression trees."""

    # True: known convex, False: known non-convex, None: unknown
    convex_hint: bool | None = None

    def __call__(self, t):
        t = _arr(t)
        return self._value(np.atleast_1d(t)).reshape(t.shape)

    def d1(self, t, side: int = 1):
        """Right (side=+1) or left (side=-1) derivative."""
        t = _arr(t)
        return self._d1(np.atleast_1d(t), side).reshape(t.shape)

    def d2(self, t):
        """Density of the absolutely continuous part of u''."""
        t = _arr(t)
        return self._d2(np.atleast_1d(t)).reshape(t.shape)

    def jumps(self, t):
        t = _arr(t)
        return self.d1(t, 1) - self.d1(t, -1)

    # subclasses implement these on 1-d arrays
    def _value(self, t):
        raise NotImplementedError

    def _d1(self, t, side):
        raise NotImplementedError

    def _d2(self, t):
        raise NotImplementedError

    @cached_property
    def asymptotics(self) -> Asymptotics:
        return self._asymptotics()

    def _asymptotics(self) -> Asymptotics:
        raise NotImplementedError

    @cached_property
    def kinks(self) -> np.ndarray:
        return np.unique(np.asarray(self._kinks(), dtype=float))

    def _kinks(self):
        return []

    @cached_property
    def window(self) -> float:
        return float(self._window())

    def _window(self):
        return 0.0

    def to_json(self) -> dict:
        return sample_grid(self).to_json()

    # algebra
    def __add__(self, other):
        if isinstance(other, (int, float)):
            return Sum([self, Affine(0.0, float(other))])
        return Sum([self, other])

    __radd__ = __add__

    def __mul__(self, k):
        return Scale(float(k), self)

    __rmul__ = __mul__

    def __neg__(self):
        return Scale(-1.0, self)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return Sum([self, Affine(0.0, -float(other))])
        return Sum([self, Scale(-1.0, other)])


class Affine(GreenCurve):
    convex_hint = True

    def __init__(self, slope: float, intercept: float):
        self.slope = float(slope)
        self.intercept = float(intercept)

    def _value(self, t):
        return self.slope * t + self.intercept

    def _d1(self, t, side):
        return np.full_like(t, self.slope)

    def _d2(self, t):
        return np.zeros_like(t)

    def _asymptotics(self):
        return Asymptotics(self.slope, self.intercept, self.slope, self.intercept)

    def to_json(self):
        return {"type": "affine", "slope": self.slope, "intercept": self.intercept}

    def __repr__(self):
        return f"Affine({self.slope!r}, {self.intercept!r})"


class LogExp(GreenCurve):
    """t -> log(a + b e^t), the Fubini-Study type profile."""

    convex_hint = True

    def __init__(self, a: float, b: float):
        if not (a > 0 and b > 0):
            raise ValueError("logexp requires a > 0 and b > 0")
        self.a = float(a)
        self.b = float(b)
        self._la = math.log(self.a)
        self._lb = math.log(self.b)

    def _value(self, t):
        return np.logaddexp(self._la, self._lb + t)

    def _sigma(self, t):
        # b e^t / (a + b e^t)
        return 0.5 * (1.0 + np.tanh(0.5 * (t + self._lb - self._la)))

    def _d1(self, t, side):
        return self._sigma(t)

    def _d2(self, t):
        s = self._sigma(t)
        return s * (1.0 - s)

    def _asymptotics(self):
        return Asymptotics(0.0, self._la, 1.0, self._lb)

    def _window(self):
        return abs(self._la - self._lb) + _TAIL

    def to_json(self):
        return {"type": "logexp", "a": self.a, "b": self.b}

    def __repr__(self):
        return f"LogExp({self.a!r}, {self.b!r})"


class Scale(GreenCurve):
    def __init__(self, k: float, arg: GreenCurve):
        self.k = float(k)
        self.arg = arg
        if self.k >= 0:
            self.convex_hint = arg.convex_hint
        elif isinstance(arg, Affine):
            self.convex_hint = True
        else:
            self.convex_hint = None

    def _value(self, t):
        return self.k * self.arg._value(t)

    def _d1(self, t, side):
        return self.k * self.arg._d1(t, side)

    def _d2(self, t):
        return self.k * self.arg._d2(t)

    def _asymptotics(self):
        s0, b0, s1, b1 = self.arg.asymptotics
        return Asymptotics(self.k * s0, self.k * b0, self.k * s1, self.k * b1)

    def _kinks(self):
        return self.arg.kinks if self.k != 0 else []

    def _window(self):
        return self.arg.window if self.k != 0 else 0.0

    def to_json(self):
        return {"type": "scale", "k": self.k, "arg": self.arg.to_json()}


class Sum(GreenCurve):
    def __init__(self, args: Sequence[GreenCurve]):
        flat = []
        for a in args:
            flat.extend(a.args if isinstance(a, Sum) else [a])
        if not flat:
            flat = [Affine(0.0, 0.0)]
        self.args = tuple(flat)
        hints = [a.convex_hint for a in self.args]
        self.convex_hint = True if all(h is True for h in hints) else None

    def _value(self, t):
        return sum(a._value(t) for a in self.args)

    def _d1(self, t, side):
        return sum(a._d1(t, side) for a in self.args)

    def _d2(self, t):
        return sum(a._d2(t) for a in self.args)

    def _asymptotics(self):
        parts = np.array([a.asymptotics for a in self.args])
        return Asymptotics(*map(float, parts.sum(axis=0)))

    def _kinks(self):
        return np.concatenate([a.kinks for a in self.args] + [np.empty(0)])

    def _window(self):
        return max(a.window for a in self.args)

    def to_json(self):
        return {"type": "sum", "args": [a.to_json() for a in self.args]}


class _Extremum(GreenCurve):
    _sign = 1.0  # +1 for max, -1 for min
    _name = ""

    def __init__(self, args: Sequence[GreenCurve]):
        if not args:
            raise ValueError(f"{self._name} of no curves")
        self.args = tuple(args)

    def _stack(self, t):
        return np.stack([a._value(t) for a in self.args])

    def _value(self, t):
        v = self._stack(t)
        return v.max(axis=0) if self._sign > 0 else v.min(axis=0)

    def _d1(self, t, side):
        v = self._sign * self._stack(t)
        top = v.max(axis=0)
        tied = v >= top - _TIE * (1.0 + np.abs(top))
        d = np.stack([a._d1(t, side) for a in self.args])
        # max: right derivative is the largest tied one, left the smallest
        pick_large = (self._sign > 0) == (side > 0)
        if pick_large:
            return np.where(tied, d, -np.inf).max(axis=0)
        return np.where(tied, d, np.inf).min(axis=0)

    def _d2(self, t):
        v = self._sign * self._stack(t)
        idx = v.argmax(axis=0)
        d = np.stack([a._d2(t) for a in self.args])
        return np.take_along_axis(d, idx[None, :], axis=0)[0]

    def _asymptotics(self):
        lines = [a.asymptotics for a in self.args]
        sg = self._sign
        # +inf: the extremal slope wins, ties broken by intercept
        plus = max(lines, key=lambda L: (sg * L.s_plus, sg * L.beta_plus))
        minus = max(lines, key=lambda L: (-sg * L.s_minus, sg * L.beta_minus))
        return Asymptotics(minus.s_minus, minus.beta_minus, plus.s_plus, plus.beta_plus)

    @cached_property
    def _crossings(self):
        base_w = max(a.window for a in self.args)
        out = []
        ts = np.linspace(-base_w - 1.0, base_w + 1.0, 2049)
        ts = np.unique(np.concatenate([ts] + [a.kinks for a in self.args]))
        vals = [a._value(ts) for a in self.args]
        n = len(self.args)
        for i in range(n):
            for j in range(i + 1, n):
                diff = vals[i] - vals[j]
                sgn = np.sign(diff)
                idx = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
                fi, fj = self.args[i], self.args[j]
                for k in idx:
                    r = brentq(lambda s: float(fi(s) - fj(s)), ts[k], ts[k + 1], xtol=1e-15, rtol=1e-15)
                    out.append(r)
                out.extend(ts[sgn == 0].tolist())
                # crossings of the asymptotic lines beyond the sampled window
                Li, Lj = fi.asymptotics, fj.asymptotics
                for s_i, b_i, s_j, b_j, beyond in (
                    (Li.s_plus, Li.beta_plus, Lj.s_plus, Lj.beta_plus, lambda r: r > base_w + 1.0),
                    (Li.s_minus, Li.beta_minus, Lj.s_minus, Lj.beta_minus, lambda r: r < -base_w - 1.0),
                ):
                    if s_i != s_j:
                        r = -(b_i - b_j) / (s_i - s_j)
                        if beyond(r):
                            out.append(r)
        return np.array(out, dtype=float)

    def _kinks(self):
        return np.concatenate([a.kinks for a in self.args] + [self._crossings])

    def _window(self):
        w = max(a.window for a in self.args)
        c = self._crossings
        if c.size:
            w = max(w, float(np.max(np.abs(c))) + 1.0)
        return w

    def to_json(self):
        return {"type": self._name, "args": [a.to_json() for a in self.args]}


class Max(_Extremum):
    _sign = 1.0
    _name = "max"

    def __init__(self, args):
        super().__init__(args)
        self.convex_hint = True if all(a.convex_hint is True for a in self.args) else None


class Min(_Extremum):
    _sign = -1.0
    _name = "min"

    def __init__(self, args):
        super().__init__(args)
        self.convex_hint = True if all(isinstance(a, Affine) for a in self.args) and len(self.args) == 1 else None


class Grid(GreenCurve):
    """Piecewise-linear interpolant of samples with affine tails."""

    def __init__(self, ts, us, asym, tol: float = 1e-6):
        ts = np.asarray(ts, dtype=float)
        us = np.asarray(us, dtype=float)
        if ts.ndim != 1 or ts.shape != us.shape or ts.size < 2:
            raise ValueError("grid needs matching 1-d ts/us with at least two samples")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("grid samples must be strictly increasing in t")
        s0, b0, s1, b1 = (float(v) for v in asym)
        if abs(us[0] - (s0 * ts[0] + b0)) > tol or abs(us[-1] - (s1 * ts[-1] + b1)) > tol:
            raise ValueError("grid boundary samples contradict the declared asymptotics")
        self.ts, self.us = ts, us
        self._declared = Asymptotics(s0, b0, s1, b1)
        self._slopes = np.diff(us) / np.diff(ts)
        self.convex_hint = None

    def _value(self, t):
        ts, us = self.ts, self.us
        s0, _, s1, _ = self._declared
        out = np.interp(t, ts, us)
        lo, hi = t < ts[0], t > ts[-1]
        out[lo] = us[0] + s0 * (t[lo] - ts[0])
        out[hi] = us[-1] + s1 * (t[hi] - ts[-1])
        return out

    def _d1(self, t, side):
        s0, _, s1, _ = self._declared
        full = np.concatenate([[s0], self._slopes, [s1]])
        if side > 0:
            idx = np.searchsorted(self.ts, t, side="right")
        else:
            idx = np.searchsorted(self.ts, t, side="left")
        return full[idx]

    def _d2(self, t):
        return np.zeros_like(t)

    def _asymptotics(self):
        return self._declared

    def _kinks(self):
        return self.ts

    def _window(self):
        return float(max(abs(self.ts[0]), abs(self.ts[-1])))

    def to_json(self):
        return {"type": "grid", "ts": self.ts.tolist(), "us": self.us.tolist(), "asym": list(self._declared)}


class Splice(GreenCurve):
    """``left`` on t < tau and ``right`` on t >= tau (continuous at tau)."""

    def __init__(self, left: GreenCurve, right: GreenCurve, tau: float, convex: bool | None = None):
        self.left, self.right, self.tau = left, right, float(tau)
        self.convex_hint = convex

    def _value(self, t):
        return np.where(t < self.tau, self.left._value(t), self.right._value(t))

    def _d1(self, t, side):
        use_left = (t < self.tau) | ((t == self.tau) & (side < 0))
        return np.where(use_left, self.left._d1(t, side), self.right._d1(t, side))

    def _d2(self, t):
        return np.where(t < self.tau, self.left._d2(t), self.right._d2(t))

    def _asymptotics(self):
        L, R = self.left.asymptotics, self.right.asymptotics
        return Asymptotics(L.s_minus, L.beta_minus, R.s_plus, R.beta_plus)

    def _kinks(self):
        kl, kr = self.left.kinks, self.right.kinks
        return np.concatenate([kl[kl < self.tau], [self.tau], kr[kr > self.tau]])

    def _window(self):
        return max(self.left.window, self.right.window, abs(self.tau) + 1.0)

    def to_json(self):
        return {"type": "splice", "left": self.left.to_json(), "right": self.right.to_json(), "tau": self.tau}


class Envelope(GreenCurve):
    """Greatest convex minorant: ``base`` off the bridges, affine on them.

    Each bridge is ``(a, b, m, c)`` meaning q(t) = m t + c on [a, b]; ``a`` may
    be -inf and ``b`` may be +inf for rays.
    """

    convex_hint = True

    def __init__(self, base: GreenCurve, bridges):
        self.base = base
        br = sorted([list(map(float, b)) for b in bridges])
        # endpoints found numerically may miss a corner of the base by an ulp or
        # two; a sliver of base slope between them would break monotonicity
        k = base.kinks
        for b in br:
            for j in (0, 1):
                x = b[j]
                if np.isfinite(x) and k.size:
                    i = int(np.argmin(np.abs(k - x)))
                    if abs(k[i] - x) <= 1e-10 * (1.0 + abs(x)):
                        b[j] = float(k[i])
        for b1, b2 in zip(br[:-1], br[1:]):
            if abs(b2[0] - b1[1]) <= 1e-10 * (1.0 + abs(b1[1])):
                b2[0] = b1[1]
        self.bridges = tuple(tuple(b) for b in br)

    def _value(self, t):
        out = self.base._value(t)
        for a, b, m, c in self.bridges:
            mask = (t > a) & (t < b)
            out = np.where(mask, m * t + c, out)
        return out

    def _d1(self, t, side):
        out = self.base._d1(t, side)
        for a, b, m, c in self.bridges:
            if side > 0:
                mask = (t >= a) & (t < b)
            else:
                mask = (t > a) & (t <= b)
            out = np.where(mask, m, out)
        return out

    def _d2(self, t):
        out = self.base._d2(t)
        for a, b, _, _ in self.bridges:
            out = np.where((t > a) & (t < b), 0.0, out)
        return out

    def _asymptotics(self):
        s0, b0, s1, b1 = self.base.asymptotics
        for a, b, m, c in self.bridges:
            if a == -np.inf:
                b0 = c
            if b == np.inf:
                b1 = c
        return Asymptotics(s0, b0, s1, b1)

    def _kinks(self):
        k = self.base.kinks
        keep = np.ones(k.shape, dtype=bool)
        ends = []
        for a, b, _, _ in self.bridges:
            keep &= ~((k > a) & (k < b))
            ends.extend(x for x in (a, b) if np.isfinite(x))
        return np.concatenate([k[keep], ends])

    def to_json(self):
        def enc(x):
            return None if not np.isfinite(x) else x

        return {
            "type": "envelope",
            "base": self.base.to_json(),
            "bridges": [[enc(a), enc(b), m, c] for a, b, m, c in self.bridges],
        }

    def _window(self):
        w = self.base.window
        for a, b, _, _ in self.bridges:
            for x in (a, b):
                if np.isfinite(x):
                    w = max(w, abs(x) + 1.0)
        return w


# ---------------------------------------------------------------------------
# construction helpers


def t_plus() -> GreenCurve:
    return Max([Affine(0.0, 0.0), Affine(1.0, 0.0)])


def t_minus() -> GreenCurve:
    return Max([Affine(0.0, 0.0), Affine(-1.0, 0.0)])


def tent(center: float = 0.0, width: float = 1.0, height: float = 1.0) -> GreenCurve:
    """height * max(0, 1 - |t - center| / width)."""
    up = Affine(1.0 / width, 1.0 - center / width)
    down = Affine(-1.0 / width, 1.0 + center / width)
    return Scale(height, Max([Affine(0.0, 0.0), Min([up, down])]))


def constant(c: float) -> GreenCurve:
    return Affine(0.0, float(c))


def from_json(obj) -> GreenCurve:
    """Parse the JSON expression grammar of profiles."""
    if not isinstance(obj, dict) or "type" not in obj:
        raise ValueError(f"malformed green curve expression: {obj!r}")
    kind = obj["type"]
    if kind == "affine":
        return Affine(obj["slope"], obj["intercept"])
    if kind == "logexp":
        return LogExp(obj["a"], obj["b"])
    if kind in ("max", "min", "sum"):
        args = [from_json(a) for a in obj["args"]]
        return {"max": Max, "min": Min, "sum": Sum}[kind](args)
    if kind == "scale":
        return Scale(obj["k"], from_json(obj["arg"]))
    if kind == "envelope":
        bridges = []
        for a, b, m, c in obj["bridges"]:
            bridges.append((-np.inf if a is None else a, np.inf if b is None else b, m, c))
        return Envelope(from_json(obj["base"]), bridges)
    if kind == "splice":
        return Splice(from_json(obj["left"]), from_json(obj["right"]), obj["tau"])
    if kind == "grid":
        asym = obj["asym"]
        if len(asym) != 4:
            raise ValueError("grid asym must be [s_minus, beta_minus, s_plus, beta_plus]")
        return Grid(obj["ts"], obj["us"], asym)
    raise ValueError(f"unknown green curve type {kind!r}")


# ---------------------------------------------------------------------------
# sampling


def support_window(u: GreenCurve, margin: float = 2.0) -> float:
    return u.window + margin


def sample_points(u: GreenCurve, n: int = 4001, window: float | None = None) -> np.ndarray:
    L = support_window(u) if window is None else float(window)
    ts = np.linspace(-L, L, n)
    k = u.kinks
    k = k[(k > -L) & (k < L)]
    return np.unique(np.concatenate([ts, k]))


def sample_grid(u: GreenCurve, n: int = 4001) -> Grid:
    ts = sample_points(u, n)
    us = u(ts)
    s0, _, s1, _ = u.asymptotics
    b0 = float(us[0] - s0 * ts[0])
    b1 = float(us[-1] - s1 * ts[-1])
    return Grid(ts, us, (s0, b0, s1, b1))


def asymptotics(u: GreenCurve, check: bool = True) -> Asymptotics:
    """Asymptotic slopes and intercepts; for grids the tails are re-checked."""
    A = u.asymptotics
    if check and isinstance(u, Grid):
        t0, t1 = u.ts[0], u.ts[-1]
        if abs(u.us[0] - (A.s_minus * t0 + A.beta_minus)) > 1e-6 or abs(u.us[-1] - (A.s_plus * t1 + A.beta_plus)) > 1e-6:
            raise ValueError("grid tail contradicts declared asymptotics")
    return A


def curve_min(u: GreenCurve, n: int = 4001) -> float:
    """inf of u over R (-inf if u is unbounded below)."""
    s0, b0, s1, b1 = u.asymptotics
    if s1 < 0 or s0 > 0:
        return -np.inf
    ts = sample_points(u, n)
    us = u(ts)
    i = int(np.argmin(us))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, ts.size - 1)]
    t_best, v_best = _zoom_argmin(u, lo, hi, 0.0)
    best = min(float(us[i]), v_best)
    # flat tails approach their intercept from either side
    if s1 == 0:
        best = min(best, b1)
    if s0 == 0:
        best = min(best, b0)
    return best


def _zoom_argmin(u: GreenCurve, lo: float, hi: float, m: float, levels: int = 5, pts: int = 41):
    """Grid-zoom minimization of u(t) - m t on [lo, hi]."""
    best_t, best_v = lo, float(u(lo) - m * lo)
    # kinks are the usual minimizers and a grid only brackets them
    k = u.kinks
    k = k[(k >= lo) & (k <= hi)] if k.size else k
    if k.size:
        vk = u(k) - m * k
        i = int(np.argmin(vk))
        if vk[i] <= best_v:
            best_t, best_v = float(k[i]), float(vk[i])
    for _ in range(levels):
        ts = np.linspace(lo, hi, pts)
        vs = u(ts) - m * ts
        i = int(np.argmin(vs))
        if vs[i] <= best_v:
            best_t, best_v = float(ts[i]), float(vs[i])
        step = (hi - lo) / (pts - 1)
        lo, hi = max(lo, ts[i] - step), min(hi, ts[i] + step)
        if hi <= lo:
            break
    return best_t, best_v


def _tangent_point(u: GreenCurve, t0: float, m: float, radius: float) -> float:
    """Refine a point where m lies in the subdifferential of u near t0."""
    lo, hi = t0 - radius, t0 + radius
    if not (u.d1(lo, 1) < m <= u.d1(hi, 1)):
        return t0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if u.d1(mid, 1) < m:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * (1.0 + abs(mid)):
            break
    return hi


# ---------------------------------------------------------------------------
# convexity and the greatest convex minorant


def lower_hull(ts: np.ndarray, us: np.ndarray) -> list[int]:
    """Indices of the lower convex hull (monotone chain, collinear points dropped)."""
    hull: list[int] = []
    for i in range(ts.size):
        while len(hull) >= 2:
            j, k = hull[-2], hull[-1]
            cross = (ts[k] - ts[j]) * (us[i] - us[j]) - (us[k] - us[j]) * (ts[i] - ts[j])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return hull


def convex_envelope(u: GreenCurve, n: int = 4001, tol: float = 1e-9) -> GreenCurve:
    """Greatest convex function below ``u`` with the same asymptotic slopes.

    Detached regions (gap above ``tol``) become exact bitangent bridges whose
    slopes are solved to machine precision; tails dipping below their asymptote
    become rays.
    """
    if u.convex_hint is True:
        return u
    # profile trees are immutable, so the envelope is cached on the node
    cache = u.__dict__.setdefault("_envelopes", {})
    key = (n, tol)
    if key not in cache:
        cache[key] = _convex_envelope(u, n, tol)
    return cache[key]


def inherit_envelopes(old: GreenCurve, new: GreenCurve, lam: float) -> None:
    """Seed the envelope cache of ``new = old + lam`` from that of ``old``."""
    cache = old.__dict__.get("_envelopes")
    if not cache or new.convex_hint is True:
        return
    out = new.__dict__.setdefault("_envelopes", {})
    for key, q in cache.items():
        if q is old:
            out[key] = new
        elif isinstance(q, Envelope) and q.base is old:
            out[key] = Envelope(new, [(a, b, m, c + lam) for a, b, m, c in q.bridges])


def _convex_envelope(u: GreenCurve, n: int, tol: float) -> GreenCurve:
    s0, b0, s1, b1 = u.asymptotics
    if s0 > s1 + 1e-12:
        raise ValueError("profile has no convex minorant (asymptotic slopes decrease)")
    ts = sample_points(u, n)
    us = u(ts)
    bridges = []

    gl = us - s0 * ts
    iL = 0
    if gl.min() < b0 - tol:
        iL = int(np.nonzero(gl <= gl.min() + 1e-13)[0][0])
        a, va = _zoom_argmin(u, ts[max(iL - 1, 0)], ts[min(iL + 1, ts.size - 1)], s0)
        a = _tangent_point(u, a, s0, 1e-5)
        bridges.append((-np.inf, a, s0, float(u(a)) - s0 * a))
    gr = us - s1 * ts
    iR = ts.size - 1
    if gr.min() < b1 - tol:
        iR = int(np.nonzero(gr <= gr.min() + 1e-13)[0][-1])
        b, vb = _zoom_argmin(u, ts[max(iR - 1, 0)], ts[min(iR + 1, ts.size - 1)], s1)
        b = _tangent_point(u, b, s1, 1e-5)
        bridges.append((b, np.inf, s1, float(u(b)) - s1 * b))

    sub = np.arange(iL, iR + 1)
    hull = sub[lower_hull(ts[sub], us[sub])]
    last = ts.size - 1
    for i, j in zip(hull[:-1], hull[1:]):
        if j <= i + 1:
            continue
        chord = us[i] + (us[j] - us[i]) * (ts[i + 1:j] - ts[i]) / (ts[j] - ts[i])
        if np.max(us[i + 1:j] - chord) <= tol:
            continue
        La = (ts[max(i - 2, 0)], ts[min(i + 2, last)])
        Rb = (ts[max(j - 2, 0)], ts[min(j + 2, last)])
        bridges.append(_bitangent(u, La, Rb, (us[j] - us[i]) / (ts[j] - ts[i])))
    return Envelope(u, bridges)


def _bitangent(u: GreenCurve, La, Rb, m0: float):
    def h(m):
        return _zoom_argmin(u, *La, m)[1] - _zoom_argmin(u, *Rb, m)[1]

    lo, hi = m0, m0
    step = 1e-7 * (1.0 + abs(m0))
    hlo = hhi = h(m0)
    for _ in range(60):
        if hlo <= 0 <= hhi:
            break
        step *= 3.0
        if hlo > 0:
            lo = m0 - step
            hlo = h(lo)
        if hhi < 0:
            hi = m0 + step
            hhi = h(hi)
    m = m0 if lo == hi else brentq(h, lo, hi, xtol=1e-15, rtol=1e-15)
    a, va = _zoom_argmin(u, *La, m)
    b, vb = _zoom_argmin(u, *Rb, m)
    a = _tangent_point(u, a, m, 1e-5)
    b = _tangent_point(u, b, m, 1e-5)
    c = 0.5 * ((float(u(a)) - m * a) + (float(u(b)) - m * b))
    return (a, b, m, c)


def is_convex(u: GreenCurve, tol: float = 1e-9) -> bool:
    if u.convex_hint is not None:
        return u.convex_hint
    env = convex_envelope(u, tol=tol)
    return isinstance(env, Envelope) and not env.bridges or env is u


def envelope_gap(u: GreenCurve, q: GreenCurve | None = None) -> float:
    """sup (u - q) on the sampling grid."""
    q = convex_envelope(u) if q is None else q
    ts = sample_points(u)
    return float(np.max(u(ts) - q(ts)))


# ---------------------------------------------------------------------------
# Legendre transform


class Conjugate:
    """u*(x) = sup_t (x t - u(t)) on [s_minus, s_plus], via the envelope of u."""

    def __init__(self, u: GreenCurve, envelope: GreenCurve | None = None):
        self.u = u
        self.q = convex_envelope(u) if envelope is None else envelope
        A = self.q.asymptotics
        self.lo, self.hi = A.s_minus, A.s_plus
        self.L = self.q.window + 60.0

    @property
    def domain(self):
        return (self.lo, self.hi)

    def _bracket(self, x, rtol):
        # q' is nondecreasing, so a tabulated q' gives a tight starting bracket
        if not hasattr(self, "_tab"):
            ts = np.linspace(-self.L, self.L, 2049)
            self._tab = (ts, np.maximum.accumulate(self.q.d1(ts, 1)))
        ts, ds = self._tab
        i = np.searchsorted(ds, x, side="left")
        lo = ts[np.clip(i - 1, 0, ts.size - 1)]
        hi = ts[np.clip(i, 0, ts.size - 1)]
        # 64-ary search: one vectorized q' call per round
        frac = np.arange(1, 64) / 64.0
        for _ in range(20):
            if np.all(hi - lo <= rtol * (1.0 + np.abs(hi))):
                break
            mids = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
            right = self.q.d1(mids.ravel(), 1).reshape(mids.shape) >= x[:, None]
            j = np.where(right.any(axis=1), right.argmax(axis=1), frac.size)
            rows = np.arange(x.size)
            new_lo = np.where(j > 0, mids[rows, np.maximum(j - 1, 0)], lo)
            hi = np.where(j < frac.size, mids[rows, np.minimum(j, frac.size - 1)], hi)
            lo = new_lo
        return lo, hi

    def argmax_t(self, x):
        """Smallest t (clamped to the working window) with q'(t+) >= x."""
        return self._bracket(np.atleast_1d(_arr(x)), 4e-16)[1]

    def __call__(self, x):
        xa = _arr(x)
        x1 = np.atleast_1d(xa)
        eps = 1e-12 * (1.0 + abs(self.lo) + abs(self.hi))
        if np.any(x1 < self.lo - eps) or np.any(x1 > self.hi + eps):
            raise DomainError(f"conjugate evaluated outside [{self.lo}, {self.hi}]")
        x1 = np.clip(x1, self.lo, self.hi)
        # x t - q(t) is stationary at the maximizer, so a loose bracket is
        # enough off the kinks; kinks inside the bracket are tried exactly
        lo, hi = self._bracket(x1, 1e-9)
        out = np.maximum(x1 * lo - self.q(lo), x1 * hi - self.q(hi))
        k = self.q.kinks
        if k.size:
            inside = (k[None, :] >= lo[:, None]) & (k[None, :] <= hi[:, None])
            if inside.any():
                vk = x1[:, None] * k[None, :] - self.q(k)[None, :]
                out = np.maximum(out, np.where(inside, vk, -np.inf).max(axis=1))
        return out.reshape(xa.shape) if xa.shape else float(out[0])

    def integral(self, x_lo: float, x_hi: float, tol: float = 1e-11) -> float:
        """Integral of u* over [x_lo, x_hi], computed in slope coordinates.

        With x = q'(t) the smooth part becomes (t q' - q) q'' dt; every kink
        t_k of q contributes an exactly affine stretch x t_k - q(t_k).
        """
        if x_hi <= x_lo:
            return 0.0
        q = self.q
        t_lo, t_hi = (float(v) for v in self.argmax_t(np.array([x_lo, x_hi])))
        # include the whole kink that x_hi may sit inside
        t_hi = min(t_hi, self.L)
        k = q.kinks
        inside = k[(k > t_lo) & (k < t_hi)]
        bps = np.concatenate([[t_lo], inside, [t_hi]])

        def f(t):
            return (t * q.d1(t, 1) - q(t)) * q.d2(t)

        smooth, _ = integrate(f, bps, tol=tol)
        # kink atoms, clipped to [x_lo, x_hi]
        # kinks are located only to within a few ulps by the bisection
        slack = 1e-9 * (1.0 + np.abs(k))
        kk = k[(k >= t_lo - slack) & (k <= t_hi + slack)]
        atoms = 0.0
        if kk.size:
            left = np.maximum(q.d1(kk, -1), x_lo)
            right = np.minimum(q.d1(kk, 1), x_hi)
            ok = right > left
            kk, left, right = kk[ok], left[ok], right[ok]
            atoms = float(np.sum(kk * (right**2 - left**2) / 2.0 - q(kk) * (right - left)))
        return smooth + atoms


def legendre(u: GreenCurve) -> Conjugate:
    return Conjugate(u)


# ---------------------------------------------------------------------------
# regularity


def slope_total_variation(u: GreenCurve) -> float:
    ts = sample_points(u)
    if isinstance(u, Grid):
        s = u._slopes
        s0, _, s1, _ = u.asymptotics
        s = np.concatenate([[s0], s, [s1]])
        return float(np.sum(np.abs(np.diff(s))))
    d = u.d1(ts, 1)
    return float(np.sum(np.abs(np.diff(d))))


def has_finite_energy(u: GreenCurve, max_tv: float = 1e4) -> bool:
    """Bounded-variation slope check used for integrability.

    Closed-form trees are piecewise analytic, hence always pass; sampled curves
    are tested on the total variation of their finite-difference slopes.
    """
    if _closed_form(u):
        return True
    return slope_total_variation(u) <= max_tv


def _closed_form(u: GreenCurve) -> bool:
    if isinstance(u, Grid):
        return False
    if isinstance(u, (Affine, LogExp)):
        return True
    if isinstance(u, Scale):
        return _closed_form(u.arg)
    if isinstance(u, (Sum, Max, Min)):
        return all(_closed_form(a) for a in u.args)
    if isinstance(u, Splice):
        return _closed_form(u.left) and _closed_form(u.right)
    if isinstance(u, Envelope):
        return _closed_form(u.base)
    return False


def second_derivative_measure(q: GreenCurve):
    """(smooth density callable, kink locations, kink masses) of q''."""
    k = q.kinks
    return q.d2, k, q.jumps(k) if k.size else np.empty(0)


def contact_integral(u: GreenCurve, q: GreenCurve, tol: float = 1e-11) -> float:
    """Integral of (u - q) against the second-derivative measure of q."""
    L = max(support_window(u), support_window(q))
    k = q.kinks
    k = k[(k > -L) & (k < L)]
    smooth, _ = integrate(lambda t: (u(t) - q(t)) * q.d2(t), np.concatenate([[-L], k, [L]]), tol=tol)
    atoms = float(np.sum((u(k) - q(k)) * q.jumps(k))) if k.size else 0.0
    return smooth + atoms
