"""Vertical Zariski decomposition on one degenerate fiber.

Degrees are stored in units of log p, so the intersection matrix of a standard
fiber type is integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

EIG_TOL = 1e-9
SLACK_TOL = 1e-12


@dataclass(frozen=True)
class FiberConfiguration:
    M: np.ndarray
    mult: np.ndarray
    logp: float = math.log(2.0)

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        mult = np.atleast_1d(np.asarray(self.mult, dtype=float))
        if M.shape != (mult.size, mult.size):
            raise ValueError(f"M has shape {M.shape}, expected {(mult.size, mult.size)}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "mult", mult)

    @property
    def r(self) -> int:
        return self.mult.size

    @classmethod
    def from_json(cls, obj):
        p = int(obj.get("p", 2))
        if p < 2:
            raise ValueError("p must be a prime >= 2")
        return cls(np.array(obj["M"], dtype=float), np.array(obj["mult"], dtype=float), math.log(p))


@dataclass(frozen=True)
class VerticalDivisorData:
    v: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))
        object.__setattr__(self, "e", np.atleast_1d(np.asarray(self.e, dtype=float)))
        if self.v.shape != self.e.shape:
            raise ValueError("v and e must have the same length")


def diagnose(cfg: FiberConfiguration) -> list[str]:
    """Reasons why cfg violates Zariski's lemma (empty when valid)."""
    M, m = cfg.M, cfg.mult
    out = []
    if not np.allclose(M, M.T, atol=1e-12):
        out.append("M is not symmetric")
    if np.any(m <= 0) or np.any(m != np.round(m)):
        out.append("multiplicities must be positive integers")
    off = M - np.diag(np.diag(M))
    if np.any(off < -1e-12):
        out.append("negative off-diagonal intersection")
    ev, vecs = np.linalg.eigh(0.5 * (M + M.T))
    if ev[-1] > EIG_TOL:
        out.append(f"M has a positive eigenvalue {ev[-1]:.3g}")
    if np.sum(np.abs(ev) <= EIG_TOL) != 1:
        out.append("kernel of M is not one-dimensional")
    if np.max(np.abs(M @ m)) > EIG_TOL * max(1.0, np.max(np.abs(M)) * np.max(m)):
        out.append("M . mult != 0")
    else:
        k = vecs[:, -1]
        k = k / np.linalg.norm(k)
        mu = m / np.linalg.norm(m)
        if min(np.linalg.norm(k - mu), np.linalg.norm(k + mu)) > 1e-6:
            out.append("kernel vector not parallel to mult")
    return out


def validate(cfg: FiberConfiguration) -> bool:
    return not diagnose(cfg)


class PiNefResult(NamedTuple):
    q: np.ndarray
    n: np.ndarray
    slack: np.ndarray
    iterations: int


def greatest_pi_nef(cfg: FiberConfiguration, data: VerticalDivisorData) -> PiNefResult:
    """Largest q <= v with e + M q >= 0, by monotone active-set growth."""
    problems = diagnose(cfg)
    if problems:
        raise ValueError("invalid fiber configuration: " + "; ".join(problems))
    M, v, e = cfg.M, data.v, data.e
    if v.size != cfg.r:
        raise ValueError("divisor data length does not match the configuration")
    if float(e @ cfg.mult) < -SLACK_TOL:
        raise ValueError("total degree on the fiber is negative")
    r = cfg.r
    rhs = e + M @ v
    n = np.zeros(r)
    active = np.zeros(r, dtype=bool)
    it = 0
    while True:
        s = rhs - M @ n
        neg = s < -SLACK_TOL
        if not np.any(neg & ~active):
            break
        it += 1
        grow = active | neg
        ties = grow | (np.abs(s) <= SLACK_TOL)
        active = ties if not ties.all() else grow
        if active.all():
            raise RuntimeError("active set covers the whole fiber; Zariski's lemma violated")
        if it > r:
            raise RuntimeError("active-set iteration did not terminate")
        idx = np.flatnonzero(active)
        n = np.zeros(r)
        n[idx] = np.linalg.solve(M[np.ix_(idx, idx)], rhs[idx])
        n = np.maximum(n, 0.0)
    s = rhs - M @ n
    return PiNefResult(v - n, n, s, it)


def nef_perp(cfg: FiberConfiguration, subset, targets) -> np.ndarray:
    """Effective vertical E with (M E)_i = -targets_i on subset, (M E)_j >= 0 elsewhere."""
    problems = diagnose(cfg)
    if problems:
        raise ValueError("invalid fiber configuration: " + "; ".join(problems))
    idx = np.array(sorted(subset), dtype=int)
    E = np.zeros(cfg.r)
    if idx.size == 0:
        return E
    if idx.size >= cfg.r:
        raise ValueError("subset contains the whole fiber")
    t = np.asarray(targets, dtype=float)
    if t.size != idx.size or np.any(t < 0):
        raise ValueError("targets must be nonnegative, one per subset index")
    E[idx] = -np.linalg.solve(cfg.M[np.ix_(idx, idx)], t)
    return np.maximum(E, 0.0)


def random_configuration(rng: np.random.Generator, r: int, max_mult: int = 3) -> FiberConfiguration:
    """Connected weighted dual graph with multiplicities, balanced so M mult = 0."""
    m = rng.integers(1, max_mult + 1, size=r).astype(float)
    A = np.zeros((r, r))
    perm = rng.permutation(r)
    for i in range(1, r):
        j = perm[rng.integers(0, i)]
        A[perm[i], j] = A[j, perm[i]] = float(rng.integers(1, 3))
    for i in range(r):
        for j in range(i + 1, r):
            if A[i, j] == 0 and rng.random() < 0.3:
                A[i, j] = A[j, i] = float(rng.integers(1, 3))
    M = A.copy()
    M[np.diag_indices(r)] = -(A @ m) / m
    p = int(rng.choice([2, 3, 5, 7]))
    return FiberConfiguration(M, m, math.log(p))


I2 = FiberConfiguration(np.array([[-2.0, 2.0], [2.0, -2.0]]), np.array([1.0, 1.0]))
CYCLE3 = FiberConfiguration(
    np.array([[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, -2.0]]), np.array([1.0, 1.0, 1.0])
)
