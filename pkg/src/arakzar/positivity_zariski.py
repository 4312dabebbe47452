"""Positivity predicates and Zariski decompositions of toric arithmetic divisors.

The nef test is the toric criterion: a convex profile with the right slopes
whose concave transform is nonnegative at both ends of the Okounkov interval.
The ends are exactly the heights of the two torus-fixed points (up to a factor
of two), and every other rational point has height at least max G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import green_curve as gc
from .green_curve import Affine, Splice
from .intersection import height, intersect
from .toric_model import PrincipalMonomial, ToricArithDivisor, linear_combine
from .volumes import OkounkovData, okounkov, vol, vol_chi

TOL = 1e-9
EQ_TOL = 1e-6
SPOT_POINTS = (0, "inf", 1, -1, 2, -2, Fraction(1, 2), Fraction(-1, 2))


class NotPseudoEffectiveError(ValueError):
    pass


class InconsistencyError(RuntimeError):
    """The toric nef criterion disagrees with a sampled height."""


class PropertyViolation(RuntimeError):
    pass


def is_integrable(D: ToricArithDivisor) -> bool:
    return gc.has_finite_energy(D.green)


def is_relatively_nef(D: ToricArithDivisor, tol: float = TOL) -> bool:
    return D.deg >= -tol and gc.is_convex(D.green, tol=tol)


def is_pseudo_effective(D: ToricArithDivisor, tol: float = TOL, ok: OkounkovData | None = None) -> bool:
    if D.deg < -tol:
        return False
    ok = okounkov(D, tol=tol) if ok is None else ok
    return ok.sup_G >= -tol


def is_big(D: ToricArithDivisor, tol: float = TOL, ok: OkounkovData | None = None) -> bool:
    if D.deg <= tol:
        return False
    ok = okounkov(D, tol=tol) if ok is None else ok
    return ok.sup_G > tol


def _end_values(D: ToricArithDivisor) -> tuple[float, float]:
    A = D.green.asymptotics
    C = D.fiber_log_sum
    return C + 0.5 * A.beta_minus, C + 0.5 * A.beta_plus


def is_nef(D: ToricArithDivisor, tol: float = TOL, guard: bool = True) -> bool:
    if not is_relatively_nef(D, tol=tol):
        return False
    nef = min(_end_values(D)) >= -tol
    if nef and guard:
        bad = [z for z in SPOT_POINTS if height(D, z) < -tol]
        if bad:
            raise InconsistencyError(f"nef by the toric criterion but negative height at {bad}")
    return nef


def relative_zariski(D: ToricArithDivisor, tol: float = TOL):
    """Greatest relatively nef minorant Q and the remainder N = D - Q = (0, u - q)."""
    if D.deg < -tol:
        raise ValueError(f"relative Zariski decomposition needs deg(D_K) >= 0, got {D.deg}")
    u = D.green
    q = gc.convex_envelope(u)
    Q = ToricArithDivisor(D.a0, D.a1, D.fibers, q)
    if q is u:
        return Q, ToricArithDivisor(0.0, 0.0, (), Affine(0.0, 0.0))
    return Q, ToricArithDivisor(0.0, 0.0, (), gc.Sum([u, gc.Scale(-1.0, q)]))


# ---------------------------------------------------------------------------
# Zariski decomposition


@dataclass(frozen=True)
class ZariskiReport:
    P: ToricArithDivisor
    N_pieces: tuple
    orthogonality: tuple
    gram: np.ndarray
    vol_P: float
    vol_D: float
    flags: dict = field(default_factory=dict)
    theta: tuple | None = None

    @property
    def N(self) -> ToricArithDivisor:
        if not self.N_pieces:
            return ToricArithDivisor(0.0, 0.0, (), Affine(0.0, 0.0))
        return linear_combine([(1.0, Ni) for _, Ni in self.N_pieces])

    @property
    def N_self(self) -> float:
        return float(np.sum(self.gram)) if self.gram.size else 0.0

    def horizontal(self):
        return [(lab, Ni) for lab, Ni in self.N_pieces if lab in ("H0", "H1")]

    def to_json(self) -> dict:
        return {
            "P": self.P.to_json(),
            "theta": list(self.theta) if self.theta is not None else None,
            "N_pieces": [{"label": lab, "divisor": Ni.to_json()} for lab, Ni in self.N_pieces],
            "orthogonality": list(self.orthogonality),
            "gram": self.gram.tolist(),
            "vol_P": self.vol_P,
            "vol_D": self.vol_D,
            "flags": dict(self.flags),
        }


def _zero_green():
    return Affine(0.0, 0.0)


def _positive_part(D: ToricArithDivisor, ok: OkounkovData):
    """P = (x+ H0 - x- H1 + fibers, p) and the horizontal pieces of N."""
    q = ok.conjugate.q
    x_lo, x_hi = ok.theta
    t_lo, t_hi = ok.theta_t
    lo, hi = ok.delta
    left_cut = x_lo > lo + 1e-15 and math.isfinite(t_lo) and abs(t_lo) < ok.conjugate.L
    right_cut = x_hi < hi - 1e-15 and math.isfinite(t_hi) and abs(t_hi) < ok.conjugate.L
    p = q
    pieces = []
    if right_cut:
        line = Affine(x_hi, float(q(t_hi)) - x_hi * t_hi)
        p = Splice(p, line, t_hi, convex=True)
        n0 = Splice(_zero_green(), gc.Sum([q, gc.Scale(-1.0, line)]), t_hi, convex=True)
        pieces.append(("H0", ToricArithDivisor(D.a0 - x_hi, 0.0, (), n0)))
    if left_cut:
        line = Affine(x_lo, float(q(t_lo)) - x_lo * t_lo)
        p = Splice(line, p, t_lo, convex=True)
        n1 = Splice(gc.Sum([q, gc.Scale(-1.0, line)]), _zero_green(), t_lo, convex=True)
        pieces.insert(0, ("H1", ToricArithDivisor(0.0, D.a1 + x_lo, (), n1)))
    a0 = x_hi if right_cut else D.a0
    a1 = -x_lo if left_cut else D.a1
    return ToricArithDivisor(a0, a1, D.fibers, p), pieces


def zariski(D: ToricArithDivisor, tol: float = TOL, eq_tol: float = EQ_TOL, ok: OkounkovData | None = None) -> ZariskiReport:
    """Greatest nef minorant P of D and the labeled pieces of N = D - P."""
    ok = okounkov(D, tol=tol) if ok is None else ok
    if not is_pseudo_effective(D, tol=tol, ok=ok):
        raise NotPseudoEffectiveError("no nef minorant: divisor is not pseudo-effective")
    if is_nef(D, tol=tol):
        P, pieces = D, []
    else:
        P, pieces = _positive_part(D, ok)
        if not gc.is_convex(D.green, tol=tol):
            f = gc.Sum([D.green, gc.Scale(-1.0, ok.conjugate.q)])
            pieces.append(("function", ToricArithDivisor(0.0, 0.0, (), f)))
    orth = tuple(intersect(P, Ni) for _, Ni in pieces)
    k = len(pieces)
    gram = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            gram[i, j] = gram[j, i] = intersect(pieces[i][1], pieces[j][1])
    vol_D = vol(D, ok)
    vol_P = vol(P) if pieces else vol_D
    report = ZariskiReport(P, tuple(pieces), orth, gram, vol_P, vol_D, {}, ok.theta)
    deg2 = intersect(D, D)
    flags = _theorem_flags(D, deg2, vol_D, vol_chi(D, ok), not pieces, True, eq_tol)
    flags.update(_decomposition_flags(report, not pieces, eq_tol, tol))
    flags.update(
        nef_D=not pieces,
        pseudo_effective_D=True,
        big_D=is_big(D, ok=ok),
        relatively_nef_D=is_relatively_nef(D),
    )
    object.__setattr__(report, "flags", flags)
    return report


def gram_negative_part(D: ToricArithDivisor, report: ZariskiReport | None = None, eq_tol: float = EQ_TOL):
    """Gram matrix of the horizontal negative pieces, checked negative definite."""
    report = zariski(D) if report is None else report
    hz = report.horizontal()
    labels = [lab for lab, _ in hz]
    if not hz:
        return labels, np.zeros((0, 0))
    idx = [i for i, (lab, _) in enumerate(report.N_pieces) if lab in ("H0", "H1")]
    G = report.gram[np.ix_(idx, idx)]
    for i in idx:
        if abs(report.orthogonality[i]) > eq_tol:
            raise PropertyViolation(f"deg(P . N_{report.N_pieces[i][0]}) = {report.orthogonality[i]}")
    ev = np.linalg.eigvalsh(0.5 * (G + G.T))
    if np.max(ev) >= -1e-9:
        raise PropertyViolation(f"negative part Gram matrix not negative definite: {ev}")
    return labels, G


# ---------------------------------------------------------------------------
# small sections and the verification harness


def autissier_section(D: ToricArithDivisor, eps: float, n_max: int = 200):
    """Find n and q z^k in H^0(nD) with norm <= exp(-n deg(D^2) / (2 deg D_K) + n eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if D.deg <= 0:
        raise ValueError("needs deg(D_K) > 0")
    if not is_integrable(D):
        raise ValueError("divisor is not integrable")
    rate = intersect(D, D) / (2.0 * D.deg)
    conj = gc.Conjugate(D.green)
    for n in range(1, n_max + 1):
        k_lo = math.ceil(-n * D.a1 - 1e-9)
        k_hi = math.floor(n * D.a0 + 1e-9)
        if k_hi < k_lo:
            continue
        ks = np.arange(k_lo, k_hi + 1)
        xs = np.clip(ks / n, conj.lo, conj.hi)
        lognorm = 0.5 * n * np.atleast_1d(conj(xs))
        q = Fraction(1)
        for p, c in D.fibers:
            q *= Fraction(p) ** (-math.floor(n * c + 1e-9))
        lognorm = lognorm + math.log(q)
        i = int(np.argmin(lognorm))
        bound = -n * rate + n * eps
        if lognorm[i] <= bound:
            return n, PrincipalMonomial(int(ks[i]), q), math.exp(lognorm[i])
    raise RuntimeError(f"no small section found up to n = {n_max}; increase n_max")


@dataclass(frozen=True)
class Verification:
    deg_self: float
    vol: float
    vol_chi: float
    nef: bool
    relatively_nef: bool
    pseudo_effective: bool
    big: bool
    flags: dict

    @property
    def ok(self) -> bool:
        return all(self.flags.values())


def _decomposition_flags(report, nef, eq_tol, tol):
    n2 = report.N_self
    return {
        "negative_part_orthogonal": all(abs(x) <= eq_tol for x in report.orthogonality) and n2 <= eq_tol,
        "consistent_negative_part": (n2 < -tol) == (not nef),
        "vol_P_eq_vol_D": abs(report.vol_P - report.vol_D) <= eq_tol,
    }


def _theorem_flags(D, deg2, v, vc, nef, psef, eq_tol):
    rel = is_relatively_nef(D)
    f = {
        "consistent_chi_hodge": deg2 <= vc + eq_tol and ((abs(deg2 - vc) <= eq_tol) == rel),
        "consistent_nef_volume": nef == (psef and abs(deg2 - v) <= eq_tol),
    }
    f["consistent_big_nef"] = nef == (abs(deg2 - v) <= eq_tol) if D.deg > eq_tol else True
    return f


def verify_main_theorem(D: ToricArithDivisor, tol: float = EQ_TOL) -> Verification:
    if not is_integrable(D):
        raise ValueError("divisor is not integrable")
    ok = okounkov(D)
    deg2 = intersect(D, D)
    v, vc = vol(D, ok), vol_chi(D, ok)
    nef = is_nef(D)
    psef = is_pseudo_effective(D, ok=ok)
    flags = _theorem_flags(D, deg2, v, vc, nef, psef, tol)
    if psef:
        rep = zariski(D, eq_tol=tol, ok=ok)
        flags.update(_decomposition_flags(rep, nef, tol, TOL))
    return Verification(deg2, v, vc, nef, is_relatively_nef(D), psef, is_big(D, ok=ok), flags)
