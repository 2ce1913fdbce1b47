"""p-passivity and p-dominance certificates.

Linear blocks are certified exactly from the shifted transfer function
``G(s - lam)``: the degree is the number of poles to the right of ``-lam``
and positive-realness is decided from the sign of the real-part numerator
polynomial. Nonlinear blocks are only checked pointwise, by evaluating the
matrix inequality at given Jacobians.
"""

import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (AmbiguousRateError, CertificationError,
                     DegenerateShiftError, NoCommonRateError, NotPassiveError,
                     ValidationError)
from .lti import (StateSpaceModel, polyroots,
                  poles, real_part_denominator, real_part_numerator,
                  shifted_response, tf_from_state_space)

__all__ = [
    "RateInterval", "EMPTY", "FrequencyEvidence", "InertiaWitness", "Composed",
    "PassivityCertificate", "AttractorClass", "AttractorPrediction",
    "count_dominant_poles", "min_real_part", "positive_real_check",
    "certify_p_passive", "rate_intervals", "degree_certificates",
    "lyapunov_solve", "inertia", "lyapunov_inertia", "kyp_storage",
    "verify_passivity_lmi", "compose_feedback", "revert_output",
    "static_monotone_certificate", "predict_attractor",
    "certificate_to_json", "certificate_from_json",
]

RATE_TOL = 1e-9
PR_RTOL = 1e-10
ENDPOINT_TOL = 1e-10
INERTIA_TOL = 1e-9
GRID = np.logspace(-3, 6, 2048)


@dataclass(frozen=True)
class RateInterval:
    """Interval of admissible rates ``lam``; ``hi`` may be ``math.inf``.

    A single closed point (``lo == hi``) is allowed for certificates issued
    at one rate only. Empty intersections are reported as :data:`EMPTY`.
    """

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = True

    def __post_init__(self):
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))
        if self.lo < 0 or math.isnan(self.lo) or math.isnan(self.hi):
            raise ValidationError(f"invalid rate bounds ({self.lo}, {self.hi})")
        point = self.lo == self.hi and not (self.lo_open or self.hi_open)
        if not (self.lo < self.hi or point):
            raise ValidationError(
                f"empty rate interval ({self.lo}, {self.hi}); use EMPTY")
        if math.isinf(self.hi):
            object.__setattr__(self, "hi_open", True)

    is_empty = False

    def __contains__(self, lam):
        above = lam > self.lo if self.lo_open else lam >= self.lo
        below = lam < self.hi if self.hi_open else lam <= self.hi
        return above and below

    @property
    def midpoint(self):
        if math.isinf(self.hi):
            return self.lo + max(1.0, self.lo)
        return 0.5 * (self.lo + self.hi)

    def intersect(self, other):
        if other.is_empty:
            return EMPTY
        if self.lo > other.lo or (self.lo == other.lo and self.lo_open):
            lo, lo_open = self.lo, self.lo_open
        else:
            lo, lo_open = other.lo, other.lo_open
        if self.hi < other.hi or (self.hi == other.hi and self.hi_open):
            hi, hi_open = self.hi, self.hi_open
        else:
            hi, hi_open = other.hi, other.hi_open
        if lo < hi or (lo == hi and not (lo_open or hi_open)):
            return RateInterval(lo, hi, lo_open, hi_open)
        return EMPTY

    def __str__(self):
        left = "(" if self.lo_open else "["
        right = ")" if self.hi_open else "]"
        return f"{left}{self.lo:.6g}, {self.hi:.6g}{right}"


class _EmptyRateInterval:
    is_empty = True
    lo = hi = math.nan

    def __contains__(self, lam):
        return False

    def intersect(self, other):
        return self

    def __repr__(self):
        return "EMPTY"

    __str__ = __repr__


EMPTY = _EmptyRateInterval()


@dataclass(frozen=True)
class FrequencyEvidence:
    min_real_part: float
    shifted_pole_count: int
    rate: float


@dataclass(frozen=True, eq=False)
class InertiaWitness:
    P: np.ndarray
    epsilon: float = 0.0


@dataclass(frozen=True)
class Composed:
    parts: tuple
    sign: int = -1


@dataclass(frozen=True)
class PassivityCertificate:
    degree: int
    rates: RateInterval
    strict: bool
    witness: object

    def __post_init__(self):
        if self.degree < 0:
            raise ValidationError("degree must be nonnegative")
        w = self.witness
        if isinstance(w, InertiaWitness):
            neg, zero, _ = inertia(w.P)
            if neg != self.degree or zero != 0:
                raise ValidationError(
                    f"witness inertia {inertia(w.P)} does not match degree {self.degree}")
            if self.strict and not w.epsilon > 0:
                raise ValidationError("strict inertia witness needs epsilon > 0")
        elif isinstance(w, FrequencyEvidence):
            if w.shifted_pole_count != self.degree or w.min_real_part < 0:
                raise ValidationError("frequency evidence inconsistent with degree")


class AttractorClass(enum.Enum):
    UNIQUE_FIXED_POINT = "UniqueFixedPoint"
    SOME_FIXED_POINT = "SomeFixedPoint"
    SIMPLE_ATTRACTOR = "SimpleAttractor"
    NO_PREDICTION = "NoPrediction"


@dataclass(frozen=True)
class AttractorPrediction:
    kind: AttractorClass
    strict: bool
    bounded: bool
    degree: int


# -- frequency-domain test ---------------------------------------------------

def count_dominant_poles(tf, lam):
    """Number of poles with ``Re p > -lam`` (poles of ``G(s - lam)`` in C+)."""
    p = poles(tf).poles
    if np.any(np.abs(p.real + lam) <= RATE_TOL * max(1.0, abs(lam))):
        raise AmbiguousRateError(f"rate {lam} coincides with a pole real part")
    return int(np.sum(p.real > -lam))


def _critical_values(tf, lam):
    """Candidate ``u = w^2`` values, ``Re G`` there, and the sign verdict.

    The verdict accepts ``N(u) >= -PR_RTOL * sum_k |N_k| u^k`` at every
    finite candidate: a backward-error test, so that tiny negative dips far
    from the frequencies where ``|Re G|`` is large still count.
    """
    N = real_part_numerator(tf, lam)
    D = real_part_denominator(tf, lam)
    cands = [0.0]
    crit = (N.deriv() * D - N * D.deriv()).coef
    if np.any(crit != 0):
        for u in polyroots(crit):
            if abs(u.imag) <= 1e-7 * max(1.0, abs(u)) and u.real > 0:
                cands.append(u.real)
    us = np.array(cands)
    Nu = N(us)
    ok = bool(np.all(Nu >= -PR_RTOL * Polynomial(np.abs(N.coef))(us)))
    vals = list(Nu / D(us))
    # limit as omega -> infinity
    cands.append(math.inf)
    if tf.strictly_proper:
        vals.append(0.0)
    else:
        vals.append(tf.num[-1])
        ok = ok and tf.num[-1] >= 0
    return np.array(cands), np.array(vals, dtype=float), ok


def min_real_part(tf, lam, return_omega=False):
    """Infimum of ``Re G(jw - lam)`` over ``w`` in R and the point at infinity.

    Candidates are ``w = 0``, the positive real critical points of
    ``N(u)/D(u)`` and the limit ``w -> inf``.
    """
    u, vals, _ = _critical_values(tf, lam)
    k = int(np.argmin(vals))
    if return_omega:
        return float(vals[k]), math.sqrt(u[k])
    return float(vals[k])


@dataclass(frozen=True)
class PositiveRealReport:
    exact: bool
    min_real_part: float
    grid_min: float

    @property
    def consistent(self):
        """False when the grid finds a negative value the exact test missed."""
        return not (self.exact and self.grid_min < -1e-9 * max(1.0, abs(self.min_real_part)))


def positive_real_check(tf, lam):
    """Exact shifted positive-realness plus a logarithmic grid cross-check.

    The exact answer comes from the critical-point analysis; the grid
    minimum over 2048 frequencies in [1e-3, 1e6] rad/s is reported for
    comparison only (a grid can miss narrow dips, never invent them).
    """
    _, vals, ok = _critical_values(tf, lam)
    grid = min(shifted_response(tf, lam, w).real for w in GRID)
    grid = min(grid, shifted_response(tf, lam, 0.0).real)
    return PositiveRealReport(ok, float(np.min(vals)), grid)


def _is_pr(tf, lam):
    return _critical_values(tf, lam)[2]


class _PRTest:
    """Shifted positive-realness as a vectorized predicate of the rate.

    Same critical-point analysis as :func:`min_real_part`, on raw
    coefficient arrays, batched over many rates and without root
    polishing; meant for rate scans away from pole real parts.
    """

    def __init__(self, tf):
        self.num = np.asarray(tf.num, dtype=float)
        self.den = np.asarray(tf.den, dtype=float)
        self.tail = 0.0 if tf.strictly_proper else float(tf.num[-1])  # limit at w = inf
        m = max(self.num.size, self.den.size)
        k = np.arange(m)
        self.binom = np.array([[math.comb(int(b), int(a)) for b in k] for a in k], dtype=float)
        self.expo = np.maximum(k[None, :] - k[:, None], 0)
        self.mask = k[None, :] >= k[:, None]

    def _shift(self, c, lams):
        n = c.size
        T = self.binom[:n, :n] * (-lams[:, None, None]) ** self.expo[:n, :n]
        T = np.where(self.mask[:n, :n], T, 0.0)
        return T @ c

    @staticmethod
    def _conv(a, b):
        out = np.zeros((a.shape[0], a.shape[1] + b.shape[1] - 1))
        for i in range(a.shape[1]):
            out[:, i:i + b.shape[1]] += a[:, i:i + 1] * b
        return out

    @staticmethod
    def _even_u(phi):
        even = phi[:, 0::2].copy()
        even[:, 1::2] *= -1.0
        return even

    @staticmethod
    def _polyval(c, u):
        # c: (m, d) ascending, u: (m, r)
        acc = np.zeros(u.shape, dtype=u.dtype)
        for k in range(c.shape[1] - 1, -1, -1):
            acc = acc * u + c[:, k:k + 1]
        return acc

    def many(self, lams):
        lams = np.atleast_1d(np.asarray(lams, dtype=float))
        num = self._shift(self.num, lams)
        den = self._shift(self.den, lams)
        mirror = den * (-1.0) ** np.arange(den.shape[1])
        N = self._even_u(self._conv(num, mirror))
        D = self._even_u(self._conv(den, mirror))
        absN = np.abs(N)
        ok = N[:, 0] >= -PR_RTOL * absN[:, 0]
        if self.tail < 0:
            ok[:] = False
        if N.shape[1] > 1 or D.shape[1] > 1:
            dN = N[:, 1:] * np.arange(1, N.shape[1]) if N.shape[1] > 1 else np.zeros((lams.size, 1))
            dD = D[:, 1:] * np.arange(1, D.shape[1]) if D.shape[1] > 1 else np.zeros((lams.size, 1))
            t1, t2 = self._conv(dN, D), self._conv(N, dD)
            size = max(t1.shape[1], t2.shape[1])
            crit = np.zeros((lams.size, size))
            crit[:, :t1.shape[1]] += t1
            crit[:, :t2.shape[1]] -= t2
            # coefficients span many decades, so only exact zeros are dropped
            live = crit != 0.0
            deg = np.where(live.any(axis=0))[0]
            d = int(deg[-1]) if deg.size else 0
            if d > 0:
                lead_ok = live[:, d]
                rows = np.flatnonzero(lead_ok)
                C = np.zeros((rows.size, d, d))
                C[:, np.arange(1, d), np.arange(d - 1)] = 1.0
                C[:, :, -1] = -crit[rows, :d] / crit[rows, d:d + 1]
                r = np.linalg.eigvals(C)
                good = (np.abs(r.imag) <= 1e-7 * np.maximum(1.0, np.abs(r))) & (r.real > 0)
                u = np.where(good, r.real, 0.0)
                sign_ok = self._polyval(N[rows], u) >= -PR_RTOL * self._polyval(absN[rows], u)
                ok[rows] &= np.all(sign_ok, axis=1)
                for i in np.flatnonzero(~lead_ok):
                    # degree drops at this rate; fall back to the scalar route
                    k = np.flatnonzero(live[i, :d + 1])
                    if k.size and k[-1] > 0:
                        rr = np.roots(crit[i, :k[-1] + 1][::-1])
                        rr = rr.real[(np.abs(rr.imag) <= 1e-7 * np.maximum(1.0, np.abs(rr)))
                                     & (rr.real > 0)]
                        if rr.size:
                            ok[i] &= bool(np.all(np.polyval(N[i, ::-1], rr)
                                                 >= -PR_RTOL * np.polyval(absN[i, ::-1], rr)))
        return ok

    def __call__(self, lam):
        return bool(self.many([lam])[0])


def certify_p_passive(tf, lam):
    """Certificate of p-passivity of a linear block at rate ``lam``.

    The degree comes from pole counting alone. The returned certificate
    carries the maximal rate interval of that degree containing ``lam``.
    Raises :class:`NotPassiveError` when the real-part test fails.
    """
    if lam < 0:
        raise ValidationError("rate must be nonnegative")
    p = count_dominant_poles(tf, lam)
    _, vals, ok = _critical_values(tf, lam)
    m = float(np.min(vals))
    if not ok:
        raise NotPassiveError(
            f"Re G(jw - {lam:g}) reaches {m:.6g} < 0", min_real_part=m)
    rates = next((iv for iv in rate_intervals(tf, p) if lam in iv),
                 RateInterval(lam, lam, False, False))
    return PassivityCertificate(p, rates, True,
                                FrequencyEvidence(max(m, 0.0), p, float(lam)))


def _breakpoints(tf):
    p = poles(tf).poles
    b = np.sort(-p.real[p.real <= 0])
    out = []
    for x in b:
        if not out or x - out[-1] > RATE_TOL * max(1.0, x):
            out.append(float(x))
    return out


def _bisect(f, a, b, fa):
    # f(a) == fa, f(b) == not fa; 16-section search with batched evaluation
    while b - a > ENDPOINT_TOL * max(1.0, abs(a)):
        pts = np.linspace(a, b, 17)[1:-1]
        if pts[0] <= a or pts[-1] >= b:
            break
        flags = f.many(pts)
        flip = np.flatnonzero(flags != fa)
        if flip.size:
            k = int(flip[0])
            a, b = (pts[k - 1] if k else a), pts[k]
        else:
            a = pts[-1]
    return a, b


def _scan_cell(tf, lo, hi, lo_closed_at_zero):
    """PR sub-intervals of the open cell (lo, hi) where the pole count is fixed."""
    span_hi = hi
    if math.isinf(hi):
        p = poles(tf).poles
        z = polyroots(tf.num) if not tf.is_zero else np.zeros(0)
        size = max([1.0, *np.abs(p), *np.abs(z)])
        span_hi = lo + 1e3 * size
    width = span_hi - lo
    delta = min(1e-7 * max(1.0, width), 0.25 * width)
    if math.isinf(hi):
        inner = lo + np.logspace(np.log10(delta), np.log10(width), 96)
    else:
        inner = np.linspace(lo + delta, hi - delta, 96)
    pts = list(inner)
    if lo_closed_at_zero:
        pts.insert(0, 0.0)
    f = _PRTest(tf)
    flags = f.many(pts).tolist()

    out = []
    start = None
    start_open = True
    for i, (x, ok) in enumerate(zip(pts, flags)):
        if ok and start is None:
            if i == 0:
                start, start_open = (0.0, False) if lo_closed_at_zero else (lo, True)
            else:
                _, right = _bisect(f, pts[i - 1], x, False)
                start, start_open = right, True
        elif not ok and start is not None:
            left, _ = _bisect(f, pts[i - 1], x, True)
            out.append(RateInterval(start, left, start_open, True))
            start = None
    if start is not None:
        out.append(RateInterval(start, hi, start_open, True))
    return out


def rate_intervals(tf, p):
    """Maximal rate intervals on which ``tf`` is strictly p-passive.

    Pole real parts split ``[0, inf)`` into cells of constant pole count;
    inside each cell with count ``p`` the positive-real set is found by
    sampling and its boundaries are refined by bisection.
    """
    if p > tf.order:
        raise ValidationError(f"degree {p} exceeds system order {tf.order}")
    edges = [b for b in _breakpoints(tf) if b > 0]
    starts_at_pole = any(abs(b) <= RATE_TOL for b in _breakpoints(tf))
    cells = list(zip([0.0] + edges, edges + [math.inf]))
    out = []
    for i, (lo, hi) in enumerate(cells):
        probe = lo + 0.5 * (hi - lo) if not math.isinf(hi) else lo + 1.0
        if count_dominant_poles(tf, probe) != p:
            continue
        out.extend(_scan_cell(tf, lo, hi, i == 0 and not starts_at_pole))
    return out


def degree_certificates(tf, p):
    """One certificate per maximal rate interval of degree ``p``."""
    certs = []
    for iv in rate_intervals(tf, p):
        lam = iv.midpoint
        certs.append(PassivityCertificate(
            p, iv, True, FrequencyEvidence(max(min_real_part(tf, lam), 0.0), p, lam)))
    return certs


# -- state-space witnesses ---------------------------------------------------

def inertia(P, tol=INERTIA_TOL):
    """``(negative, zero, positive)`` eigenvalue counts of a symmetric matrix."""
    P = np.asarray(P, dtype=float)
    if P.size == 0:
        return (0, 0, 0)
    w = np.linalg.eigvalsh(0.5 * (P + P.T))
    thr = tol * max(np.max(np.abs(w)), 1e-300)
    return (int(np.sum(w < -thr)), int(np.sum(np.abs(w) <= thr)),
            int(np.sum(w > thr)))


def lyapunov_solve(A, Q):
    """Solve ``A^T P + P A = -Q`` for symmetric ``P``.

    Direct linear solve over the ``n(n+1)/2`` independent entries of P.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    mu = np.linalg.eigvals(A)
    gap = np.min(np.abs(mu[:, None] + mu[None, :]))
    if gap <= 1e-9 * max(1.0, np.max(np.abs(mu))):
        raise DegenerateShiftError(
            "Lyapunov operator is singular: two eigenvalues of the shifted "
            "matrix sum to zero")
    iu = np.triu_indices(n)
    m = iu[0].size
    L = np.empty((m, m))
    for k, (i, j) in enumerate(zip(*iu)):
        E = np.zeros((n, n))
        E[i, j] = E[j, i] = 1.0
        L[:, k] = (A.T @ E + E @ A)[iu]
    x = np.linalg.solve(L, -(0.5 * (Q + Q.T))[iu])
    Pm = np.zeros((n, n))
    Pm[iu] = x
    return Pm + np.triu(Pm, 1).T


def _matrix(ss_or_A):
    return ss_or_A.A if isinstance(ss_or_A, StateSpaceModel) else np.atleast_2d(
        np.asarray(ss_or_A, dtype=float))


def lyapunov_inertia(ss, lam):
    """Solve ``(A + lam I)^T P + P (A + lam I) = -I``; return ``P`` and its inertia.

    The negative eigenvalue count of P equals the number of eigenvalues of
    ``A + lam I`` in the open right half-plane.
    """
    A = _matrix(ss)
    n = A.shape[0]
    Pm = lyapunov_solve(A + lam * np.eye(n), np.eye(n))
    return Pm, inertia(Pm)


def _adjugate_columns(A, B):
    # columns k: M_k B with adj(sI - A) = sum_k M_k s^(n-k)
    n = A.shape[0]
    den = np.zeros(n + 1)
    den[n] = 1.0
    M = np.zeros((n, n))
    cols = np.zeros((n, n))
    for k in range(1, n + 1):
        M = A @ M + den[n - k + 1] * np.eye(n)
        cols[:, n - k] = (M @ B).ravel()
        den[n - k] = -np.trace(A @ M) / k
    return cols


def kyp_storage(ss, lam, rtol=1e-8):
    """Storage matrix ``P`` with ``P B = C^T`` and ``(A+lam I)^T P + P(A+lam I) <= 0``.

    Built from a spectral factor ``w(s)`` of the even polynomial whose value
    on the axis is twice the real-part numerator: ``L (sI - A_lam)^-1 B =
    w(s)/den(s)`` fixes ``L``, and P solves the Lyapunov equation with
    right-hand side ``L^T L``. Requires a controllable realization that is
    positive real at ``lam``. Returns ``(P, L)``.
    """
    n = ss.state_dim
    Al = ss.A + lam * np.eye(n)
    tf = tf_from_state_space(ss)
    N = real_part_numerator(tf, lam).coef
    if N.size == 1 and N[0] == 0:
        w = np.zeros(1)
    else:
        if N[-1] <= 0:
            raise NotPassiveError("real part is negative at high frequency")
        u = polyroots(N) if N.size > 1 else np.zeros(0)
        roots = -np.sqrt(-u.astype(complex))
        w = np.real_if_close(np.poly(roots)[::-1] * math.sqrt(2.0 * N[-1]), tol=1e6)
        if np.iscomplexobj(w):
            raise CertificationError(
                "spectral factorization failed (positive-real boundary)")
    cols = _adjugate_columns(Al, ss.B)
    wpad = np.zeros(n)
    wpad[:w.size] = w
    try:
        L = np.linalg.solve(cols.T, wpad)
    except np.linalg.LinAlgError as exc:
        raise CertificationError("realization is not controllable") from exc
    Pm = lyapunov_solve(Al, np.outer(L, L))
    Pm = 0.5 * (Pm + Pm.T)
    err = np.linalg.norm(Pm @ ss.B - ss.C.T)
    if err > rtol * max(1.0, np.linalg.norm(Pm) * np.linalg.norm(ss.B)):
        raise CertificationError(f"KYP equality P B = C^T violated by {err:.3g}")
    return Pm, L


def verify_passivity_lmi(P, lam, epsilon, J, B=None, C=None):
    """Pointwise check of the p-passivity (or p-dominance) matrix inequality.

    With input and output maps the inequality holds for all increments iff
    ``P B = C^T`` and ``J^T P + P J + 2 lam P + eps I`` is negative
    semidefinite; without them only the latter is checked.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    J = np.atleast_2d(np.asarray(J, dtype=float))
    n = P.shape[0]
    if J.shape != (n, n):
        raise ValidationError(f"J has shape {J.shape}, expected {(n, n)}")
    if (B is None) != (C is None):
        raise ValidationError("B and C must be given together")
    if B is not None:
        B = np.asarray(B, dtype=float).reshape(n, -1)
        C = np.asarray(C, dtype=float).reshape(-1, n)
        gap = np.linalg.norm(P @ B - C.T)
        if gap > 1e-8 * max(np.linalg.norm(P) * np.linalg.norm(B), 1e-300):
            return False
    JP = J.T @ P
    M = JP + JP.T + 2.0 * lam * P + epsilon * np.eye(n)
    scale = 2.0 * np.linalg.norm(JP) + 2.0 * abs(lam) * np.linalg.norm(P) + epsilon
    return bool(np.max(np.linalg.eigvalsh(0.5 * (M + M.T))) <= 1e-9 * scale)


# -- composition and prediction ----------------------------------------------

def compose_feedback(c1, c2):
    """Certificate for the negative feedback interconnection of two blocks."""
    rates = c1.rates.intersect(c2.rates)
    if rates.is_empty:
        raise NoCommonRateError(
            f"no common rate between {c1.rates} and {c2.rates}")
    return PassivityCertificate(c1.degree + c2.degree, rates,
                                c1.strict and c2.strict, Composed((c1, c2), -1))


def revert_output(tf):
    """Transfer function to the reverted output ``-y``."""
    return -tf


def static_monotone_certificate(derivative, samples):
    """0-passivity of a static map from its derivative at sample points.

    A memoryless block has no state, so every rate is admissible.
    """
    d = np.array([derivative(x) for x in samples])
    if np.any(d < 0):
        raise NotPassiveError("static map is not monotone", float(np.min(d)))
    return PassivityCertificate(
        0, RateInterval(0.0, math.inf), True,
        FrequencyEvidence(float(np.min(d)), 0, 0.0))


def predict_attractor(p, strict, bounded):
    kinds = {0: AttractorClass.UNIQUE_FIXED_POINT,
             1: AttractorClass.SOME_FIXED_POINT,
             2: AttractorClass.SIMPLE_ATTRACTOR}
    kind = kinds.get(p) if (strict and bounded) else None
    return AttractorPrediction(kind or AttractorClass.NO_PREDICTION,
                               strict, bounded, p)


# -- serialization -----------------------------------------------------------

def _matrix_json(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return {"rows": M.shape[0], "cols": M.shape[1], "data": M.ravel().tolist()}


def _matrix_from_json(d):
    return np.array(d["data"], dtype=float).reshape(d["rows"], d["cols"])


def _witness_json(w):
    if isinstance(w, FrequencyEvidence):
        return "frequency", {"min_real_part": w.min_real_part,
                             "shifted_pole_count": w.shifted_pole_count,
                             "rate": w.rate}
    if isinstance(w, InertiaWitness):
        return "inertia", {"P": _matrix_json(w.P), "epsilon": w.epsilon}
    if isinstance(w, Composed):
        return "composed", {"sign": w.sign,
                            "parts": [certificate_to_dict(c) for c in w.parts]}
    raise TypeError(f"unknown witness {w!r}")


def certificate_to_dict(cert):
    kind, data = _witness_json(cert.witness)
    return {
        "degree": cert.degree,
        "rate_lo": cert.rates.lo,
        "rate_hi": None if math.isinf(cert.rates.hi) else cert.rates.hi,
        "rate_lo_open": cert.rates.lo_open,
        "rate_hi_open": cert.rates.hi_open,
        "strict": cert.strict,
        "witness_kind": kind,
        "witness_data": data,
    }


def certificate_from_dict(d):
    hi = math.inf if d["rate_hi"] is None else float(d["rate_hi"])
    rates = RateInterval(float(d["rate_lo"]), hi, bool(d.get("rate_lo_open", False)),
                         bool(d.get("rate_hi_open", True)))
    kind, data = d["witness_kind"], d["witness_data"]
    if kind == "frequency":
        w = FrequencyEvidence(float(data["min_real_part"]),
                              int(data["shifted_pole_count"]), float(data["rate"]))
    elif kind == "inertia":
        w = InertiaWitness(_matrix_from_json(data["P"]), float(data["epsilon"]))
    elif kind == "composed":
        w = Composed(tuple(certificate_from_dict(c) for c in data["parts"]),
                     int(data["sign"]))
    else:
        raise ValidationError(f"unknown witness kind {kind!r}")
    return PassivityCertificate(int(d["degree"]), rates, bool(d["strict"]), w)


def certificate_to_json(cert, **kw):
    return json.dumps(certificate_to_dict(cert), **kw)


def certificate_from_json(text):
    return certificate_from_dict(json.loads(text))
