"""Small single-input single-output LTI machinery.

State-space models, rational transfer functions in ascending-coefficient
form, poles, and responses along the shifted imaginary axis ``s = jw - lam``.
All objects are immutable after construction.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from .errors import (DegenerateShiftError, RootFindingError,
                     SingularEvaluationError, ValidationError)

__all__ = [
    "StateSpaceModel", "RationalTransferFunction", "PoleSet",
    "tf_from_state_space", "poles", "polyroots", "shifted_response",
    "real_part_numerator", "real_part_denominator", "is_hurwitz",
    "MAX_STATE_DIM",
]

MAX_STATE_DIM = 16
HURWITZ_TOL = 1e-9
AXIS_TOL = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Linear network ``z' = A z + B u``, ``y = C z`` with scalar u and y.

    ``components`` records the SI component values the model was built
    from, for provenance in reports; it plays no role in the dynamics.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float).reshape(-1, 1)
        C = np.asarray(self.C, dtype=float).reshape(1, -1)
        n = A.shape[0]
        problems = []
        if A.ndim != 2 or A.shape != (n, n):
            problems.append(f"A must be square, got shape {A.shape}")
        if B.shape != (n, 1):
            problems.append(f"B must have {n} rows, got {B.shape[0]}")
        if C.shape != (1, n):
            problems.append(f"C must have {n} columns, got {C.shape[1]}")
        if n > MAX_STATE_DIM:
            problems.append(f"state dimension {n} exceeds {MAX_STATE_DIM}")
        if not problems and not all(np.all(np.isfinite(M)) for M in (A, B, C)):
            problems.append("matrix entries must be finite")
        if problems:
            raise ValidationError("; ".join(problems), problems)
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "components", dict(self.components))

    @property
    def state_dim(self):
        return self.A.shape[0]

    def with_output(self, C):
        return StateSpaceModel(self.A, self.B, C, self.components)

    def __repr__(self):
        return f"StateSpaceModel(n={self.state_dim}, components={self.components})"


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=float))
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return np.zeros(1)
    return c[:nz[-1] + 1]


@dataclass(frozen=True, eq=False)
class RationalTransferFunction:
    """``num(s) / den(s)`` with real coefficients in ascending degree.

    The denominator is normalized to be monic.
    """

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        den = _trim(self.den)
        if den.size == 1 and den[0] == 0.0:
            raise ValidationError("denominator is identically zero")
        num = _trim(self.num)
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValidationError("coefficients must be finite")
        lead = den[-1]
        object.__setattr__(self, "num", _frozen(num / lead))
        object.__setattr__(self, "den", _frozen(den / lead))

    @property
    def order(self):
        return self.den.size - 1

    @property
    def is_zero(self):
        return self.num.size == 1 and self.num[0] == 0.0

    @property
    def strictly_proper(self):
        return self.is_zero or self.num.size < self.den.size

    def __call__(self, s):
        return P.polyval(s, self.num) / P.polyval(s, self.den)

    def shift(self, lam):
        """Return ``G(s - lam)``."""
        x = Polynomial([-lam, 1.0])
        return RationalTransferFunction(Polynomial(self.num)(x).coef,
                                        Polynomial(self.den)(x).coef)

    def __neg__(self):
        return RationalTransferFunction(-self.num, self.den)

    def __add__(self, other):
        num = P.polyadd(P.polymul(self.num, other.den),
                        P.polymul(other.num, self.den))
        return RationalTransferFunction(num, P.polymul(self.den, other.den))

    def __sub__(self, other):
        return self + (-other)

    def __repr__(self):
        return f"RationalTransferFunction(num={self.num.tolist()}, den={self.den.tolist()})"


@dataclass(frozen=True, eq=False)
class PoleSet:
    poles: np.ndarray
    beta: np.ndarray

    def __len__(self):
        return self.poles.size

    def __iter__(self):
        return iter(self.poles)


def tf_from_state_space(ss):
    """Exact ``C (sI - A)^-1 B`` by the Faddeev-LeVerrier resolvent recursion.

    ``adj(sI - A) = sum_k M_k s^(n-k)`` with ``M_1 = I`` and
    ``M_k = A M_(k-1) + c_(n-k+1) I``, while the characteristic
    coefficients follow from ``c_(n-k) = -tr(A M_k) / k``.
    """
    A, B, C = ss.A, ss.B, ss.C
    n = ss.state_dim
    den = np.zeros(n + 1)
    num = np.zeros(n)
    den[n] = 1.0
    M = np.zeros((n, n))
    eye = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + den[n - k + 1] * eye
        num[n - k] = (C @ M @ B).item()
        den[n - k] = -np.trace(A @ M) / k
    return RationalTransferFunction(num, den)


def polyroots(coef, polish=True):
    """All complex roots of an ascending-coefficient real polynomial.

    Companion-matrix eigenvalues followed by one guarded Newton step per
    root; the step is kept only when it lowers the residual. Returned
    roots are closed under conjugation.
    """
    c = _trim(coef)
    deg = c.size - 1
    if deg < 1:
        return np.zeros(0, dtype=complex)
    monic = c / c[-1]
    comp = np.zeros((deg, deg))
    comp[1:, :-1] = np.eye(deg - 1)
    comp[:, -1] = -monic[:-1]
    try:
        r = np.linalg.eigvals(comp).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise RootFindingError(f"eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(r)):
        raise RootFindingError("root finder returned non-finite values")
    if polish:
        dmonic = P.polyder(monic)
        with np.errstate(all="ignore"):
            f = P.polyval(r, monic)
            df = P.polyval(r, dmonic)
            step = np.where(df != 0, f / df, 0)
            cand = r - step
            better = np.abs(P.polyval(cand, monic)) < np.abs(f)
        r = np.where(better & np.isfinite(cand), cand, r)
    return _conjugate_closed(r)


def _conjugate_closed(r):
    scale = np.maximum(1.0, np.abs(r))
    is_real = np.abs(r.imag) <= 1e-12 * scale
    upper = r[~is_real & (r.imag > 0)]
    lower = list(r[~is_real & (r.imag < 0)])
    if upper.size == len(lower):
        out = [complex(x.real) for x in r[is_real]]
        for z in upper:
            j = int(np.argmin([abs(w - z.conjugate()) for w in lower]))
            z = 0.5 * (z + lower.pop(j).conjugate())
            out.extend([z, z.conjugate()])
        r = np.array(out, dtype=complex)
    return r[np.lexsort((r.imag, r.real))]


def poles(tf):
    """Poles of ``tf`` with the ascending list of ``|Re p|``."""
    if tf.order < 1:
        raise ValidationError("transfer function has no poles (deg den < 1)")
    p = polyroots(tf.den)
    return PoleSet(p, np.sort(np.abs(p.real)))


def shifted_response(tf, lam, omega):
    """Evaluate ``G(j*omega - lam)``; ``omega = inf`` gives the limit at infinity."""
    if math.isinf(omega):
        if tf.strictly_proper:
            return 0j
        return complex(tf.num[-1]) if tf.num.size == tf.den.size else complex("nan")
    s = complex(-lam, omega)
    d = P.polyval(s, tf.den)
    scale = P.polyval(abs(s), np.abs(tf.den))
    if abs(d) <= 1e-14 * scale:
        raise SingularEvaluationError(f"s = {s} is a pole of G")
    return complex(P.polyval(s, tf.num) / d)


def _check_axis(tf, lam):
    for p in poles(tf) if tf.order >= 1 else ():
        if abs(p.real + lam) <= AXIS_TOL * max(1.0, abs(lam)):
            raise DegenerateShiftError(
                f"pole {p} lies on the shifted imaginary axis Re(s) = {-lam}")


def _even_part_in_u(phi):
    # phi(s) even part evaluated at s = j*sqrt(u): sum phi_2k (-1)^k u^k
    even = phi[0::2].copy()
    even[1::2] *= -1.0
    return _trim(even)


def real_part_numerator(tf, lam):
    """Polynomial ``N(u)`` with ``Re G(jw - lam) = N(w^2) / D(w^2)``.

    ``D(w^2) = |den(jw - lam)|^2`` is positive for every real ``w`` once no
    pole sits on the shifted axis, so the sign of ``N`` on ``u >= 0`` decides
    shifted positive-realness exactly.
    """
    _check_axis(tf, lam)
    g = tf.shift(lam)
    mirror = g.den * (-1.0) ** np.arange(g.den.size)
    return Polynomial(_even_part_in_u(P.polymul(g.num, mirror)))


def real_part_denominator(tf, lam):
    g = tf.shift(lam)
    mirror = g.den * (-1.0) ** np.arange(g.den.size)
    return Polynomial(_even_part_in_u(P.polymul(g.den, mirror)))


def is_hurwitz(ss, tol=HURWITZ_TOL):
    return bool(np.all(np.linalg.eigvals(ss.A).real < -tol))
