"""Op-amp circuits: nonlinearities, network builders and closed-loop analysis.

The op-amp is the first-order macromodel

    x' = -x/(R0 C0) - phi(x)/C0 + (alpha/C0) V_E,    V_0 = x,

closed around one or more linear networks ``z_i' = A_i z_i + B_i V_0`` with
``V_E = sum_i sign_i C_i z_i + V_r`` over the networks whose switch is closed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .certify import (compose_feedback, degree_certificates, lyapunov_solve,
                      static_monotone_certificate)
from .errors import (AssumptionViolatedError, HypothesisViolatedError,
                     NoCommonRateError, ValidationError)
from .lti import (RationalTransferFunction, StateSpaceModel, tf_from_state_space)

__all__ = [
    "Sinh", "OddPower", "Atanh", "nonlinearity_from_dict", "OpAmpParams",
    "FeedbackPath", "Switches", "ClosedLoopCircuit", "build_first_order_rc",
    "build_rc_ladder3", "build_bistable", "build_ladder_oscillator",
    "build_mixed_feedback", "closed_loop_vector_field", "closed_loop_jacobian",
    "loop_transfer_function", "opamp_transfer_function", "opamp_certificate",
    "closed_loop_certificates", "stiffening_radius", "BoundednessCertificate",
    "boundedness_certificate", "Equilibrium", "equilibria", "bistability_check",
    "circuit_from_dict", "circuit_to_dict", "TOPOLOGY_COMPONENTS",
]


# -- nonlinearities ----------------------------------------------------------

@dataclass(frozen=True)
class Sinh:
    """``phi(x) = eta * sinh(beta * x)``."""

    eta: float
    beta: float

    kind = "sinh"
    code = 0

    def __post_init__(self):
        _require_positive(eta=self.eta, beta=self.beta)

    def __call__(self, x):
        return self.eta * np.sinh(self.beta * x)

    def derivative(self, x):
        return self.eta * self.beta * np.cosh(self.beta * x)

    @property
    def kernel_params(self):
        return (self.eta, self.beta)

    @property
    def domain(self):
        return math.inf

    def to_dict(self):
        return {"kind": self.kind, "params": {"eta": self.eta, "beta": self.beta}}


@dataclass(frozen=True)
class OddPower:
    """``phi(x) = (x / scale) ** exponent`` for an odd positive exponent."""

    exponent: int
    scale: float

    kind = "odd_power"
    code = 1

    def __post_init__(self):
        if int(self.exponent) != self.exponent or self.exponent < 1 or self.exponent % 2 == 0:
            raise ValidationError(f"exponent must be an odd positive integer, got {self.exponent}")
        object.__setattr__(self, "exponent", int(self.exponent))
        _require_positive(scale=self.scale)

    def __call__(self, x):
        return (x / self.scale) ** self.exponent

    def derivative(self, x):
        m = self.exponent
        return m / self.scale * (x / self.scale) ** (m - 1)

    @property
    def kernel_params(self):
        return (float(self.exponent), self.scale)

    @property
    def domain(self):
        return math.inf

    def to_dict(self):
        return {"kind": self.kind,
                "params": {"exponent": self.exponent, "scale": self.scale}}


@dataclass(frozen=True)
class Atanh:
    """``phi(x) = gain * atanh(x / half_width)`` on ``|x| < half_width``."""

    gain: float
    half_width: float

    kind = "atanh"
    code = 2

    def __post_init__(self):
        _require_positive(gain=self.gain, half_width=self.half_width)

    def __call__(self, x):
        return self.gain * np.arctanh(x / self.half_width)

    def derivative(self, x):
        w = self.half_width
        return self.gain / (w * (1.0 - (x / w) ** 2))

    @property
    def kernel_params(self):
        return (self.gain, self.half_width)

    @property
    def domain(self):
        return self.half_width

    def to_dict(self):
        return {"kind": self.kind,
                "params": {"gain": self.gain, "half_width": self.half_width}}


_PHI_KINDS = {"sinh": (Sinh, ("eta", "beta")),
              "odd_power": (OddPower, ("exponent", "scale")),
              "atanh": (Atanh, ("gain", "half_width"))}


def nonlinearity_from_dict(d):
    problems = []
    if not isinstance(d, dict):
        raise ValidationError("phi must be an object with 'kind' and 'params'")
    extra = set(d) - {"kind", "params"}
    if extra:
        problems.append(f"unknown phi fields: {sorted(extra)}")
    kind = d.get("kind")
    if kind not in _PHI_KINDS:
        problems.append(f"unknown phi kind {kind!r}; expected one of {sorted(_PHI_KINDS)}")
        raise ValidationError("; ".join(problems), problems)
    cls, names = _PHI_KINDS[kind]
    params = d.get("params", {})
    extra = set(params) - set(names)
    missing = set(names) - set(params)
    if extra:
        problems.append(f"unknown {kind} params: {sorted(extra)}")
    if missing:
        problems.append(f"missing {kind} params: {sorted(missing)}")
    if problems:
        raise ValidationError("; ".join(problems), problems)
    return cls(**{k: params[k] for k in names})


def _require_positive(**values):
    bad = [f"{k} must be > 0 (got {v})" for k, v in values.items()
           if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0)]
    if bad:
        raise ValidationError("; ".join(bad), bad)


# -- circuit data ------------------------------------------------------------

@dataclass(frozen=True)
class OpAmpParams:
    R0: float
    C0: float
    alpha: float
    phi: object

    def __post_init__(self):
        _require_positive(R0=self.R0, C0=self.C0)
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValidationError(f"alpha must be >= 0 (got {self.alpha})")

    @property
    def pole(self):
        """``1/(R0 C0)``, the op-amp bandwidth in 1/s."""
        return 1.0 / (self.R0 * self.C0)


@dataclass(frozen=True)
class FeedbackPath:
    network: StateSpaceModel
    sign: int
    switch: str = None  # None: always closed

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValidationError(f"feedback sign must be +1 or -1, got {self.sign}")


@dataclass(frozen=True)
class Switches:
    Sa: bool = True
    Sb: bool = True

    def closed(self, name):
        return name is None or bool(getattr(self, name))

    def as_tuple(self):
        return (int(self.Sa), int(self.Sb))


@dataclass(frozen=True, eq=False)
class ClosedLoopCircuit:
    opamp: OpAmpParams
    paths: tuple
    Vr: float = 0.0
    switches: Switches = Switches()
    topology: str = "custom"
    components: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if not self.paths:
            raise ValidationError("a closed loop needs at least one network")
        A = np.zeros((self.network_dim, self.network_dim))
        B = np.zeros(self.network_dim)
        for sl, path in zip(self.slices, self.paths):
            A[sl, sl] = path.network.A
            B[sl] = path.network.B.ravel()
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "_A", A)
        object.__setattr__(self, "_B", B)

    @property
    def slices(self):
        out, k = [], 0
        for path in self.paths:
            n = path.network.state_dim
            out.append(slice(k, k + n))
            k += n
        return out

    @property
    def network_dim(self):
        return sum(p.network.state_dim for p in self.paths)

    @property
    def state_dim(self):
        return 1 + self.network_dim

    @property
    def network_A(self):
        return self._A

    @property
    def network_B(self):
        return self._B

    def feedback_row(self, switches=None):
        """Row ``c`` with ``V_E = c z + V_r`` for the given switch state."""
        sw = switches or self.switches
        c = np.zeros(self.network_dim)
        for sl, path in zip(self.slices, self.paths):
            if sw.closed(path.switch):
                c[sl] = path.sign * path.network.C.ravel()
        return c

    def active_paths(self, switches=None):
        sw = switches or self.switches
        return [p for p in self.paths if sw.closed(p.switch)]

    def with_switches(self, switches):
        return ClosedLoopCircuit(self.opamp, self.paths, self.Vr, switches,
                                 self.topology, self.components)

    def with_Vr(self, Vr):
        return ClosedLoopCircuit(self.opamp, self.paths, Vr, self.switches,
                                 self.topology, self.components)


# -- builders ----------------------------------------------------------------

def build_first_order_rc(R1, Ra, C1):
    """RC network with ``G(s) = b/(s + a)``, ``a = (R1+Ra)/(R1 Ra C1)``, ``b = 1/(Ra C1)``."""
    _require_positive(R1=R1, Ra=Ra, C1=C1)
    a = (R1 + Ra) / (R1 * Ra * C1)
    b = 1.0 / (Ra * C1)
    return StateSpaceModel([[-a]], [[b]], [[1.0]],
                           {"R1": R1, "Ra": Ra, "C1": C1})


def build_rc_ladder3(R1, C1):
    """Three-section RC ladder; input at the first node, output at the last."""
    _require_positive(R1=R1, C1=C1)
    k = 1.0 / (R1 * C1)
    A = k * np.array([[-2.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -1.0]])
    return StateSpaceModel(A, [[k], [0.0], [0.0]], [[0.0, 0.0, 1.0]],
                           {"R1": R1, "C1": C1})


def build_bistable(R1, Ra, C1, opamp, Vr=0.0):
    """Op-amp in positive feedback with the first-order RC network."""
    net = build_first_order_rc(R1, Ra, C1)
    return ClosedLoopCircuit(opamp, (FeedbackPath(net, +1),), Vr,
                             topology="bistable",
                             components=dict(net.components, **_opamp_components(opamp)))


def build_ladder_oscillator(R1, C1, opamp, Vr=0.0):
    """Op-amp in negative feedback with the three-section RC ladder."""
    net = build_rc_ladder3(R1, C1)
    return ClosedLoopCircuit(opamp, (FeedbackPath(net, -1),), Vr,
                             topology="ladder_oscillator",
                             components=dict(net.components, **_opamp_components(opamp)))


def build_mixed_feedback(R1, R2, Ra, Rb, C1, C2, opamp, Sa=True, Sb=True, Vr=0.0):
    """Mixed feedback: upper RC copy in positive feedback behind ``Sa``,
    lower copy in negative feedback behind ``Sb``."""
    upper = build_first_order_rc(R1, Ra, C1)
    lower = build_first_order_rc(R2, Rb, C2)
    comps = {"R1": R1, "R2": R2, "Ra": Ra, "Rb": Rb, "C1": C1, "C2": C2,
             **_opamp_components(opamp)}
    return ClosedLoopCircuit(
        opamp, (FeedbackPath(upper, +1, "Sa"), FeedbackPath(lower, -1, "Sb")),
        Vr, Switches(bool(Sa), bool(Sb)), "mixed_feedback", comps)


def mixed_feedback_coefficients(R1, R2, Ra, Rb, C1, C2):
    """``(a1, a2, b1, b2)`` with ``a_i = 1/(R_{a,b} C_i)`` and ``b_i = a_i + 1/(R_i C_i)``."""
    a1 = 1.0 / (Ra * C1)
    a2 = 1.0 / (Rb * C2)
    return a1, a2, a1 + 1.0 / (R1 * C1), a2 + 1.0 / (R2 * C2)


def _opamp_components(opamp):
    return {"R0": opamp.R0, "C0": opamp.C0, "alpha": opamp.alpha}


# -- dynamics ----------------------------------------------------------------

def closed_loop_vector_field(cl, state, switches=None):
    s = np.asarray(state, dtype=float)
    op = cl.opamp
    x, z = s[0], s[1:]
    VE = cl.feedback_row(switches) @ z + cl.Vr
    out = np.empty_like(s)
    out[0] = -x * op.pole - op.phi(x) / op.C0 + op.alpha / op.C0 * VE
    out[1:] = cl.network_A @ z + cl.network_B * x
    return out


def closed_loop_jacobian(cl, state, switches=None):
    s = np.asarray(state, dtype=float)
    op = cl.opamp
    J = np.zeros((cl.state_dim, cl.state_dim))
    J[0, 0] = -op.pole - op.phi.derivative(s[0]) / op.C0
    J[0, 1:] = op.alpha / op.C0 * cl.feedback_row(switches)
    J[1:, 0] = cl.network_B
    J[1:, 1:] = cl.network_A
    return J


# -- certificates ------------------------------------------------------------

def opamp_transfer_function(opamp):
    """Linear part of the op-amp, ``(1/C0) / (s + 1/(R0 C0))``."""
    return RationalTransferFunction([1.0 / opamp.C0], [opamp.pole, 1.0])


def loop_transfer_function(cl, switches=None):
    """Transfer function from ``V_0`` to the negated feedback signal.

    With this output the loop is a negative feedback interconnection, so
    positive-feedback paths contribute their reverted transfer function.
    """
    total = RationalTransferFunction([0.0], [1.0])
    for path in cl.active_paths(switches):
        g = tf_from_state_space(path.network)
        total = total + (-g if path.sign > 0 else g)
    return total


def opamp_certificate(opamp, sample_range=None):
    """Certificate of the op-amp as the negative feedback loop of its linear
    part and the static nonlinearity."""
    lin = degree_certificates(opamp_transfer_function(opamp), 0)
    if not lin:
        raise HypothesisViolatedError("op-amp linear part is not 0-passive")
    half = sample_range or min(opamp.phi.domain * 0.999, 1e3)
    phi_cert = static_monotone_certificate(opamp.phi.derivative,
                                           np.linspace(-half, half, 2001))
    return compose_feedback(lin[0], phi_cert)


def closed_loop_certificates(cl, switches=None, degrees=None):
    """All feedback-composed certificates for the closed loop.

    Returns a list of ``(network_certificate, closed_loop_certificate)``;
    network certificates without a rate in common with the op-amp are
    skipped.
    """
    g = loop_transfer_function(cl, switches)
    op = opamp_certificate(cl.opamp)
    out = []
    for p in degrees if degrees is not None else range(g.order + 1):
        for cert in degree_certificates(g, p):
            try:
                out.append((cert, compose_feedback(op, cert)))
            except NoCommonRateError:
                continue
    return out


def stiffening_radius(phi, k, tol=1e-9, guard=1e12):
    """Smallest ``r >= 0`` with ``y phi(y) - k y^2 > 0`` for all ``|y| > r``.

    Works on ``y > 0`` (phi is odd). The bracket grows geometrically until
    the inequality holds at its upper end, the last failing grid point
    below it is located, and the boundary is bisected.
    """
    if not k > 0:
        raise ValidationError(f"gain k must be > 0 (got {k})")

    def h(y):
        with np.errstate(all="ignore"):
            return phi(y) / y - k

    top = phi.domain
    if math.isinf(top):
        hi = 1.0
        while not h(hi) > 0:
            hi *= 2.0
            if hi > guard or not math.isfinite(phi(hi)):
                raise AssumptionViolatedError(
                    f"{phi.kind} nonlinearity does not dominate gain {k:g}")
    else:
        for j in range(1, 60):
            hi = top * (1.0 - 2.0 ** -j)
            if h(hi) > 0:
                break
        else:
            raise AssumptionViolatedError(
                f"{phi.kind} nonlinearity cannot dominate gain {k:g} inside its domain")
    grid = np.concatenate([hi * np.logspace(-9, 0, 2048, endpoint=False),
                           np.linspace(0.0, hi, 4097)[1:-1]])
    grid.sort()
    bad = grid[np.array([not h(y) > 0 for y in grid])]
    if bad.size == 0:
        return 0.0
    lo = float(bad[-1])
    up = float(grid[np.searchsorted(grid, lo, side="right")]) if lo < grid[-1] else hi
    while up - lo > tol * max(1.0, up):
        mid = 0.5 * (lo + up)
        if h(mid) > 0:
            up = mid
        else:
            lo = mid
    return up


@dataclass(frozen=True, eq=False)
class BoundednessCertificate:
    """Storage ``V(x, z) = x^2/2 + z^T P z / 2`` with a certified sublevel set.

    ``dV/dt < 0`` whenever ``|x| > r`` or ``|z| > z_radius``, so the set
    ``V <= level`` is forward invariant and attracts every trajectory.
    """

    P: np.ndarray
    Q_used: np.ndarray
    mu_Q: float
    rho: float
    eps: float
    r: float
    gain: float
    z_radius: float
    level: float

    def storage(self, states):
        s = np.atleast_2d(states)
        x, z = s[:, 0], s[:, 1:]
        return 0.5 * x ** 2 + 0.5 * np.einsum("ij,jk,ik->i", z, self.P, z)


def _bound_for_q(cl, c, P1, q):
    op = cl.opamp
    Pm = q * P1
    rho = float(np.linalg.norm(op.alpha / op.C0 * c + Pm @ cl.network_B))
    mu = q
    kappa = op.alpha / op.C0 * abs(cl.Vr)
    if rho == 0.0:
        eps = math.inf
        gain = 0.0
    else:
        eps = mu / (2.0 * rho)
        gain = rho / eps
    k = op.C0 * (gain + kappa)
    r = stiffening_radius(op.phi, k) if k > 0 else 0.0
    if kappa > 0:
        r = max(r, 1.0)
    # sup over |x| <= r of the x-part of dV/dt, then the z-ball where dV/dt >= 0
    c_r = 0.5 * gain * r ** 2 + kappa * r
    z_radius = math.sqrt(4.0 * c_r / mu)
    level = 0.5 * r ** 2 + 0.5 * float(np.max(np.linalg.eigvalsh(Pm))) * z_radius ** 2
    return BoundednessCertificate(Pm, q * np.eye(len(c)), mu, rho, eps, r,
                                  gain, z_radius, level)


def boundedness_certificate(cl, switches=None, q_scale="auto"):
    """Quadratic storage certifying bounded closed-loop trajectories.

    ``P`` solves ``A^T P + P A = -Q`` with ``Q = q I`` on the aggregated
    network block. Along solutions

        dV/dt <= -x^2/(R0 C0) - x phi(x)/C0 + rho |x| |z| + kappa |x| - mu |z|^2 / 2

    with ``rho = |(alpha/C0) c + P B|`` and ``kappa = (alpha/C0)|V_r|``.
    Young's inequality with ``eps = mu/(2 rho)`` leaves the gain
    ``rho/(2 eps)`` on ``x^2``, and the stiffening radius for
    ``k = C0 (rho/eps + kappa)`` bounds the region where ``dV/dt`` can be
    nonnegative. ``q_scale="auto"`` picks ``q`` minimizing the certified
    level; a number fixes it.
    """
    A = cl.network_A
    if not np.all(np.linalg.eigvals(A).real < 0):
        raise HypothesisViolatedError("network block is not Hurwitz")
    c = cl.feedback_row(switches)
    P1 = lyapunov_solve(A, np.eye(A.shape[0]))
    if q_scale != "auto":
        return _bound_for_q(cl, c, P1, float(q_scale))
    op = cl.opamp
    pb = np.linalg.norm(P1 @ cl.network_B)
    centre = (op.alpha / op.C0 * np.linalg.norm(c)) / pb if pb > 0 else 1.0
    centre = centre if centre > 0 else 1.0
    best = None
    for q in centre * np.logspace(-4, 4, 81):
        try:
            cert = _bound_for_q(cl, c, P1, q)
        except AssumptionViolatedError:
            continue
        if best is None or cert.level < best.level:
            best = cert
    if best is None:
        raise AssumptionViolatedError("no stiffening radius for any storage weight")
    return best


# -- equilibria --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Equilibrium:
    state: np.ndarray
    stability: str  # "stable" | "unstable" | "indeterminate"
    eigenvalues: np.ndarray

    @property
    def x(self):
        return float(self.state[0])

    @property
    def unstable_dim(self):
        return int(np.sum(self.eigenvalues.real > 0))


def _dc_gain(cl, switches):
    # z* = -A^-1 B x, so V_E - V_r = g x
    c = cl.feedback_row(switches)
    return float(-c @ np.linalg.solve(cl.network_A, cl.network_B))


def _tag(eigs, tol=1e3 * np.finfo(float).eps):
    # eigvals is backward stable, so errors scale with the largest eigenvalue
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if np.all(eigs.real < -tol * scale):
        return "stable"
    if np.any(eigs.real > tol * scale):
        return "unstable"
    return "indeterminate"


def equilibria(cl, switches=None, subdivisions=4096):
    """All equilibria, found from the scalar reduction in the op-amp state.

    Network states are eliminated via ``z* = -A^-1 B x``, leaving
    ``F(x) = -x/R0 - phi(x) + alpha (g x + V_r)``; roots in a bracket
    beyond which ``F`` has a fixed sign are located by sign scanning and
    Brent refinement, then tagged from the closed-loop Jacobian.
    """
    op = cl.opamp
    A, B = cl.network_A, cl.network_B
    g = _dc_gain(cl, switches)
    gabs = sum(abs((p.network.C @ np.linalg.solve(p.network.A, p.network.B)).item())
               for p in cl.active_paths(switches))

    def F(x):
        return -x / op.R0 - op.phi(x) + op.alpha * (g * x + cl.Vr)

    k = op.alpha * (gabs + abs(cl.Vr)) + 1.0 / op.R0
    try:
        r = stiffening_radius(op.phi, k)
    except AssumptionViolatedError:
        r = 0.999 * op.phi.domain / 10.0
    x_max = min(10.0 * max(r, 1.0), 0.999 * op.phi.domain)
    xs = np.linspace(-x_max, x_max, subdivisions + 1)
    Fs = np.array([F(x) for x in xs])
    sg = np.sign(Fs)
    roots = [float(x) for x, s in zip(xs, sg) if s == 0]
    for i in np.flatnonzero(sg[:-1] * sg[1:] < 0):
        roots.append(brentq(F, xs[i], xs[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps))
    roots.sort()
    out = []
    for x in roots:
        z = -np.linalg.solve(A, B) * x
        state = np.concatenate([[x], z])
        eigs = np.linalg.eigvals(closed_loop_jacobian(cl, state, switches))
        out.append(Equilibrium(state, _tag(eigs), eigs))
    return out


def bistability_check(cl, switches=None):
    """Bistability condition for one op-amp in positive feedback with one
    first-order network: ``phi'(0) < -1/R0 + alpha G(0)``."""
    active = cl.active_paths(switches)
    if len(active) != 1 or active[0].sign != 1 or active[0].network.state_dim != 1:
        raise ValidationError(
            "bistability check applies to a single first-order positive-feedback network")
    net = active[0].network
    dc = float(-(net.C @ np.linalg.solve(net.A, net.B)).item())
    op = cl.opamp
    return bool(op.phi.derivative(0.0) < -1.0 / op.R0 + op.alpha * dc)


# -- circuit description files -----------------------------------------------

TOPOLOGY_COMPONENTS = {
    "bistable": ("R1", "Ra", "C1", "R0", "C0", "alpha"),
    "ladder_oscillator": ("R1", "C1", "R0", "C0", "alpha"),
    "mixed_feedback": ("R1", "R2", "Ra", "Rb", "C1", "C2", "R0", "C0", "alpha"),
}
_TOP_FIELDS = {"topology", "components", "phi", "Vr", "switches"}


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def circuit_from_dict(d):
    """Build a :class:`ClosedLoopCircuit` from its JSON description.

    Every problem found is collected and reported in one
    :class:`ValidationError`.
    """
    if not isinstance(d, dict):
        raise ValidationError("circuit description must be a JSON object")
    problems = []
    extra = set(d) - _TOP_FIELDS
    if extra:
        problems.append(f"unknown fields: {sorted(extra)}")
    for key in ("topology", "components", "phi"):
        if key not in d:
            problems.append(f"missing field {key!r}")
    topology = d.get("topology")
    needed = TOPOLOGY_COMPONENTS.get(topology)
    if "topology" in d and needed is None:
        problems.append(f"unknown topology {topology!r}; expected one of "
                        f"{sorted(TOPOLOGY_COMPONENTS)}")
    comps = d.get("components", {})
    if not isinstance(comps, dict):
        problems.append("components must be an object")
        comps = {}
    if needed is not None:
        unknown = set(comps) - set(needed)
        if unknown:
            problems.append(f"unknown components for {topology}: {sorted(unknown)}")
        for name in needed:
            if name not in comps:
                problems.append(f"missing component {name}")
                continue
            v = comps[name]
            if not _is_number(v):
                problems.append(f"{name} must be a finite number (got {v!r})")
            elif name == "alpha" and v < 0:
                problems.append(f"alpha must be >= 0 (got {v})")
            elif name != "alpha" and v <= 0:
                problems.append(f"{name} must be > 0 (got {v})")
    phi = None
    if "phi" in d:
        try:
            phi = nonlinearity_from_dict(d["phi"])
        except ValidationError as exc:
            problems.extend(exc.violations or [str(exc)])
        except (TypeError, ValueError) as exc:
            problems.append(f"phi: {exc}")
    Vr = d.get("Vr", 0.0)
    if not _is_number(Vr):
        problems.append(f"Vr must be a finite number (got {Vr!r})")
    sw = d.get("switches", {"Sa": True, "Sb": True})
    if not isinstance(sw, dict):
        problems.append("switches must be an object")
        sw = {}
    bad_sw = set(sw) - {"Sa", "Sb"}
    if bad_sw:
        problems.append(f"unknown switches: {sorted(bad_sw)}")
    for name in ("Sa", "Sb"):
        if name in sw and sw[name] not in (0, 1, True, False):
            problems.append(f"switch {name} must be 0/1 or a boolean (got {sw[name]!r})")
    if problems:
        raise ValidationError("invalid circuit description: " + "; ".join(problems), problems)
    op = OpAmpParams(float(comps["R0"]), float(comps["C0"]), float(comps["alpha"]), phi)
    c = {k: float(v) for k, v in comps.items()}
    if topology == "bistable":
        return build_bistable(c["R1"], c["Ra"], c["C1"], op, float(Vr))
    if topology == "ladder_oscillator":
        return build_ladder_oscillator(c["R1"], c["C1"], op, float(Vr))
    return build_mixed_feedback(c["R1"], c["R2"], c["Ra"], c["Rb"], c["C1"], c["C2"], op,
                                bool(sw.get("Sa", True)), bool(sw.get("Sb", True)), float(Vr))


def circuit_to_dict(cl):
    """JSON description of a circuit made by one of the named builders."""
    if cl.topology not in TOPOLOGY_COMPONENTS:
        raise ValidationError(f"topology {cl.topology!r} has no file representation")
    return {
        "topology": cl.topology,
        "components": {k: cl.components[k] for k in TOPOLOGY_COMPONENTS[cl.topology]},
        "phi": cl.opamp.phi.to_dict(),
        "Vr": cl.Vr,
        "switches": {"Sa": cl.switches.Sa, "Sb": cl.switches.Sb},
    }
