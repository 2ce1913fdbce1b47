"""Simulation of closed-loop circuits and empirical attractor classification."""

import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .certify import rate_intervals
from .circuits import (Switches, build_mixed_feedback, closed_loop_vector_field,
                       loop_transfer_function, opamp_certificate)
from .errors import DivergenceError, ValidationError
from .kernels import METHODS, get_integrator

__all__ = [
    "Trajectory", "AttractorReport", "integrate", "classify_attractor",
    "ProbeResult", "multistability_probe", "uniform_ball", "SweepMap",
    "sweep_classification", "sweep_label", "DEFAULT_DT", "DEFAULT_T_END",
]

log = logging.getLogger(__name__)

DEFAULT_DT = 1e-4
DEFAULT_T_END = 40.0
DIVERGENCE_LIMIT = 1e9
COMPILED_MAX_DIM = 17
DEFAULT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled closed-loop path.

    ``switch_log`` lists ``(t_start, Switches)`` for each schedule segment.
    """

    times: np.ndarray
    states: np.ndarray
    switch_log: tuple
    dt: float = math.nan
    method: str = ""

    def __len__(self):
        return self.times.size

    @property
    def x(self):
        return self.states[:, 0]

    def switch_columns(self):
        sa = np.zeros(self.times.size, dtype=int)
        sb = np.zeros(self.times.size, dtype=int)
        for t0, sw in self.switch_log:
            on = self.times >= t0 - 0.5 * self.dt
            sa[on], sb[on] = sw.as_tuple()
        return sa, sb

    def segment(self, t0, t1):
        keep = (self.times >= t0) & (self.times < t1)
        log_ = tuple((max(t, t0), sw) for t, sw in self.switch_log if t < t1)
        return Trajectory(self.times[keep], self.states[keep], log_, self.dt, self.method)

    def write_csv(self, fh):
        n = self.states.shape[1] - 1
        fh.write(",".join(["t", "x", *[f"z{i + 1}" for i in range(n)], "Sa", "Sb"]) + "\n")
        sa, sb = self.switch_columns()
        for t, row, a, b in zip(self.times, self.states, sa, sb):
            fh.write(",".join([repr(float(t)), *map(repr, row.tolist()), str(a), str(b)]) + "\n")


def _normalize_schedule(schedule, default, dt, stride, nsteps):
    if schedule is None:
        return [(0, default)]
    segs = []
    for t, sw in sorted(schedule, key=lambda e: e[0]):
        if not isinstance(sw, Switches):
            sw = Switches(*map(bool, sw))
        k = t / (dt * stride)
        kk = int(round(k))
        if abs(k - kk) > 1e-9 * max(1.0, k):
            warnings.warn(f"switch time {t} snapped to {kk * dt * stride}", stacklevel=3)
        segs.append((kk * stride, sw))
    if segs[0][0] != 0:
        segs.insert(0, (0, default))
    out = []
    for k, sw in segs:
        if k > nsteps:
            continue
        if out and out[-1][0] == k:
            out[-1] = (k, sw)
        else:
            out.append((k, sw))
    return out


def integrate(cl, x0, t_end=DEFAULT_T_END, dt=DEFAULT_DT, schedule=None,
              method="rosenbrock", stride=1, backend=None, tol=DEFAULT_TOL):
    """Fixed-step integration of the closed loop over a switch schedule.

    ``schedule`` is a list of ``(t_start, (Sa, Sb))`` entries; switch
    changes take effect at step boundaries (times are snapped to the sample
    grid with a warning). ``method`` is ``"rk4"`` (classical Runge-Kutta)
    or ``"rosenbrock"`` (fourth-order linearly implicit, needed when the
    op-amp nonlinearity makes the loop stiff). With ``tol > 0`` a Rosenbrock
    step whose embedded error estimate exceeds ``tol (1 + |y_i|)`` is
    subdivided internally; samples stay on the ``dt`` grid. Every
    ``stride``-th step is stored.

    Raises :class:`DivergenceError` carrying the partial trajectory when a
    state component leaves ``|y| <= 1e9``.
    """
    if not dt > 0 or not t_end > 0:
        raise ValidationError("dt and t_end must be positive")
    if method not in METHODS:
        raise ValidationError(f"unknown method {method!r}; use one of {sorted(METHODS)}")
    stride = int(stride)
    y = np.array(x0, dtype=float)
    if y.shape != (cl.state_dim,):
        raise ValidationError(f"initial state must have length {cl.state_dim}")
    nsteps = int(round(t_end / dt))
    nsteps -= nsteps % stride
    if abs(nsteps * dt - t_end) > 1e-9 * t_end + dt * stride:
        warnings.warn(f"t_end {t_end} snapped to {nsteps * dt}", stacklevel=2)
    segs = _normalize_schedule(schedule, cl.switches, dt, stride, nsteps)
    if cl.state_dim > COMPILED_MAX_DIM:
        backend = "python"
    run = get_integrator(backend)
    op = cl.opamp
    phi = op.phi
    p1, p2 = phi.kernel_params
    A = np.ascontiguousarray(cl.network_A, dtype=float)
    B = np.ascontiguousarray(cl.network_B, dtype=float)
    chunks = [y[None, :].copy()]
    log_ = []
    for i, (k0, sw) in enumerate(segs):
        k1 = segs[i + 1][0] if i + 1 < len(segs) else nsteps
        log_.append((k0 * dt, sw))
        n = k1 - k0
        if n <= 0:
            continue
        out = np.empty((n // stride + 1, cl.state_dim))
        c = np.ascontiguousarray(cl.feedback_row(sw), dtype=float)
        status, rows = run(y, A, B, c, float(cl.Vr), op.pole, 1.0 / op.C0,
                           op.alpha / op.C0, phi.code, float(p1), float(p2),
                           float(dt), n, stride, METHODS[method], out, float(tol))
        chunks.append(out[1:rows])
        if status:
            states = np.concatenate(chunks)
            times = np.arange(states.shape[0]) * dt * stride
            partial = Trajectory(times, states, tuple(log_), dt, method)
            raise DivergenceError(
                f"state left |y| <= {DIVERGENCE_LIMIT:g} near t = {times[-1] + dt * stride:.6g} s "
                f"(method {method}, dt {dt:g})", partial)
        y = out[rows - 1].copy()
    states = np.concatenate(chunks)
    times = np.arange(states.shape[0]) * (dt * stride)
    return Trajectory(times, states, tuple(log_), dt, method)


# -- classification ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AttractorReport:
    kind: str  # "FixedPoint" | "LimitCycle" | "Undetermined"
    transient_cut: float
    location: np.ndarray = None
    period: float = None
    amplitude: float = None
    diagnostics: dict = field(default_factory=dict)


def _refine_peaks(t, y, idx):
    out = []
    for i in idx:
        if 0 < i < y.size - 1:
            a, b, c = y[i - 1], y[i], y[i + 1]
            den = a - 2.0 * b + c
            off = 0.5 * (a - c) / den if den != 0 else 0.0
            off = min(max(off, -1.0), 1.0)
            out.append(t[i] + off * (t[i + 1] - t[i]))
        else:
            out.append(t[i])
    return np.array(out)


def classify_attractor(traj, vf=None, output=0, transient=0.5, fp_tol=1e-6,
                       cycle_tol=0.01, min_intervals=5):
    """Label the tail of a trajectory as a fixed point, a limit cycle, or neither.

    Fixed point: ``|f(y)| < fp_tol (1 + |y|)`` on every sample of the last
    10%, with ``f`` the vector field ``vf`` or, without it, finite
    differences. Limit cycle: at least ``min_intervals`` successive
    peak-to-peak intervals of the output, all within ``cycle_tol`` of their
    mean.
    """
    n = len(traj)
    cut = int(transient * n)
    t = traj.times[cut:]
    s = traj.states[cut:]
    diag = {}
    if s.shape[0] < 3:
        return AttractorReport("Undetermined", float(traj.times[min(cut, n - 1)]), diagnostics=diag)
    tail = s[-max(2, s.shape[0] // 10):]
    if vf is not None:
        pick = np.unique(np.linspace(0, tail.shape[0] - 1, min(tail.shape[0], 2000)).astype(int))
        res = np.array([np.linalg.norm(vf(tail[i])) / (1.0 + np.linalg.norm(tail[i]))
                        for i in pick])
    else:
        tt = t[-tail.shape[0]:]
        d = np.diff(tail, axis=0) / np.diff(tt)[:, None]
        res = np.linalg.norm(d, axis=1) / (1.0 + np.linalg.norm(tail[1:], axis=1))
    diag["max_residual"] = float(np.max(res))
    if np.all(res < fp_tol):
        return AttractorReport("FixedPoint", float(t[0]), location=tail[-1].copy(),
                               diagnostics=diag)
    y = s[:, output]
    span = float(np.max(y) - np.min(y))
    if span > 1e-9 * (1.0 + float(np.max(np.abs(y)))):
        idx, _ = find_peaks(y, prominence=0.25 * span)
        peaks = _refine_peaks(t, y, idx)
        iv = np.diff(peaks)
        diag["peak_count"] = int(peaks.size)
        if iv.size >= min_intervals:
            mean = float(np.mean(iv))
            dev = float(np.max(np.abs(iv - mean)) / mean)
            diag["period_jitter"] = dev
            if dev <= cycle_tol:
                return AttractorReport("LimitCycle", float(t[0]), period=mean,
                                       amplitude=0.5 * span, diagnostics=diag)
    return AttractorReport("Undetermined", float(t[0]), diagnostics=diag)


# -- multistability probing --------------------------------------------------

def uniform_ball(n, dim, radius, seed):
    """``n`` points uniform in the ``dim``-ball, from PCG64 seeded with ``seed``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * (radius * rng.random(n) ** (1.0 / dim))[:, None]


@dataclass(frozen=True, eq=False)
class ProbeResult:
    initial_states: np.ndarray
    reports: tuple
    clusters: tuple  # ((location, member indices), ...)
    undetermined: tuple

    @property
    def cluster_count(self):
        return len(self.clusters)


def multistability_probe(cl, n_ics=200, radius=50.0, seed=0, t_end=5.0,
                         dt=DEFAULT_DT, switches=None, workers=None,
                         method="rosenbrock", backend=None):
    """Integrate from random initial states and cluster the fixed points reached.

    Fixed points closer than ``1e-3 * radius`` are merged. Trajectories
    not classified as fixed points are listed in ``undetermined``.
    """
    if switches is not None:
        cl = cl.with_switches(switches)
    ics = uniform_ball(n_ics, cl.state_dim, radius, seed)
    nsteps = int(round(t_end / dt))
    stride = max(1, nsteps // 2000)

    def vf(y):
        return closed_loop_vector_field(cl, y)

    def one(y0):
        try:
            traj = integrate(cl, y0, t_end, dt, method=method, stride=stride,
                             backend=backend)
        except DivergenceError:
            return AttractorReport("Undetermined", math.nan,
                                   diagnostics={"diverged": True})
        return classify_attractor(traj, vf)

    workers = workers or os.cpu_count() or 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            reports = list(pool.map(one, ics))
    else:
        reports = [one(y0) for y0 in ics]
    merge = 1e-3 * radius
    clusters = []
    undetermined = []
    for i, rep in enumerate(reports):
        if rep.kind != "FixedPoint":
            undetermined.append(i)
            continue
        for loc, members in clusters:
            if np.linalg.norm(rep.location - loc) <= merge:
                members.append(i)
                break
        else:
            clusters.append((rep.location, [i]))
    clusters.sort(key=lambda c: tuple(c[0]))
    return ProbeResult(ics, tuple(reports),
                       tuple((loc, tuple(m)) for loc, m in clusters),
                       tuple(undetermined))


# -- parameter sweep ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SweepMap:
    Ra: np.ndarray
    Rb: np.ndarray
    labels: np.ndarray  # shape (len(Ra), len(Rb)), entries "p0" | "p2" | "none"

    def label_at(self, Ra, Rb):
        i = int(np.argmin(np.abs(self.Ra - Ra)))
        j = int(np.argmin(np.abs(self.Rb - Rb)))
        return str(self.labels[i, j])

    def counts(self):
        vals, cnt = np.unique(self.labels, return_counts=True)
        return dict(zip(vals.tolist(), cnt.tolist()))

    def write_csv(self, fh):
        fh.write("Ra,Rb,label\n")
        for i, ra in enumerate(self.Ra):
            for j, rb in enumerate(self.Rb):
                fh.write(f"{float(ra)!r},{float(rb)!r},{self.labels[i, j]}\n")


def sweep_label(R1, R2, Ra, Rb, C1, C2, opamp, opamp_rates=None):
    """``p0``/``p2``/``none`` for one (Ra, Rb) with both switches closed.

    The aggregate loop transfer function is certified for degrees 0 and 2
    and intersected with the op-amp rate interval; degree 0 wins when both
    apply.
    """
    cl = build_mixed_feedback(R1, R2, Ra, Rb, C1, C2, opamp, True, True)
    g = loop_transfer_function(cl)
    rates = opamp_rates if opamp_rates is not None else opamp_certificate(opamp).rates
    for p in (0, 2):
        for iv in rate_intervals(g, p):
            if not iv.intersect(rates).is_empty:
                return f"p{p}"
    return "none"


def _sweep_row(args):
    R1, R2, ra, Rb_grid, C1, C2, opamp, rates = args
    return [sweep_label(R1, R2, ra, rb, C1, C2, opamp, rates) for rb in Rb_grid]


def sweep_classification(R1, R2, C1, C2, opamp, Ra_grid, Rb_grid, workers=None):
    """Label every grid point; rows are farmed out to a process pool.

    The result does not depend on the number of workers or completion order.
    """
    Ra_grid = np.asarray(Ra_grid, dtype=float)
    Rb_grid = np.asarray(Rb_grid, dtype=float)
    if np.any(Ra_grid <= 0) or np.any(Rb_grid <= 0):
        raise ValidationError("resistances must be positive")
    rates = opamp_certificate(opamp).rates
    jobs = [(R1, R2, float(ra), Rb_grid.tolist(), C1, C2, opamp, rates) for ra in Ra_grid]
    workers = workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    return SweepMap(Ra_grid, Rb_grid, np.array(rows, dtype=object))
