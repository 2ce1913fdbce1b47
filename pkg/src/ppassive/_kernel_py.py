"""Pure-Python twin of the compiled integrator kernel.

Same signature and results as ``_kernel.integrate_lure``, roughly two
orders of magnitude slower. Selected automatically when the extension is
not built.
"""

import numpy as np
import scipy.linalg as sla

GAM = 0.5
TINY = 1e-300
A21, A31, A32 = 2.0, 48.0 / 25.0, 6.0 / 25.0
C21, C31, C32 = -8.0, 372.0 / 25.0, 12.0 / 5.0
C41, C42, C43 = -112.0 / 125.0, -54.0 / 125.0, -2.0 / 5.0
RB = (19.0 / 9.0, 0.5, 25.0 / 108.0, 125.0 / 108.0)
E = (17.0 / 54.0, 7.0 / 36.0, 0.0, 125.0 / 108.0)


def _phi(code, p1, p2):
    if code == 0:
        return (lambda x: p1 * np.sinh(p2 * x),
                lambda x: p1 * p2 * np.cosh(p2 * x))
    if code == 1:
        if p1 == 1.0:
            return (lambda x: x / p2, lambda x: 1.0 / p2)
        return (lambda x: (x / p2) ** p1,
                lambda x: p1 / p2 * (x / p2) ** (p1 - 1.0))
    return (lambda x: p1 * np.arctanh(x / p2),
            lambda x: p1 / (p2 * (1.0 - (x / p2) ** 2)))


def integrate_lure(y0, A, B, c, Vr, pole, inv_C0, gain, phi_code, p1, p2,
                   dt, nsteps, stride, method, out, tol=0.0):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    c = np.asarray(c, dtype=float)
    n = A.shape[0]
    dim = n + 1
    phi, dphi = _phi(phi_code, p1, p2)

    def rhs(y):
        f = np.empty(dim)
        x = y[0]
        f[0] = -pole * x - inv_C0 * phi(x) + gain * (c @ y[1:] + Vr)
        f[1:] = A @ y[1:] + B * x
        return f

    base = np.zeros((dim, dim))
    base[0, 1:] = -gain * c
    base[1:, 0] = -B
    base[1:, 1:] = -A

    def rosenbrock(y, h):
        W = base + np.eye(dim) / (GAM * h)
        W[0, 0] += pole + inv_C0 * dphi(y[0])
        lu = sla.lu_factor(W, check_finite=False)
        g1 = sla.lu_solve(lu, rhs(y), check_finite=False)
        f = rhs(y + A21 * g1)
        g2 = sla.lu_solve(lu, f + C21 * g1 / h, check_finite=False)
        f = rhs(y + A31 * g1 + A32 * g2)
        g3 = sla.lu_solve(lu, f + (C31 * g1 + C32 * g2) / h, check_finite=False)
        g4 = sla.lu_solve(lu, f + (C41 * g1 + C42 * g2 + C43 * g3) / h,
                          check_finite=False)
        ynew = y + RB[0] * g1 + RB[1] * g2 + RB[2] * g3 + RB[3] * g4
        return ynew, E[0] * g1 + E[1] * g2 + E[3] * g4

    hsub = dt

    def controlled(y):
        nonlocal hsub
        left = dt
        while left > 0.0:
            h = left if hsub >= left * (1.0 - 1e-12) else hsub
            try:
                trial, err = rosenbrock(y, h)
                e = np.max(np.abs(err) / (tol * (1.0 + np.abs(y))))
                ok = np.isfinite(e) and np.all(np.isfinite(trial)) and e <= 1.0
            except (ValueError, np.linalg.LinAlgError):
                ok = False
            if ok:
                y = trial
                left -= h
                if h == hsub and hsub < dt:
                    hsub = min(2.0 * hsub, dt)
            else:
                hsub = 0.5 * h
                if hsub < dt * 1e-12:
                    raise np.linalg.LinAlgError("step size underflow")
        return y

    y = np.array(y0, dtype=float)
    out[0, :] = y
    row = 1
    bad = 0
    with np.errstate(all="ignore"):
        for k in range(1, nsteps + 1):
            if method == 0:
                k1 = rhs(y)
                k2 = rhs(y + 0.5 * dt * k1)
                k3 = rhs(y + 0.5 * dt * k2)
                k4 = rhs(y + dt * k3)
                y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                try:
                    y = controlled(y) if tol > 0.0 else rosenbrock(y, dt)[0]
                except (ValueError, np.linalg.LinAlgError):
                    bad = 1
                    break
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e9:
                bad = 1
                break
            y[np.abs(y) < TINY] = 0.0
            if k % stride == 0:
                out[row, :] = y
                row += 1
    return bad, row
