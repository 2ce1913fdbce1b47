# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step integrators for the op-amp closed loop.

State ``y = (x, z)``; ``x' = -pole x - inv_C0 phi(x) + gain (c.z + Vr)`` and
``z' = A z + B x``. Method 0 is classical RK4, method 1 the four-stage
linearly implicit Rosenbrock scheme (Shampine's coefficients).
"""

from libc.math cimport sinh, cosh, atanh, pow, fabs, isfinite

cdef enum:
    MAXM = 17

cdef double GAM = 0.5
cdef double TINY = 1e-300
cdef double A21 = 2.0
cdef double A31 = 48.0 / 25.0
cdef double A32 = 6.0 / 25.0
cdef double C21 = -8.0
cdef double C31 = 372.0 / 25.0
cdef double C32 = 12.0 / 5.0
cdef double C41 = -112.0 / 125.0
cdef double C42 = -54.0 / 125.0
cdef double C43 = -2.0 / 5.0
cdef double RB1 = 19.0 / 9.0
cdef double RB2 = 0.5
cdef double RB3 = 25.0 / 108.0
cdef double RB4 = 125.0 / 108.0
cdef double E1 = 17.0 / 54.0
cdef double E2 = 7.0 / 36.0
cdef double E4 = 125.0 / 108.0


cdef struct Model:
    int n
    const double *A
    const double *B
    const double *c
    double Vr
    double pole
    double inv_C0
    double gain
    int phi_code
    double p1
    double p2


cdef inline double phi_val(Model *m, double x) nogil:
    cdef double t
    if m.phi_code == 0:
        return m.p1 * sinh(m.p2 * x)
    elif m.phi_code == 1:
        t = x / m.p2
        return pow(t, m.p1)
    else:
        return m.p1 * atanh(x / m.p2)


cdef inline double phi_der(Model *m, double x) nogil:
    cdef double t
    if m.phi_code == 0:
        return m.p1 * m.p2 * cosh(m.p2 * x)
    elif m.phi_code == 1:
        t = x / m.p2
        if m.p1 == 1.0:
            return 1.0 / m.p2
        return m.p1 / m.p2 * pow(t, m.p1 - 1.0)
    else:
        t = x / m.p2
        return m.p1 / (m.p2 * (1.0 - t * t))


cdef void rhs(Model *m, double *y, double *f) nogil:
    cdef int n = m.n, i, j
    cdef double x = y[0], acc, ve = m.Vr
    for i in range(n):
        ve += m.c[i] * y[1 + i]
    f[0] = -m.pole * x - m.inv_C0 * phi_val(m, x) + m.gain * ve
    for i in range(n):
        acc = m.B[i] * x
        for j in range(n):
            acc += m.A[i * n + j] * y[1 + j]
        f[1 + i] = acc


cdef int lu_factor(double *W, int *piv, int m) nogil:
    cdef int k, i, j, p
    cdef double big, t
    for k in range(m):
        p = k
        big = fabs(W[k * m + k])
        for i in range(k + 1, m):
            if fabs(W[i * m + k]) > big:
                big = fabs(W[i * m + k])
                p = i
        piv[k] = p
        if big == 0.0:
            return 1
        if p != k:
            for j in range(m):
                t = W[k * m + j]
                W[k * m + j] = W[p * m + j]
                W[p * m + j] = t
        for i in range(k + 1, m):
            W[i * m + k] /= W[k * m + k]
            t = W[i * m + k]
            for j in range(k + 1, m):
                W[i * m + j] -= t * W[k * m + j]
    return 0


cdef void lu_solve(double *W, int *piv, int m, double *b) nogil:
    cdef int i, j
    cdef double t
    for i in range(m):
        if piv[i] != i:
            t = b[i]
            b[i] = b[piv[i]]
            b[piv[i]] = t
    for i in range(m):
        for j in range(i):
            b[i] -= W[i * m + j] * b[j]
    for i in range(m - 1, -1, -1):
        for j in range(i + 1, m):
            b[i] -= W[i * m + j] * b[j]
        b[i] /= W[i * m + i]


cdef int step_rk4(Model *m, double *y, double h) nogil:
    cdef double k1[MAXM]
    cdef double k2[MAXM]
    cdef double k3[MAXM]
    cdef double k4[MAXM]
    cdef double t[MAXM]
    cdef int i, dim = m.n + 1
    rhs(m, y, k1)
    for i in range(dim):
        t[i] = y[i] + 0.5 * h * k1[i]
    rhs(m, t, k2)
    for i in range(dim):
        t[i] = y[i] + 0.5 * h * k2[i]
    rhs(m, t, k3)
    for i in range(dim):
        t[i] = y[i] + h * k3[i]
    rhs(m, t, k4)
    for i in range(dim):
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return 0


cdef int step_rosenbrock(Model *m, double *y, double h, double *err) nogil:
    cdef double W[MAXM * MAXM]
    cdef int piv[MAXM]
    cdef double g1[MAXM]
    cdef double g2[MAXM]
    cdef double g3[MAXM]
    cdef double g4[MAXM]
    cdef double f[MAXM]
    cdef double t[MAXM]
    cdef int i, j, n = m.n, dim = m.n + 1
    cdef double d = 1.0 / (GAM * h)
    # W = I/(gamma h) - J
    for i in range(dim * dim):
        W[i] = 0.0
    W[0] = d + m.pole + m.inv_C0 * phi_der(m, y[0])
    for j in range(n):
        W[1 + j] = -m.gain * m.c[j]
        W[(1 + j) * dim] = -m.B[j]
        for i in range(n):
            W[(1 + j) * dim + 1 + i] = -m.A[j * n + i]
        W[(1 + j) * dim + 1 + j] += d
    if lu_factor(W, piv, dim):
        return 1
    rhs(m, y, g1)
    lu_solve(W, piv, dim, g1)
    for i in range(dim):
        t[i] = y[i] + A21 * g1[i]
    rhs(m, t, f)
    for i in range(dim):
        g2[i] = f[i] + C21 * g1[i] / h
    lu_solve(W, piv, dim, g2)
    for i in range(dim):
        t[i] = y[i] + A31 * g1[i] + A32 * g2[i]
    rhs(m, t, f)
    for i in range(dim):
        g3[i] = f[i] + (C31 * g1[i] + C32 * g2[i]) / h
    lu_solve(W, piv, dim, g3)
    for i in range(dim):
        g4[i] = f[i] + (C41 * g1[i] + C42 * g2[i] + C43 * g3[i]) / h
    lu_solve(W, piv, dim, g4)
    for i in range(dim):
        y[i] += RB1 * g1[i] + RB2 * g2[i] + RB3 * g3[i] + RB4 * g4[i]
        err[i] = E1 * g1[i] + E2 * g2[i] + E4 * g4[i]
    return 0


cdef int step_controlled(Model *m, double *y, double dt, double tol, double *hsub) nogil:
    # one grid step of size dt, split into substeps while the embedded
    # third-order estimate exceeds tol (mixed absolute/relative)
    cdef double trial[MAXM]
    cdef double err[MAXM]
    cdef double left = dt, h, e, sc
    cdef int i, dim = m.n + 1, accept
    while left > 0.0:
        h = hsub[0]
        if h >= left * (1.0 - 1e-12):
            h = left
        for i in range(dim):
            trial[i] = y[i]
        accept = step_rosenbrock(m, trial, h, err) == 0
        if accept and tol > 0.0:
            e = 0.0
            for i in range(dim):
                sc = fabs(err[i]) / (tol * (1.0 + fabs(y[i])))
                if not isfinite(sc) or not isfinite(trial[i]):
                    sc = 1e300
                if sc > e:
                    e = sc
            accept = e <= 1.0
        if accept:
            for i in range(dim):
                y[i] = trial[i]
            left -= h
            if h == hsub[0] and hsub[0] < dt:
                hsub[0] = 2.0 * hsub[0]
                if hsub[0] > dt:
                    hsub[0] = dt
        else:
            hsub[0] = 0.5 * h
            if hsub[0] < dt * 1e-12:
                return 1
    return 0


def integrate_lure(const double[::1] y0, const double[:, ::1] A, const double[::1] B,
                   const double[::1] c,
                   double Vr, double pole, double inv_C0, double gain,
                   int phi_code, double p1, double p2, double dt, long nsteps,
                   long stride, int method, double[:, ::1] out, double tol=0.0):
    """Advance ``nsteps`` steps of size ``dt``, storing every ``stride``-th state.

    ``out`` must have ``nsteps // stride + 1`` rows; row 0 receives ``y0``.
    With ``tol > 0`` the Rosenbrock method subdivides a step whenever its
    embedded error estimate exceeds ``tol (1 + |y_i|)``.
    Returns ``(status, rows)``: status 0 on success, 1 when the state
    overflowed (``|y| > 1e9`` or non-finite); ``rows`` counts filled rows.
    """
    cdef int n = A.shape[0], dim = n + 1, i, bad = 0
    cdef long k, row = 0
    cdef double y[MAXM]
    cdef double err[MAXM]
    cdef double hsub = dt
    cdef Model m
    if dim > MAXM:
        raise ValueError("state dimension exceeds compiled limit")
    m.n = n
    m.A = &A[0, 0] if n > 0 else NULL
    m.B = &B[0] if n > 0 else NULL
    m.c = &c[0] if n > 0 else NULL
    m.Vr = Vr
    m.pole = pole
    m.inv_C0 = inv_C0
    m.gain = gain
    m.phi_code = phi_code
    m.p1 = p1
    m.p2 = p2
    for i in range(dim):
        y[i] = y0[i]
        out[0, i] = y[i]
    row = 1
    with nogil:
        for k in range(1, nsteps + 1):
            if method == 0:
                bad = step_rk4(&m, y, dt)
            elif tol > 0.0:
                bad = step_controlled(&m, y, dt, tol, &hsub)
            else:
                bad = step_rosenbrock(&m, y, dt, err)
            for i in range(dim):
                if not isfinite(y[i]) or fabs(y[i]) > 1e9:
                    bad = 1
                elif fabs(y[i]) < TINY:
                    # subnormals slow every later flop down by orders of magnitude
                    y[i] = 0.0
            if bad:
                break
            if k % stride == 0:
                for i in range(dim):
                    out[row, i] = y[i]
                row += 1
    return bad, row
