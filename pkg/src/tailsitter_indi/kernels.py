"""Inner-loop numeric kernels (filters, actuator lag, active-set WLS).

Every function here is written in the scalar-loop subset that numba
accepts, so the same source serves as the pure-Python fallback.
"""

import numpy as np

from ._accel import njit


@njit
def sos_step(sos, zi, x, y):
    """One sample through a cascade of biquads, transposed direct form II.

    sos: (n_sec, 6) rows [b0, b1, b2, 1, a1, a2]; zi: (n_sec, 2, n_ch)
    state updated in place; x, y: (n_ch,) input and output buffers.
    """
    n_sec = sos.shape[0]
    for c in range(x.shape[0]):
        v = x[c]
        for s in range(n_sec):
            out = sos[s, 0] * v + zi[s, 0, c]
            zi[s, 0, c] = sos[s, 1] * v - sos[s, 4] * out + zi[s, 1, c]
            zi[s, 1, c] = sos[s, 2] * v - sos[s, 5] * out
            v = out
        y[c] = v


@njit
def sos_block(sos, zi, xs, ys):
    """Run ``sos_step`` over the rows of ``xs`` (n_samples, n_ch)."""
    xbuf = np.empty(xs.shape[1])
    ybuf = np.empty(xs.shape[1])
    for k in range(xs.shape[0]):
        for c in range(xs.shape[1]):
            xbuf[c] = xs[k, c]
        sos_step(sos, zi, xbuf, ybuf)
        for c in range(xs.shape[1]):
            ys[k, c] = ybuf[c]


@njit
def sos_steady_state(sos, zi, level):
    """Load ``zi`` with the steady state reached under constant input ``level``."""
    n_sec = sos.shape[0]
    for c in range(level.shape[0]):
        v = level[c]
        for s in range(n_sec):
            b0, b1, b2 = sos[s, 0], sos[s, 1], sos[s, 2]
            a1, a2 = sos[s, 4], sos[s, 5]
            g = (b0 + b1 + b2) / (1.0 + a1 + a2)
            out = g * v
            zi[s, 1, c] = b2 * v - a2 * out
            zi[s, 0, c] = b1 * v - a1 * out + zi[s, 1, c]
            v = out


@njit
def actuator_step(u, u_c, a, max_step):
    """First-order lag u += clamp(a*(u_c - u), +-max_step), in place."""
    for i in range(u.shape[0]):
        du = a[i] * (u_c[i] - u[i])
        lim = max_step[i]
        if du > lim:
            du = lim
        elif du < -lim:
            du = -lim
        u[i] += du


@njit
def lstsq_qr(A, b):
    """Least-squares solution of a tall full-column-rank system by Householder QR."""
    m, n = A.shape
    R = A.copy()
    y = b.copy()
    for j in range(n):
        norm = 0.0
        for i in range(j, m):
            norm += R[i, j] * R[i, j]
        norm = np.sqrt(norm)
        if norm == 0.0:
            continue
        alpha = -norm if R[j, j] >= 0.0 else norm
        v = np.zeros(m)
        v[j] = R[j, j] - alpha
        for i in range(j + 1, m):
            v[i] = R[i, j]
        vnorm2 = 0.0
        for i in range(j, m):
            vnorm2 += v[i] * v[i]
        if vnorm2 == 0.0:
            continue
        for k in range(j, n):
            dot = 0.0
            for i in range(j, m):
                dot += v[i] * R[i, k]
            f = 2.0 * dot / vnorm2
            for i in range(j, m):
                R[i, k] -= f * v[i]
        dot = 0.0
        for i in range(j, m):
            dot += v[i] * y[i]
        f = 2.0 * dot / vnorm2
        for i in range(j, m):
            y[i] -= f * v[i]
    x = np.zeros(n)
    for j in range(n - 1, -1, -1):
        acc = y[j]
        for k in range(j + 1, n):
            acc -= R[j, k] * x[k]
        if R[j, j] != 0.0:
            x[j] = acc / R[j, j]
    return x


@njit
def wls_active_set(A, b, lo, hi, imax):
    """Box-constrained least squares min ||A x - b||^2, lo <= x <= hi.

    Primal active-set iteration started from x = 0, which must be feasible.
    Ties between blocking constraints or negative multipliers resolve to the
    lowest index. Returns (x, working_set, iterations, converged) where the
    working set holds -1 / +1 for variables fixed at lo / hi and 0 for free.
    """
    m, n = A.shape
    x = np.zeros(n)
    ws = np.zeros(n, dtype=np.int64)
    gscale = 0.0
    for j in range(n):
        s = 0.0
        for i in range(m):
            s += A[i, j] * b[i]
        if abs(s) > gscale:
            gscale = abs(s)
    tol = 1e-14 * (gscale + 1e-300)

    it = 0
    while it < imax:
        it += 1
        r = b.copy()
        for i in range(m):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[j]
            r[i] -= acc
        n_free = 0
        for j in range(n):
            if ws[j] == 0:
                n_free += 1
        p = np.zeros(n)
        if n_free > 0:
            Af = np.empty((m, n_free))
            col = 0
            for j in range(n):
                if ws[j] == 0:
                    for i in range(m):
                        Af[i, col] = A[i, j]
                    col += 1
            pf = lstsq_qr(Af, r)
            col = 0
            for j in range(n):
                if ws[j] == 0:
                    p[j] = pf[col]
                    col += 1

        feasible = True
        for j in range(n):
            if ws[j] == 0:
                xj = x[j] + p[j]
                if xj < lo[j] or xj > hi[j]:
                    feasible = False
                    break

        if feasible:
            for j in range(n):
                x[j] += p[j]
            # multipliers from the gradient of 0.5*||Ax - b||^2
            worst = -tol
            i_free = -1
            for j in range(n):
                if ws[j] == 0:
                    continue
                g = 0.0
                for i in range(m):
                    acc = 0.0
                    for k in range(n):
                        acc += A[i, k] * x[k]
                    g += A[i, j] * (acc - b[i])
                lam = -ws[j] * g
                if lam < worst:
                    worst = lam
                    i_free = j
            if i_free < 0:
                return x, ws, it, True
            ws[i_free] = 0
        else:
            alpha = 1.0
            i_block = -1
            for j in range(n):
                if ws[j] != 0 or p[j] == 0.0:
                    continue
                if p[j] < 0.0:
                    a_j = (lo[j] - x[j]) / p[j]
                else:
                    a_j = (hi[j] - x[j]) / p[j]
                if a_j < alpha:
                    alpha = a_j
                    i_block = j
            if alpha < 0.0:
                alpha = 0.0
            for j in range(n):
                if ws[j] == 0:
                    x[j] += alpha * p[j]
            if i_block >= 0:
                if p[i_block] < 0.0:
                    x[i_block] = lo[i_block]
                    ws[i_block] = -1
                else:
                    x[i_block] = hi[i_block]
                    ws[i_block] = 1
    return x, ws, it, False
