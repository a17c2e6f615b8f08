# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled time-stepping kernels; same contracts as ``_kernels_py``."""

import numpy as np
from libc.math cimport cos


cdef inline void _matvec(const double complex[:, ::1] m, const double complex[::1] x,
                         double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t i, j, n = m.shape[0]
    cdef double complex acc
    for i in range(n):
        acc = 0
        for j in range(n):
            acc = acc + m[i, j] * x[j]
        out[i] = acc


cdef inline void _stage(const double complex[:, ::1] l0, const double complex[:, ::1] lp,
                        const double complex[::1] x, double drive, double complex[::1] tmp,
                        double complex[::1] out) noexcept nogil:
    cdef Py_ssize_t i, n = l0.shape[0]
    _matvec(l0, x, out)
    if drive != 0.0:
        _matvec(lp, x, tmp)
        for i in range(n):
            out[i] = out[i] + drive * tmp[i]


cdef inline double _drive(double t, double omega, double eta, bint on) noexcept nogil:
    if on:
        return eta * cos(omega * t)
    return 0.0


def rk4_propagate(double complex[:, ::1] l0, double complex[:, ::1] lp, y0,
                  double t0, double dt, Py_ssize_t nsteps, double omega, double eta,
                  double t_off, Py_ssize_t d):
    cdef Py_ssize_t n = l0.shape[0]
    result = np.empty((nsteps + 1, n), dtype=np.complex128)
    cdef double complex[:, ::1] out = result
    cdef double complex[::1] y = np.array(y0, dtype=np.complex128)
    cdef double complex[::1] ys = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] tmp = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k1 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k2 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k3 = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] k4 = np.empty(n, dtype=np.complex128)
    cdef Py_ssize_t step, i, a, b, p, q
    cdef double t, h = dt
    cdef bint on
    cdef double complex u, v
    out[0, :] = y
    with nogil:
        for step in range(nsteps):
            t = t0 + step * h
            # the pump state is decided per step, so a switch-off on the grid is exact
            on = t + 0.5 * h < t_off
            _stage(l0, lp, y, _drive(t, omega, eta, on), tmp, k1)
            for i in range(n):
                ys[i] = y[i] + 0.5 * h * k1[i]
            _stage(l0, lp, ys, _drive(t + 0.5 * h, omega, eta, on), tmp, k2)
            for i in range(n):
                ys[i] = y[i] + 0.5 * h * k2[i]
            _stage(l0, lp, ys, _drive(t + 0.5 * h, omega, eta, on), tmp, k3)
            for i in range(n):
                ys[i] = y[i] + h * k3[i]
            _stage(l0, lp, ys, _drive(t + h, omega, eta, on), tmp, k4)
            for i in range(n):
                y[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
            # (y + conj(y^T)) / 2 in column-stacked coordinates
            for b in range(d):
                for a in range(b, d):
                    p = a + d * b
                    q = b + d * a
                    u = y[p]
                    v = y[q]
                    y[p] = 0.5 * (u + v.conjugate())
                    y[q] = 0.5 * (v + u.conjugate())
            out[step + 1, :] = y
    return result


def memory_propagate(double[:, ::1] a, double[:, :, ::1] kernel, y0, double dt,
                     Py_ssize_t nsteps):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t nk = kernel.shape[0]
    result = np.empty((nsteps + 1, m), dtype=np.float64)
    result[0] = np.asarray(y0, dtype=np.float64)
    cdef double[:, ::1] out = result
    cdef double[::1] hist = np.empty(m)
    cdef double[::1] f_prev = np.empty(m)
    cdef double[::1] y_pred = np.empty(m)
    cdef double[::1] f_pred = np.empty(m)
    cdef Py_ssize_t n, nn, j, jmax, r, c
    cdef double acc
    with nogil:
        for r in range(m):
            acc = 0.0
            for c in range(m):
                acc = acc + a[r, c] * out[0, c]
            f_prev[r] = acc
        for n in range(nsteps):
            nn = n + 1
            jmax = nn - 1
            if jmax > nk - 1:
                jmax = nk - 1
            for r in range(m):
                acc = 0.0
                for j in range(1, jmax + 1):
                    for c in range(m):
                        acc = acc + kernel[j, r, c] * out[nn - j, c]
                acc = acc * dt
                if nn < nk:
                    for c in range(m):
                        acc = acc + 0.5 * dt * kernel[nn, r, c] * out[0, c]
                hist[r] = acc
            for r in range(m):
                y_pred[r] = out[n, r] + dt * f_prev[r]
            for r in range(m):
                acc = hist[r]
                for c in range(m):
                    acc = acc + (a[r, c] + 0.5 * dt * kernel[0, r, c]) * y_pred[c]
                f_pred[r] = acc
            for r in range(m):
                out[nn, r] = out[n, r] + 0.5 * dt * (f_prev[r] + f_pred[r])
            for r in range(m):
                acc = hist[r]
                for c in range(m):
                    acc = acc + (a[r, c] + 0.5 * dt * kernel[0, r, c]) * out[nn, c]
                f_prev[r] = acc
    return result
