"""Pure numpy implementations of the time-stepping kernels."""

from __future__ import annotations

import numpy as np


def _hermitize(y: np.ndarray, perm: np.ndarray) -> np.ndarray:
    return 0.5 * (y + y[perm].conj())


def transpose_permutation(d: int) -> np.ndarray:
    """Index map sending vec(X) to vec(X^T) under column stacking."""
    idx = np.arange(d * d)
    return (idx // d) + d * (idx % d)


def rk4_propagate(l0, lp, y0, t0, dt, nsteps, omega, eta, t_off, d):
    """Classical RK4 for ``y' = (L0 + eta(t) cos(omega t) Lp) y``.

    ``eta(t)`` equals ``eta`` on steps whose midpoint precedes ``t_off`` and
    zero afterwards. Returns the
    ``(nsteps + 1, d*d)`` array of states, re-symmetrized after every step.
    """
    perm = transpose_permutation(d)
    out = np.empty((nsteps + 1, y0.shape[0]), dtype=complex)
    y = np.array(y0, dtype=complex)
    out[0] = y

    for n in range(nsteps):
        t = t0 + n * dt
        amp = eta if t + 0.5 * dt < t_off else 0.0

        def drive(s):
            return amp * np.cos(omega * s)

        a0, ap = l0 @ y, lp @ y
        k1 = a0 + drive(t) * ap
        y2 = y + 0.5 * dt * k1
        k2 = l0 @ y2 + drive(t + 0.5 * dt) * (lp @ y2)
        y3 = y + 0.5 * dt * k2
        k3 = l0 @ y3 + drive(t + 0.5 * dt) * (lp @ y3)
        y4 = y + dt * k3
        k4 = l0 @ y4 + drive(t + dt) * (lp @ y4)
        y = _hermitize(y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), perm)
        out[n + 1] = y
    return out


def memory_propagate(a, kernel, y0, dt, nsteps):
    """Heun predictor-corrector for ``y' = A y + int_0^t K(u) y(t - u) du``.

    ``kernel[j]`` samples ``K`` at ``u = j dt`` and is taken as zero beyond
    its length; the convolution uses the trapezoidal rule.
    """
    m = y0.shape[0]
    nk = kernel.shape[0]
    out = np.empty((nsteps + 1, m))
    out[0] = y0
    k0_half = 0.5 * dt * kernel[0]

    def history(n):
        # trapezoid weights for every term except the newest state y_n
        if n == 0:
            return np.zeros(m)
        acc = np.zeros(m)
        jmax = min(n - 1, nk - 1)
        if jmax >= 1:
            acc += dt * np.einsum("jab,jb->a", kernel[1:jmax + 1], out[n - 1:n - jmax - 1 if n - jmax - 1 >= 0 else None:-1])
        if n < nk:
            acc += 0.5 * dt * kernel[n] @ out[0]
        return acc

    f_prev = a @ out[0]
    for n in range(nsteps):
        hist = history(n + 1)
        y_pred = out[n] + dt * f_prev
        f_pred = a @ y_pred + (k0_half @ y_pred) + hist
        y_new = out[n] + 0.5 * dt * (f_prev + f_pred)
        out[n + 1] = y_new
        f_prev = a @ y_new + (k0_half @ y_new) + hist
    return out
