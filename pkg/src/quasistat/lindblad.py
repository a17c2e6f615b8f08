"""Superoperators of the effective atomic dynamics.

Matrices are vectorized by column stacking, so ``vec(A X B) = (B^T kron A) vec(X)``.
A superoperator is a plain ``(d*d, d*d)`` complex array.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from .model import AtomSpec, CouplingSpec, ExpRadial, PumpSpec, RateTable, Scenario, Tabulated


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    if d is None:
        d = int(round(np.sqrt(v.shape[-1])))
    return np.asarray(v).reshape(d, d, order="F")


def left(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X``."""
    return np.kron(np.eye(a.shape[0]), a)


def right(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> X A``."""
    return np.kron(a.T, np.eye(a.shape[0]))


def sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> A X B``."""
    return np.kron(b.T, a)


def commutator(h: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> -i [H, X]``."""
    return -1j * (left(h) - right(h))


def apply(superop: np.ndarray, x: np.ndarray) -> np.ndarray:
    return unvec(superop @ vec(x), x.shape[0])


# ---------------------------------------------------------------------------
# Spectral densities and their principal parts

def spectral_density(coupling: CouplingSpec, ell: int, x):
    """Thermal spectral density of the ``ell``-th coupling at energy ``x``."""
    return _density(coupling.spectral[ell], coupling.beta, x)


def _density(spec, beta: float, x):
    x = np.asarray(x, dtype=float)
    if isinstance(spec, ExpRadial):
        # expit keeps full relative precision for large negative beta x
        fermi = special.expit(beta * x)
        return 4 * np.pi * spec.c ** 2 * np.exp(-2 * spec.a * np.abs(x)) * fermi
    if isinstance(spec, Tabulated):
        if np.any(x < spec.x[0]) or np.any(x > spec.x[-1]):
            raise ValueError("energy outside the tabulated range")
        return np.interp(x, spec.x, spec.f_beta)
    raise TypeError("spectral density is undefined for directly tabulated rates")


def principal_value(spec, beta: float, shift: float, rtol: float = 1e-8) -> float:
    """``PV int f(x + shift) / x dx`` over the real line."""
    if isinstance(spec, Tabulated):
        return _pv_piecewise_linear(spec.x, spec.f_beta, shift)
    if not isinstance(spec, ExpRadial):
        raise TypeError("principal value needs a spectral density")

    f = functools.partial(_density, spec, beta)
    peak = max(float(f(0.0)), float(f(shift)), float(f(abs(shift))))
    if peak == 0.0:
        return 0.0
    # cut-off where both tails fall below 1e-12 of the peak
    cutoff = abs(shift) + 1.0
    while max(float(f(shift + cutoff)), float(f(shift - cutoff))) > 1e-12 * peak:
        cutoff *= 2.0

    def integrand(x):
        return (f(shift + x) - f(shift - x)) / x

    # kink of |.| sits at x = |shift|
    points = [abs(shift)] if 0.0 < abs(shift) < cutoff else None
    value, err = integrate.quad(integrand, 0.0, cutoff, points=points, limit=400,
                                epsabs=1e-14 * peak, epsrel=1e-11)
    if err > rtol * max(abs(value), peak):
        raise RuntimeError(f"principal-value quadrature did not converge (error {err:.2e})")
    return float(value)


def _pv_piecewise_linear(xs: np.ndarray, fs: np.ndarray, shift: float) -> float:
    # PV int f(y)/(y - shift) dy for the linear interpolant of (xs, fs), zero outside.
    lo, hi = xs[0], xs[-1]
    f0 = float(np.interp(shift, xs, fs)) if lo <= shift <= hi else 0.0
    total = 0.0
    if f0 != 0.0:
        total += f0 * np.log(abs((hi - shift) / (lo - shift)))
    for y0, y1, g0, g1 in zip(xs[:-1], xs[1:], fs[:-1], fs[1:]):
        slope = (g1 - g0) / (y1 - y0)
        total += slope * (y1 - y0)
        coef = g0 + slope * (shift - y0) - f0
        if abs(coef) > 1e-15 * (abs(g0) + abs(g1) + abs(f0) + 1e-300):
            total += coef * np.log(abs((y1 - shift) / (y0 - shift)))
    return float(total)


# ---------------------------------------------------------------------------
# Jump operators

@dataclass(frozen=True, eq=False)
class JumpFamily:
    """Jump operators ``V[l, j, k] = Pi_j Q_l Pi_k`` with rates and level shifts.

    Arrays are indexed ``[l, j, k]`` over coupling index and level pair.
    """

    ops: np.ndarray
    rates: np.ndarray
    shifts: np.ndarray
    energies: np.ndarray

    @property
    def dim(self) -> int:
        return self.ops.shape[-1]

    def gap(self, j: int, k: int) -> float:
        """Bohr frequency ``E_j - E_k`` of the transition ``k -> j``."""
        return float(self.energies[j] - self.energies[k])

    def active(self, tol: float = 0.0):
        """Yield ``(l, j, k, V)`` for every jump with a nonzero rate and nonzero operator."""
        m, n, _ = self.rates.shape
        for l in range(m):
            for j in range(n):
                for k in range(n):
                    v = self.ops[l, j, k]
                    if self.rates[l, j, k] > tol and np.any(v != 0):
                        yield l, j, k, v


def build_jumps(atom: AtomSpec, coupling: CouplingSpec) -> JumpFamily:
    n, d, m = atom.n_levels, atom.dim, coupling.count
    projs = atom.projectors
    ops = np.zeros((m, n, n, d, d), dtype=complex)
    rates = np.zeros((m, n, n))
    shifts = np.zeros((m, n, n))
    for l, (q, spec) in enumerate(zip(coupling.operators, coupling.spectral)):
        if isinstance(spec, RateTable):
            if spec.c.shape != (n, n):
                raise ValueError(f"rate table {l} must be {n}x{n}")
            rates[l], shifts[l] = spec.c, spec.d
        for j in range(n):
            for k in range(n):
                ops[l, j, k] = projs[j] @ q @ projs[k]
                if isinstance(spec, RateTable):
                    continue
                delta = atom.energies[k] - atom.energies[j]
                rates[l, j, k] = np.pi * float(_density(spec, coupling.beta, delta))
                # level shifts only enter through transitions with nonzero Bohr frequency
                if j != k:
                    shifts[l, j, k] = principal_value(spec, coupling.beta, delta)
    return JumpFamily(ops=ops, rates=rates, shifts=shifts, energies=atom.energies.copy())


def build_lamb_shift(jumps: JumpFamily) -> np.ndarray:
    """Hermitian level-shift Hamiltonian; diagonal transitions are excluded."""
    m, n, _ = jumps.rates.shape
    h = np.zeros((jumps.dim, jumps.dim), dtype=complex)
    for l in range(m):
        for j in range(n):
            for k in range(n):
                if j == k or jumps.shifts[l, j, k] == 0.0:
                    continue
                v = jumps.ops[l, j, k]
                h -= 0.5 * jumps.shifts[l, j, k] * (v.conj().T @ v)
    return 0.5 * (h + h.conj().T)


def jump_dissipator(v: np.ndarray) -> np.ndarray:
    """Superoperator of ``X -> V X V^+ - (V^+V X + X V^+V)/2``."""
    vv = v.conj().T @ v
    return sandwich(v, v.conj().T) - 0.5 * (left(vv) + right(vv))


def build_dissipator(jumps: JumpFamily) -> np.ndarray:
    d = jumps.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for l, j, k, v in jumps.active():
        out += jumps.rates[l, j, k] * jump_dissipator(v)
    return out


def build_free_generator(atom: AtomSpec) -> np.ndarray:
    return commutator(atom.hamiltonian)


def build_pump_generator(pump: PumpSpec) -> np.ndarray:
    return commutator(pump.hamiltonian)


def build_reservoir_generator(atom: AtomSpec, coupling: CouplingSpec) -> np.ndarray:
    jumps = build_jumps(atom, coupling)
    return commutator(build_lamb_shift(jumps)) + build_dissipator(jumps)


class Generators(NamedTuple):
    free: np.ndarray
    pump: np.ndarray
    reservoir: np.ndarray
    jumps: JumpFamily
    lamb_shift: np.ndarray


@functools.lru_cache(maxsize=128)
def _cached_reservoir(atom: AtomSpec, coupling: CouplingSpec):
    jumps = build_jumps(atom, coupling)
    lamb = build_lamb_shift(jumps)
    return jumps, lamb, commutator(lamb) + build_dissipator(jumps)


def scenario_generators(scenario: Scenario) -> Generators:
    """All time-independent generators of a scenario, cached per atom/coupling pair."""
    jumps, lamb, reservoir = _cached_reservoir(scenario.atom, scenario.coupling)
    return Generators(free=build_free_generator(scenario.atom),
                      pump=build_pump_generator(scenario.pump),
                      reservoir=reservoir, jumps=jumps, lamb_shift=lamb)


def generator_at_time(scenario: Scenario, t: float) -> np.ndarray:
    """``L_at + eta cos(omega t) L_p + lambda^2 L_R`` at time ``t``."""
    g = scenario_generators(scenario)
    return g.free + scenario.eta * np.cos(scenario.omega * t) * g.pump + scenario.lam ** 2 * g.reservoir
