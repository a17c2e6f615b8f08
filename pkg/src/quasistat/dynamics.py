"""Time evolution: master, pre-master and Pauli equations, plus period averaging."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._backend import kernels
from .lindblad import scenario_generators, vec
from .model import Scenario, block_diag_project
from .steady import BlockStructure, block_structure, pump_operator

TRACE_TOL = 1e-8
HERM_TOL = 1e-10
POSITIVITY_TOL = 1e-7


class IntegrationError(RuntimeError):
    def __init__(self, message: str, step: int):
        super().__init__(f"{message} at step {step}")
        self.step = step


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a time grid with per-step diagnostics."""

    times: np.ndarray
    states: np.ndarray
    trace_dev: np.ndarray
    min_eig: np.ndarray
    herm_residual: np.ndarray
    info: dict = field(default_factory=dict)

    def populations(self, atom) -> np.ndarray:
        return np.stack([[np.trace(f.conj().T @ s @ f).real for f in atom.frames]
                         for s in self.states])


def _diagnostics(states: np.ndarray):
    traces = np.trace(states, axis1=1, axis2=2)
    herm = np.max(np.abs(states - np.conj(np.swapaxes(states, 1, 2))), axis=(1, 2))
    sym = 0.5 * (states + np.conj(np.swapaxes(states, 1, 2)))
    min_eig = np.linalg.eigvalsh(sym)[:, 0]
    return np.abs(traces - 1.0), min_eig, herm


def _make_trajectory(times, states, check: bool, min_eig_tol=POSITIVITY_TOL, **info) -> Trajectory:
    trace_dev, min_eig, herm = _diagnostics(states)
    if check:
        for name, bad in (("trace deviation", trace_dev > TRACE_TOL),
                          ("Hermiticity residual", herm > HERM_TOL),
                          ("negative eigenvalue", min_eig < -min_eig_tol)):
            if np.any(bad):
                raise IntegrationError(f"{name} beyond tolerance", int(np.argmax(bad)))
    return Trajectory(times=times, states=states, trace_dev=trace_dev, min_eig=min_eig,
                      herm_residual=herm, info=info)


def _grid(t_max: float, dt: float) -> tuple[int, float]:
    nsteps = max(1, int(round(t_max / dt)))
    return nsteps, t_max / nsteps


def integrate_master(scenario: Scenario, rho0: np.ndarray | None = None,
                     t_max: float | None = None, dt: float | None = None,
                     check: bool = True) -> Trajectory:
    """RK4 solution of ``rho' = (L_at + eta cos(omega t) L_p + lambda^2 L_R) rho``.

    The pump is switched off from ``scenario.run.pump_off_time`` on. The step
    is adjusted so that it divides ``t_max``.
    """
    rho0 = scenario.initial_state() if rho0 is None else np.asarray(rho0, dtype=complex)
    t_max = scenario.run.t_max if t_max is None else t_max
    dt = scenario.default_dt() if dt is None else dt
    period = 2 * np.pi / scenario.omega
    if dt > period / 50 * (1 + 1e-12):
        raise ValueError("master-equation step must resolve the pump period (dt <= period/50)")
    nsteps, dt = _grid(t_max, dt)
    g = scenario_generators(scenario)
    l0 = np.ascontiguousarray(g.free + scenario.lam ** 2 * g.reservoir)
    lp = np.ascontiguousarray(g.pump, dtype=complex)
    t_off = scenario.run.pump_off_time
    t_off = np.inf if t_off is None else float(t_off)
    d = scenario.atom.dim
    ys = kernels.rk4_propagate(l0, lp, vec(rho0).astype(complex), 0.0, dt, nsteps,
                               scenario.omega, scenario.eta, t_off, d)
    states = np.asarray(ys).reshape(nsteps + 1, d, d).transpose(0, 2, 1)
    return _make_trajectory(np.arange(nsteps + 1) * dt, states, check)


def _require_block_diagonal(rho0: np.ndarray, scenario: Scenario) -> None:
    if np.max(np.abs(block_diag_project(rho0, scenario.atom) - rho0)) > 1e-12:
        raise ValueError("initial state must be block diagonal")


def memory_kernel(scenario: Scenario, dt: float, n_max: int,
                  tol: float = 1e-12) -> tuple[np.ndarray, BlockStructure]:
    """Samples ``(eta^2/4) P L_p e^{lambda^2 u L_R} L_p P`` at ``u = j dt`` in block coordinates.

    Sampling stops once the propagator on the pump blocks has decayed below
    ``tol`` or after ``n_max`` samples.
    """
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    pb, db = bs.pump_basis, bs.diag_basis
    step = linalg.expm(scenario.lam ** 2 * dt * bs.restrict(g.reservoir, pb))
    into = (pb.conj().T @ g.pump @ db).real
    out = (db.conj().T @ g.pump @ pb).real
    samples = []
    prop = np.eye(pb.shape[1])
    for _ in range(n_max):
        samples.append(out @ prop @ into)
        prop = step @ prop
        if np.linalg.norm(prop, 2) < tol:
            samples.append(out @ prop @ into)
            break
    kernel = 0.25 * scenario.eta ** 2 * np.array(samples)
    return np.ascontiguousarray(kernel), bs


def integrate_premaster(scenario: Scenario, rho0: np.ndarray | None = None,
                        t_max: float | None = None, dt: float | None = None,
                        check: bool = True) -> Trajectory:
    """Solve the block-diagonal integro-differential equation with memory kernel.

    ``rho' = lambda^2 L_R rho + (eta^2 / 4) int_0^t P L_p e^{lambda^2 u L_R} L_p rho(t - u) du``,
    which is the original form after substituting ``s = lambda^2 u``. After
    the pump switch-off the memory term vanishes.
    """
    if scenario.lam == 0:
        raise ValueError("pre-master equation needs lambda nonzero")
    return _with_pump_off(_premaster_segment, scenario, rho0, t_max, dt, check)


def _with_pump_off(segment, scenario, rho0, t_max, dt, check) -> Trajectory:
    rho0 = scenario.initial_state() if rho0 is None else np.asarray(rho0, dtype=complex)
    _require_block_diagonal(rho0, scenario)
    t_max = scenario.run.t_max if t_max is None else t_max
    dt = scenario.default_dt() if dt is None else dt
    t_off = scenario.run.pump_off_time
    if t_off is None or t_off >= t_max or scenario.eta == 0:
        return segment(scenario, rho0, t_max, dt, check)
    first = segment(scenario, rho0, t_off, dt, check)
    second = segment(scenario.replace(eta=0.0), first.states[-1], t_max - t_off, dt, check)
    info = {**second.info, **first.info}
    return Trajectory(times=np.concatenate([first.times, t_off + second.times[1:]]),
                      states=np.concatenate([first.states, second.states[1:]]),
                      trace_dev=np.concatenate([first.trace_dev, second.trace_dev[1:]]),
                      min_eig=np.concatenate([first.min_eig, second.min_eig[1:]]),
                      herm_residual=np.concatenate([first.herm_residual, second.herm_residual[1:]]),
                      info=info)


def _premaster_segment(scenario, rho0, t_max, dt, check) -> Trajectory:
    nsteps, dt = _grid(t_max, dt)
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    a = np.ascontiguousarray(scenario.lam ** 2 * bs.restrict(g.reservoir))
    if scenario.eta == 0:
        kernel = np.zeros((1, bs.n_diag, bs.n_diag))
    else:
        kernel, _ = memory_kernel(scenario, dt, nsteps + 1)
    ys = kernels.memory_propagate(a, kernel, bs.to_coords(rho0), dt, nsteps)
    states = np.stack([bs.from_coords(y) for y in np.asarray(ys)])
    return _make_trajectory(np.arange(nsteps + 1) * dt, states, check,
                            kernel_length=int(kernel.shape[0]))


def pauli_generator(scenario: Scenario) -> tuple[np.ndarray, BlockStructure]:
    """Block coordinates of ``lambda^2 P L_R P + (eta^2 / 4 lambda^2) B``."""
    if scenario.lam == 0:
        raise ValueError("Pauli equation needs lambda nonzero")
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    gen = scenario.lam ** 2 * g.reservoir
    if scenario.eta != 0:
        gen = gen + scenario.eta ** 2 / (4 * scenario.lam ** 2) * pump_operator(scenario)
    return bs.restrict(gen), bs


def integrate_pauli(scenario: Scenario, rho0: np.ndarray | None = None,
                    t_max: float | None = None, dt: float | None = None,
                    check: bool = True) -> Trajectory:
    """Exact propagation of the autonomous Pauli equation on block-diagonal matrices."""
    if scenario.lam == 0:
        raise ValueError("Pauli equation needs lambda nonzero")
    return _with_pump_off(_pauli_segment, scenario, rho0, t_max, dt, check)


def _pauli_segment(scenario, rho0, t_max, dt, check) -> Trajectory:
    nsteps, dt = _grid(t_max, dt)
    gen, bs = pauli_generator(scenario)
    step = linalg.expm(dt * gen)
    c = bs.to_coords(rho0)
    coords = np.empty((nsteps + 1, c.shape[0]))
    coords[0] = c
    for n in range(nsteps):
        c = step @ c
        coords[n + 1] = c
    states = np.stack([bs.from_coords(y) for y in coords])
    return _make_trajectory(np.arange(nsteps + 1) * dt, states, check)


def pauli_state_at(scenario: Scenario, t: float, rho0: np.ndarray | None = None) -> np.ndarray:
    """Pauli solution at a single time via one matrix exponential."""
    rho0 = scenario.initial_state() if rho0 is None else np.asarray(rho0, dtype=complex)
    _require_block_diagonal(rho0, scenario)
    gen, bs = pauli_generator(scenario)
    return bs.from_coords(linalg.expm(t * gen) @ bs.to_coords(rho0))


def period_average(traj: Trajectory, omega: float) -> Trajectory:
    """Centered moving average over one pump period, trace renormalized.

    Near the ends the window is clipped to the available samples.
    """
    period = 2 * np.pi / omega
    t = traj.times
    if t[-1] - t[0] < period * (1 - 1e-12):
        raise ValueError("trajectory is shorter than one pump period")
    half = 0.5 * period
    out = np.empty_like(traj.states)
    for i, ti in enumerate(t):
        lo, hi = max(t[0], ti - half), min(t[-1], ti + half)
        out[i] = _window_mean(t, traj.states, lo, hi)
        out[i] /= np.trace(out[i])
    return _make_trajectory(t, out, check=False)


def _window_mean(t: np.ndarray, states: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # trapezoid over the samples inside [lo, hi] with linearly interpolated end points
    i0 = np.searchsorted(t, lo, side="left")
    i1 = np.searchsorted(t, hi, side="right")
    inner_t = t[i0:i1]
    inner_s = states[i0:i1]
    pts_t = [lo, *inner_t, hi]
    pts_s = [_interp(t, states, lo), *inner_s, _interp(t, states, hi)]
    pts_t = np.asarray(pts_t)
    pts_s = np.asarray(pts_s)
    w = np.diff(pts_t)
    integral = np.tensordot(w, 0.5 * (pts_s[1:] + pts_s[:-1]), axes=1)
    return integral / (hi - lo)


def _interp(t: np.ndarray, states: np.ndarray, x: float) -> np.ndarray:
    i = int(np.clip(np.searchsorted(t, x) - 1, 0, len(t) - 2))
    w = (x - t[i]) / (t[i + 1] - t[i])
    return (1 - w) * states[i] + w * states[i + 1]
