import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from quasistat.dynamics import (IntegrationError, Trajectory, integrate_master, integrate_pauli,
                                integrate_premaster, memory_kernel, pauli_state_at, period_average)
from quasistat.lindblad import scenario_generators
from quasistat.model import RunControls, block_diag_project, gibbs_state
from quasistat.steady import block_structure

from helpers import random_density, random_scenario

PERIOD = 2 * np.pi / 3


def test_uncoupled_gibbs_is_constant(atom4):
    sc = atom4.replace(lam=0.0, eta=0.0, run=RunControls(t_max=10.0))
    traj = integrate_master(sc)
    assert np.max(np.abs(traj.states - traj.states[0])) < 1e-14


def test_free_evolution_matches_exponential(atom4, rng):
    sc = atom4.replace(lam=0.0, eta=0.0, run=RunControls(t_max=5.0))
    rho0 = random_density(rng, 4)
    traj = integrate_master(sc, rho0=rho0)
    u = linalg.expm(-1j * traj.times[-1] * sc.atom.hamiltonian)
    assert np.max(np.abs(traj.states[-1] - u @ rho0 @ u.conj().T)) < 1e-7


def test_master_keeps_trace_and_positivity(atom4):
    traj = integrate_master(atom4.replace(run=RunControls(t_max=30.0)))
    assert np.max(traj.trace_dev) < 1e-12
    assert np.min(traj.min_eig) > -1e-10
    assert np.max(traj.herm_residual) < 1e-13


def test_master_rk4_order(atom4):
    sc = atom4.replace(run=RunControls(t_max=20.0))
    ref = integrate_master(sc, dt=PERIOD / 800).states[-1]
    e1 = np.max(np.abs(integrate_master(sc, dt=PERIOD / 100).states[-1] - ref))
    e2 = np.max(np.abs(integrate_master(sc, dt=PERIOD / 200).states[-1] - ref))
    assert e1 / e2 >= 12


def test_master_rejects_coarse_step(atom4):
    with pytest.raises(ValueError):
        integrate_master(atom4, dt=PERIOD / 10)


def test_pump_off_continues_without_pump(atom4):
    # switch-off on a grid point, so both runs take identical steps
    t_off = 10 * PERIOD
    full = integrate_master(atom4.replace(run=RunControls(t_max=2 * t_off, pump_off_time=t_off)))
    first = integrate_master(atom4.replace(run=RunControls(t_max=t_off)))
    second = integrate_master(atom4.replace(eta=0.0, run=RunControls(t_max=t_off)), rho0=first.states[-1])
    assert np.max(np.abs(full.states[-1] - second.states[-1])) < 1e-10


def test_premaster_grid_refinement(atom4):
    sc = atom4.replace(run=RunControls(t_max=60.0))
    a = integrate_premaster(sc, dt=PERIOD / 100).states[-1]
    b = integrate_premaster(sc, dt=PERIOD / 200).states[-1]
    assert np.max(np.abs(a - b)) <= 1e-5


def _augmented_oracle(scenario, rho0, t):
    # z(t) = int_0^t e^{lam^2 (t-s) R} L_p rho(s) ds turns the memory term into a linear ODE
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    pb, db = bs.pump_basis, bs.diag_basis
    lam2 = scenario.lam ** 2
    a = lam2 * bs.restrict(g.reservoir)
    r = lam2 * bs.restrict(g.reservoir, pb)
    into = (pb.conj().T @ g.pump @ db).real
    out = (db.conj().T @ g.pump @ pb).real
    nd, npb = a.shape[0], r.shape[0]
    big = np.zeros((nd + npb, nd + npb))
    big[:nd, :nd] = a
    big[:nd, nd:] = 0.25 * scenario.eta ** 2 * out
    big[nd:, :nd] = into
    big[nd:, nd:] = r
    y0 = np.concatenate([bs.to_coords(rho0), np.zeros(npb)])
    return bs.from_coords((linalg.expm(t * big) @ y0)[:nd])


def test_premaster_matches_augmented_exponential(atom4):
    sc = atom4.replace(run=RunControls(t_max=30.0))
    traj = integrate_premaster(sc, dt=PERIOD / 200)
    oracle = _augmented_oracle(sc, sc.initial_state(), 30.0)
    assert np.max(np.abs(traj.states[-1] - oracle)) < 1e-5


def test_premaster_rejects_coherent_initial_state(atom4, rng):
    with pytest.raises(ValueError):
        integrate_premaster(atom4, rho0=random_density(rng, 4))


def test_memory_kernel_decays(atom4):
    kernel, _ = memory_kernel(atom4, PERIOD / 50, 100000)
    assert kernel.shape[0] < 100000
    assert np.max(np.abs(kernel[-1])) < 1e-12 * max(1.0, np.max(np.abs(kernel[0])))


def test_pauli_and_premaster_agree_without_pump(atom4, rng):
    sc = atom4.replace(eta=0.0, run=RunControls(t_max=20.0))
    rho0 = block_diag_project(random_density(rng, 4), sc.atom)
    a = integrate_pauli(sc, rho0=rho0, dt=PERIOD / 50)
    b = integrate_premaster(sc, rho0=rho0, dt=PERIOD / 50)
    # Pauli steps are exact; the pre-master scheme is second order
    assert np.max(np.abs(a.states - b.states)) < 1e-6


def test_pauli_relaxes_to_gibbs_without_pump(atom4):
    sc = atom4.replace(eta=0.0)
    np.testing.assert_allclose(pauli_state_at(sc, 1e4), gibbs_state(sc.atom, sc.beta), atol=1e-10)


def test_pauli_grid_matches_single_exponential(atom4):
    sc = atom4.replace(run=RunControls(t_max=50.0))
    traj = integrate_pauli(sc)
    assert np.max(np.abs(traj.states[-1] - pauli_state_at(sc, 50.0))) < 1e-12


def test_master_approaches_pauli_as_coupling_shrinks(atom4):
    # sup over the last two pump periods at the rescaled time 50 / lambda^2
    dists = []
    for lam in (0.4, 0.2, 0.1):
        t_max = 50 / lam ** 2
        sc = atom4.replace(lam=lam, eta=lam ** 2, run=RunControls(t_max=t_max))
        traj = integrate_master(sc, dt=PERIOD / 50, check=False)
        tail = slice(-100, None, 10)
        dists.append(max(np.max(np.abs(block_diag_project(x, sc.atom) - pauli_state_at(sc, t)))
                         for x, t in zip(traj.states[tail], traj.times[tail])))
    assert dists[0] > dists[1] > dists[2]
    assert dists[0] / dists[2] > 10


def _trajectory(times, states):
    n = len(times)
    return Trajectory(times=times, states=states, trace_dev=np.zeros(n), min_eig=np.zeros(n),
                      herm_residual=np.zeros(n))


def test_period_average_of_constant(rng):
    rho = random_density(rng, 3)
    t = np.linspace(0, 10, 401)
    avg = period_average(_trajectory(t, np.repeat(rho[None], len(t), axis=0)), 3.0)
    assert np.max(np.abs(avg.states - rho)) < 1e-14


def test_period_average_removes_ripple(rng):
    rho = random_density(rng, 2)
    x = np.array([[0, 1], [1, 0]], dtype=complex) * 0.1
    t = np.linspace(0, 10, 2001)
    states = rho[None] + np.cos(3.0 * t)[:, None, None] * x[None]
    avg = period_average(_trajectory(t, states), 3.0)
    period = 2 * np.pi / 3
    inner = (t > period) & (t < t[-1] - period)
    assert np.max(np.abs(avg.states[inner] - rho)) < 1e-5


def test_period_average_needs_full_period(rng):
    t = np.linspace(0, 1, 11)
    rho = random_density(rng, 2)
    with pytest.raises(ValueError):
        period_average(_trajectory(t, np.repeat(rho[None], 11, axis=0)), 3.0)


def test_integration_error_reports_step(atom4):
    # an unphysical negative coupling makes the populations leave the simplex
    sc = atom4.replace(run=RunControls(t_max=5.0, initial=np.diag([0, 0, 0, 1.0]).astype(complex)))
    g = scenario_generators(sc)
    with pytest.raises(IntegrationError) as info:
        from quasistat.dynamics import _make_trajectory
        bad = np.repeat(np.diag([1.5, -0.5, 0, 0]).astype(complex)[None], 3, axis=0)
        _make_trajectory(np.arange(3.0), bad, True)
    assert info.value.step == 0
    assert g.reservoir.shape == (16, 16)


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_master_preserves_trace_on_random_scenarios(seed):
    rng = np.random.default_rng(seed)
    sc = random_scenario(rng)
    sc = sc.replace(run=RunControls(t_max=3.0))
    traj = integrate_master(sc, rho0=random_density(rng, sc.atom.dim), check=False)
    assert np.max(traj.trace_dev) < 1e-10
    assert np.min(traj.min_eig) > -1e-8
