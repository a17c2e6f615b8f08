import warnings

import numpy as np
import pytest

from quasistat.einstein import (bb_check, bb_residual, einstein_A, einstein_B, einstein_table,
                                fluxes, invariant_cone_check, k0_coefficients,
                                spontaneous_blocks_explicit, spontaneous_blocks_projected)
from quasistat.lindblad import unvec, vec
from quasistat.model import RateTable, gibbs_state, make_scenario
from quasistat.steady import balance_solve, pump_operator

from helpers import degenerate_scenario, random_density, random_scenario

# -(eta^2 / 4 lambda^2) 2 Re(xi) / |xi|^2 with xi from the explicit-loop oracle
B41_ORACLE = 0.20209556185052094


@pytest.fixture(scope="module")
def table(atom4):
    return einstein_table(atom4)


def _level_state(frame, rng):
    v = frame @ (rng.normal(size=frame.shape[1]) + 1j * rng.normal(size=frame.shape[1]))
    return np.outer(v, v.conj())


def test_a_blocks_cross_check(atom4):
    einstein_A(atom4)


def test_a_blocks_cross_check_degenerate():
    sc = degenerate_scenario()
    a = spontaneous_blocks_projected(sc)
    b = spontaneous_blocks_explicit(sc)
    assert max(np.max(np.abs(a[k] - b[k])) for k in a) < 1e-12


def test_a_blocks_cross_check_random(rng):
    for _ in range(3):
        einstein_A(random_scenario(rng))


def test_a_offdiagonal_vanishes_without_rates(atom4):
    d = np.random.default_rng(3).normal(size=(4, 4))
    sc = make_scenario(atom4.atom.hamiltonian, list(atom4.coupling.operators),
                       RateTable(c=np.zeros((4, 4)), d=d), 0.5, 0.385, 0.148225, atom4.pump.h_p)
    a = einstein_A(sc)
    assert all(np.max(np.abs(b)) == 0 for (j, k), b in a.items() if j != k)


def test_a_maps_positive_blocks_to_positive_blocks(atom4, table, rng):
    frames = atom4.atom.frames
    for (j, k), blk in table.A.items():
        if j == k:
            continue
        for _ in range(5):
            out = unvec(blk @ vec(_level_state(frames[k], rng)))
            assert np.min(np.linalg.eigvalsh(0.5 * (out + out.conj().T))) > -1e-14


def test_column_sums_vanish(atom4, table, rng):
    frames = atom4.atom.frames
    n = table.n_levels
    for blocks in (table.A, table.B):
        for k in range(n):
            x = _level_state(frames[k], rng)
            total = sum(np.trace(unvec(blocks[(j, k)] @ vec(x))) for j in range(n) if (j, k) in blocks)
            assert abs(total) < 1e-14


def test_b_blocks_sum_to_pump_operator(atom4, table):
    scale = atom4.eta ** 2 / (4 * atom4.lam ** 2)
    diff = table.stimulated_total() - scale * pump_operator(atom4)
    assert np.max(np.abs(diff)) < 1e-10 * scale


def test_b_pump_levels_only(table):
    assert set(table.B) == {(0, 0), (0, 3), (3, 0), (3, 3)}
    assert (1, 2) not in table.B


def test_b41_scalar_rate(atom4, table):
    ground = atom4.atom.projectors[0]
    out = unvec(table.B[(3, 0)] @ vec(ground))
    top = atom4.atom.projectors[3]
    np.testing.assert_allclose(out, B41_ORACLE * top, atol=1e-14)
    out = unvec(table.B[(0, 3)] @ vec(top))
    np.testing.assert_allclose(out, B41_ORACLE * ground, atol=1e-14)


def test_b_scales_with_pump_squared(atom4, table):
    doubled = einstein_B(atom4.replace(eta=2 * atom4.eta))
    for key, blk in table.B.items():
        np.testing.assert_allclose(doubled[key], 4 * blk, rtol=0, atol=1e-15)


def test_b_zero_pump(atom4):
    b = einstein_B(atom4.replace(h_p=np.zeros((4, 4))))
    assert all(np.max(np.abs(x)) == 0 for x in b.values())


def test_fluxes(atom4, table, rng):
    f = fluxes(gibbs_state(atom4.atom, atom4.beta), table)
    assert f[3, 0] > 0
    mask = np.ones((4, 4), bool)
    mask[np.ix_([0, 3], [0, 3])] = False
    assert np.all(f[mask] == 0)
    middle = np.zeros((4, 4), complex)
    middle[1:3, 1:3] = random_density(rng, 2)
    assert np.max(np.abs(fluxes(middle, table))) == 0


def test_bb_relations_on_scalar_block_states(atom4, table, rng):
    assert np.max(np.abs(bb_check(np.eye(4) / 4, table))) == 0
    assert np.max(np.abs(bb_check(gibbs_state(atom4.atom, atom4.beta), table))) <= 1e-12
    p = rng.dirichlet(np.ones(4))
    assert np.max(np.abs(bb_check(np.diag(p).astype(complex), table))) <= 1e-12


def test_bb_relations_degenerate_k0():
    sc = degenerate_scenario()
    tab = einstein_table(sc)
    p = np.array([0.4, 0.3, 0.2, 0.1])
    rho = sum(pk / nk * pr for pk, nk, pr in zip(p, tab.degeneracies, tab.projectors))
    assert np.max(np.abs(bb_check(rho, tab))) <= 1e-12
    np.testing.assert_allclose(k0_coefficients(rho, tab), p, atol=1e-15)


def test_bb_check_rejects_states_outside_k0(table, rng):
    with pytest.raises(ValueError):
        bb_check(random_density(rng, 4), table)


def test_weak_pump_bb_residual_scaling():
    residuals = []
    for factor in (1.0, 0.1):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sc = degenerate_scenario(eta=0.385 ** 2 * factor)
        tab = einstein_table(sc)
        rho = balance_solve(sc).rho_inf
        residuals.append(np.max(np.abs(bb_residual(rho, tab, require_k0=False))))
    assert residuals[0] > 1e-8
    assert residuals[1] <= residuals[0] / 30


def test_full_cones_invariant(atom4, table):
    assert invariant_cone_check(atom4, table, ["full"] * 4)


def test_scalar_cones_invariant_nondegenerate(atom4, table):
    cones = [[pr.astype(complex)] for pr in atom4.atom.projectors]
    assert invariant_cone_check(atom4, table, cones)


def test_misaligned_cone_not_invariant():
    sc = degenerate_scenario()
    tab = einstein_table(sc)
    ground = sc.atom.frames[0]
    # a single pure ground state; the pump feeds back the state along h_p^+ instead
    ray = np.outer(ground[:, 0], ground[:, 0].conj()).astype(complex)
    cones = [[ray], "full", "full", "full"]
    assert not invariant_cone_check(sc, tab, cones)
