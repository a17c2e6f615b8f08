"""Structural checks on generators and jump families."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lindblad import JumpFamily, scenario_generators
from .model import RateTable, RunControls, Scenario, make_scenario

CHOI_TOL = 1e-10


@dataclass(frozen=True)
class VerifyReport:
    name: str
    passed: bool
    witness: dict = field(default_factory=dict)

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        details = ", ".join(f"{k}={v}" for k, v in self.witness.items() if np.isscalar(v))
        return f"{self.name}: {status} ({details})"


def commutant_dimension(ops: list[np.ndarray], tol: float = 1e-10) -> int:
    """Dimension of ``{X : [X, V] = 0 for all V in ops}``."""
    if not ops:
        raise ValueError("need at least one operator")
    d = ops[0].shape[0]
    eye = np.eye(d)
    # vec([X, V]) = (V^T kron 1 - 1 kron V) vec(X)
    system = np.vstack([np.kron(v.T, eye) - np.kron(eye, v) for v in ops])
    s = np.linalg.svd(system, compute_uv=False)
    scale = s[0] if s[0] > 0 else 1.0
    return int(d * d - np.sum(s > tol * scale))


def spohn_irreducibility(jumps: JumpFamily) -> VerifyReport:
    """Pass iff the active jump operators have a trivial commutant."""
    ops = [v for _, _, _, v in jumps.active()]
    if not ops:
        return VerifyReport("spohn_irreducibility", False, {"commutant_dim": jumps.dim ** 2})
    dim = commutant_dimension(ops)
    return VerifyReport("spohn_irreducibility", dim == 1, {"commutant_dim": dim})


def choi_matrix(superop: np.ndarray) -> np.ndarray:
    """``sum_ij E_ij kron L(E_ij)`` for a column-stacked superoperator."""
    d = int(round(np.sqrt(superop.shape[0])))
    # reshape L[(a,b),(c,e)] with row index a + d b, column c + d e
    t = superop.reshape(d, d, d, d, order="F")  # t[a, b, c, e]
    return t.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def gkls_check(superop: np.ndarray, tol: float = CHOI_TOL) -> VerifyReport:
    """Hermiticity preservation, trace annihilation and conditional complete positivity."""
    d = int(round(np.sqrt(superop.shape[0])))
    scale = max(1.0, float(np.max(np.abs(superop))))
    # X -> L(X^+)^+ must equal L
    perm = np.arange(d * d).reshape(d, d).T.ravel()
    conj_map = np.conj(superop[np.ix_(perm, perm)])
    herm_res = float(np.max(np.abs(conj_map - superop)))
    trace_row = np.eye(d).reshape(-1, order="F") @ superop
    trace_res = float(np.max(np.abs(trace_row)))
    choi = choi_matrix(superop)
    omega = np.eye(d).reshape(-1) / np.sqrt(d)
    proj = np.eye(d * d) - np.outer(omega, omega)
    compressed = proj @ choi @ proj
    compressed = 0.5 * (compressed + compressed.conj().T)
    min_eig = float(np.min(np.linalg.eigvalsh(compressed)))
    passed = herm_res <= 1e-12 * scale and trace_res <= 1e-12 * scale and min_eig >= -tol * scale
    return VerifyReport("gkls", passed, {"hermiticity_residual": herm_res,
                                         "trace_residual": trace_res,
                                         "min_choi_eigenvalue": min_eig})


def pump_block_eigenvalue(scenario: Scenario) -> tuple[complex, float]:
    """Best scalar fit of the reservoir generator on the top/ground block, with its residual."""
    atom = scenario.atom
    top, ground = atom.frames[-1], atom.frames[0]
    basis = np.column_stack([np.outer(top[:, a], ground[:, b].conj()).reshape(-1, order="F")
                             for a in range(top.shape[1]) for b in range(ground.shape[1])])
    block = basis.conj().T @ scenario_generators(scenario).reservoir @ basis
    xi = complex(np.trace(block) / block.shape[0])
    residual = float(np.linalg.norm(block - xi * np.eye(block.shape[0]), 2))
    return xi, residual


def b_positivity_condition(scenario: Scenario) -> VerifyReport:
    """Sufficient condition for the pump operator to generate a positive semigroup.

    When the reservoir generator acts as a scalar ``xi`` on the top/ground
    block, the pump operator splits into a Lindblad-type part and a jump part;
    its extension to full matrix space is checked with ``gkls_check``.
    """
    from .einstein import stimulated_blocks
    from .lindblad import left, right

    xi, residual = pump_block_eigenvalue(scenario)
    witness = {"xi": xi, "residual": residual}
    if residual > 1e-10:
        return VerifyReport("b_positivity", False, witness)
    h = scenario.pump.h_p
    hd = h.conj().T
    delta = h @ hd / np.conj(xi) + hd @ h / xi
    blocks = stimulated_blocks(scenario)
    n = scenario.atom.n_levels
    jump_part = blocks[(n - 1, 0)] + blocks[(0, n - 1)]
    extension = left(delta) + right(delta.conj().T) + jump_part
    report = gkls_check(extension)
    witness.update({"extension_min_choi_eigenvalue": report.witness["min_choi_eigenvalue"],
                    "re_xi": xi.real})
    return VerifyReport("b_positivity", report.passed and xi.real <= 0, witness)


def block_localize(superop: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``sum_eps 1_eps L 1_eps`` over eigenspaces of ``[H, .]``."""
    d = h.shape[0]
    evals, evecs = np.linalg.eigh(h)
    u = evecs
    # in the eigenbasis of H, 1_eps keeps matrix units e_ab with E_a - E_b = eps
    diffs = (evals[:, None] - evals[None, :]).reshape(-1, order="F")
    tol = 1e-9 * (1.0 + float(np.max(np.abs(evals))))
    basis_change = np.kron(u.T, u.conj().T)  # vec(U^+ X U) = (U^T kron U^+) vec(X)
    inner = basis_change @ superop @ basis_change.conj().T
    order = np.argsort(diffs, kind="stable")
    labels = np.empty(d * d, dtype=int)
    label, prev = 0, diffs[order[0]]
    for idx in order:
        if diffs[idx] - prev > tol:
            label += 1
        labels[idx] = label
        prev = diffs[idx]
    mask = labels[:, None] == labels[None, :]
    return basis_change.conj().T @ (inner * mask) @ basis_change


def localized_jumps(jumps: JumpFamily, h: np.ndarray) -> list[np.ndarray]:
    """Components ``1_eps(V)`` of every active jump operator."""
    evals, u = np.linalg.eigh(h)
    tol = 1e-9 * (1.0 + float(np.max(np.abs(evals))))
    diffs = evals[:, None] - evals[None, :]
    values = np.sort(diffs.ravel())
    groups = [values[0]]
    for v in values[1:]:
        if v - groups[-1] > tol:
            groups.append(v)
    out = []
    for _, _, _, v in jumps.active():
        w = u.conj().T @ v @ u
        for eps in groups:
            part = np.where(np.abs(diffs - eps) <= tol, w, 0.0)
            if np.any(np.abs(part) > 1e-14):
                out.append(u @ part @ u.conj().T)
    return out


def counterexample_scenario(gamma1_inv: complex, gamma2_inv: complex, beta: float = 1.0,
                            q3: float = 0.0, lam: float = 1.0, eta: float = 1.0) -> Scenario:
    """Three-level model whose top level is doubly degenerate.

    The reservoir generator acts on the two top/ground coherences with the
    prescribed eigenvalues ``gamma_i``; rates obey the thermal ratio at ``beta``.
    An extra diagonal coupling of strength ``q3`` on the ground state adds pure
    dephasing of both coherences.
    """
    g1, g2 = 1 / complex(gamma1_inv), 1 / complex(gamma2_inv)
    if not (g1.real < 0 and g2.real < 0):
        raise ValueError("block eigenvalues must have negative real parts")
    boltz = np.exp(-beta)
    # Re g_i = -(c_i + boltz (c_1 + c_2)) / 2 with c_i the downward rates
    mat = np.array([[1 + boltz, boltz], [boltz, 1 + boltz]])
    c_down = np.linalg.solve(mat, -2 * np.array([g1.real, g2.real]))
    if np.any(c_down < 0):
        raise ValueError("block eigenvalues cannot be realized with non-negative rates")
    # Im g_i = (d_i(down) - d_1(up) - d_2(up)) / 2; choose upward shifts zero
    d_down = 2 * np.array([g1.imag, g2.imag])
    h = np.diag([0.0, 1.0, 1.0])
    q1 = np.zeros((3, 3)); q1[0, 1] = q1[1, 0] = 1.0
    q2 = np.zeros((3, 3)); q2[0, 2] = q2[2, 0] = 1.0
    ops, tables = [q1, q2], []
    for c, dd in zip(c_down, d_down):
        # level indices [j, k]: [0, 1] is the downward jump top -> ground
        tables.append(RateTable(c=[[0.0, c], [c * boltz, 0.0]], d=[[0.0, dd], [0.0, 0.0]]))
    if q3:
        q = np.zeros((3, 3)); q[0, 0] = q3
        ops.append(q)
        tables.append(RateTable(c=[[1.0, 0.0], [0.0, 0.0]], d=np.zeros((2, 2))))
    h_p = np.zeros((3, 3)); h_p[1, 0] = h_p[2, 0] = 1.0
    return make_scenario(h, ops, tables, beta, lam, eta, h_p, run=RunControls(t_max=10.0))


def pump_positivity_counterexample(gamma1_inv: complex, gamma2_inv: complex,
                                   q3: float = 0.0) -> VerifyReport:
    """Stimulated ground-to-top block applied to the ground state; fails when it is indefinite."""
    from .einstein import stimulated_blocks

    sc = counterexample_scenario(gamma1_inv, gamma2_inv, q3=q3)
    blocks = stimulated_blocks(sc)
    e11 = np.zeros((3, 3), dtype=complex); e11[0, 0] = 1.0
    image = (blocks[(1, 0)] @ e11.reshape(-1, order="F")).reshape(3, 3, order="F")
    lower = -image[1:, 1:]
    det = float(np.linalg.det(lower).real)
    # realized block eigenvalues, shifted by the dephasing coupling when present
    res = scenario_generators(sc).reservoir
    units = [np.zeros((3, 3)) for _ in range(2)]
    units[0][1, 0] = units[1][2, 0] = 1.0
    g1, g2 = (1 / complex(u.reshape(-1, order="F") @ res @ u.reshape(-1, order="F"))
              for u in units)
    closed = 4 * g1.real * g2.real - abs(g1 + np.conj(g2)) ** 2
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (image + image.conj().T))))
    return VerifyReport("pump_positivity", det >= -1e-12,
                        {"D": det, "D_closed_form": closed, "block": lower,
                         "min_eigenvalue": min_eig})


def run_all(scenario: Scenario) -> list[VerifyReport]:
    """Every checker applicable to one scenario."""
    g = scenario_generators(scenario)
    reports = [spohn_irreducibility(g.jumps), gkls_check(g.reservoir)]
    t = 0.123 * 2 * np.pi / scenario.omega
    from .lindblad import generator_at_time
    frozen = gkls_check(generator_at_time(scenario, t))
    reports.append(VerifyReport("gkls_frozen_time", frozen.passed, frozen.witness))
    reports.append(b_positivity_condition(scenario))
    localized = block_localize(g.reservoir, scenario.pump.hamiltonian)
    loc = gkls_check(localized)
    dim = commutant_dimension(localized_jumps(g.jumps, scenario.pump.hamiltonian))
    reports.append(VerifyReport("block_localization", loc.passed and dim == 1,
                                {"commutant_dim": dim, **loc.witness}))
    return reports
