"""Generalized Einstein coefficients.

Spontaneous blocks ``A[j, k]`` and stimulated blocks ``B[j, k]`` map
level-``k`` block matrices to level-``j`` block matrices. Every block is
stored as a full superoperator that vanishes outside its block pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize

from .lindblad import commutator, left, right, sandwich, scenario_generators, unvec, vec
from .model import Scenario
from .steady import pump_operator, restricted_resolvent


@dataclass(frozen=True, eq=False)
class EinsteinTable:
    """Spontaneous and stimulated transition blocks of one scenario."""

    A: dict
    B: dict
    degeneracies: np.ndarray
    projectors: np.ndarray

    @property
    def n_levels(self) -> int:
        return len(self.degeneracies)

    def stimulated_total(self) -> np.ndarray:
        return sum(self.B.values())

    def spontaneous_total(self) -> np.ndarray:
        return sum(self.A.values())


def _level_block(projectors, j, k):
    return np.kron(projectors[k].T, projectors[j])


def spontaneous_blocks_projected(scenario: Scenario) -> dict:
    """``lambda^2 P_jj L_R P_kk`` for every level pair."""
    projs = scenario.atom.projectors
    n = len(projs)
    lr = scenario.lam ** 2 * scenario_generators(scenario).reservoir
    return {(j, k): _level_block(projs, j, j) @ lr @ _level_block(projs, k, k)
            for j in range(n) for k in range(n)}


def spontaneous_blocks_explicit(scenario: Scenario) -> dict:
    """Einstein A blocks assembled from jump operators alone.

    Off-diagonal blocks collect the gain terms ``c V X V^+``; diagonal blocks
    add the loss terms and the level shift compressed to the level. That
    compression is a multiple of the identity, and hence drops out, unless
    the level is degenerate.
    """
    g = scenario_generators(scenario)
    jumps = g.jumps
    projs = scenario.atom.projectors
    n = len(projs)
    d = scenario.atom.dim
    lam2 = scenario.lam ** 2
    out = {(j, k): np.zeros((d * d, d * d), dtype=complex) for j in range(n) for k in range(n)}
    m = jumps.rates.shape[0]
    for k in range(n):
        pk = _level_block(projs, k, k)
        out[(k, k)] += lam2 * commutator(projs[k] @ g.lamb_shift @ projs[k]) @ pk
        for l in range(m):
            for j in range(n):
                c = jumps.rates[l, j, k]
                if c == 0:
                    continue
                v = jumps.ops[l, j, k]
                vv = v.conj().T @ v
                # jump k -> j populates block j; the same jump drains block k
                out[(j, k)] += lam2 * c * sandwich(v, v.conj().T) @ pk
                out[(k, k)] -= lam2 * 0.5 * c * (left(vv) + right(vv)) @ pk
    return out


def einstein_A(scenario: Scenario, tol: float = 1e-12) -> dict:
    projected = spontaneous_blocks_projected(scenario)
    explicit = spontaneous_blocks_explicit(scenario)
    scale = max(1.0, max(float(np.max(np.abs(b))) for b in projected.values()))
    worst = max(float(np.max(np.abs(projected[key] - explicit[key]))) for key in projected)
    if worst > tol * scale:
        raise RuntimeError(f"A blocks disagree by {worst:.2e}")
    return projected


def stimulated_blocks(scenario: Scenario) -> dict:
    """Lambda-free stimulated blocks on ``{ground, top}`` built from ``h_p`` and block resolvents."""
    h = scenario.pump.h_p
    hd = h.conj().T
    c_tg = restricted_resolvent(scenario, "top_ground")
    c_gt = restricted_resolvent(scenario, "ground_top")
    n = scenario.atom.n_levels
    g, t = 0, n - 1
    # X -> -C_tg(h X) h^+ - h C_gt(X h^+) on the ground block, etc.
    return {
        (t, g): -(right(hd) @ c_tg @ left(h) + left(h) @ c_gt @ right(hd)),
        (g, g): left(hd) @ c_tg @ left(h) + right(h) @ c_gt @ right(hd),
        (g, t): -(left(hd) @ c_tg @ right(h) + right(h) @ c_gt @ left(hd)),
        (t, t): right(hd) @ c_tg @ right(h) + left(h) @ c_gt @ left(hd),
    }


def einstein_B(scenario: Scenario, tol: float = 1e-10) -> dict:
    """Stimulated blocks scaled by ``eta^2 / (4 lambda^2)``; checked against the pump operator."""
    if scenario.lam == 0:
        raise ValueError("stimulated blocks need lambda nonzero")
    projs = scenario.atom.projectors
    raw = stimulated_blocks(scenario)
    # restrict each map to its source block
    raw = {(j, k): b @ _level_block(projs, k, k) for (j, k), b in raw.items()}
    total = pump_operator(scenario)
    scale = max(1.0, float(np.max(np.abs(total))))
    err = float(np.max(np.abs(sum(raw.values()) - total)))
    if err > tol * scale:
        raise RuntimeError(f"stimulated blocks do not sum to the pump operator ({err:.2e})")
    factor = scenario.eta ** 2 / (4 * scenario.lam ** 2)
    return {key: factor * b for key, b in raw.items()}


def einstein_table(scenario: Scenario) -> EinsteinTable:
    return EinsteinTable(A=einstein_A(scenario), B=einstein_B(scenario),
                         degeneracies=scenario.atom.degeneracies,
                         projectors=scenario.atom.projectors)


def fluxes(rho: np.ndarray, table: EinsteinTable) -> np.ndarray:
    """Stimulated fluxes ``f[j, k] = Tr B_jk(Pi_k rho Pi_k)``."""
    n = table.n_levels
    out = np.zeros((n, n))
    for (j, k), b in table.B.items():
        blk = table.projectors[k] @ rho @ table.projectors[k]
        out[j, k] = np.trace(unvec(b @ vec(blk))).real
    return out


def k0_coefficients(rho: np.ndarray, table: EinsteinTable, tol: float | None = 1e-10) -> np.ndarray:
    """Populations ``p_k`` of a state ``sum_k p_k Pi_k / n_k``; rejects other states when ``tol`` is set."""
    projs, n_k = table.projectors, table.degeneracies
    p = np.array([np.trace(pr @ rho).real for pr in projs])
    if tol is not None:
        recon = sum(pk / nk * pr for pk, nk, pr in zip(p, n_k, projs))
        if np.max(np.abs(recon - rho)) > tol:
            raise ValueError("state is not a combination of normalized level projectors")
    return p


def bb_residual(rho: np.ndarray, table: EinsteinTable, require_k0: bool = True) -> np.ndarray:
    """``r[j, k] = p_j n_k f[j, k] - p_k n_j f[k, j]``."""
    p = k0_coefficients(rho, table, 1e-10 if require_k0 else None)
    f = fluxes(rho, table)
    n_k = table.degeneracies
    return p[:, None] * n_k[None, :] * f - (p[:, None] * n_k[None, :] * f).T


def bb_check(rho: np.ndarray, table: EinsteinTable) -> np.ndarray:
    return bb_residual(rho, table, require_k0=True)


def _in_cone(x: np.ndarray, cone, tol: float) -> bool:
    x = 0.5 * (x + x.conj().T)
    scale = max(1.0, float(np.max(np.abs(x))))
    if isinstance(cone, str):
        if cone != "full":
            raise ValueError(cone)
        return float(np.min(np.linalg.eigvalsh(x))) >= -tol * scale
    rays = np.column_stack([np.concatenate([r.real.ravel(), r.imag.ravel()]) for r in cone])
    target = np.concatenate([x.real.ravel(), x.imag.ravel()])
    _, resid = optimize.nnls(rays, target)
    return resid <= tol * scale * 10


def _cone_rays(cone, frame: np.ndarray, rng) -> list:
    if not isinstance(cone, str):
        return [np.asarray(r, dtype=complex) for r in cone]
    n = frame.shape[1]
    rays = [np.outer(frame[:, a], frame[:, a].conj()) for a in range(n)]
    for _ in range(4 * n):
        z = frame @ (rng.normal(size=n) + 1j * rng.normal(size=n))
        rays.append(np.outer(z, z.conj()) / np.vdot(z, z).real)
    return rays


def invariant_cone_check(scenario: Scenario, table: EinsteinTable, cones: list,
                         times=(0.1, 1.0, 10.0, 100.0), tol: float = 1e-10) -> bool:
    """Check that both block semigroups keep the union of level cones inside its convex hull.

    ``cones[k]`` is either ``"full"`` (all positive level-``k`` matrices) or a
    list of positive level-``k`` matrices generating a polyhedral cone.
    """
    rng = np.random.default_rng(scenario.seed)
    frames = scenario.atom.frames
    projs = table.projectors
    gens = [table.spontaneous_total(), table.stimulated_total()]
    for gen in gens:
        props = [linalg.expm(t * gen) for t in times]
        for k, cone in enumerate(cones):
            for ray in _cone_rays(cone, frames[k], rng):
                for prop in props:
                    out = unvec(prop @ vec(ray))
                    for j, cone_j in enumerate(cones):
                        if not _in_cone(projs[j] @ out @ projs[j], cone_j, tol):
                            return False
    return True
