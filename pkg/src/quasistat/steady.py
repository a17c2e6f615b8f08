"""Quasi-stationary state of the pumped atom.

The effective generator lives on block-diagonal matrices plus the two
off-diagonal blocks linking the ground and top levels. All restrictions are
taken in an orthonormal Hermitian basis so that Hermiticity-preserving maps
have real coordinate matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg

from .lindblad import scenario_generators, unvec, vec
from .model import AtomSpec, Scenario

ZERO_TOL = 1e-10
GAP_TOL = 1e-6


def _hermitian_frame_basis(u: np.ndarray, v: np.ndarray, same: bool) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of ``span{u_a v_b^+}`` (plus adjoints when ``same`` is False)."""
    out = []
    na, nb = u.shape[1], v.shape[1]
    s = 1 / np.sqrt(2)
    for a in range(na):
        for b in range(nb):
            x = np.outer(u[:, a], v[:, b].conj())
            if same:
                if a == b:
                    out.append(x)
                elif a < b:
                    out.append(s * (x + x.conj().T))
                    out.append(s * 1j * (x - x.conj().T))
            else:
                out.append(s * (x + x.conj().T))
                out.append(s * 1j * (x - x.conj().T))
    return out


@dataclass(frozen=True, eq=False)
class BlockStructure:
    """Bases and projectors for the level-block decomposition of matrix space.

    ``diag_basis`` spans the block-diagonal matrices and ``pump_basis`` the
    off-diagonal ground/top blocks; both are ``(d*d, m)`` arrays of vectorized
    Hermitian matrices, orthonormal in the Hilbert-Schmidt inner product.
    """

    atom: AtomSpec
    diag_basis: np.ndarray
    pump_basis: np.ndarray
    level_slices: tuple

    @property
    def enlarged_basis(self) -> np.ndarray:
        return np.hstack([self.diag_basis, self.pump_basis])

    @property
    def n_diag(self) -> int:
        return self.diag_basis.shape[1]

    def block_projector(self, j: int, k: int) -> np.ndarray:
        """Superoperator ``X -> Pi_j X Pi_k``."""
        p = self.atom.projectors
        return np.kron(p[k].T, p[j])

    @property
    def diag_projector(self) -> np.ndarray:
        return self.diag_basis @ self.diag_basis.conj().T

    @property
    def pump_projector(self) -> np.ndarray:
        return self.pump_basis @ self.pump_basis.conj().T

    def restrict(self, superop: np.ndarray, basis: np.ndarray | None = None,
                 real: bool = True) -> np.ndarray:
        """Coordinate matrix ``B^+ S B`` of a superoperator on the span of ``basis``."""
        b = self.diag_basis if basis is None else basis
        m = b.conj().T @ superop @ b
        if real:
            scale = max(1.0, float(np.max(np.abs(m))))
            if np.max(np.abs(m.imag)) > 1e-10 * scale:
                raise ValueError("restricted map is not Hermiticity preserving")
            return m.real
        return m

    def to_coords(self, x: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
        b = self.diag_basis if basis is None else basis
        return (b.conj().T @ vec(x)).real

    def from_coords(self, c: np.ndarray, basis: np.ndarray | None = None) -> np.ndarray:
        b = self.diag_basis if basis is None else basis
        return unvec(b @ c, self.atom.dim)


def block_structure(atom: AtomSpec) -> BlockStructure:
    diag, slices, start = [], [], 0
    for f in atom.frames:
        elems = _hermitian_frame_basis(f, f, same=True)
        diag.extend(elems)
        slices.append(slice(start, start + len(elems)))
        start += len(elems)
    pump = _hermitian_frame_basis(atom.frames[-1], atom.frames[0], same=False)
    return BlockStructure(atom=atom,
                          diag_basis=np.column_stack([vec(x) for x in diag]),
                          pump_basis=np.column_stack([vec(x) for x in pump]),
                          level_slices=tuple(slices))


def _check_invariant(superop: np.ndarray, basis: np.ndarray, what: str) -> None:
    image = superop @ basis
    leak = image - basis @ (basis.conj().T @ image)
    scale = max(1.0, float(np.max(np.abs(superop))))
    if np.max(np.abs(leak)) > 1e-12 * scale:
        raise ValueError(f"{what} is not invariant (leak {np.max(np.abs(leak)):.2e})")


def effective_generator(scenario: Scenario) -> tuple[np.ndarray, BlockStructure]:
    """Real coordinate matrix of ``(eta/2) L_p + lambda^2 L_R`` on the enlarged block space.

    Coordinates are ordered as ``[diagonal blocks..., pump blocks...]``.
    """
    if scenario.lam == 0 and scenario.eta == 0:
        raise ValueError("effective generator needs lambda or eta nonzero")
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    full = 0.5 * scenario.eta * g.pump + scenario.lam ** 2 * g.reservoir
    _check_invariant(full, bs.enlarged_basis, "enlarged block space")
    return bs.restrict(full, bs.enlarged_basis), bs


def _restricted_inverse(reservoir: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Full-space superoperator equal to ``(B^+ L B)^{-1}`` on ``span(B)`` and zero elsewhere."""
    _check_invariant(reservoir, basis, "off-diagonal pump block")
    block = basis.conj().T @ reservoir @ basis
    if np.linalg.cond(block) > 1e12:
        raise np.linalg.LinAlgError("reservoir generator is singular on the pump blocks")
    return basis @ np.linalg.solve(block, basis.conj().T)


def restricted_resolvent(scenario: Scenario, which: str) -> np.ndarray:
    """Inverse of ``L_R`` on one off-diagonal block, ``'top_ground'`` or ``'ground_top'``.

    Returned as a full superoperator that vanishes off the block.
    """
    atom = scenario.atom
    top, ground = atom.frames[-1], atom.frames[0]
    if which == "top_ground":
        u, v = top, ground
    elif which == "ground_top":
        u, v = ground, top
    else:
        raise ValueError(which)
    basis = np.column_stack([vec(np.outer(u[:, a], v[:, b].conj()))
                             for a in range(u.shape[1]) for b in range(v.shape[1])])
    return _restricted_inverse(scenario_generators(scenario).reservoir, basis)


def pump_operator(scenario: Scenario, method: str = "closed_form") -> np.ndarray:
    """Second-order pump contribution acting on block-diagonal matrices.

    ``closed_form`` evaluates ``-lambda^2 P L_p (lambda^2 P' L_R P')^{-1} L_p P``
    with ``P'`` the off-diagonal pump blocks. ``laplace`` evaluates
    ``int_0^inf L_p e^{s L_R} L_p P ds`` through the resolvent and cross-checks
    it against adaptive quadrature. Both return a full superoperator.
    """
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    p_diag = bs.diag_projector
    lam2 = scenario.lam ** 2
    if method == "closed_form":
        if lam2 == 0:
            raise ValueError("closed form needs lambda nonzero")
        inv = _restricted_inverse(lam2 * g.reservoir, bs.pump_basis)
        return -lam2 * p_diag @ g.pump @ inv @ g.pump @ p_diag
    if method == "laplace":
        inv = _restricted_inverse(g.reservoir, bs.pump_basis)
        exact = -g.pump @ inv @ g.pump @ p_diag
        quad = _laplace_quadrature(g.reservoir, g.pump, bs)
        scale = max(1.0, float(np.max(np.abs(exact))))
        if np.max(np.abs(quad - exact)) > 1e-8 * scale:
            raise RuntimeError("Laplace quadrature disagrees with the resolvent form")
        return exact
    raise ValueError(f"unknown method {method!r}")


def _decay_horizon(generator: np.ndarray, tol: float = 1e-14) -> float:
    abscissa = float(np.max(np.linalg.eigvals(generator).real))
    if abscissa >= 0:
        raise ValueError("generator is not strictly decaying on the pump blocks")
    return np.log(1 / tol) / -abscissa


def _laplace_quadrature(reservoir, pump, bs: BlockStructure) -> np.ndarray:
    b = bs.pump_basis
    r_perp = b.conj().T @ reservoir @ b
    into = b.conj().T @ pump @ bs.diag_basis
    out = bs.diag_basis.conj().T @ pump @ b
    horizon = _decay_horizon(r_perp)

    def integrand(s):
        return (out @ linalg.expm(s * r_perp) @ into).ravel()

    val, _ = integrate.quad_vec(integrand, 0.0, horizon, epsabs=1e-13, epsrel=1e-11,
                                limit=2000)
    coords = val.reshape(out.shape[0], into.shape[1])
    return bs.diag_basis @ coords @ bs.diag_basis.conj().T


def decoherence_abscissas(scenario: Scenario) -> tuple[float, float]:
    """``(min Re spec L_R on diagonal blocks, max Re spec L_R on pump blocks)``."""
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    diag = np.linalg.eigvals(bs.restrict(g.reservoir))
    perp = np.linalg.eigvals(bs.restrict(g.reservoir, bs.pump_basis))
    return float(np.min(diag.real)), float(np.max(perp.real))


@dataclass(frozen=True)
class WeightedPump:
    operator: np.ndarray
    positivity_preserving: bool
    min_eigenvalue: float


def pump_operator_bar(scenario: Scenario, n_samples: int = 200) -> WeightedPump:
    """``int_0^inf e^{-s L_R} L_p e^{s L_R} L_p P ds`` under strong decoherence.

    Raises ``ValueError`` with both spectral abscissas when coherences do not
    decay faster than every population mode.
    """
    lo_diag, hi_perp = decoherence_abscissas(scenario)
    if not lo_diag > hi_perp:
        raise ValueError(f"strong decoherence fails: min Re on diagonal blocks {lo_diag:.6g} "
                         f"<= max Re on pump blocks {hi_perp:.6g}")
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    b, db = bs.pump_basis, bs.diag_basis
    r_diag = bs.restrict(g.reservoir, db, real=False)
    r_perp = bs.restrict(g.reservoir, b, real=False)
    into = b.conj().T @ g.pump @ db
    out = db.conj().T @ g.pump @ b
    rate = lo_diag - hi_perp
    horizon = np.log(1e14) / rate

    def integrand(s):
        return (linalg.expm(-s * r_diag) @ out @ linalg.expm(s * r_perp) @ into).ravel()

    val, _ = integrate.quad_vec(integrand, 0.0, horizon, epsabs=1e-13, epsrel=1e-11, limit=4000)
    coords = val.reshape(db.shape[1], db.shape[1]).real
    operator = db @ coords @ db.conj().T
    min_eig = _sampled_positivity(coords, bs, n_samples, seed=scenario.seed)
    return WeightedPump(operator=operator, positivity_preserving=min_eig >= -1e-9,
                        min_eigenvalue=min_eig)


def _sampled_positivity(coords: np.ndarray, bs: BlockStructure, n_samples: int,
                        seed: int) -> float:
    """Smallest eigenvalue of ``exp(t G) rho`` over random block-diagonal states and times."""
    rng = np.random.default_rng(seed)
    d = bs.atom.dim
    worst = np.inf
    times = np.geomspace(1e-2, 1e2, 9) / max(1e-300, float(np.max(np.abs(coords))))
    props = [linalg.expm(t * coords) for t in times]
    frames = bs.atom.frames
    for i in range(n_samples):
        if i % 2 == 0:
            # pure states inside one level are the extreme points of the block-diagonal states
            f = frames[(i // 2) % len(frames)]
            v = f @ (rng.normal(size=f.shape[1]) + 1j * rng.normal(size=f.shape[1]))
            rho = np.outer(v, v.conj())
        else:
            z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = sum(p @ z @ z.conj().T @ p for p in bs.atom.projectors)
        rho /= np.trace(rho).real
        c = bs.to_coords(rho)
        for prop in props:
            worst = min(worst, float(np.min(np.linalg.eigvalsh(_herm(bs.from_coords(prop @ c))))))
    return worst


def _herm(x):
    return 0.5 * (x + x.conj().T)


@dataclass(frozen=True)
class SteadyReport:
    rho_tilde: np.ndarray
    rho_inf: np.ndarray
    kernel_dim: int
    gap: float
    singular_values: np.ndarray


def _nullspace(mat: np.ndarray) -> tuple[np.ndarray, int, np.ndarray]:
    u, s, vh = np.linalg.svd(mat)
    smax = s[0] if s[0] > 0 else 1.0
    dim = int(np.sum(s < ZERO_TOL * smax))
    return vh[-max(dim, 1):].conj().T, dim, s


def _normalize_state(c: np.ndarray, bs: BlockStructure, basis: np.ndarray) -> np.ndarray:
    rho = unvec(basis @ c, bs.atom.dim)
    rho = rho / np.trace(rho)
    return _herm(rho)


def spectral_gap(coords: np.ndarray) -> float:
    """Smallest ``|Re z|`` over eigenvalues not numerically zero."""
    ev = np.linalg.eigvals(coords)
    scale = max(1.0, float(np.max(np.abs(ev))))
    nonzero = ev[np.abs(ev) > ZERO_TOL * scale * 10]
    return float(np.min(np.abs(nonzero.real))) if nonzero.size else np.inf


def balance_generator(scenario: Scenario) -> tuple[np.ndarray, BlockStructure]:
    """Coordinates of ``L_R + (eta^2 / 4 lambda^4) B`` on the block-diagonal matrices."""
    if scenario.lam == 0:
        raise ValueError("balance condition needs lambda nonzero")
    g = scenario_generators(scenario)
    bs = block_structure(scenario.atom)
    mat = g.reservoir
    if scenario.eta != 0:
        mat = mat + scenario.eta ** 2 / (4 * scenario.lam ** 4) * pump_operator(scenario)
    return bs.restrict(mat), bs


def balance_solve(scenario: Scenario, require_unique: bool = True) -> SteadyReport:
    """Unique trace-one block-diagonal solution of the balance condition.

    Also computes the kernel of the effective generator on the enlarged space
    and checks that its block-diagonal part reproduces the same state.
    """
    gen, bs = balance_generator(scenario)
    vecs, dim, s = _nullspace(gen)
    if require_unique and not (dim == 1 and (len(s) < 2 or s[-2] > GAP_TOL * s[0])):
        from .verify import spohn_irreducibility
        report = spohn_irreducibility(scenario_generators(scenario).jumps)
        raise np.linalg.LinAlgError(f"balance kernel has dimension {dim}; "
                                    f"irreducibility check: {report}")
    rho_inf = _normalize_state(vecs[:, -1], bs, bs.diag_basis)

    lam_tilde, _ = effective_generator(scenario)
    tvecs, tdim, _ = _nullspace(lam_tilde)
    rho_tilde = _normalize_state(tvecs[:, -1], bs, bs.enlarged_basis)
    from .model import block_diag_project
    mismatch = np.max(np.abs(block_diag_project(rho_tilde, scenario.atom) - rho_inf))
    if require_unique and mismatch > 1e-10:
        raise RuntimeError(f"effective kernel and balance solution differ by {mismatch:.2e}")
    return SteadyReport(rho_tilde=rho_tilde, rho_inf=rho_inf, kernel_dim=dim,
                        gap=spectral_gap(lam_tilde), singular_values=s)
