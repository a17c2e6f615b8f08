"""Finite Fourier truncation of the Floquet generator of the periodically pumped atom.

A ``2 pi / omega``-periodic matrix function ``X(t) = sum_k X_k e^{-i k omega t}``
is stored as the stack of its modes ``k = -K..K``. The generator
``-d/dt + L_t`` then acts blockwise: mode ``k`` carries
``-i k omega + L_at + lambda^2 L_R`` and ``cos(omega t)`` couples neighbouring
modes through ``(eta / 2) L_p``. Cutting the mode sum at ``|k| <= K`` is the
only approximation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .lindblad import scenario_generators
from .model import Scenario
from .steady import block_structure, effective_generator

CONTOUR_TOL = 1e-8
ZERO_TOL = 1e-8
MAX_ANGLE = 0.3


@dataclass(frozen=True, eq=False)
class HowlandMatrix:
    """Dense truncated Floquet generator on modes ``-K..K``."""

    cutoff: int
    omega: float
    dim: int
    matrix: np.ndarray
    bohr: np.ndarray

    @property
    def block(self) -> int:
        return self.dim * self.dim

    def mode_slice(self, k: int) -> slice:
        if abs(k) > self.cutoff:
            raise IndexError(f"mode {k} outside the truncation")
        start = (k + self.cutoff) * self.block
        return slice(start, start + self.block)

    def unperturbed_eigenvalues(self) -> np.ndarray:
        """``-i (k omega + E_a - E_b)`` for every mode and every matrix unit."""
        modes = np.arange(-self.cutoff, self.cutoff + 1)
        return (-1j * (modes[:, None] * self.omega + self.bohr[None, :])).ravel()


def build_howland(scenario: Scenario, cutoff: int) -> HowlandMatrix:
    if cutoff < 2:
        raise ValueError("Fourier cutoff must be at least 2")
    g = scenario_generators(scenario)
    d = scenario.atom.dim
    nb = d * d
    n_modes = 2 * cutoff + 1
    base = g.free + scenario.lam ** 2 * g.reservoir
    coupling = 0.5 * scenario.eta * g.pump
    mat = np.zeros((n_modes * nb, n_modes * nb), dtype=complex)
    eye = np.eye(nb)
    for i, k in enumerate(range(-cutoff, cutoff + 1)):
        sl = slice(i * nb, (i + 1) * nb)
        mat[sl, sl] = base - 1j * k * scenario.omega * eye
        if i + 1 < n_modes:
            nxt = slice((i + 1) * nb, (i + 2) * nb)
            mat[sl, nxt] = coupling
            mat[nxt, sl] = coupling
    # Bohr frequencies E_a - E_b of the matrix units e_ab in column-stacked order
    energies = np.linalg.eigvalsh(scenario.atom.hamiltonian)
    bohr = (energies[:, None] - energies[None, :]).reshape(-1, order="F")
    return HowlandMatrix(cutoff=cutoff, omega=scenario.omega, dim=d, matrix=mat, bohr=bohr)


@dataclass(frozen=True, eq=False)
class RieszSubspace:
    """Spectral data of the eigenvalues inside one circle.

    ``right @ left.conj().T`` is the (generally oblique) Riesz projection.
    """

    center: complex
    radius: float
    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def projector(self) -> np.ndarray:
        return self.right @ self.left.conj().T


@dataclass(frozen=True, eq=False)
class _Eigen:
    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray


def _eigen(h: HowlandMatrix) -> _Eigen:
    values, vectors = linalg.eig(h.matrix)
    return _Eigen(values=values, vectors=vectors, inverse=linalg.inv(vectors))


def default_radius(h: HowlandMatrix, eps: float) -> float:
    """Half the distance from ``-i eps`` to the nearest other unperturbed eigenvalue."""
    z0 = h.unperturbed_eigenvalues()
    dist = np.abs(z0 + 1j * eps)
    others = dist[dist > 1e-9 * (1.0 + h.omega)]
    return 0.5 * float(np.min(others))


def riesz_subspace(h: HowlandMatrix, eps: float, radius: float | None = None,
                   eig: _Eigen | None = None) -> RieszSubspace:
    """Eigenvectors of ``h`` with eigenvalues inside ``|z + i eps| < radius``.

    The dimension must match the number of unperturbed eigenvalues in the
    same disc.
    """
    radius = default_radius(h, eps) if radius is None else radius
    eig = _eigen(h) if eig is None else eig
    center = -1j * eps
    dist = np.abs(eig.values - center)
    if np.any(np.abs(dist - radius) < CONTOUR_TOL):
        raise ValueError("an eigenvalue lies on the Riesz contour")
    inside = dist < radius
    expected = int(np.sum(np.abs(h.unperturbed_eigenvalues() - center) < radius))
    if int(inside.sum()) != expected:
        raise ValueError(f"Riesz subspace has dimension {int(inside.sum())}, "
                         f"unperturbed count is {expected}")
    return RieszSubspace(center=center, radius=radius, eigenvalues=eig.values[inside],
                         right=eig.vectors[:, inside], left=eig.inverse[inside, :].conj().T)


def zero_mode_embedding(scenario: Scenario, h: HowlandMatrix) -> np.ndarray:
    """Isometry from enlarged-block coordinates onto the unperturbed zero-energy subspace.

    Block-diagonal parts sit in mode 0, the ground/top coherence in mode
    ``+1`` and the top/ground coherence in mode ``-1``, where the free
    rotation cancels the mode frequency.
    """
    bs = block_structure(scenario.atom)
    basis = bs.enlarged_basis
    n = scenario.atom.n_levels
    emb = np.zeros((h.matrix.shape[0], basis.shape[1]), dtype=complex)
    emb[h.mode_slice(0)] = bs.diag_projector @ basis
    emb[h.mode_slice(1)] = bs.block_projector(0, n - 1) @ basis
    emb[h.mode_slice(-1)] = bs.block_projector(n - 1, 0) @ basis
    return emb


def _effective(scenario: Scenario) -> np.ndarray:
    # without reservoir and pump the effective generator vanishes identically
    if scenario.lam == 0 and scenario.eta == 0:
        n = block_structure(scenario.atom).enlarged_basis.shape[1]
        return np.zeros((n, n))
    return effective_generator(scenario)[0]


def compressed_generator(scenario: Scenario, h: HowlandMatrix) -> np.ndarray:
    """``J^+ G J`` for the zero-mode embedding ``J``; equals the effective generator."""
    emb = zero_mode_embedding(scenario, h)
    return emb.conj().T @ h.matrix @ emb


@dataclass(frozen=True, eq=False)
class SpectralReport:
    cutoff: int
    eigenvalues: np.ndarray
    gap: float
    gap_over_lambda2: float
    zero_eigenvalue: complex
    zero_multiplicity: int
    side_multiplicities: tuple
    other_max_real: float
    compression_error: float
    riesz: dict = field(default_factory=dict)


def _window(values: np.ndarray, omega: float) -> np.ndarray:
    # keep away from the truncation edges
    return values[np.abs(values) <= 2 * omega]


def _report(scenario: Scenario, h: HowlandMatrix) -> SpectralReport:
    eig = _eigen(h)
    vals = _window(eig.values, h.omega)
    omega = h.omega
    zero = vals[np.argmin(np.abs(vals))]
    zero_mult = int(np.sum(np.abs(vals) <= ZERO_TOL))
    side = tuple(int(np.sum(np.abs(vals - s * 1j * omega) <= ZERO_TOL)) for s in (-1, 1))
    floquet_copies = np.abs(vals.real) <= ZERO_TOL
    relaxing = vals[~floquet_copies]
    gap = float(np.min(np.abs(relaxing.real))) if relaxing.size else np.inf
    other_max = float(np.max(relaxing.real)) if relaxing.size else -np.inf
    riesz = {}
    for eps in (-omega, 0.0, omega):
        riesz[eps] = riesz_subspace(h, eps, eig=eig)
    lam_tilde = _effective(scenario)
    comp = compressed_generator(scenario, h)
    comp_err = float(np.linalg.norm(comp - lam_tilde, 2))
    lam2 = scenario.lam ** 2
    return SpectralReport(cutoff=h.cutoff, eigenvalues=vals, gap=gap,
                          gap_over_lambda2=gap / lam2 if lam2 else np.inf,
                          zero_eigenvalue=complex(zero), zero_multiplicity=zero_mult,
                          side_multiplicities=side, other_max_real=other_max,
                          compression_error=comp_err, riesz=riesz)


def _healthy(rep: SpectralReport, lam: float) -> bool:
    if lam == 0:
        return True
    return rep.zero_multiplicity == 1 and rep.gap > ZERO_TOL and rep.other_max_real < 0


def spectral_report(scenario: Scenario, cutoff: int = 8) -> SpectralReport:
    """Spectrum, gap and Riesz subspaces of the truncated Floquet generator.

    When the gap collapses the cutoff is doubled once before giving up.
    """
    rep = _report(scenario, build_howland(scenario, cutoff))
    if _healthy(rep, scenario.lam):
        return rep
    rep = _report(scenario, build_howland(scenario, 2 * cutoff))
    if not _healthy(rep, scenario.lam):
        raise RuntimeError(f"spectral gap collapsed at cutoff {2 * cutoff}: gap={rep.gap:.3e}, "
                           f"zero multiplicity={rep.zero_multiplicity}")
    return rep


def gap_constant(scenario: Scenario, lams=(0.4, 0.2, 0.1), cutoff: int = 8) -> tuple[float, np.ndarray]:
    """Largest ``c`` with ``gap >= c lambda^2`` over ``lams`` (pump strength ``eta = lambda^2``)."""
    ratios = np.array([spectral_report(scenario.replace(lam=lam, eta=lam ** 2), cutoff).gap_over_lambda2
                       for lam in lams])
    return float(np.min(ratios)), ratios


@dataclass(frozen=True, eq=False)
class SemigroupComparison:
    alphas: np.ndarray
    distances: np.ndarray
    max_angle: float

    @property
    def sup(self) -> float:
        return float(np.max(self.distances))


def semigroup_compare(scenario: Scenario, cutoff: int = 8, alphas=None) -> SemigroupComparison:
    """Distance between the compressed semigroups of the unperturbed and perturbed zero subspaces.

    ``exp(alpha P G P)`` with ``P`` the Riesz projection at zero is compared to
    the same expression with ``P`` replaced by the orthogonal projection onto the
    unperturbed zero subspace, on which the compressed generator is the
    effective generator. The operator norm is taken on the full truncated space.
    """
    alphas = np.linspace(0.0, 50.0, 51) if alphas is None else np.asarray(alphas, dtype=float)
    h = build_howland(scenario, cutoff)
    riesz = riesz_subspace(h, 0.0)
    emb = zero_mode_embedding(scenario, h)
    q, _ = np.linalg.qr(riesz.right)
    angles = linalg.subspace_angles(q, emb)
    max_angle = float(np.max(angles))
    if max_angle > MAX_ANGLE:
        raise ValueError(f"Riesz subspace and zero-mode embedding differ by {max_angle:.3f} rad")
    lam_tilde = _effective(scenario)
    n = h.matrix.shape[0]
    eye = np.eye(n)
    p_riesz = riesz.projector()
    p_free = emb @ emb.conj().T
    dists = np.empty(len(alphas))
    for i, a in enumerate(alphas):
        exact = eye - p_riesz + (riesz.right * np.exp(a * riesz.eigenvalues)) @ riesz.left.conj().T
        effective = eye - p_free + emb @ linalg.expm(a * lam_tilde) @ emb.conj().T
        dists[i] = np.linalg.norm(exact - effective, 2)
    return SemigroupComparison(alphas=alphas, distances=dists, max_angle=max_angle)
