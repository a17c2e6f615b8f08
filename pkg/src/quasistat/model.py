"""Domain types for the pumped impurity model.

The atom is described by a Hermitian matrix whose eigenvalues are grouped
into energy levels. Everything downstream (jump operators, block-diagonal
projections, Einstein blocks) is expressed through the level projectors.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

HERMITIAN_TOL = 1e-12


def hermiticity_residual(a: np.ndarray) -> float:
    """Max-entry norm of ``a - a^dagger``."""
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def _require_hermitian(a: np.ndarray, name: str, tol: float = HERMITIAN_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(a))))
    if hermiticity_residual(a) > tol * scale:
        raise ValueError(f"{name} is not Hermitian (residual {hermiticity_residual(a):.3e})")


@dataclass(frozen=True, eq=False)
class AtomSpec:
    """Spectral resolution of an atomic Hamiltonian.

    Attributes
    ----------
    hamiltonian : (d, d) complex array
    energies : (N,) ascending level energies
    frames : list of (d, n_k) arrays with orthonormal columns spanning each level
    """

    hamiltonian: np.ndarray
    energies: np.ndarray
    frames: tuple

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    @property
    def degeneracies(self) -> np.ndarray:
        return np.array([f.shape[1] for f in self.frames], dtype=int)

    @property
    def projectors(self) -> np.ndarray:
        """Level projectors stacked as an (N, d, d) array."""
        return np.stack([f @ f.conj().T for f in self.frames])

    @property
    def omega(self) -> float:
        """Resonant pump frequency, top level minus ground level."""
        return float(self.energies[-1] - self.energies[0])

    def transition_frequencies(self) -> np.ndarray:
        """Sorted distinct values of ``E_j - E_k``."""
        diffs = (self.energies[:, None] - self.energies[None, :]).ravel()
        return _unique_sorted(diffs, 1e-9 * (1.0 + np.max(np.abs(self.energies))))


def _unique_sorted(values: np.ndarray, tol: float) -> np.ndarray:
    values = np.sort(values)
    out = [values[0]]
    for v in values[1:]:
        if v - out[-1] > tol:
            out.append(v)
    return np.array(out)


def build_atom(hamiltonian: np.ndarray, level_tol: float | None = None) -> AtomSpec:
    """Diagonalize ``hamiltonian`` and group eigenvalues into levels.

    Eigenvalues closer than ``level_tol`` to their predecessor are chained
    into the same level. The default tolerance is ``1e-9 * (1 + ||H||_inf)``.
    """
    h = np.array(hamiltonian, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("Hamiltonian must be a square matrix")
    if h.shape[0] < 2:
        raise ValueError("atom dimension must be at least 2")
    _require_hermitian(h, "Hamiltonian")
    h = 0.5 * (h + h.conj().T)
    if level_tol is None:
        level_tol = 1e-9 * (1.0 + float(np.max(np.sum(np.abs(h), axis=1))))

    evals, evecs = np.linalg.eigh(h)
    groups: list[list[int]] = [[0]]
    for i in range(1, len(evals)):
        if evals[i] - evals[i - 1] > level_tol:
            groups.append([i])
        else:
            groups[-1].append(i)
    if len(groups) < 2:
        raise ValueError("Hamiltonian has a single energy level; at least two are required")

    energies = np.array([np.mean(evals[g]) for g in groups])
    frames = tuple(evecs[:, g] for g in groups)
    return AtomSpec(hamiltonian=h, energies=energies, frames=frames)


def gibbs_state(atom: AtomSpec, beta: float) -> np.ndarray:
    """Thermal state ``exp(-beta H) / Tr exp(-beta H)``."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    shifted = -beta * (atom.energies - atom.energies[0])
    weights = np.exp(shifted)
    rho = sum(w * f @ f.conj().T for w, f in zip(weights, atom.frames))
    return rho / np.trace(rho).real


def populations(rho: np.ndarray, atom: AtomSpec) -> np.ndarray:
    """Level populations ``Tr(Pi_k rho)``."""
    return np.array([np.trace(f.conj().T @ rho @ f).real for f in atom.frames])


def block_diag_project(rho: np.ndarray, atom: AtomSpec) -> np.ndarray:
    """Keep only the diagonal level blocks: ``sum_k Pi_k rho Pi_k``."""
    out = np.zeros_like(np.asarray(rho, dtype=complex))
    for p in atom.projectors:
        out += p @ rho @ p
    return out


def validate_density_matrix(rho: np.ndarray, *, trace_tol: float = 1e-10,
                            eig_tol: float = 1e-9) -> None:
    """Raise ``ValueError`` unless ``rho`` is a density matrix within tolerance."""
    rho = np.asarray(rho)
    if hermiticity_residual(rho) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real!r} differs from 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -eig_tol:
        raise ValueError("density matrix has a negative eigenvalue")


# Spectral functions. Only the thermal density f^beta enters the effective theory.

@dataclass(frozen=True)
class ExpRadial:
    """Radial coupling ``c exp(-a r) / r``; thermal density ``4 pi c^2 e^{-2a|x|} / (1 + e^{-beta x})``."""

    c: float
    a: float


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Thermal density sampled on an ascending grid, linearly interpolated."""

    x: np.ndarray
    f_beta: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        f = np.asarray(self.f_beta, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or len(x) < 2:
            raise ValueError("table needs matching one-dimensional x and f_beta")
        if np.any(np.diff(x) <= 0):
            raise ValueError("table grid must be strictly ascending")
        if np.any(f < 0):
            raise ValueError("tabulated spectral density must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "f_beta", f)


@dataclass(frozen=True, eq=False)
class RateTable:
    """Rates ``c[j, k]`` and level shifts ``d[j, k]`` given directly (level indices)."""

    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if c.ndim != 2 or c.shape != d.shape or c.shape[0] != c.shape[1]:
            raise ValueError("rate tables must be square and of equal shape")
        if np.any(c < 0):
            raise ValueError("rates must be non-negative")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)


SpectralFunction = Union[ExpRadial, Tabulated, RateTable]


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Interaction operators ``Q_l`` with one spectral function each."""

    operators: tuple
    spectral: tuple
    beta: float

    def __post_init__(self):
        ops = tuple(np.array(q, dtype=complex) for q in self.operators)
        if len(ops) == 0:
            raise ValueError("at least one coupling operator is required")
        if len(self.spectral) != len(ops):
            raise ValueError("need one spectral function per coupling operator")
        for i, q in enumerate(ops):
            _require_hermitian(q, f"Q[{i}]")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "spectral", tuple(self.spectral))

    @property
    def count(self) -> int:
        return len(self.operators)


@dataclass(frozen=True, eq=False)
class PumpSpec:
    """Pump ``eta cos(omega t) (h + h^dagger)`` resonant with the extreme levels."""

    h_p: np.ndarray
    eta: float
    omega: float

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h_p + self.h_p.conj().T


def build_pump(atom: AtomSpec, h_p: np.ndarray, eta: float, tol: float = 1e-12) -> PumpSpec:
    """Check that ``h_p`` maps the ground level into the top level and build the pump."""
    h = np.array(h_p, dtype=complex)
    if h.shape != (atom.dim, atom.dim):
        raise ValueError("h_p has the wrong shape")
    projs = atom.projectors
    top, ground = projs[-1], projs[0]
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - top @ h @ ground)) > tol * scale:
        raise ValueError("h_p must map the ground level into the top level")
    return PumpSpec(h_p=h, eta=float(eta), omega=atom.omega)


@dataclass(frozen=True)
class RunControls:
    t_max: float = 300.0
    dt: float | None = None
    pump_off_time: float | None = None
    initial: Union[str, np.ndarray] = "gibbs"


@dataclass(frozen=True, eq=False)
class Scenario:
    """Complete model: atom, reservoir coupling, pump, coupling strength and run controls."""

    atom: AtomSpec
    coupling: CouplingSpec
    pump: PumpSpec
    lam: float
    run: RunControls = field(default_factory=RunControls)
    seed: int = 0

    def __post_init__(self):
        if self.coupling.operators[0].shape != (self.atom.dim, self.atom.dim):
            raise ValueError("coupling operators do not match the atom dimension")
        if self.moderate_pump_exceeded:
            warnings.warn(f"pump strength |eta|={abs(self.eta):.3g} exceeds lambda^2={self.lam ** 2:.3g}",
                          stacklevel=3)

    @property
    def eta(self) -> float:
        return self.pump.eta

    @property
    def beta(self) -> float:
        return self.coupling.beta

    @property
    def omega(self) -> float:
        return self.pump.omega

    @property
    def moderate_pump_exceeded(self) -> bool:
        return abs(self.eta) > self.lam ** 2 * (1 + 1e-12) and self.eta != 0

    def default_dt(self) -> float:
        return self.run.dt if self.run.dt is not None else (2 * np.pi / self.omega) / 200

    def initial_state(self) -> np.ndarray:
        init = self.run.initial
        if isinstance(init, str):
            if init != "gibbs":
                raise ValueError(f"unknown initial state selector {init!r}")
            return gibbs_state(self.atom, self.beta)
        rho = np.array(init, dtype=complex)
        validate_density_matrix(rho)
        return rho

    def replace(self, *, lam: float | None = None, eta: float | None = None,
                beta: float | None = None, hamiltonian: np.ndarray | None = None,
                h_p: np.ndarray | None = None, run: RunControls | None = None) -> "Scenario":
        """Copy with some physical parameters changed; the pump frequency follows the atom."""
        atom = self.atom if hamiltonian is None else build_atom(hamiltonian)
        coupling = self.coupling
        if beta is not None:
            coupling = CouplingSpec(coupling.operators, coupling.spectral, beta)
        pump = build_pump(atom, self.pump.h_p if h_p is None else h_p,
                          self.pump.eta if eta is None else eta)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return dataclasses.replace(self, atom=atom, coupling=coupling, pump=pump,
                                       lam=self.lam if lam is None else lam,
                                       run=self.run if run is None else run)


def make_scenario(hamiltonian: np.ndarray, operators: Sequence[np.ndarray],
                  spectral: Union[SpectralFunction, Sequence[SpectralFunction]],
                  beta: float, lam: float, eta: float, h_p: np.ndarray,
                  run: RunControls | None = None, seed: int = 0,
                  level_tol: float | None = None) -> Scenario:
    """Convenience constructor from raw arrays."""
    atom = build_atom(hamiltonian, level_tol)
    if isinstance(spectral, (ExpRadial, Tabulated, RateTable)):
        spectral = [spectral] * len(operators)
    coupling = CouplingSpec(tuple(operators), tuple(spectral), beta)
    pump = build_pump(atom, h_p, eta)
    return Scenario(atom=atom, coupling=coupling, pump=pump, lam=float(lam),
                    run=run or RunControls(), seed=seed)


def four_level_scenario(lam: float = 0.385, eta: float | None = None, beta: float = 0.5,
                        omega: float = 3.0, run: RunControls | None = None) -> Scenario:
    """Four-level benchmark atom with a single dense coupling and a 1<->4 pump.

    ``eta`` defaults to ``lam**2``.
    """
    h = omega * np.diag([0.0, 1 / 5, 5 / 6, 1.0])
    q = np.array([[0, 5 / 6, 1 / 4, 1 / 5],
                  [5 / 6, 0, 5 / 14, 5 / 19],
                  [1 / 4, 5 / 14, 0, 1],
                  [1 / 5, 5 / 19, 1, 0]])
    h_p = np.zeros((4, 4))
    h_p[3, 0] = 1.0
    spectral = ExpRadial(c=1 / (2 * np.pi), a=0.5)
    return make_scenario(h, [q], spectral, beta, lam, lam ** 2 if eta is None else eta, h_p,
                         run=run or RunControls(t_max=300.0, pump_off_time=180.0))
