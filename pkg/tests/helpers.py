"""Scenario factories shared by the test modules."""

from __future__ import annotations

import warnings

import numpy as np

from quasistat.model import ExpRadial, RunControls, make_scenario

EXP_RADIAL = ExpRadial(c=1 / (2 * np.pi), a=0.5)


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (x + x.conj().T)


def random_density(rng: np.random.Generator, d: int) -> np.ndarray:
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_scenario(rng: np.random.Generator, d: int | None = None, n_couplings: int = 1,
                    lam: float = 0.3, eta_ratio: float = 1.0):
    """Non-degenerate atom in a random eigenbasis with dense random couplings."""
    d = int(rng.integers(2, 6)) if d is None else d
    energies = np.sort(rng.uniform(0.0, 4.0, size=d))
    energies -= energies[0]
    while np.min(np.diff(energies)) < 0.05:
        energies = np.sort(rng.uniform(0.0, 4.0, size=d))
        energies -= energies[0]
    u, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    h = u @ np.diag(energies) @ u.conj().T
    h = 0.5 * (h + h.conj().T)
    ops = [random_hermitian(rng, d) for _ in range(n_couplings)]
    spectral = [ExpRadial(c=float(rng.uniform(0.05, 0.3)), a=float(rng.uniform(0.2, 1.0)))
                for _ in range(n_couplings)]
    beta = float(rng.uniform(0.2, 3.0))
    h_p = np.outer(u[:, -1], u[:, 0].conj()) * complex(rng.normal(), rng.normal())
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return make_scenario(h, ops, spectral, beta, lam, eta_ratio * lam ** 2, h_p,
                             run=RunControls(t_max=10.0))


def degenerate_scenario(lam: float = 0.385, eta: float | None = None, beta: float = 0.5):
    """Five-dimensional atom whose ground level is twofold degenerate."""
    rng = np.random.default_rng(1)
    h = np.diag([0.0, 0.0, 1.0, 1.7, 3.0])
    q = rng.normal(size=(5, 5))
    q = q + q.T
    h_p = np.zeros((5, 5))
    h_p[4, 0] = 1.0
    h_p[4, 1] = 0.5
    return make_scenario(h, [q], EXP_RADIAL, beta, lam, lam ** 2 if eta is None else eta, h_p,
                         run=RunControls(t_max=50.0))


def worked_irreducible_scenario():
    """Three non-degenerate levels coupled by ``Q phi_k = sum_j phi_j``."""
    h = np.diag([0.0, 1.0, 2.5])
    q = np.ones((3, 3))
    h_p = np.zeros((3, 3))
    h_p[2, 0] = 1.0
    return make_scenario(h, [q], EXP_RADIAL, 1.0, 0.3, 0.09, h_p)


def diagonal_coupling_scenario(d: int = 3):
    h = np.diag(np.arange(d, dtype=float) * 1.3)
    q = np.diag(np.arange(1, d + 1, dtype=float))
    h_p = np.zeros((d, d))
    h_p[d - 1, 0] = 1.0
    return make_scenario(h, [q], EXP_RADIAL, 1.0, 0.3, 0.09, h_p)
