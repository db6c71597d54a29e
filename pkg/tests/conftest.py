"""Shared independent oracles for the test suite.

These deliberately avoid the code paths they are used to check: the matrix
exponential is a brute-force scaled Taylor series (the implementation uses
a spectral resolution / Pade), and the two-level correlation is an RK4
integration of the optical Bloch equations via the quantum regression
theorem (the implementation uses closed forms and expm stepping).
"""

import numpy as np
import pytest


def taylor_expm(B, tau, terms=40):
    """Truncated Taylor-series matrix exponential with scaling and squaring."""
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    norm = np.max(np.abs(B)) * n * tau
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-30) / 0.5))))
    M = B * (tau / 2.0**squarings)
    out = np.eye(n)
    term = np.eye(n)
    for k in range(1, terms + 1):
        term = term @ M / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def rk4_two_level_g(A, Omega, taus, dt=1e-4):
    """Two-level g(tau) by RK4 quantum regression on the Bloch equations.

    After a detection the atom is reset to the ground state; g(tau) is the
    reexcitation probability normalized by its stationary value, both
    obtained by direct integration (no closed forms).
    """
    sm = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    sp = sm.conj().T
    n_op = sp @ sm
    H = 0.5 * Omega * (sm + sp)

    def rhs(rho):
        return (-1j * (H @ rho - rho @ H)
                + A * (sm @ rho @ sp - 0.5 * (n_op @ rho + rho @ n_op)))

    def integrate(rho, t_end, step, record=()):
        steps = int(round(t_end / step))
        samples = {}
        targets = sorted(set(record))
        ti = 0
        for k in range(steps + 1):
            if ti < len(targets) and k == targets[ti]:
                samples[k] = rho[1, 1].real
                ti += 1
            k1 = rhs(rho)
            k2 = rhs(rho + 0.5 * step * k1)
            k3 = rhs(rho + 0.5 * step * k2)
            k4 = rhs(rho + step * k3)
            rho = rho + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return samples, rho

    ground = np.zeros((2, 2), dtype=complex)
    ground[0, 0] = 1.0
    keys = np.round(np.asarray(taus) / dt).astype(int)
    samples, _ = integrate(ground, np.max(taus), dt, record=keys)
    # the stationary value needs no fine resolution: RK4 at dt = 1e-2 over
    # 60/A is globally accurate to ~1e-8
    _, rho_ss = integrate(ground, 60.0 / A, 1e-2)
    pee_ss = rho_ss[1, 1].real
    return np.array([samples[k] for k in keys]) / pee_ss


def random_irreducible_rates(rng, n):
    """A rate matrix whose chain is irreducible (cycle plus random extras)."""
    p = rng.uniform(0.1, 2.0, size=(n, n))
    p[rng.random((n, n)) < 0.3] = 0.0
    for i in range(n):
        p[i, (i + 1) % n] = rng.uniform(0.1, 2.0)
    np.fill_diagonal(p, 0.0)
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
