"""Continuous-time Markov machinery for intensity-period switching.

The switching between fluorescence periods is a continuous-time Markov
chain with rate matrix ``p[i, j]`` (period i -> period j).  Its generator

    B[i, j] = p[i, j] - delta_ij * sum_k p[i, k]

propagates occupation probabilities row-wise, P(tau) = expm(B tau) with
P(0) = identity, so P[i, j](tau) is the probability to sit in period j at
time tau given period i at time 0.  All rates are in units of A3 and all
times in units of 1/A3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "TransitionRates",
    "GeneratorMatrix",
    "OccupancyMatrix",
    "SteadyProbabilities",
    "DegenerateEigenvaluesError",
    "ReducibleChainError",
    "AbsorbingPeriodError",
    "build_generator",
    "generator_eigenvalues",
    "occupancy_matrix",
    "occupancy_stack",
    "steady_probabilities",
    "three_period_occupancy",
    "mean_durations",
]

# relative eigenvalue gap below which the spectral formula is abandoned
SPECTRAL_GAP_TOL = 1e-8


class DegenerateEigenvaluesError(ValueError):
    """Coalescing eigenvalues where a closed form assumes they are distinct."""


class ReducibleChainError(ValueError):
    """The chain has no unique stationary distribution."""


class AbsorbingPeriodError(ValueError):
    """A period with no outgoing rates has infinite mean duration."""


@dataclass(frozen=True)
class TransitionRates:
    """Switching rates p[i, j] >= 0 between periods, zero diagonal.

    A single-period chain (n = 1, no transitions) is accepted as the
    degenerate limit so trivial compositions work.
    """

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        object.__setattr__(self, "p", p)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("rate matrix must be square")
        if p.shape[0] < 1:
            raise ValueError("need at least one period")
        if np.any(p < 0):
            raise ValueError("rates must be nonnegative")
        if np.any(np.diag(p) != 0):
            raise ValueError("diagonal rates must be zero")

    @property
    def n(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class GeneratorMatrix:
    """Generator B with nonnegative off-diagonal entries and zero row sums."""

    B: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.B, dtype=float)
        object.__setattr__(self, "B", B)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError("generator must be square")
        off = B - np.diag(np.diag(B))
        if np.any(off < 0):
            raise ValueError("off-diagonal generator entries must be >= 0")
        scale = max(np.max(np.abs(B)), 1.0)
        if np.max(np.abs(B.sum(axis=1))) > 1e-12 * scale:
            raise ValueError("generator rows must sum to zero")

    @property
    def n(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True)
class OccupancyMatrix:
    """P[i, j](tau) for one time tau; rows sum to 1, entries lie in [0, 1]."""

    tau: float
    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        object.__setattr__(self, "P", P)
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        if np.any(P < -1e-10) or np.any(P > 1 + 1e-10):
            raise ValueError("occupancy entries must lie in [0, 1]")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-10:
            raise ValueError("occupancy rows must sum to 1")


@dataclass(frozen=True)
class SteadyProbabilities:
    """Long-time occupation probabilities of the periods."""

    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        object.__setattr__(self, "P", P)
        if np.any(P < -1e-12) or np.any(P > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(P.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")


def build_generator(rates: TransitionRates) -> GeneratorMatrix:
    """Generator matrix B_ij = p_ij - delta_ij sum_k p_ik."""
    if not isinstance(rates, TransitionRates):
        rates = TransitionRates(np.asarray(rates))
    B = rates.p - np.diag(rates.p.sum(axis=1))
    return GeneratorMatrix(B)


def _as_generator_array(B) -> np.ndarray:
    if isinstance(B, GeneratorMatrix):
        return B.B
    return GeneratorMatrix(np.asarray(B, dtype=float)).B


def generator_eigenvalues(B) -> np.ndarray:
    """Eigenvalues of a generator; closed form for n <= 3, eigensolver above.

    A generator is singular, so mu0 = 0 factors out of the characteristic
    polynomial; for n = 3 the remaining factor is a quadratic.
    """
    B = _as_generator_array(B)
    n = B.shape[0]
    if n == 1:
        return np.zeros(1, dtype=complex)
    if n == 2:
        return np.array([0.0, np.trace(B)], dtype=complex)
    if n == 3:
        # mu^2 - tr(B) mu + e2 = 0 with e2 the sum of pairwise products
        tr = np.trace(B)
        e2 = 0.5 * (tr**2 - np.trace(B @ B))
        disc = np.sqrt(complex(tr**2 - 4 * e2))
        return np.array([0.0, (tr + disc) / 2, (tr - disc) / 2], dtype=complex)
    return np.linalg.eigvals(B).astype(complex)


def occupancy_stack(B, taus) -> np.ndarray:
    """expm(B tau) for an array of taus, shape (len(taus), n, n).

    Uses the spectral resolution  expm(B tau) = sum_i exp(mu_i tau) G_i
    with G_i = prod_{a != i} (B - mu_a) / (mu_i - mu_a) when the eigenvalues
    are pairwise separated, and falls back to scipy's scaling-and-squaring
    exponential when the smallest gap drops below 1e-8 * max|mu|.
    """
    B = _as_generator_array(B)
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if np.any(taus < 0):
        raise ValueError("tau must be nonnegative")
    n = B.shape[0]
    mus = generator_eigenvalues(B)

    mumax = np.max(np.abs(mus))
    if mumax == 0.0:
        return np.broadcast_to(np.eye(n), (len(taus), n, n)).copy()

    gaps = np.abs(mus[:, None] - mus[None, :])[~np.eye(n, dtype=bool)]
    if np.min(gaps) < SPECTRAL_GAP_TOL * mumax:
        out = np.empty((len(taus), n, n))
        for k, t in enumerate(taus):
            out[k] = scipy.linalg.expm(B * t)
        return out

    eye = np.eye(n, dtype=complex)
    projectors = []
    for i in range(n):
        G = eye.copy()
        for a in range(n):
            if a == i:
                continue
            G = G @ (B - mus[a] * eye) / (mus[i] - mus[a])
        projectors.append(G)
    phases = np.exp(np.outer(taus, mus))                 # (k, n)
    out = np.einsum("ki,ijl->kjl", phases, np.array(projectors))
    if np.max(np.abs(out.imag)) > 1e-9:
        raise ValueError("spectral exponential produced a complex result")
    return out.real


def occupancy_matrix(B, tau: float) -> OccupancyMatrix:
    """Occupation-probability matrix P(tau) = expm(B tau) for one time."""
    P = occupancy_stack(B, [float(tau)])[0]
    return OccupancyMatrix(tau=float(tau), P=P)


def steady_probabilities(B) -> SteadyProbabilities:
    """Left null vector of B, normalized to a probability vector.

    This is P_i = P_{ki}(infinity) for any start k, equivalently the
    eps -> 0 limit of eps (eps - B)^{-1}.  The chain must have a unique
    stationary distribution (rank n-1 generator).
    """
    B = _as_generator_array(B)
    n = B.shape[0]
    if n == 1:
        return SteadyProbabilities(np.array([1.0]))
    sv = np.linalg.svd(B, compute_uv=False)
    null_count = int(np.sum(sv < 1e-10 * max(sv[0], 1.0)))
    if null_count != 1:
        raise ReducibleChainError(
            f"generator has {null_count} null directions; no unique steady state")
    ns = scipy.linalg.null_space(B.T, rcond=1e-10)
    v = ns[:, 0]
    v = v / v.sum()
    if np.any(v < -1e-12):
        raise ReducibleChainError("stationary vector has negative entries")
    v = np.clip(v, 0.0, None)
    return SteadyProbabilities(v / v.sum())


def three_period_occupancy(p01, p10, p12, p21, tau):
    """Closed-form P_11, P_12, P_21, P_22 for the dark/single/double chain.

    Valid for three periods with p02 = p20 = 0 and all four remaining rates
    positive.  The nonzero eigenvalues are

        mu_{1,2} = -(p01+p10+p12+p21)/2
                   +/- sqrt((p01+p10-p12-p21)^2 + 4 p10 p12) / 2 .

    Returns an array of shape (2, 2) (or (len(tau), 2, 2) for an array
    argument) indexed by the light periods (1, 2).  Raises
    DegenerateEigenvaluesError if mu_1 = mu_2 within 1e-12 relative, in
    which case callers should fall back to :func:`occupancy_matrix`.
    """
    for name, r in (("p01", p01), ("p10", p10), ("p12", p12), ("p21", p21)):
        if r <= 0:
            raise ValueError(f"{name} must be positive, got {r}")
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr < 0):
        raise ValueError("tau must be nonnegative")

    s = p01 + p10 + p12 + p21
    disc = np.sqrt((p01 + p10 - p12 - p21) ** 2 + 4 * p10 * p12)
    if disc <= 1e-12 * s:
        raise DegenerateEigenvaluesError(
            "closed-form occupancy needs distinct eigenvalues")
    m1 = -0.5 * s + 0.5 * disc
    m2 = -0.5 * s - 0.5 * disc

    e1 = np.exp(m1 * tau_arr)
    e2 = np.exp(m2 * tau_arr)
    mm = m1 * m2
    dm = m1 - m2

    P11 = (p01 * p21 / mm
           - e1 / (m1 * dm) * (p10 * (p21 + m1) + p12 * (p01 + m1))
           + e2 / (m2 * dm) * (p10 * (p21 + m2) + p12 * (p01 + m2)))
    P12 = (p01 * p12 / mm
           + p12 * e1 / (m1 * dm) * (p01 + m1)
           - p12 * e2 / (m2 * dm) * (p01 + m2))
    P21 = (p01 * p21 / mm
           + p21 * e1 / (m1 * dm) * (p01 + m1)
           - p21 * e2 / (m2 * dm) * (p01 + m2))
    # note the crossed mu indices; this is what satisfies P(0)=1, P'(0)=B
    P22 = (p01 * p12 / mm
           + p21 * e1 / (m1 * dm) * (p12 + p21 + m2)
           - p21 * e2 / (m2 * dm) * (p12 + p21 + m1))

    out = np.stack([np.stack([P11, P12], axis=-1),
                    np.stack([P21, P22], axis=-1)], axis=-2)
    return out if tau_arr.ndim else out.reshape(2, 2)


def mean_durations(rates: TransitionRates) -> np.ndarray:
    """Mean period durations T_i = 1 / sum_{k != i} p_ik."""
    if not isinstance(rates, TransitionRates):
        rates = TransitionRates(np.asarray(rates))
    out_rates = rates.p.sum(axis=1)
    if np.any(out_rates == 0):
        idx = int(np.argmin(out_rates))
        raise AbsorbingPeriodError(
            f"period {idx} has no outgoing transitions (infinite duration)")
    return 1.0 / out_rates
