"""Per-period photon correlators for the two-level subsystems.

Closed forms for the resonance-fluorescence correlation g1(tau) of a single
driven two-level atom, the pair correlation g2(tau) of two dipole-dipole
interacting two-level atoms (first order in the coupling C), the all-orders
g2(0) and pair intensity, and the geometric coupling constant C(kr, theta).

All expressions share the half Rabi splitting

    gamma = sqrt(16 Omega^2 - A^2) / 4 .

Below threshold (16 Omega^2 < A^2) gamma is imaginary and the trigonometric
factors turn hyperbolic; everything here is evaluated with complex gamma on
a single code path, built from two entire functions of x = gamma*tau,

    sinc(x) = sin(x)/x ,          hfun(x) = (cos x - sinc x) / x^2 ,

whose removable singularities at x = 0 cover the gamma -> 0 threshold
exactly (no separate degenerate branch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TwoLevelParams",
    "DipoleCoupling",
    "SingularityError",
    "g1_correlation",
    "intensity_single",
    "g2_pair_correlation",
    "g2_zero",
    "intensity_pair",
    "dipole_coupling",
    "g2_sine_numerator",
]

# exponents below exp(-_UNDERFLOW_GUARD) are treated as exactly zero to keep
# cosh(gamma*tau) from overflowing where the envelope has already vanished
_UNDERFLOW_GUARD = 650.0

IMAG_RESIDUAL_TOL = 1e-12


class SingularityError(ZeroDivisionError):
    """A printed denominator vanished for these parameters."""


@dataclass(frozen=True)
class TwoLevelParams:
    """Einstein coefficient A and Rabi frequency Omega of one transition."""

    A: float
    Omega: float

    def __post_init__(self):
        if self.A <= 0:
            raise ValueError("Einstein coefficient A must be positive")
        if self.Omega < 0:
            raise ValueError("Rabi frequency must be nonnegative")

    @property
    def gamma(self) -> complex:
        """Half Rabi splitting sqrt(16 Omega^2 - A^2)/4, complex below threshold."""
        return np.sqrt(complex(16 * self.Omega**2 - self.A**2)) / 4


@dataclass(frozen=True)
class DipoleCoupling:
    """Complex dipole-dipole coupling constant, optionally with its geometry."""

    C: complex
    kr: float | None = None
    theta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "C", complex(self.C))
        if not (np.isfinite(self.C.real) and np.isfinite(self.C.imag)):
            raise ValueError("coupling constant must be finite")
        if self.kr is not None and self.kr <= 0:
            raise ValueError("kr must be positive")
        if self.theta is not None and not 0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")

    @classmethod
    def from_constant(cls, C) -> "DipoleCoupling":
        return cls(C=complex(C))


# ---------------------------------------------------------------------------
# stable primitives

def _sinc(x):
    """sin(x)/x for complex x, series near the removable singularity."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 0.1
    xs = np.where(small, 0.0, x)
    out = np.where(small, 1.0, np.sin(xs) / np.where(xs == 0, 1.0, xs))
    x2 = x * x
    series = 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    return np.where(small, series, out)


def _hfun(x):
    """(cos x - sin(x)/x) / x^2 for complex x; -1/3 at x = 0."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 0.1
    xs = np.where(small, 1.0, x)
    out = (np.cos(xs) - _sinc(xs)) / (xs * xs)
    x2 = x * x
    series = -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0 + x2 * x2 * x2 / 45360.0
    return np.where(small, series, out)


def _real_checked(z, scale=1.0):
    imag = np.max(np.abs(np.imag(z))) if np.size(z) else 0.0
    if imag > IMAG_RESIDUAL_TOL * max(1.0, scale):
        raise FloatingPointError(
            f"imaginary residual {imag:.3e} exceeds tolerance")
    return np.real(z)


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    return tau


# ---------------------------------------------------------------------------
# single two-level atom

def g1_correlation(params: TwoLevelParams, tau):
    """Intensity correlation of a resonantly driven two-level atom.

        g1(tau) = 1 - exp(-3 A tau / 4) (cos(gamma tau)
                                         + (3A / 4 gamma) sin(gamma tau))

    Antibunched at the origin (g1(0) = 0) and -> 1 at long times.  Accepts
    scalar or array tau; tau < 0 raises ValueError.
    """
    tau = _check_tau(tau)
    A = params.A
    gam = params.gamma
    x = gam * tau.astype(complex)

    # where the damped envelope has decayed below double range, the
    # oscillatory term is 0 for all practical purposes; evaluating the trig
    # there would overflow cosh, so mask the arguments first
    dead = (0.75 * A * tau - np.abs(x.imag)) > _UNDERFLOW_GUARD
    x = np.where(dead, 0.0, x)
    tau_s = np.where(dead, 0.0, tau)
    osc = np.cos(x) + 0.75 * A * tau_s * _sinc(x)
    env = np.where(dead, 0.0, np.exp(-0.75 * A * tau_s))
    val = 1.0 - env * osc
    out = _real_checked(val)
    return out if tau.ndim else float(out)


def intensity_single(params: TwoLevelParams) -> float:
    """Steady-state emission rate I1 = A Omega^2 / (A^2 + 2 Omega^2)."""
    A, Om = params.A, params.Omega
    return A * Om**2 / (A**2 + 2 * Om**2)


# ---------------------------------------------------------------------------
# dipole-dipole interacting pair

def g2_sine_numerator(A: float, Omega: float, sine_term: str = "standard") -> float:
    """Numerator polynomial of the constant sine coefficient in the g2 correction.

    ``standard`` is the commonly quoted closed form,

        512 Omega^6 + 41 A^6 + 2 A^2 Omega^2 (776 Omega^2 - 391 A^2) .

    ``corrected`` replaces it by

        512 Omega^6 - 4 A^6 + 112 A^2 Omega^4 + 28 A^4 Omega^2 ,

    recovered exactly (integer coefficients, residual ~1e-11) from the
    first-order perturbation of the two-atom quantum-regression correlation;
    see :func:`blinkcorr.lindblad.check_g2_first_order`, which demonstrates
    that the standard variant leaves a residual linear in Re C while the
    corrected one leaves the expected quadratic remainder.  The two agree at
    the threshold 16 Omega^2 = A^2 (their difference carries a factor
    16 Omega^2 - A^2), so the degenerate limit is unaffected.
    """
    if sine_term == "standard":
        return 512 * Omega**6 + 41 * A**6 + 2 * A**2 * Omega**2 * (776 * Omega**2 - 391 * A**2)
    if sine_term == "corrected":
        return 512 * Omega**6 - 4 * A**6 + 112 * A**2 * Omega**4 + 28 * A**4 * Omega**2
    raise ValueError(f"unknown sine_term {sine_term!r}")


def _k3_coefficient(A: float, Omega: float, sine_term: str) -> float:
    # K3 = (K1 - Knum/64A) / gamma^2, reduced to a polynomial: the numerator
    # difference always carries the factor (16 Omega^2 - A^2) = 16 gamma^2
    if sine_term == "standard":
        return (37 * A**4 - 110 * A**2 * Omega**2 - 32 * Omega**4) / (4 * A)
    return -(2 * A**4 + 5 * A**2 * Omega**2 + 8 * Omega**4) / A


def g2_pair_correlation(params: TwoLevelParams, coupling: DipoleCoupling, tau,
                        sine_term: str = "standard"):
    """Pair correlation of two interacting two-level atoms, first order in C.

    The non-interacting part is (1 + g1(tau))/2; the Re C correction carries
    secular (tau-proportional) cosine and sine terms.  Only Re C enters at
    first order.  ``sine_term`` selects the constant sine coefficient, see
    :func:`g2_sine_numerator`; the default reproduces the quoted closed form
    verbatim.

    Internally the correction is evaluated in the algebraically identical
    resolved form

        4 Om^2 cos x + K1 tau^3 hfun(x) + K3 tau sinc(x) - K4 tau^2 sinc(x)

    (x = gamma tau), whose pieces are entire in x^2, so the gamma -> 0
    threshold needs no special casing and no catastrophic 1/gamma^3
    cancellations occur.
    """
    tau = _check_tau(tau)
    A, Om = params.A, params.Omega
    re_c = coupling.C.real
    if sine_term not in ("standard", "corrected"):
        raise ValueError(f"unknown sine_term {sine_term!r}")
    gam = params.gamma
    x = gam * tau.astype(complex)

    dead = (0.75 * A * tau - np.abs(x.imag)) > _UNDERFLOW_GUARD
    x = np.where(dead, 0.0, x)
    tau_s = np.where(dead, 0.0, tau)

    sc = _sinc(x)
    osc = np.cos(x) + 0.75 * A * tau_s * sc

    k1 = A * (A**2 + 2 * Om**2) * (A**2 - 22 * Om**2) / 16.0
    k3 = _k3_coefficient(A, Om, sine_term)
    k4 = (A**2 - 6 * Om**2) * (A**2 + 2 * Om**2) / 4.0

    bracket = (4 * Om**2 * np.cos(x)
               + k1 * tau_s**3 * _hfun(x)
               + k3 * tau_s * sc
               - k4 * tau_s**2 * sc)
    corr = -0.5 * (A * re_c / (A**2 + 2 * Om**2) ** 2) * bracket

    env = np.where(dead, 0.0, np.exp(-0.75 * A * tau_s))
    val = 1.0 + env * (-0.5 * osc + corr)
    out = _real_checked(val)
    return out if tau.ndim else float(out)


def g2_zero(params: TwoLevelParams, coupling: DipoleCoupling) -> float:
    """Zero-delay pair correlation, exact to all orders in C:

        g2(0) = (A^2 + (Re C)^2) / (2 A^2)
                * [1 + A (A (Im C)^2 - 4 Omega^2 Re C)
                       / (2 Omega^2 + A (A + Re C))^2] .
    """
    A, Om = params.A, params.Omega
    rc, ic = coupling.C.real, coupling.C.imag
    den = 2 * Om**2 + A * (A + rc)
    if abs(den) < 1e-12 * (A**2 + 2 * Om**2):
        raise SingularityError("2 Omega^2 + A (A + Re C) vanishes")
    return (A**2 + rc**2) / (2 * A**2) * (1 + A * (A * ic**2 - 4 * Om**2 * rc) / den**2)


def intensity_pair(params: TwoLevelParams, coupling: DipoleCoupling) -> float:
    """Steady-state emission rate of the interacting pair (all orders in C).

    Reduces to 2 * intensity_single at C = 0.
    """
    A, Om = params.A, params.Omega
    rc, ic = coupling.C.real, coupling.C.imag
    den = (A**2 + 2 * Om**2) ** 2 + A**2 * rc * (2 * A + rc) + A**2 * ic**2
    return 2 * A * Om**2 * (2 * Om**2 + A * (A + rc)) / den


def dipole_coupling(kr: float, theta: float, A: float = 1.0) -> DipoleCoupling:
    """Geometric dipole-dipole coupling constant

        C = (3A/2) e^{i kr} [ (1/(i kr)) (1 - cos^2 theta)
            + (1/(kr)^2 - 1/(i (kr)^3)) (1 - 3 cos^2 theta) ] ,

    with kr = 2 pi r / lambda the scaled distance and theta the angle
    between the dipole moments and the connecting line (theta = pi/2
    maximizes |C|).  Re C modifies collective decay, Im C is a coherent
    level shift.
    """
    if kr <= 0:
        raise ValueError("kr must be positive")
    if not 0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    ct2 = math.cos(theta) ** 2
    kr = float(kr)
    C = 1.5 * A * np.exp(1j * kr) * (
        (1.0 / (1j * kr)) * (1 - ct2)
        + (1.0 / kr**2 - 1.0 / (1j * kr**3)) * (1 - 3 * ct2))
    return DipoleCoupling(C=complex(C), kr=kr, theta=float(theta))
