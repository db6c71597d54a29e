"""Weighted least-squares fitting of the algebraic g(tau) models.

The models are cheap closed forms, so experimental correlation data can be
fit directly for physical parameters (Rabi frequency, dipole coupling, mean
period durations) instead of re-running numerical solvers inside the loop.

The engine is a damped (Levenberg-Marquardt) least-squares iteration with:

* finite bounds handled by smooth parameter transforms (log-logistic for
  positive parameters, logistic otherwise), so the internal iteration is
  unconstrained;
* forward finite-difference Jacobians with per-parameter relative step 1e-6;
* monotone non-increasing chi-square across accepted steps;
* termination on relative chi-square change < 1e-10 or gradient norm < 1e-8.

Model families
--------------
``dark_light``    parameters T0, T1, A, Omega
``two_vsystems``  parameters Omega3, ReC3, ImC3 and *either* Omega2 *or*
                  (T0, T1, T2).  Omega2 enters the curve only through the
                  durations, so freeing both would be exactly degenerate
                  and is rejected.  ImC3 enters only through |C3|^2 in the
                  pair intensity and is therefore weakly constrained.
``custom``        any callable model(params_dict, tau) -> g
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .blinking import VPairParams, compose_vpair_g, g_dark_light, g_two_vsystems
from .curves import CorrelationCurve
from .optics import DipoleCoupling, TwoLevelParams, g1_correlation

__all__ = [
    "FitProblem",
    "FitResult",
    "FitDegeneracyError",
    "FitNonConvergenceError",
    "model_function",
    "synthesize_data",
    "fit",
]

FTOL = 1e-10
GTOL = 1e-8
FD_RELATIVE_STEP = 1e-6
MAX_ITER = 200


class FitDegeneracyError(ValueError):
    """The data cannot distinguish some parameter directions."""

    def __init__(self, message, directions=None):
        super().__init__(message)
        self.directions = directions or []


class FitNonConvergenceError(RuntimeError):
    """No convergence within the iteration budget; carries the best point."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# model families

def _dark_light_model(params, tau):
    tl = TwoLevelParams(A=params["A"], Omega=params["Omega"])
    return g_dark_light(params["T0"], params["T1"],
                        lambda t: g1_correlation(tl, t), tau)


def _two_vsystems_model(params, tau):
    has_omega2 = "Omega2" in params
    has_T = any(k in params for k in ("T0", "T1", "T2"))
    if has_omega2 and has_T:
        raise ValueError(
            "two_vsystems takes either Omega2 or (T0, T1, T2), not both: "
            "Omega2 only enters through the durations")
    a3 = params.get("A3", 1.0)
    omega3 = params["Omega3"]
    c3 = complex(params.get("ReC3", 0.0), params.get("ImC3", 0.0))
    sine_term = params.get("sine_term", "corrected")
    if has_omega2:
        vp = VPairParams(omega2=params["Omega2"], omega3=omega3, c3=c3, a3=a3)
        return g_two_vsystems(vp, tau, sine_term=sine_term)
    # durations parameterization: T1 fixes p10 + p12, and the split is set
    # by the physical ratio p12/p10 = (A^2 + 2 W3^2)/A^2 + 2 ReC3/A
    p01 = 1.0 / params["T0"]
    p21 = 1.0 / params["T2"]
    ratio = (a3**2 + 2 * omega3**2) / a3**2 + 2 * c3.real / a3
    p10 = (1.0 / params["T1"]) / (1.0 + ratio)
    p12 = ratio * p10
    return compose_vpair_g(TwoLevelParams(A=a3, Omega=omega3),
                           DipoleCoupling.from_constant(c3),
                           p01, p10, p12, p21, tau, sine_term=sine_term)


_FAMILIES = {
    "dark_light": _dark_light_model,
    "two_vsystems": _two_vsystems_model,
}


def model_function(family, params: dict):
    """Bind a family name (or custom callable) and parameters to g(tau)."""
    if callable(family):
        fn = family
    else:
        try:
            fn = _FAMILIES[family]
        except KeyError:
            raise ValueError(f"unknown model family {family!r}") from None
    return lambda tau: np.atleast_1d(np.asarray(fn(params, tau), dtype=float))


def synthesize_data(family, params: dict, tau_grid, noise_level: float,
                    seed=None) -> CorrelationCurve:
    """Model curve with optional Gaussian noise of relative scale noise_level.

    The per-point standard deviation is noise_level * max(|g|, 0.1 max|g|)
    (relative noise with a floor, so antibunched points near g = 0 keep a
    finite error bar) and is recorded in the curve, making the z-residuals
    exactly standard normal.  noise_level = 0 returns the exact curve with
    no error column.
    """
    if noise_level < 0:
        raise ValueError("noise_level must be nonnegative")
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    g = model_function(family, params)(tau)
    name = family if isinstance(family, str) else "custom"
    meta = {k: v for k, v in params.items()}
    meta["noise_level"] = noise_level
    if noise_level == 0:
        return CorrelationCurve(tau=tau, g=g, model=name, params=meta)
    rng = np.random.default_rng(seed)
    sigma = noise_level * np.maximum(np.abs(g), 0.1 * np.max(np.abs(g)))
    noisy = g + sigma * rng.standard_normal(len(g))
    meta["seed"] = str(seed)
    return CorrelationCurve(tau=tau, g=noisy, errors=sigma, model=name,
                            params=meta)


# ---------------------------------------------------------------------------
# problem / result containers

@dataclass(frozen=True)
class FitProblem:
    """Data, model family, free parameters with bounds, fixed parameters.

    ``free`` maps parameter name -> (initial, lower, upper) with finite
    bounds and the initial value strictly inside; ``fixed`` maps name ->
    value.  Per-point errors from the data weight the residuals; uniform
    weights are used if the curve has none.
    """

    data: CorrelationCurve
    family: object
    free: dict
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.free:
            raise ValueError("need at least one free parameter")
        if len(self.data) < 2 * len(self.free):
            raise ValueError(
                f"{len(self.data)} points cannot constrain {len(self.free)} "
                "parameters (need at least a factor 2)")
        for name, spec in self.free.items():
            init, lo, hi = spec
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"{name}: bounds must be finite with lo < hi")
            if not lo < init < hi:
                raise ValueError(f"{name}: initial value {init} not inside "
                                 f"({lo}, {hi})")
        if self.data.errors is not None and np.any(self.data.errors <= 0):
            raise ValueError("per-point errors must be positive")
        if (self.family == "two_vsystems"
                and "ImC3" in self.free):
            warnings.warn("ImC3 is weakly constrained by g(tau): it enters "
                          "only through |C3|^2 in the pair intensity",
                          stacklevel=2)


@dataclass(frozen=True)
class FitResult:
    """Best-fit parameters, covariance, chi-square and diagnostics."""

    params: dict
    free_names: list
    covariance: np.ndarray
    chi2: float
    chi2_dof: float
    n_iterations: int
    converged: bool
    reason: str

    def stderr(self, name: str) -> float:
        i = self.free_names.index(name)
        return float(np.sqrt(max(self.covariance[i, i], 0.0)))

    def report(self) -> str:
        """Plain-text report followed by a machine-readable key=value block."""
        lines = ["fit result",
                 f"  converged: {self.converged} ({self.reason}) "
                 f"after {self.n_iterations} iterations",
                 f"  chi2 = {self.chi2:.6g}, chi2/dof = {self.chi2_dof:.6g}",
                 "  parameters:"]
        for name in self.free_names:
            lines.append(f"    {name} = {self.params[name]:.10g} "
                         f"+/- {self.stderr(name):.4g}")
        for name, val in self.params.items():
            if name not in self.free_names:
                lines.append(f"    {name} = {val} (fixed)")
        lines.append("")
        lines.append(f"converged = {'true' if self.converged else 'false'}")
        lines.append(f"iterations = {self.n_iterations}")
        lines.append(f"chi2 = {self.chi2:.15g}")
        lines.append(f"chi2_dof = {self.chi2_dof:.15g}")
        for name in self.free_names:
            lines.append(f"param.{name} = {self.params[name]:.15g}")
            lines.append(f"err.{name} = {self.stderr(name):.15g}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# bound transforms

def _sigmoid(u):
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


class _BoundTransform:
    """Map unconstrained internals to finite boxes, in log space when lo > 0."""

    def __init__(self, bounds):
        self.lo = np.array([b[0] for b in bounds], dtype=float)
        self.hi = np.array([b[1] for b in bounds], dtype=float)
        self.logspace = self.lo > 0
        self.a = np.where(self.logspace, np.log(np.where(self.lo > 0, self.lo, 1.0)),
                          self.lo)
        self.b = np.where(self.logspace, np.log(np.where(self.lo > 0, self.hi, 1.0)),
                          self.hi)

    def external(self, u):
        y = self.a + (self.b - self.a) * _sigmoid(u)
        return np.where(self.logspace, np.exp(y), y)

    def internal(self, theta):
        y = np.where(self.logspace, np.log(np.where(self.logspace, theta, 1.0)),
                     theta)
        s = np.clip((y - self.a) / (self.b - self.a), 1e-12, 1 - 1e-12)
        return np.log(s / (1.0 - s))

    def jacobian_diag(self, u):
        s = _sigmoid(u)
        dy = (self.b - self.a) * s * (1.0 - s)
        theta = self.external(u)
        return np.where(self.logspace, theta * dy, dy)


# ---------------------------------------------------------------------------
# the damped least-squares engine

def fit(problem: FitProblem) -> FitResult:
    """Damped least-squares fit of the problem's model to its data.

    Accepted steps never increase chi-square.  Raises FitDegeneracyError if
    the initial Jacobian is rank-deficient (naming the flat directions) and
    FitNonConvergenceError (carrying the best point reached) if the
    iteration budget is exhausted.
    """
    names = list(problem.free)
    tau = problem.data.tau
    y = problem.data.g
    sigma = problem.data.errors if problem.data.errors is not None \
        else np.ones_like(y)
    transform = _BoundTransform([problem.free[n][1:] for n in names])
    span = transform.hi - transform.lo

    def resid_theta(theta):
        params = dict(problem.fixed)
        params.update(zip(names, theta))
        g = model_function(problem.family, params)(tau)
        return (g - y) / sigma

    def jac_theta(theta, r0):
        J = np.empty((len(y), len(names)))
        for j, th in enumerate(theta):
            h = FD_RELATIVE_STEP * abs(th)
            if h == 0.0:
                h = FD_RELATIVE_STEP * span[j]
            step = theta.copy()
            if th + h >= transform.hi[j]:
                h = -h
            step[j] = th + h
            J[:, j] = (resid_theta(step) - r0) / h
        return J

    u = transform.internal(np.array([problem.free[n][0] for n in names],
                                    dtype=float))
    theta = transform.external(u)
    r = resid_theta(theta)
    chi2 = float(r @ r)
    chi2_init = chi2

    lam = 1e-3
    n_iter = 0
    converged = False
    reason = "iteration budget exhausted"
    Jth = None
    for n_iter in range(1, MAX_ITER + 1):
        Jth = jac_theta(theta, r)
        Ju = Jth * transform.jacobian_diag(u)[None, :]

        if n_iter == 1:
            sv = np.linalg.svd(Ju, compute_uv=False)
            if sv[-1] < 1e-12 * max(sv[0], 1e-300):
                _, _, Vt = np.linalg.svd(Ju)
                flat = Vt[-1]
                culprits = [names[i] for i in np.argsort(-np.abs(flat))[:2]]
                raise FitDegeneracyError(
                    "normal matrix is singular; unidentifiable direction "
                    f"dominated by {culprits}", directions=culprits)

        grad = 2.0 * Ju.T @ r
        if np.linalg.norm(grad) < GTOL:
            converged, reason = True, "gradient norm below 1e-8"
            break

        A = Ju.T @ Ju
        diagA = np.diag(A).copy()
        diagA[diagA <= 0] = max(diagA.max(), 1e-300)
        accepted = False
        while lam < 1e14:
            try:
                delta = np.linalg.solve(A + lam * np.diag(diagA), -Ju.T @ r)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            u_try = u + delta
            theta_try = transform.external(u_try)
            r_try = resid_theta(theta_try)
            chi2_try = float(r_try @ r_try)
            if np.isfinite(chi2_try) and chi2_try <= chi2:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            converged, reason = True, "no decreasing step exists (local minimum)"
            break

        drop = chi2 - chi2_try
        u, theta, r, chi2 = u_try, theta_try, r_try, chi2_try
        lam = max(lam / 3.0, 1e-14)
        if drop <= FTOL * max(chi2, 1e-300):
            converged, reason = True, "relative chi-square change below 1e-10"
            break

    params = dict(problem.fixed)
    params.update(zip(names, theta))
    dof = max(len(y) - len(names), 1)

    Jth = jac_theta(theta, r)
    JtJ = Jth.T @ Jth
    try:
        cov = np.linalg.inv(JtJ)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(JtJ)
    cov = 0.5 * (cov + cov.T)

    result = FitResult(params=params, free_names=names, covariance=cov,
                       chi2=chi2, chi2_dof=chi2 / dof, n_iterations=n_iter,
                       converged=converged, reason=reason)
    assert chi2 <= chi2_init + 1e-12 * max(chi2_init, 1.0)
    if not converged:
        raise FitNonConvergenceError(
            f"no convergence after {MAX_ITER} iterations "
            f"(chi2 {chi2_init:.3g} -> {chi2:.3g})", best=result)
    return result
