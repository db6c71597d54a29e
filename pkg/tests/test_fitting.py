"""Least-squares parameter recovery."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import blinkcorr.fitting as fitting
from blinkcorr.blinking import VPairParams, vpair_rates
from blinkcorr.curves import CorrelationCurve
from blinkcorr.fitting import (
    FitDegeneracyError,
    FitNonConvergenceError,
    FitProblem,
    fit,
    model_function,
    synthesize_data,
)

DARK_LIGHT_TRUTH = dict(T0=40.0, T1=25.0, A=1.0, Omega=0.8)


def _dark_light_data(noise=0.0, seed=None, scale=1.0):
    tau = np.geomspace(0.05, 400.0, 220) * scale
    params = dict(DARK_LIGHT_TRUTH)
    params["T0"] *= scale
    params["T1"] *= scale
    params["A"] /= scale
    params["Omega"] /= scale
    return synthesize_data("dark_light", params, tau, noise, seed=seed), params


class TestSynthesize:
    def test_noiseless_is_exact(self):
        data, params = _dark_light_data()
        model = model_function("dark_light", params)
        assert_allclose(data.g, model(data.tau), atol=0)
        assert data.errors is None

    def test_seed_reproducible(self):
        a, _ = _dark_light_data(noise=0.02, seed=11)
        b, _ = _dark_light_data(noise=0.02, seed=11)
        assert np.array_equal(a.g, b.g)

    def test_z_residuals_standard_normal(self):
        truth = dict(Omega3=0.3, ReC3=-0.09, ImC3=0.0, Omega2=0.005)
        tau = np.geomspace(0.05, 1e5, 400)
        data = synthesize_data("two_vsystems", truth, tau, 0.01, seed=3)
        clean = model_function("two_vsystems", truth)(tau)
        z = (data.g - clean) / data.errors
        assert abs(z.mean()) < 3 / np.sqrt(len(z))
        assert z.std() == pytest.approx(1.0, abs=0.1)


class TestFitBasics:
    def test_noiseless_truth_start_is_fixed_point(self):
        data, params = _dark_light_data()
        free = {k: (v, v / 4, v * 4) for k, v in params.items()}
        result = fit(FitProblem(data=data, family="dark_light", free=free))
        assert result.chi2 < 1e-16
        for k, v in params.items():
            assert result.params[k] == pytest.approx(v, rel=1e-8)

    def test_noiseless_recovery_from_perturbed_start(self):
        data, params = _dark_light_data()
        free = {k: (v * 1.25, v / 4, v * 4) for k, v in params.items()}
        result = fit(FitProblem(data=data, family="dark_light", free=free))
        for k, v in params.items():
            assert result.params[k] == pytest.approx(v, rel=1e-6)

    def test_chi2_never_increases(self):
        data, params = _dark_light_data(noise=0.02, seed=5)
        free = {k: (v * 1.2, v / 4, v * 4) for k, v in params.items()}
        problem = FitProblem(data=data, family="dark_light", free=free)
        result = fit(problem)
        start = dict(zip(free, (s[0] for s in free.values())))
        r0 = (model_function("dark_light", start)(data.tau) - data.g) / data.errors
        assert result.chi2 <= float(r0 @ r0)

    def test_null_coupling_recovery(self):
        # data from an uncoupled model; the fitted ReC3 must be 0 within 2 sigma
        truth = dict(Omega3=0.5, ReC3=0.0, ImC3=0.0, Omega2=0.005)
        _, T = vpair_rates(VPairParams(omega2=0.005, omega3=0.5, c3=0.0))
        tau = np.geomspace(0.05, 2e5, 800)
        data = synthesize_data("two_vsystems", truth, tau, 0.01, seed=8)
        free = {"Omega3": (0.55, 0.05, 3.0), "ReC3": (0.05, -0.4, 0.4),
                "T0": (T[0] * 1.2, 50.0, 1e7),
                "T1": (T[1] * 0.8, 50.0, 1e7),
                "T2": (T[2] * 1.2, 50.0, 1e7)}
        result = fit(FitProblem(data=data, family="two_vsystems", free=free,
                                fixed={"ImC3": 0.0}))
        assert abs(result.params["ReC3"]) < 2 * result.stderr("ReC3")

    def test_noisy_vpair_recovery_single_seed(self):
        truth = dict(Omega3=0.3, ReC3=-0.09, ImC3=0.0, Omega2=0.005)
        _, T = vpair_rates(VPairParams(omega2=0.005, omega3=0.3, c3=-0.09))
        tau = np.geomspace(0.05, 2e5, 2000)
        data = synthesize_data("two_vsystems", truth, tau, 0.01, seed=1)
        free = {"Omega3": (0.36, 0.05, 3.0), "ReC3": (-0.07, -0.4, 0.4),
                "T0": (T[0] * 0.75, 50.0, 1e6),
                "T1": (T[1] * 1.25, 50.0, 1e6),
                "T2": (T[2] * 0.8, 50.0, 1e6)}
        result = fit(FitProblem(data=data, family="two_vsystems", free=free,
                                fixed={"ImC3": 0.0}))
        assert result.params["Omega3"] == pytest.approx(0.3, rel=0.05)
        assert result.params["ReC3"] == pytest.approx(-0.09, rel=0.05)
        for i in range(3):
            assert result.params[f"T{i}"] == pytest.approx(T[i], rel=0.10)

    def test_scale_equivariance(self):
        # rescaling times by s and rates by 1/s must leave the fitted
        # dimensionless combinations unchanged
        results = []
        for scale in (1.0, 3.7):
            data, params = _dark_light_data(scale=scale)
            free = {k: (v * 1.15, v / 5, v * 5) for k, v in params.items()}
            results.append(fit(FitProblem(data=data, family="dark_light",
                                          free=free)).params)
        base, scaled = results
        for combo in (lambda p: p["A"] * p["T0"],
                      lambda p: p["A"] * p["T1"],
                      lambda p: p["Omega"] / p["A"]):
            assert combo(scaled) == pytest.approx(combo(base), rel=1e-6)


class TestFitDiagnostics:
    def test_degenerate_direction_named(self):
        tau = np.linspace(0.1, 10, 30)
        data = CorrelationCurve(tau=tau, g=np.ones_like(tau))

        def flat_model(params, t):
            return params["a"] * np.ones_like(t)  # "b" never enters

        with pytest.raises(FitDegeneracyError) as err:
            fit(FitProblem(data=data, family=flat_model,
                           free={"a": (0.9, 0.1, 2.0), "b": (1.0, 0.1, 2.0)}))
        assert "b" in err.value.directions

    def test_nonconvergence_carries_best_point(self, monkeypatch):
        monkeypatch.setattr(fitting, "MAX_ITER", 1)
        data, params = _dark_light_data(noise=0.02, seed=6)
        free = {k: (v * 1.3, v / 4, v * 4) for k, v in params.items()}
        with pytest.raises(FitNonConvergenceError) as err:
            fit(FitProblem(data=data, family="dark_light", free=free))
        assert err.value.best is not None
        assert err.value.best.n_iterations == 1

    def test_covariance_predicts_scatter(self):
        # desk-scale calibration: empirical scatter over noise realizations
        # within a factor 3 of the predicted standard error
        data0, params = _dark_light_data()
        free = {"T0": (40.0, 5.0, 400.0), "Omega": (0.8, 0.1, 4.0)}
        fitted, predicted = [], []
        for seed in range(30):
            data, _ = _dark_light_data(noise=0.02, seed=seed)
            res = fit(FitProblem(data=data, family="dark_light", free=free,
                                 fixed={"T1": 25.0, "A": 1.0}))
            fitted.append(res.params["T0"])
            predicted.append(res.stderr("T0"))
        scatter = np.std(fitted)
        pred = np.mean(predicted)
        assert pred / 3 < scatter < pred * 3

    def test_report_format(self):
        data, params = _dark_light_data(noise=0.02, seed=2)
        free = {k: (v * 1.1, v / 4, v * 4) for k, v in params.items()}
        result = fit(FitProblem(data=data, family="dark_light", free=free))
        report = result.report()
        assert "chi2" in report and "param.T0" in report and "err.T0" in report
        assert "converged = true" in report


class TestValidation:
    def test_needs_enough_points(self):
        tau = np.linspace(0.1, 1.0, 5)
        data = CorrelationCurve(tau=tau, g=np.ones_like(tau))
        free = {"T0": (1.0, 0.1, 10), "T1": (1.0, 0.1, 10),
                "A": (1.0, 0.1, 10)}
        with pytest.raises(ValueError, match="constrain"):
            FitProblem(data=data, family="dark_light", free=free)

    def test_bounds_must_be_finite(self):
        data, _ = _dark_light_data()
        with pytest.raises(ValueError, match="finite"):
            FitProblem(data=data, family="dark_light",
                       free={"T0": (1.0, 0.0, np.inf)})

    def test_init_inside_bounds(self):
        data, _ = _dark_light_data()
        with pytest.raises(ValueError, match="inside"):
            FitProblem(data=data, family="dark_light",
                       free={"T0": (20.0, 1.0, 10.0)})

    def test_omega2_and_durations_exclusive(self):
        params = dict(Omega3=0.3, ReC3=0.0, Omega2=0.005, T0=100.0,
                      T1=100.0, T2=100.0)
        with pytest.raises(ValueError, match="not both"):
            model_function("two_vsystems", params)(np.array([1.0]))

    def test_imc3_free_warns(self):
        truth = dict(Omega3=0.3, ReC3=-0.09, ImC3=0.0, Omega2=0.005)
        tau = np.geomspace(0.1, 1e4, 100)
        data = synthesize_data("two_vsystems", truth, tau, 0.01, seed=4)
        with pytest.warns(UserWarning, match="ImC3"):
            FitProblem(data=data, family="two_vsystems",
                       free={"Omega3": (0.3, 0.1, 1.0),
                             "ImC3": (0.01, -0.3, 0.3)},
                       fixed={"ReC3": -0.09, "Omega2": 0.005})

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="unknown model family"):
            model_function("mystery", {})
