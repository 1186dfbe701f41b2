import numpy as np
import pytest

import gvcplm as g
from gvcplm import FitConfig, ParameterError, SmoothingParams

from conftest import make_gaussian_dataset
from oracles import fd_gradient, gaussian_profile_sse, gaussian_profile_wls


def _small_design(family, n, p=5, seed=2):
    design = g.make_design(family, n)
    return g.SimDesign(family, n, p, design.beta0[:p], design.alpha_funcs, seed=seed)


class TestProfileObjective:
    def test_matches_closed_form_gaussian_profiling(self):
        data, beta0, _ = make_gaussian_dataset(n=120, q=1, p=3, seed=7)
        sm = SmoothingParams(h=0.3)
        for scale in (0.0, 0.7, 1.0, 1.3):
            beta = scale * beta0
            ours = g.profile_objective("gaussian", data, beta, sm)
            oracle = gaussian_profile_sse(data, sm, beta)
            assert ours == pytest.approx(oracle, abs=1e-8 * (1 + abs(oracle)))

    def test_local_maximality_at_converged_fit(self):
        data, _, _ = make_gaussian_dataset(n=150, p=4, seed=8)
        sm = SmoothingParams(h=0.3)
        res = g.fit("gaussian", data, FitConfig(smoothing=sm, max_steps=20),
                    curve_grid=False)
        assert res.converged
        base = res.profile_loglik
        for j in range(4):
            for sign in (1.0, -1.0):
                beta = res.beta.copy()
                beta[j] += sign * 0.01
                assert g.profile_objective("gaussian", data, beta, sm) <= base + 1e-9

    def test_truth_beats_zero_on_poisson_replicates(self):
        design = g.poisson_design(200)
        sm = SmoothingParams(h=0.1, delta=0.1)
        for rep in range(20):
            data = g.generate(design, seed=g.replicate_seed(17, rep))
            at_truth = g.profile_objective("poisson", data, design.beta0, sm)
            at_zero = g.profile_objective("poisson", data, np.zeros(design.p_dim), sm)
            assert at_truth > at_zero


class TestProfileGradient:
    def test_gaussian_matches_closed_form_gradient(self):
        data, beta0, _ = make_gaussian_dataset(n=120, q=1, p=3, seed=7)
        sm = SmoothingParams(h=0.3)
        _, resid_y, resid_z = gaussian_profile_wls(data, sm)
        beta = 0.8 * beta0
        expected = resid_z.T @ (resid_y - resid_z @ beta)
        ours = g.profile_gradient("gaussian", data, beta, sm)
        np.testing.assert_allclose(ours, expected, atol=1e-8 * (1 + np.abs(expected).max()))

    @pytest.mark.parametrize("family,h,delta", [
        ("gaussian", 0.3, None),
        ("poisson", 0.25, 0.1),
        ("bernoulli", 0.45, 0.005),
    ])
    def test_matches_finite_differences(self, family, h, delta):
        if family == "gaussian":
            data, beta0, _ = make_gaussian_dataset(n=100, p=5, seed=3)
        else:
            design = _small_design(family, 100)
            data = g.generate(design, seed=g.replicate_seed(23, 0))
            beta0 = design.beta0
        sm = SmoothingParams(h=h, delta=delta)
        beta = 0.9 * beta0
        grad = g.profile_gradient(family, data, beta, sm)
        fd = fd_gradient(lambda b: g.profile_objective(family, data, b, sm), beta)
        np.testing.assert_allclose(grad, fd, rtol=1e-4, atol=1e-5)

    def test_small_at_converged_fit(self):
        design = _small_design("poisson", 150)
        data = g.generate(design, seed=g.replicate_seed(29, 0))
        sm = SmoothingParams(h=0.25, delta=0.1)
        cfg = FitConfig(smoothing=sm, max_steps=30, step_tol=1e-8)
        res = g.fit("poisson", data, cfg, curve_grid=False)
        assert res.converged
        grad = g.profile_gradient("poisson", data, res.beta, sm)
        assert np.abs(grad).max() < 10 * cfg.step_tol * data.n


class TestModifiedHessian:
    def test_gaussian_equals_exact_profiled_hessian(self):
        data, _, _ = make_gaussian_dataset(n=120, q=1, p=3, seed=7)
        sm = SmoothingParams(h=0.3)
        _, _, resid_z = gaussian_profile_wls(data, sm)
        expected = -resid_z.T @ resid_z
        ours = g.modified_hessian("gaussian", data, np.zeros(3), sm)
        np.testing.assert_allclose(ours, expected, atol=1e-8 * np.abs(expected).max())

    def test_gaussian_outer_product_structure(self):
        data, _, _ = make_gaussian_dataset(n=100, p=4, seed=5)
        sm = SmoothingParams(h=0.3)
        hess = g.modified_hessian("gaussian", data, np.zeros(4), sm)
        np.testing.assert_allclose(hess, hess.T, atol=1e-10)
        assert np.all(np.linalg.eigvalsh(hess) < 0)

    def test_poisson_negative_definite_across_replicates(self):
        design = _small_design("poisson", 100)
        sm = SmoothingParams(h=0.25, delta=0.1)
        for rep in range(5):
            data = g.generate(design, seed=g.replicate_seed(37, rep))
            hess = g.modified_hessian("poisson", data, design.beta0, sm)
            assert np.all(np.linalg.eigvalsh(hess) < 0)


class TestFit:
    def test_all_algorithms_agree_on_exact_gaussian_instance(self):
        # noise-free data with degree-1 coefficient functions: the smoother
        # reproduces the curves exactly, so every estimating equation has the
        # same root, equal to the closed-form profiled least squares solution
        data, beta0, _ = make_gaussian_dataset(n=200, p=4, seed=11, noise=0.0,
                                               alpha_linear=True)
        sm = SmoothingParams(h=0.25)
        oracle, _, _ = gaussian_profile_wls(data, sm)
        for alg in ("backfitting", "accelerated", "full"):
            cfg = FitConfig(smoothing=sm, algorithm=alg, max_steps=30)
            res = g.fit("gaussian", data, cfg, curve_grid=False)
            assert np.linalg.norm(res.beta - oracle) < 1e-6, alg

    def test_accelerated_exact_on_noisy_gaussian(self):
        data, _, _ = make_gaussian_dataset(n=200, p=5, seed=13)
        sm = SmoothingParams(h=0.25)
        oracle, _, _ = gaussian_profile_wls(data, sm)
        res = g.fit("gaussian", data, FitConfig(smoothing=sm, max_steps=10),
                    curve_grid=False)
        assert np.linalg.norm(res.beta - oracle) < 1e-8

    def test_one_step_contract_and_max_steps_validation(self):
        design = _small_design("poisson", 120)
        data = g.generate(design, seed=g.replicate_seed(41, 0))
        sm = SmoothingParams(h=0.25, delta=0.1)
        with pytest.raises(ParameterError):
            FitConfig(smoothing=sm, max_steps=0)
        res = g.fit("poisson", data, FitConfig(smoothing=sm, max_steps=1),
                    curve_grid=False)
        assert res.n_steps == 1
        assert len(res.trace) == 2

    def test_monotone_ascent_trace(self):
        design = g.poisson_design(200)
        sm = SmoothingParams(h=0.1, delta=0.1)
        for alg in ("backfitting", "accelerated", "full"):
            cfg = FitConfig(smoothing=sm, algorithm=alg, max_steps=5)
            data = g.generate(design, seed=g.replicate_seed(43, 1))
            res = g.fit("poisson", data, cfg, curve_grid=False)
            values = [v for _, v in res.trace]
            tol = 1e-9 * (1 + abs(values[0]))
            assert all(b >= a - tol for a, b in zip(values, values[1:]))
            assert res.algorithm_used == alg

    def test_algorithm_agreement_on_benchmark_poisson(self):
        design = g.poisson_design(400)
        data = g.generate(design, seed=g.replicate_seed(47, 0))
        sm = SmoothingParams(h=0.08, delta=0.1)
        accel = g.fit("poisson", data, FitConfig(smoothing=sm, max_steps=50),
                      curve_grid=False)
        full = g.fit("poisson", data,
                     FitConfig(smoothing=sm, algorithm="full", max_steps=50),
                     curve_grid=False)
        backfit = g.fit("poisson", data,
                        FitConfig(smoothing=sm, algorithm="backfitting",
                                  max_steps=20),
                        curve_grid=False)
        assert np.linalg.norm(accel.beta - full.beta) < 0.05
        assert np.linalg.norm(accel.beta - backfit.beta) < 0.1

    def test_fit_returns_display_curve(self):
        data, _, _ = make_gaussian_dataset(n=150, p=3, seed=21)
        res = g.fit("gaussian", data, FitConfig(smoothing=SmoothingParams(h=0.3)))
        assert res.curve.grid.shape == (200,)
        assert res.curve.values.shape == (200, data.n_curves)
        assert np.all(np.isfinite(res.curve.values))
        assert np.all(np.diff(res.curve.grid) > 0)
