import numpy as np
import pytest

import gvcplm as g
from gvcplm import Dataset, ParameterError


class TestDifferenceWeights:
    def test_partial_linear_window(self):
        w = g.difference_weights(np.ones((2, 1)))
        np.testing.assert_allclose(w, np.array([1.0, -1.0]) / np.sqrt(2), atol=1e-12)

    def test_unique_null_direction(self):
        window = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        w = g.difference_weights(window)
        np.testing.assert_allclose(w, np.array([1.0, 1.0, -1.0]) / np.sqrt(3),
                                   atol=1e-12)

    def test_random_windows_annihilate(self, rng):
        for _ in range(25):
            window = rng.normal(size=(3, 2))
            w = g.difference_weights(window)
            assert np.linalg.norm(w @ window) < 1e-10
            assert np.linalg.norm(w) == pytest.approx(1.0)
            # sign convention: first sizable entry positive
            lead = np.flatnonzero(np.abs(w) > 1e-12)[0]
            assert w[lead] > 0

    def test_rank_deficient_window_still_returns_unit_vector(self):
        window = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])  # rank 1
        w = g.difference_weights(window)
        assert np.linalg.norm(w) == pytest.approx(1.0)
        assert np.linalg.norm(w @ window) < 1e-10

    def test_bad_shape(self):
        with pytest.raises(ParameterError):
            g.difference_weights(np.ones((3, 3)))


def _constant_alpha_dataset(n=120, p=3, seed=4, noise=0.0):
    gen = np.random.default_rng(seed)
    u = gen.uniform(0, 1, n)
    x = np.ones((n, 1))
    z = gen.normal(size=(n, p))
    beta = np.array([0.8, -0.4, 0.2])
    y = 1.5 + z @ beta + noise * gen.normal(size=n)
    return Dataset(u=u, x=x, z=z, y=y), beta


class TestFitDbe:
    def test_exact_recovery_without_noise(self):
        # constant coefficient function, no noise: differencing is exact
        data, beta = _constant_alpha_dataset()
        result = g.fit_dbe("gaussian", data)
        np.testing.assert_allclose(result.beta0, beta, atol=1e-8)
        assert result.n_starred == data.n - data.n_curves

    def test_permutation_invariance(self, rng):
        data, _ = _constant_alpha_dataset(noise=0.5)
        perm = rng.permutation(data.n)
        shuffled = Dataset(u=data.u[perm], x=data.x[perm],
                           z=data.z[perm], y=data.y[perm])
        a = g.fit_dbe("gaussian", data)
        b = g.fit_dbe("gaussian", shuffled)
        np.testing.assert_allclose(a.beta0, b.beta0, atol=1e-12)
        np.testing.assert_allclose(a.gamma0, b.gamma0, atol=1e-12)

    def test_gaussian_benchmark_design_beats_noise_floor(self):
        # gaussian variant of the benchmark design: the converged fit should
        # reduce the difference-based GMSE by far more than half
        design = g.poisson_design(400)
        gen = np.random.default_rng(9)
        u = gen.uniform(0, 1, 400)
        chol = np.linalg.cholesky(g.ar1_moment(design.p_dim + 1))
        zx = gen.standard_normal((400, design.p_dim + 1)) @ chol.T
        z, x2 = zx[:, :design.p_dim], zx[:, design.p_dim]
        x = np.column_stack([np.ones(400), x2])
        a1, a2 = design.alpha_funcs
        y = a1(u) + a2(u) * x2 + z @ design.beta0 + gen.normal(size=400)
        data = Dataset(u=u, x=x, z=z, y=y)
        moment = g.design_moment(design)
        dbe = g.fit_dbe("gaussian", data)
        cfg = g.FitConfig(smoothing=g.SmoothingParams(h=0.15), max_steps=50)
        final = g.fit("gaussian", data, cfg, init=dbe.beta0, curve_grid=False)
        ratio = g.gmse(final.beta, design.beta0, moment) / g.gmse(
            dbe.beta0, design.beta0, moment
        )
        assert np.isfinite(ratio)
        assert ratio < 0.5

    def test_poisson_initializer_is_consistent_enough(self):
        # calibration run: the start lands within Euclidean distance 1.5 of
        # the truth in at least 90% of replicates
        design = g.poisson_design(200)
        hits = 0
        reps = 50
        for rep in range(reps):
            data = g.generate(design, seed=g.replicate_seed(13, rep))
            result = g.fit_dbe("poisson", data, 0.1)
            hits += np.linalg.norm(result.beta0 - design.beta0) < 1.5
        assert hits >= 0.9 * reps

    def test_sample_size_precondition(self):
        data, _ = _constant_alpha_dataset(n=7)
        with pytest.raises(ParameterError):
            g.fit_dbe("gaussian", data)
