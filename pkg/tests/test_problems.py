from __future__ import annotations

import math

import numpy as np
import pytest

from hadamard_bundle import (
    Euclidean,
    Hyperboloid,
    ProductManifold,
    SymmetricPositiveDefinite,
    Tangent,
    add_tangent_noise,
    check_point,
    check_tangent,
    gen_random_spd,
    gen_square_wave,
    make_denoise_instance,
    median_oracle,
    sharp_toy,
    tv_oracle,
)

from conftest import random_point


class TestMedianOracle:
    def test_single_coincident_point(self, rng):
        S = SymmetricPositiveDefinite(2)
        X = random_point(S, rng)
        oracle = median_oracle([X], S)
        f, g = oracle.eval(X)
        assert f == pytest.approx(0.0, abs=1e-12)
        assert np.abs(g.coords).max() == 0.0

    def test_scalar_case_hand_value(self):
        # on 1x1 matrices the metric distance is |log(x) - log(y)|
        S = SymmetricPositiveDefinite(1)
        data = [S.point(np.array([[1.0]])), S.point(np.array([[math.e**2]]))]
        oracle = median_oracle(data, S)
        f, g = oracle.eval(S.point(np.array([[math.e]])))
        assert f == pytest.approx(1.0)
        assert abs(g.coords[0, 0]) < 1e-12  # midpoint balances the pulls

    def test_lipschitz_bound_on_random_queries(self, rng):
        S = SymmetricPositiveDefinite(3)
        data = [random_point(S, rng) for _ in range(8)]
        oracle = median_oracle(data, S)
        for _ in range(100):
            X = random_point(S, rng)
            _, g = oracle.eval(X)
            assert S.norm(X, g) <= 1.0 + 1e-9

    def test_empty_data_rejected(self):
        S = SymmetricPositiveDefinite(2)
        with pytest.raises(ValueError):
            median_oracle([], S)

    def test_subgradient_inequality(self, rng):
        H = Hyperboloid(2)
        data = [random_point(H, rng) for _ in range(5)]
        oracle = median_oracle(data, H)
        for _ in range(20):
            x = random_point(H, rng)
            f, g = oracle.eval(x)
            for _ in range(5):
                v = H.random_tangent(x, rng)
                lhs = oracle.eval(H.exp(x, v))[0]
                assert lhs >= f + H.inner(x, g, v) - 1e-7


class TestTvOracle:
    def test_zero_at_constant_noiseless_signal(self):
        inst, M = make_denoise_instance(n=6, alpha=0.5, sigma=0.0, seed=0, period=12)
        # period 12 over 6 samples: constant signal, and noisy == clean
        oracle = tv_oracle(inst, M)
        f, g = oracle.eval(inst.noisy)
        assert f == pytest.approx(0.0, abs=1e-14)
        assert np.abs(g.coords).max() < 1e-12

    def test_single_edge_hand_value(self, rng):
        H = Hyperboloid(2)
        M = ProductManifold(H, 2)
        a = random_point(H, rng)
        b = random_point(H, rng)
        signal = M.point(np.stack([a.coords, b.coords]))
        from hadamard_bundle.problems import DenoiseInstance

        alpha = 0.7
        inst = DenoiseInstance(clean=signal, noisy=signal, alpha=alpha, n=2, sigma=0.0, seed=0)
        oracle = tv_oracle(inst, M)
        f, _ = oracle.eval(signal)
        assert f == pytest.approx(alpha * H.dist(a, b) / 2.0)

    def test_subgradient_tangency(self):
        inst, M = make_denoise_instance(n=12, alpha=0.5, sigma=0.3, seed=1)
        oracle = tv_oracle(inst, M)
        p = inst.noisy
        _, g = oracle.eval(p)
        check_tangent(M, p, g)

    def test_lipschitz_bound_along_run_region(self, rng):
        inst, M = make_denoise_instance(n=10, alpha=0.5, sigma=0.3, seed=2)
        oracle = tv_oracle(inst, M)
        f0, _ = oracle.eval(inst.noisy)
        # sample within the sublevel set of the noisy signal
        for _ in range(60):
            v = M.random_tangent(inst.noisy, rng, scale=0.1)
            p = M.exp(inst.noisy, v)
            f, g = oracle.eval(p)
            if f <= f0:
                assert M.norm(p, g) <= oracle.lip_bound + 1e-9

    def test_subgradient_inequality(self, rng):
        inst, M = make_denoise_instance(n=8, alpha=0.5, sigma=0.3, seed=3)
        oracle = tv_oracle(inst, M)
        for _ in range(15):
            x = M.exp(inst.noisy, M.random_tangent(inst.noisy, rng, scale=0.2))
            f, g = oracle.eval(x)
            for _ in range(5):
                v = M.random_tangent(x, rng, scale=0.5)
                lhs = oracle.eval(M.exp(x, v))[0]
                assert lhs >= f + M.inner(x, g, v) - 1e-7


class TestGenerators:
    def test_zero_spread_gives_identity(self):
        pts = gen_random_spd(3, 4, 0.0, seed=0)
        for p in pts:
            assert np.allclose(p.coords, np.eye(3))

    def test_generated_points_are_valid(self):
        S = SymmetricPositiveDefinite(4)
        for p in gen_random_spd(4, 6, 1.0, seed=1, M=S):
            check_point(S, p)

    def test_paper_scale_shape(self):
        pts = gen_random_spd(55, 20, 1.0, seed=2)
        assert len(pts) == 20
        assert pts[0].coords.shape == (55, 55)

    def test_deterministic(self):
        a = gen_random_spd(3, 2, 1.0, seed=5)
        b = gen_random_spd(3, 2, 1.0, seed=5)
        assert np.array_equal(a[0].coords, b[0].coords)

    def test_square_wave_alternates(self):
        H = Hyperboloid(2)
        lo = H.vertex()
        hi = H.exp(lo, H.tangent(lo, np.array([1.0, 0.0, 0.0])))
        wave = gen_square_wave(8, lo, hi, period=4)
        coords = wave.coords
        assert np.allclose(coords[0], lo.coords)
        assert np.allclose(coords[2], hi.coords)
        assert np.allclose(coords[4], lo.coords)

    def test_square_wave_half_split(self):
        H = Hyperboloid(2)
        lo = H.vertex()
        hi = H.exp(lo, H.tangent(lo, np.array([1.0, 0.0, 0.0])))
        n = 10
        wave = gen_square_wave(n, lo, hi, period=n)
        for i in range(n // 2):
            assert np.allclose(wave.coords[i], lo.coords)
        for i in range(n // 2, n):
            assert np.allclose(wave.coords[i], hi.coords)

    def test_square_wave_paper_scale(self):
        H = Hyperboloid(2)
        lo = H.vertex()
        hi = H.exp(lo, H.tangent(lo, np.array([1.0, 0.0, 0.0])))
        M = ProductManifold(H, 496)
        wave = gen_square_wave(496, lo, hi, period=124)
        assert wave.coords.shape == (496, 3)
        check_point(M, M.point(wave.coords))

    def test_noise_zero_sigma_is_identity(self):
        inst, M = make_denoise_instance(n=8, alpha=0.5, sigma=0.0, seed=4)
        assert np.array_equal(inst.noisy.coords, inst.clean.coords)

    def test_noise_components_valid(self):
        inst, M = make_denoise_instance(n=16, alpha=0.5, sigma=0.3, seed=5)
        check_point(M, inst.noisy)

    def test_noise_mean_squared_distance(self):
        # E d(q, qhat)^2 = 2 sigma^2 on H_2 (two tangent dimensions)
        H = Hyperboloid(2)
        M = ProductManifold(H, 10_000)
        q = M.point(np.stack([H.vertex().coords] * 10_000))
        sigma = 0.3
        noisy = add_tangent_noise(M, q, sigma, seed=6)
        d = H.dist_batch(q.coords, noisy.coords)
        assert float(np.mean(d**2)) == pytest.approx(2.0 * sigma**2, rel=0.05)


class TestSharpToy:
    def test_at_target(self, rng):
        H = Hyperboloid(2)
        t = random_point(H, rng)
        oracle = sharp_toy(t, H)
        f, g = oracle.eval(t)
        assert f == 0.0
        assert np.abs(g.coords).max() == 0.0

    def test_value_is_geodesic_distance(self, rng):
        H = Hyperboloid(2)
        t = random_point(H, rng)
        oracle = sharp_toy(t, H)
        v = H.random_tangent(t, rng)
        assert oracle.eval(H.exp(t, v))[0] == pytest.approx(H.norm(t, v), abs=1e-9)

    def test_unit_subgradient_away_from_target(self, rng):
        E = Euclidean(6)
        t = random_point(E, rng)
        oracle = sharp_toy(t, E)
        x = random_point(E, rng)
        _, g = oracle.eval(x)
        assert E.norm(x, g) == pytest.approx(1.0, abs=1e-12)
