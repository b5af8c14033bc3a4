from __future__ import annotations

import math

import numpy as np
import pytest

from hadamard_bundle import (
    Hyperboloid,
    ProductManifold,
    Tangent,
    minkowski_inner,
    sharp_toy,
)
from hadamard_bundle.bundle import candidate_radius, model_shift
from hadamard_bundle.errors import ComponentCountMismatch, DimensionMismatch, NonTimelike
from hadamard_bundle.geometry import check_point, estimate_primitive_constants

from conftest import random_point


@pytest.fixture
def h2():
    return Hyperboloid(2)


@pytest.fixture
def vertex(h2):
    return h2.vertex()


class TestMinkowskiInner:
    def test_sheet_membership_value(self):
        x = np.array([0.0, 0.0, 1.0])
        assert minkowski_inner(x, x) == -1.0

    def test_orthogonality(self):
        assert minkowski_inner(np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])) == 0.0

    def test_spacelike_unit(self):
        v = np.array([0.0, 1.0, 0.0])
        assert minkowski_inner(v, v) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            minkowski_inner(np.zeros(3), np.zeros(4))


class TestExpLogDist:
    def test_exp_of_zero_is_exact(self, h2, vertex):
        out = h2.exp(vertex, h2.zero_tangent(vertex))
        assert np.array_equal(out.coords, vertex.coords)

    def test_exp_unit_vector(self, h2, vertex):
        out = h2.exp(vertex, h2.tangent(vertex, np.array([0.0, 1.0, 0.0])))
        assert np.allclose(out.coords, [0.0, math.sinh(1.0), math.cosh(1.0)])

    def test_geodesic_speed(self, h2, rng):
        for _ in range(40):
            x = random_point(h2, rng)
            v = h2.random_tangent(x, rng)
            assert h2.dist(x, h2.exp(x, v)) == pytest.approx(h2.norm(x, v), abs=1e-9)

    def test_log_at_same_point(self, h2, rng):
        x = random_point(h2, rng)
        assert np.abs(h2.log(x, x).coords).max() == 0.0

    def test_log_inverts_exp_example(self, h2, vertex):
        y = h2.point(np.array([0.0, math.sinh(1.0), math.cosh(1.0)]))
        assert np.allclose(h2.log(vertex, y).coords, [0.0, 1.0, 0.0])

    def test_roundtrip_random(self, h2, rng):
        for _ in range(80):
            x = random_point(h2, rng)
            y = random_point(h2, rng)
            v = h2.log(x, y)
            assert h2.dist(h2.exp(x, v), y) < 1e-8 * (1 + h2.dist(x, y))

    def test_log_norm_is_distance(self, h2, rng):
        for _ in range(40):
            x, y = random_point(h2, rng), random_point(h2, rng)
            assert h2.norm(x, h2.log(x, y)) == pytest.approx(h2.dist(x, y), abs=1e-9)

    def test_dist_hand_value(self, h2, vertex):
        y = h2.point(np.array([0.0, math.sinh(1.0), math.cosh(1.0)]))
        assert h2.dist(vertex, y) == pytest.approx(1.0)

    def test_dist_symmetry(self, h2, rng):
        for _ in range(30):
            x, y = random_point(h2, rng), random_point(h2, rng)
            assert h2.dist(x, y) == pytest.approx(h2.dist(y, x), abs=1e-12)


class TestParallelTransport:
    def test_identity_at_same_point(self, h2, rng):
        x = random_point(h2, rng)
        v = h2.random_tangent(x, rng)
        assert np.allclose(h2.parallel_transport(x, x, v).coords, v.coords)

    def test_velocity_transport(self, h2, rng):
        for _ in range(40):
            x, y = random_point(h2, rng), random_point(h2, rng)
            moved = h2.parallel_transport(x, y, h2.log(x, y))
            assert np.abs(moved.coords + h2.log(y, x).coords).max() < 1e-9 * (1 + h2.dist(x, y))

    def test_output_is_tangent_at_target(self, h2, rng):
        for _ in range(40):
            x, y = random_point(h2, rng), random_point(h2, rng)
            v = h2.random_tangent(x, rng)
            out = h2.parallel_transport(x, y, v)
            assert abs(minkowski_inner(out.coords, y.coords)) < 1e-8 * (1 + h2.norm(x, v))


class TestRetraction:
    def test_retract_zero(self, h2, vertex):
        assert np.allclose(h2.retract(vertex, h2.zero_tangent(vertex)).coords, vertex.coords)

    def test_membership_after_retraction(self, h2, rng):
        for _ in range(30):
            x = random_point(h2, rng)
            v = h2.random_tangent(x, rng, scale=0.2)
            check_point(h2, h2.retract(x, v))

    def test_first_order_agreement(self, h2, rng):
        region = [random_point(h2, rng) for _ in range(6)]
        c_r, _ = estimate_primitive_constants(h2, region, 0.3, 300, seed=4)
        for _ in range(40):
            x = random_point(h2, rng)
            v = h2.random_tangent(x, rng)
            nv = h2.norm(x, v)
            if nv < 1e-9:
                continue
            v = Tangent(x, (0.3 / nv) * v.coords)
            for t in (1.0, 0.1, 0.01):
                tv = Tangent(x, t * v.coords)
                gap = h2.dist(h2.exp(x, tv), h2.retract(x, tv))
                assert gap <= 3.0 * c_r * h2.norm(x, tv) ** 2 + 1e-12

    def test_long_vector_is_rejected(self, h2, vertex):
        v = h2.tangent(vertex, np.array([2.0, 0.0, 0.0]))
        with pytest.raises(NonTimelike):
            h2.retract(vertex, v)


class TestProduct:
    def test_singleton_matches_base(self, h2, rng):
        P = ProductManifold(h2, 1)
        x = random_point(h2, rng)
        px = P.point(x.coords[None, :])
        v = h2.random_tangent(x, rng)
        pv = Tangent(px, v.coords[None, :])
        assert P.dist(px, P.exp(px, pv)) == pytest.approx(h2.norm(x, v), abs=1e-9)
        assert P.norm(px, pv) == pytest.approx(h2.norm(x, v), abs=1e-12)

    def test_single_slot_difference(self, h2, rng):
        P = ProductManifold(h2, 5)
        x = random_point(P, rng)
        coords = np.array(x.coords)
        other = random_point(h2, rng)
        coords2 = coords.copy()
        coords2[2] = other.coords
        y = P.point(coords2)
        assert P.dist(x, y) == pytest.approx(h2.dist(P.component(x, 2), other), abs=1e-9)

    def test_componentwise_roundtrip(self, rng):
        P = ProductManifold(Hyperboloid(2), 8)
        x = random_point(P, rng)
        v = P.random_tangent(x, rng)
        back = P.log(x, P.exp(x, v))
        assert np.abs(back.coords - v.coords).max() < 1e-8 * (1 + P.norm(x, v))

    def test_component_count_checked(self, h2):
        P = ProductManifold(h2, 4)
        with pytest.raises(ComponentCountMismatch):
            P.point(np.zeros((3, 3)))

    def test_retraction_failure_propagates(self, h2):
        P = ProductManifold(h2, 2)
        x = P.point(np.stack([h2.vertex().coords] * 2))
        v = Tangent(x, np.stack([[2.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
        with pytest.raises(NonTimelike):
            P.retract(x, v)


class TestCurvatureInequality:
    """Transported-log defect against the constant-curvature bound."""

    def test_defect_bound(self, h2, rng):
        k_coeff = 2.0  # 2 sqrt(-k_min) with k_min = -1
        for alpha in (0.25, 0.5, 1.0):
            for _ in range(120):
                x = random_point(h2, rng)
                y = h2.exp(x, h2.random_tangent(x, rng, scale=alpha * 0.57))
                z = h2.exp(x, h2.random_tangent(x, rng, scale=alpha * 0.57))
                if max(h2.dist(x, y), h2.dist(x, z)) > alpha:
                    continue
                g = h2.random_tangent(z, rng)
                gx = h2.parallel_transport(z, x, g)
                lhs = abs(
                    minkowski_inner(
                        gx.coords,
                        h2.parallel_transport(z, x, h2.log(z, y)).coords
                        - (h2.log(x, y).coords - h2.log(x, z).coords),
                    )
                )
                assert lhs <= k_coeff * h2.norm(z, g) * alpha**2 + 1e-12


class TestShiftSufficiency:
    """The shifted transported cut stays below the objective locally."""

    def test_distance_objective(self, h2, rng):
        target = random_point(h2, rng)
        oracle = sharp_toy(target, h2)
        region = [random_point(h2, rng) for _ in range(6)]
        c_r, c_t = estimate_primitive_constants(h2, region, 0.5, 300, seed=17)
        from dataclasses import replace

        consts = replace(h2.constants(), c_r=2.0 * c_r, c_t=2.0 * c_t)
        alpha = 0.5
        for _ in range(150):
            x = random_point(h2, rng)
            v_z = h2.random_tangent(x, rng, scale=alpha * 0.4)
            if h2.norm(x, v_z) > alpha:
                continue
            z = h2.retract(x, v_z)
            if h2.dist(x, z) > alpha:
                continue
            f_z, g = oracle.eval(z)
            g_hat = h2.transporter(z, x, g)
            kappa = (consts.curvature_coeff + consts.c_r + 2.0 * consts.c_t) * h2.norm(z, g) * alpha**2
            for _ in range(3):
                v = h2.random_tangent(x, rng, scale=alpha * 0.4)
                if h2.norm(x, v) > alpha:
                    continue
                lhs = oracle.eval(h2.exp(x, v))[0]
                rhs = f_z + minkowski_inner(g_hat.coords, v.coords - v_z.coords) - kappa
                assert lhs >= rhs - 1e-7
