"""Tests for interface geometry and the collar metric."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from common.errors import GeometryError
from common.schemas import CurveInterface, SphereInterface
from numerics.geometry import (
    _max_curvature,
    b_from_normal_differences,
    collar_metric_eval,
    curve_collar,
    curve_metric,
    metric_at,
    orientation,
    outward_normal,
    perimeter,
    reach,
    rotate,
    shift_parameter,
)


class TestMetricAt:
    """Fundamental forms on circles, ellipses and spheres."""

    def test_circle(self, circle):
        sample = metric_at(circle, 0.3)
        assert_allclose(sample.g0, [[1.0]], atol=1e-14)
        assert_allclose(sample.b, [[-1.0]], atol=1e-14)
        assert_allclose(sample.H, -1.0, atol=1e-14)
        assert_allclose(sample.G_tilde, [[-2.0]], atol=1e-14)

    def test_ellipse_vertices(self, ellipse):
        major = metric_at(ellipse, 0.0)
        assert_allclose(major.g0, [[1.0]], atol=1e-14)
        assert_allclose(major.H, -2.0, atol=1e-14)
        minor = metric_at(ellipse, np.pi / 2)
        assert_allclose(minor.g0, [[4.0]], atol=1e-14)
        assert_allclose(minor.b, [[-1.0]], atol=1e-14)
        assert_allclose(minor.H, -0.25, atol=1e-14)

    def test_sphere_equator(self, unit_sphere):
        sample = metric_at(unit_sphere, np.array([np.pi / 2, 0.3]))
        assert_allclose(sample.g0, np.eye(2), atol=1e-14)
        assert_allclose(sample.b, -np.eye(2), atol=1e-14)
        assert_allclose(sample.H, -2.0)
        assert_allclose(sample.sqrt_G0, 1.0)

    def test_sphere_radius_scaling(self):
        sample = metric_at(SphereInterface(n=4, r=2.0), np.array([1.0, 0.7, 0.2]))
        assert_allclose(sample.b, -sample.g0 / 2.0)
        assert_allclose(sample.H, -1.5)

    def test_sphere_pole_is_rejected(self, unit_sphere):
        with pytest.raises(GeometryError, match="pole"):
            metric_at(unit_sphere, np.array([0.0, 1.0]))

    def test_wrong_angle_count(self, unit_sphere):
        with pytest.raises(ValueError):
            metric_at(unit_sphere, 0.5)

    def test_degenerate_parameterization_names_xi(self):
        point = CurveInterface.model_construct(coefficients=(((0.0, 0.0), (0.0, 0.0)), ((0.0, 0.0), (0.0, 0.0))))
        with pytest.raises(GeometryError, match="xi ="):
            curve_metric(point, np.linspace(0.0, 1.0, 5))

    def test_schema_rejects_degenerate_curve(self):
        with pytest.raises(ValueError, match="degenerate"):
            CurveInterface(coefficients=(((0.0, 0.0), (0.0, 0.0)), ((0.0, 0.0), (0.0, 0.0))))


class TestOrientation:
    """Outward normals for both parameterization directions."""

    def test_counterclockwise(self, circle):
        assert orientation(circle) == 1
        assert_allclose(outward_normal(circle, 0.0), [1.0, 0.0], atol=1e-14)

    def test_clockwise_still_outward(self):
        clockwise = CurveInterface.ellipse(2.0, -1.0)
        assert orientation(clockwise) == -1
        assert_allclose(outward_normal(clockwise, 0.0), [1.0, 0.0], atol=1e-14)
        assert_allclose(curve_metric(clockwise, 0.0).H, -2.0, atol=1e-14)


class TestReach:
    """Collar admissibility bound."""

    def test_sphere_reach_is_radius(self):
        assert reach(SphereInterface(n=3, r=1.5)) == 1.5

    def test_ellipse_reach(self, ellipse):
        value = reach(ellipse)
        assert value <= 0.5
        assert_allclose(value, 0.45, rtol=1e-6)

    def test_outside_collar(self, ellipse):
        with pytest.raises(GeometryError, match="outside collar"):
            collar_metric_eval(ellipse, 0.0, 0.5)

    def test_curve_reach_is_sampled_once(self, ellipse):
        first = reach(ellipse)
        hits = _max_curvature.cache_info().hits
        for t in (0.1, 0.2, 0.3):
            collar_metric_eval(ellipse, 0.4, t)
        curve_collar(ellipse, np.array([0.0, 1.0]), np.array([0.1, -0.1]))
        assert _max_curvature.cache_info().hits >= hits + 4
        assert reach(CurveInterface.ellipse(2.0, 1.0)) == first


class TestCollarMetric:
    """Exact collar metric g₀ − 2tb + t² b g₀⁻¹ b."""

    def test_circle_closed_form(self, circle):
        g_inv, sqrt_G = collar_metric_eval(circle, 0.3, 0.1)
        assert_allclose(sqrt_G, 1.1)
        assert_allclose(g_inv, [[1.0 / 1.21]])

    def test_sphere_closed_form(self, unit_sphere):
        xi = np.array([1.1, 0.4])
        g_inv, sqrt_G = collar_metric_eval(unit_sphere, xi, 0.2)
        sample = metric_at(unit_sphere, xi)
        assert_allclose(sqrt_G, 1.2**2 * sample.sqrt_G0)
        assert_allclose(g_inv, sample.g0_inv / 1.44)

    def test_vectorized_curve_matches_pointwise(self, ellipse):
        theta = np.array([0.0, 0.8, 2.5])
        t = np.array([-0.2, 0.05, 0.3])
        g_inv, sqrt_G = curve_collar(ellipse, theta, t)
        for i in range(theta.size):
            reference_inv, reference_sqrt = collar_metric_eval(ellipse, theta[i], t[i])
            assert_allclose(g_inv[i], reference_inv[0, 0], rtol=1e-12)
            assert_allclose(sqrt_G[i], reference_sqrt, rtol=1e-12)

    def test_first_order_expansion(self, ellipse):
        sample = metric_at(ellipse, 0.9)
        errors = []
        for t in (1e-2, 5e-3, 2.5e-3):
            g_inv, _ = collar_metric_eval(ellipse, 0.9, t)
            errors.append(abs(g_inv[0, 0] - (sample.g0_inv[0, 0] + t * sample.G_tilde[0, 0])))
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
        assert np.all(orders >= 1.9)

    @pytest.mark.parametrize("n", [3, 4])
    def test_volume_element_expansion_on_spheres(self, n):
        spec = SphereInterface(n=n, r=1.0)
        xi = np.array([1.1, 0.4, 0.7][: n - 1])
        sample = metric_at(spec, xi)
        t = np.array([1e-2, 1e-3, 1e-4])
        errors = [abs(collar_metric_eval(spec, xi, s)[1] - sample.sqrt_G0 * (1.0 - s * sample.H)) for s in t]
        assert np.polyfit(np.log(t), np.log(errors), 1)[0] >= 1.9

    def test_volume_element_is_linear_for_curves(self, ellipse):
        for theta, t in ((0.0, 0.2), (0.9, -0.3), (2.4, 0.1)):
            sample = metric_at(ellipse, theta)
            _, sqrt_G = collar_metric_eval(ellipse, theta, t)
            assert_allclose(sqrt_G, sample.sqrt_G0 * (1.0 - t * sample.H), rtol=1e-12)


class TestSecondFundamentalForm:
    """Analytic b against finite differences of the normal."""

    def test_ellipse(self, ellipse):
        for theta in (0.0, 0.7, 2.0):
            assert_allclose(b_from_normal_differences(ellipse, theta), metric_at(ellipse, theta).b, rtol=1e-7)

    def test_sphere(self, unit_sphere):
        xi = np.array([1.0, 0.4])
        assert_allclose(b_from_normal_differences(unit_sphere, xi), metric_at(unit_sphere, xi).b, atol=1e-8)


class TestReparameterization:
    """Shifted and rotated coefficient sets describe congruent curves."""

    def test_shift_parameter(self, ellipse):
        shifted = shift_parameter(ellipse, 0.4)
        assert_allclose(curve_metric(shifted, 1.0).H, curve_metric(ellipse, 1.4).H, rtol=1e-12)

    def test_rotation_keeps_curvature(self, ellipse):
        rotated = rotate(ellipse, 0.9)
        assert_allclose(curve_metric(rotated, 0.6).H, curve_metric(ellipse, 0.6).H, rtol=1e-12)
        assert_allclose(perimeter(rotated), perimeter(ellipse), rtol=1e-12)

    def test_circle_perimeter(self):
        assert_allclose(perimeter(CurveInterface.circle(1.5)), 3.0 * np.pi, rtol=1e-12)
