"""Tests for P2 elements and meshes."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from numerics.fem import CurveMesh1D, IntervalMesh1D, assemble, gauss_rule, p2_basis, p2_basis_derivative


class TestGaussRule:
    """Gauss–Legendre rule on [0, 1]."""

    def test_weights_sum_to_one(self):
        _, w = gauss_rule()
        assert_allclose(w.sum(), 1.0)

    def test_exact_for_degree_seven(self):
        s, w = gauss_rule(4)
        assert_allclose(np.sum(w * s**7), 1.0 / 8.0, rtol=1e-14)


class TestP2Basis:
    """Quadratic shape functions."""

    def test_nodal_interpolation(self):
        assert_allclose(p2_basis(np.array([0.0, 0.5, 1.0])), np.eye(3), atol=1e-15)

    def test_partition_of_unity(self):
        s = np.linspace(0.0, 1.0, 11)
        assert_allclose(p2_basis(s).sum(axis=1), 1.0)
        assert_allclose(p2_basis_derivative(s).sum(axis=1), 0.0, atol=1e-14)

    def test_reproduces_quadratics(self):
        s = np.linspace(0.0, 1.0, 7)
        nodal = np.array([0.0, 0.25, 1.0])
        assert_allclose(p2_basis(s) @ nodal, s**2, atol=1e-15)
        assert_allclose(p2_basis_derivative(s) @ nodal, 2.0 * s, atol=1e-14)


class TestCurveMesh1D:
    """Periodic mesh of [0, 2π)."""

    def test_rejects_small_or_odd_meshes(self):
        with pytest.raises(ValueError):
            CurveMesh1D(8)
        with pytest.raises(ValueError):
            CurveMesh1D(33)

    def test_connectivity_wraps(self):
        mesh = CurveMesh1D(16)
        assert mesh.elements == 8
        assert mesh.connectivity[-1].tolist() == [14, 15, 0]

    def test_quadrature_integrates_period(self):
        theta, w = CurveMesh1D(32).quadrature()
        assert_allclose(w.sum(), 2.0 * np.pi)
        assert_allclose(np.sum(w * np.cos(theta) ** 2), np.pi, rtol=1e-8)

    def test_locate_reduces_modulo_period(self):
        mesh = CurveMesh1D(16)
        element, s = mesh.locate(np.array([2.0 * np.pi + 0.5 * mesh.element_length]))
        assert element.tolist() == [0]
        assert_allclose(s, [0.5])


class TestIntervalMesh1D:
    """Interface-aligned interval meshes."""

    def test_two_sided_keeps_interface_as_breakpoint(self):
        mesh = IntervalMesh1D.two_sided(0.9, 1.0, 1.1, 4)
        assert mesh.elements == 8
        assert mesh.size == 17
        assert mesh.index_of(1.0) == 8
        assert_allclose(mesh.nodes[8], 1.0)

    def test_rejects_unsorted_breaks(self):
        with pytest.raises(ValueError):
            IntervalMesh1D(np.array([0.0, 1.0, 0.5]))

    def test_index_of_unknown_coordinate(self):
        with pytest.raises(ValueError):
            IntervalMesh1D.two_sided(0.0, 1.0, 2.0, 2).index_of(0.3)


class TestAssemble:
    """Sparse scatter of element matrices."""

    def test_overlapping_entries_are_summed(self):
        connectivity = np.array([[0, 1], [1, 2]])
        local = np.ones((2, 2, 2))
        matrix = assemble(connectivity, local, 3).toarray()
        assert_allclose(matrix, [[1, 1, 0], [1, 2, 1], [0, 1, 1]])
