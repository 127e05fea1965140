"""Quadratic (P2) Lagrange elements on periodic and interval meshes."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

GAUSS_POINTS = 4


def gauss_rule(points: int = GAUSS_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Gauss–Legendre rule mapped to the reference element [0, 1].

    Args:
        points: Number of quadrature points

    Returns:
        Tuple of (nodes, weights)
    """
    x, w = np.polynomial.legendre.leggauss(points)
    return 0.5 * (x + 1.0), 0.5 * w


def p2_basis(s: np.ndarray) -> np.ndarray:
    """P2 shape functions at reference points s ∈ [0, 1], nodes at 0, 1/2, 1.

    Returns:
        Array of shape (len(s), 3)
    """
    s = np.asarray(s, dtype=float)
    return np.stack([2.0 * (s - 0.5) * (s - 1.0), -4.0 * s * (s - 1.0), 2.0 * s * (s - 0.5)], axis=-1)


def p2_basis_derivative(s: np.ndarray) -> np.ndarray:
    """Reference derivatives d/ds of the P2 shape functions, shape (len(s), 3)."""
    s = np.asarray(s, dtype=float)
    return np.stack([4.0 * s - 3.0, -8.0 * s + 4.0, 4.0 * s - 1.0], axis=-1)


@dataclass(frozen=True)
class CurveMesh1D:
    """Uniform periodic P2 mesh of [0, 2π): M nodes, M/2 elements."""

    nodes_count: int

    def __post_init__(self) -> None:
        if self.nodes_count < 16:
            raise ValueError(f"periodic mesh needs at least 16 nodes, got {self.nodes_count}")
        if self.nodes_count % 2:
            raise ValueError(f"periodic P2 mesh needs an even node count, got {self.nodes_count}")

    @property
    def elements(self) -> int:
        """Number of elements."""
        return self.nodes_count // 2

    @property
    def element_length(self) -> float:
        """Parameter length of one element."""
        return 2.0 * np.pi / self.elements

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node parameters θ_0 < … < θ_{M−1}."""
        return np.linspace(0.0, 2.0 * np.pi, self.nodes_count, endpoint=False)

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Global node indices per element, shape (elements, 3), wrapping at 2π."""
        first = 2 * np.arange(self.elements)
        return np.stack([first, first + 1, (first + 2) % self.nodes_count], axis=1)

    def quadrature(self, points: int = GAUSS_POINTS) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature points and weights per element.

        Returns:
            Tuple of (theta, weights), each of shape (elements, points)
        """
        s, w = gauss_rule(points)
        start = self.element_length * np.arange(self.elements)
        theta = start[:, None] + self.element_length * s[None, :]
        weights = np.broadcast_to(self.element_length * w, theta.shape).copy()
        return theta, weights

    def locate(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Element index and reference coordinate of arbitrary parameters.

        Args:
            theta: Parameter values (any real numbers, reduced modulo 2π)

        Returns:
            Tuple of (element indices, reference coordinates in [0, 1])
        """
        reduced = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
        position = reduced / self.element_length
        element = np.minimum(np.floor(position).astype(int), self.elements - 1)
        return element, position - element


@dataclass(frozen=True)
class IntervalMesh1D:
    """P2 mesh of an interval given by element breakpoints."""

    breaks: np.ndarray

    def __post_init__(self) -> None:
        breaks = np.asarray(self.breaks, dtype=float)
        if breaks.ndim != 1 or breaks.size < 2 or np.any(np.diff(breaks) <= 0.0):
            raise ValueError("interval mesh breakpoints must be strictly increasing")
        object.__setattr__(self, "breaks", breaks)

    @classmethod
    def two_sided(cls, left: float, interface: float, right: float, per_side: int) -> "IntervalMesh1D":
        """Uniform mesh on each side of ``interface``, which is a breakpoint exactly once."""
        inner = np.linspace(left, interface, per_side + 1)
        outer = np.linspace(interface, right, per_side + 1)[1:]
        return cls(np.concatenate([inner, outer]))

    @property
    def elements(self) -> int:
        """Number of elements."""
        return self.breaks.size - 1

    @property
    def size(self) -> int:
        """Number of nodes (vertices and midpoints)."""
        return 2 * self.elements + 1

    @cached_property
    def lengths(self) -> np.ndarray:
        """Element lengths."""
        return np.diff(self.breaks)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node coordinates including element midpoints."""
        nodes = np.empty(self.size)
        nodes[0::2] = self.breaks
        nodes[1::2] = 0.5 * (self.breaks[:-1] + self.breaks[1:])
        return nodes

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Global node indices per element, shape (elements, 3)."""
        first = 2 * np.arange(self.elements)
        return np.stack([first, first + 1, first + 2], axis=1)

    @cached_property
    def centers(self) -> np.ndarray:
        """Element midpoints."""
        return self.nodes[1::2]

    def quadrature(self, points: int = GAUSS_POINTS) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature points and weights per element, each of shape (elements, points)."""
        s, w = gauss_rule(points)
        x = self.breaks[:-1, None] + self.lengths[:, None] * s[None, :]
        return x, self.lengths[:, None] * w[None, :]

    def index_of(self, coordinate: float) -> int:
        """Node index of a breakpoint.

        Raises:
            ValueError: When ``coordinate`` is not a breakpoint
        """
        hits = np.flatnonzero(np.isclose(self.nodes[0::2], coordinate, rtol=0.0, atol=1e-14 * max(1.0, abs(coordinate))))
        if hits.size != 1:
            raise ValueError(f"{coordinate} is not a unique mesh breakpoint")
        return int(2 * hits[0])


def assemble(connectivity: np.ndarray, local: np.ndarray, size: int) -> sp.csr_matrix:
    """Scatter element matrices into a sparse global matrix.

    Args:
        connectivity: Global indices, shape (elements, nloc)
        local: Element matrices, shape (elements, nloc, nloc)
        size: Global matrix size

    Returns:
        Assembled CSR matrix (duplicates summed)
    """
    nloc = connectivity.shape[1]
    rows = np.repeat(connectivity, nloc, axis=1).ravel()
    cols = np.tile(connectivity, (1, nloc)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(size, size)).tocsr()
