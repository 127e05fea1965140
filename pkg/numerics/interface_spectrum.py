"""Laplace–Beltrami spectra of the interface with multiplicity clusters."""

from collections.abc import Iterator
from dataclasses import dataclass, field
from math import comb
from typing import Literal, Protocol

import numpy as np
from scipy.special import eval_gegenbauer, gammaln

from common.logger import get_logger
from common.schemas import CurveInterface, InterfaceSpec, SphereInterface
from common.settings import settings
from numerics.fem import CurveMesh1D, assemble, gauss_rule, p2_basis, p2_basis_derivative
from numerics.geometry import curve_metric
from numerics.linalg import fix_signs, generalized_eigh

logger = get_logger(__name__)

CLUSTER_LOOKAHEAD = 2


class Eigenfunction(Protocol):
    """Interface eigenfunction Φ with ∫Φ²√G₀ dξ = 1."""

    def value(self, xi: np.ndarray) -> np.ndarray:
        """Φ at points ``xi`` of shape (n−1, ...) for spheres or (...) for curves."""
        ...

    def gradient(self, xi: np.ndarray) -> np.ndarray:
        """∂Φ/∂ξ_i stacked along the first axis, shape (n−1, ...)."""
        ...


def harmonic_dimension(n: int, l: int) -> int:
    """Number of linearly independent degree-l harmonics on S^{n−1}."""
    return comb(l + n - 1, n - 1) - (comb(l + n - 3, n - 1) if l >= 2 else 0)


def harmonic_labels(n: int, l: int) -> Iterator[tuple[tuple[int, ...], Literal["cos", "sin"]]]:
    """Label chains l = l₁ ≥ l₂ ≥ … ≥ l_{n−1} = |m| ≥ 0 in lexicographic order.

    Yields:
        Tuple of (chain, trigonometric factor in φ); m > 0 yields cos then sin.
    """

    def chains(prefix: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
        if len(prefix) == n - 1:
            yield prefix
            return
        for nxt in range(prefix[-1] + 1):
            yield from chains((*prefix, nxt))

    for chain in chains((l,)):
        yield chain, "cos"
        if chain[-1] > 0:
            yield chain, "sin"


def _log_gegenbauer_norm(k: int, alpha: float) -> float:
    """log ∫_{−1}^{1} C_k^α(x)² (1 − x²)^{α−1/2} dx."""
    return float(
        np.log(np.pi) + (1.0 - 2.0 * alpha) * np.log(2.0) + gammaln(k + 2.0 * alpha)
        - gammaln(k + 1.0) - np.log(k + alpha) - 2.0 * gammaln(alpha)
    )


@dataclass(frozen=True)
class SphericalHarmonic:
    """Real hyperspherical harmonic on S^{n−1}(r), normalized in L²(√G₀).

    In angles (θ₁, …, θ_{n−2}, φ):
    Y = N · Π_j sin^{l_{j+1}}θ_j C^{α_j}_{l_j − l_{j+1}}(cos θ_j) · trig(mφ),
    with α_j = l_{j+1} + (n − j − 1)/2.
    """

    n: int
    r: float
    chain: tuple[int, ...]
    trig: Literal["cos", "sin"]
    norm: float = field(init=False)

    def __post_init__(self) -> None:
        log_norm = 0.0
        for j in range(1, self.n - 1):
            k, alpha = self._factor(j)
            log_norm += _log_gegenbauer_norm(k, alpha)
        m = self.chain[-1]
        phi_norm = 2.0 * np.pi if m == 0 else np.pi
        norm = np.exp(-0.5 * log_norm) / np.sqrt(phi_norm) * self.r ** (-(self.n - 1) / 2.0)
        object.__setattr__(self, "norm", float(norm))

    @property
    def degree(self) -> int:
        """Degree l."""
        return self.chain[0]

    @property
    def m(self) -> int:
        """Azimuthal number |m|."""
        return self.chain[-1]

    def _factor(self, j: int) -> tuple[int, float]:
        """(Gegenbauer degree, α) of the θ_j factor, j = 1 … n−2."""
        lower = self.chain[j]
        return self.chain[j - 1] - lower, lower + (self.n - j - 1) / 2.0

    def _theta_factor(self, j: int, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        k, alpha = self._factor(j)
        power = self.chain[j]
        s, c = np.sin(theta), np.cos(theta)
        poly = eval_gegenbauer(k, alpha, c)
        dpoly = 2.0 * alpha * eval_gegenbauer(k - 1, alpha + 1.0, c) if k > 0 else np.zeros_like(c)
        value = s**power * poly
        lead = power * s ** (power - 1) * c * poly if power > 0 else np.zeros_like(c)
        return value, lead - s ** (power + 1) * dpoly

    def _phi_factor(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        m = self.m
        if self.trig == "cos":
            return np.cos(m * phi), -m * np.sin(m * phi)
        return np.sin(m * phi), m * np.cos(m * phi)

    def _factors(self, xi: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
        xi = np.asarray(xi, dtype=float).reshape(self.n - 1, *np.shape(xi)[1:])
        factors = [self._theta_factor(j, xi[j - 1]) for j in range(1, self.n - 1)]
        factors.append(self._phi_factor(xi[-1]))
        return factors

    def value(self, xi: np.ndarray) -> np.ndarray:
        """Y at angle arrays stacked along the first axis."""
        result = self.norm
        for value, _ in self._factors(xi):
            result = result * value
        return np.asarray(result)

    def gradient(self, xi: np.ndarray) -> np.ndarray:
        """Angular derivatives ∂Y/∂ξ_i, shape (n−1, ...)."""
        factors = self._factors(xi)
        values = [v for v, _ in factors]
        grads = []
        for i, (_, derivative) in enumerate(factors):
            term = self.norm * derivative
            for j, value in enumerate(values):
                if j != i:
                    term = term * value
            grads.append(term)
        return np.stack(grads)


@dataclass(frozen=True)
class DiscreteCurveMode:
    """P2 finite element eigenfunction on a periodic curve mesh."""

    mesh: CurveMesh1D
    nodal: np.ndarray

    def _local(self, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        element, s = self.mesh.locate(theta)
        return self.nodal[self.mesh.connectivity[element]], s

    def value(self, xi: np.ndarray) -> np.ndarray:
        """Φ(θ)."""
        local, s = self._local(xi)
        return np.sum(local * p2_basis(s), axis=-1)

    def gradient(self, xi: np.ndarray) -> np.ndarray:
        """dΦ/dθ with a leading axis of length 1."""
        local, s = self._local(xi)
        return (np.sum(local * p2_basis_derivative(s), axis=-1) / self.mesh.element_length)[None, ...]


@dataclass(frozen=True)
class Spectrum:
    """Ordered interface eigenvalues with clusters and normalized eigenfunctions.

    Attributes:
        spec: Interface the spectrum belongs to
        eigenvalues: λ₁ ≤ … ≤ λ_K
        clusters: 1-based inclusive index ranges; the last range may extend past K
            when the K-th eigenvalue cuts a cluster
        eigenfunctions: Handles for indices 1 … K
        mesh: Curve mesh for discrete spectra
    """

    spec: InterfaceSpec
    eigenvalues: np.ndarray
    clusters: list[tuple[int, int]]
    eigenfunctions: list[Eigenfunction]
    mesh: CurveMesh1D | None = None

    @property
    def count(self) -> int:
        """Number of eigenvalues K."""
        return int(self.eigenvalues.size)

    def value(self, k: int) -> float:
        """λ_k (1-based)."""
        self._check_index(k)
        return float(self.eigenvalues[k - 1])

    def eigenfunction(self, k: int) -> Eigenfunction:
        """Φ_k (1-based)."""
        self._check_index(k)
        return self.eigenfunctions[k - 1]

    def cluster_id(self, k: int) -> int:
        """1-based number of the cluster containing k."""
        self._check_index(k)
        for number, (start, end) in enumerate(self.clusters, start=1):
            if start <= k <= end:
                return number
        raise ValueError(f"index {k} not covered by clusters")

    def spectral_gap(self, k: int) -> float:
        """Distance from λ_k to the nearest eigenvalue outside its cluster (inf if none known)."""
        start, end = cluster_indices(self, k)
        gaps = []
        if start > 1:
            gaps.append(self.value(k) - self.value(start - 1))
        if end < self.count:
            gaps.append(self.value(end + 1) - self.value(k))
        return min(gaps) if gaps else float("inf")

    def to_rows(self) -> list[tuple[int, float, int]]:
        """Rows (k, lambda, cluster_id) for CSV reports."""
        return [(k, self.value(k), self.cluster_id(k)) for k in range(1, self.count + 1)]

    def nodal_rows(self) -> list[list[float]]:
        """Rows (θ, Φ₁(θ), …, Φ_K(θ)) of a discrete spectrum."""
        if self.mesh is None:
            raise ValueError("nodal tables exist only for discrete curve spectra")
        columns = [self.mesh.nodes] + [np.asarray(f.nodal) for f in self.eigenfunctions]  # type: ignore[attr-defined]
        return np.column_stack(columns).tolist()

    def _check_index(self, k: int) -> None:
        if not 1 <= k <= self.count:
            raise ValueError(f"index k must be in [1, {self.count}], got {k}")


def cluster_ranges(values: np.ndarray, rel_tol: float | None = None) -> list[tuple[int, int]]:
    """Group consecutive eigenvalues with |λ_{k+1} − λ_k| ≤ tol·max(1, λ_k).

    Returns:
        1-based inclusive index ranges
    """
    rel_tol = settings.cluster_rel_tol if rel_tol is None else rel_tol
    ranges: list[tuple[int, int]] = []
    start = 1
    for k in range(1, len(values)):
        if abs(values[k] - values[k - 1]) > rel_tol * max(1.0, abs(values[k - 1])):
            ranges.append((start, k))
            start = k + 1
    ranges.append((start, len(values)))
    return ranges


def _trim_clusters(ranges: list[tuple[int, int]], count: int) -> list[tuple[int, int]]:
    return [(start, end) for start, end in ranges if start <= count]


def sphere_spectrum(n: int, r: float, count: int) -> Spectrum:
    """Analytic spectrum l(l+n−2)/r² of S^{n−1}(r) with real harmonic eigenfunctions.

    Args:
        n: Ambient dimension (n ≥ 2)
        r: Radius
        count: Number of eigenvalues K

    Returns:
        Spectrum; clusters are the degree-l blocks
    """
    if n < 2 or r <= 0.0 or count < 1:
        raise ValueError(f"sphere_spectrum needs n ≥ 2, r > 0, K ≥ 1 (got n={n}, r={r}, K={count})")

    values: list[float] = []
    functions: list[Eigenfunction] = []
    clusters: list[tuple[int, int]] = []
    l = 0
    while len(values) < count:
        dim = harmonic_dimension(n, l)
        clusters.append((len(values) + 1, len(values) + dim))
        for chain, trig in harmonic_labels(n, l):
            if len(values) == count:
                break
            values.append(l * (l + n - 2) / r**2)
            functions.append(SphericalHarmonic(n=n, r=r, chain=chain, trig=trig))
        l += 1

    return Spectrum(
        spec=SphereInterface(n=n, r=r),
        eigenvalues=np.array(values),
        clusters=clusters,
        eigenfunctions=functions,
    )


def _curve_forms(spec: CurveInterface, mesh: CurveMesh1D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-element quadrature data: weights·√g₀, weights·g₀⁻¹√g₀, and dN/dθ."""
    theta, weights = mesh.quadrature()
    metric = curve_metric(spec, theta)
    s, _ = gauss_rule(theta.shape[1])
    dphi = p2_basis_derivative(s) / mesh.element_length
    return weights * metric.sqrt_G0, weights / metric.sqrt_G0, dphi


def curve_spectrum(spec: CurveInterface, mesh: CurveMesh1D, count: int) -> Spectrum:
    """Laplace–Beltrami eigenpairs of a plane curve by periodic P2 elements.

    Args:
        spec: Plane curve
        mesh: Periodic mesh of [0, 2π)
        count: Number of eigenpairs K (K ≪ M)

    Returns:
        Spectrum with B-orthonormal discrete eigenfunctions

    Raises:
        ValueError: If K exceeds the mesh size
        SolverError: Eigensolver failure or non-positive-definite mass matrix
    """
    size = mesh.nodes_count
    if not 1 <= count < size:
        raise ValueError(f"K must be in [1, {size - 1}] for a mesh with {size} nodes, got {count}")
    logger.info(f"Curve spectrum: M={size}, K={count}")

    s, _ = gauss_rule()
    phi = p2_basis(s)
    mass_w, stiff_w, dphi = _curve_forms(spec, mesh)
    local_mass = np.einsum("eq,qa,qb->eab", mass_w, phi, phi)
    local_stiff = np.einsum("eq,qa,qb->eab", stiff_w, dphi, dphi)
    conn = mesh.connectivity

    def energy(vectors: np.ndarray) -> np.ndarray:
        derivative = np.einsum("eac,qa->eqc", vectors[conn], dphi)
        return np.einsum("eq,eqc->c", stiff_w, derivative**2)

    solution = generalized_eigh(
        assemble(conn, local_stiff, size),
        assemble(conn, local_mass, size),
        min(count + CLUSTER_LOOKAHEAD, size),
        energy=energy,
    )
    vectors = fix_signs(solution.vectors)
    clusters = _trim_clusters(cluster_ranges(solution.values), count)
    return Spectrum(
        spec=spec,
        eigenvalues=solution.values[:count],
        clusters=clusters,
        eigenfunctions=[DiscreteCurveMode(mesh=mesh, nodal=vectors[:, i]) for i in range(count)],
        mesh=mesh,
    )


def interface_spectrum(spec: InterfaceSpec, count: int, mesh: CurveMesh1D | None = None) -> Spectrum:
    """Spectrum of any interface: analytic for spheres, P2 FEM for curves."""
    if isinstance(spec, SphereInterface):
        return sphere_spectrum(spec.n, spec.r, count)
    return curve_spectrum(spec, mesh or CurveMesh1D(settings.curve_mesh_nodes), count)


def cluster_indices(spectrum: Spectrum, k: int) -> tuple[int, int]:
    """The 1-based inclusive index range [k(j), k(j+1)−1] of the cluster containing k."""
    spectrum._check_index(k)
    for start, end in spectrum.clusters:
        if start <= k <= end:
            return start, end
    raise ValueError(f"index {k} not covered by clusters")


def is_simple(spectrum: Spectrum, k: int) -> bool:
    """True iff the cluster of k has size one."""
    start, end = cluster_indices(spectrum, k)
    return start == end


def sphere_quadrature(n: int, r: float, order: int = 24) -> tuple[np.ndarray, np.ndarray]:
    """Tensor quadrature on S^{n−1}(r) in hyperspherical angles.

    Gauss–Legendre in each θ_j on (0, π), periodic trapezoid in φ.

    Args:
        n: Ambient dimension
        r: Radius
        order: Points per polar angle (2·order in φ)

    Returns:
        Tuple of (angles of shape (n−1, P), weights of shape (P,) including √G₀)
    """
    x, w = np.polynomial.legendre.leggauss(order)
    theta = 0.5 * np.pi * (x + 1.0)
    theta_w = 0.5 * np.pi * w
    phi = np.linspace(0.0, 2.0 * np.pi, 2 * order, endpoint=False)
    phi_w = np.full(phi.size, np.pi / order)

    axes = [theta] * (n - 2) + [phi]
    grids = np.meshgrid(*axes, indexing="ij")
    weights = np.ones_like(grids[0]) * r ** (n - 1)
    for j in range(n - 2):
        weights = weights * np.sin(grids[j]) ** (n - j - 2)
    for j, axis_w in enumerate([theta_w] * (n - 2) + [phi_w]):
        shape = [1] * (n - 1)
        shape[j] = axis_w.size
        weights = weights * axis_w.reshape(shape)
    return np.stack([g.ravel() for g in grids]), weights.ravel()


def laplace_beltrami_check(spectrum: Spectrum, k: int) -> float:
    """∫ g₀^{ij}∂_iΦ_k∂_jΦ_k √G₀ dξ, which equals λ_k for a normalized eigenfunction."""
    function = spectrum.eigenfunction(k)
    spec = spectrum.spec
    if isinstance(spec, SphereInterface):
        points, weights = sphere_quadrature(spec.n, spec.r)
        grad = function.gradient(points)
        g0_inv = np.stack([1.0 / _sphere_g0_row(spec, points, i) for i in range(spec.n - 1)])
        return float(np.sum(weights * np.sum(g0_inv * grad**2, axis=0)))

    mesh = spectrum.mesh or CurveMesh1D(settings.curve_mesh_nodes)
    theta, weights = mesh.quadrature()
    metric = curve_metric(spec, theta)
    derivative = function.gradient(theta)[0]
    return float(np.sum(weights * derivative**2 / metric.sqrt_G0))


def _sphere_g0_row(spec: SphereInterface, points: np.ndarray, i: int) -> np.ndarray:
    """Diagonal entry g₀_{ii} at quadrature points."""
    value = np.full(points.shape[1], spec.r**2)
    for j in range(i):
        value = value * np.sin(points[j]) ** 2
    return value
