"""Two-phase eigenproblem on the thin shell Ω(ε) around the interface.

Two solver paths:

- ``radial``: spheres of any dimension, separated into angular degree l and a
  1D radial P2 problem per degree.
- ``collar``: plane curves, tensor P2 elements on (θ, τ) ∈ [0, 2π) × (−1, 1)
  with the exact collar metric, τ = t/ε.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.sparse as sp

from common.errors import GeometryError, SolverError
from common.logger import get_logger
from common.schemas import CurveInterface, InterfaceSpec, MeshConfig, SphereInterface, TwoPhaseCoeff
from common.settings import settings
from numerics.fem import CurveMesh1D, IntervalMesh1D, assemble, gauss_rule, p2_basis, p2_basis_derivative
from numerics.geometry import curve_collar, reach
from numerics.interface_spectrum import SphericalHarmonic, harmonic_dimension, harmonic_labels, sphere_spectrum
from numerics.linalg import fix_signs, generalized_eigh
from numerics.radial import RadialModes, RadialProblem, solve_radial_mode

logger = get_logger(__name__)

TRUNCATION_MARGIN = 0.99


@dataclass(frozen=True)
class SphereShellMode:
    """Separated shell eigenfunction Φ̃(ξ, τ) = R̃(τ)·Y(ξ).

    R̃(τ) = √(ε r^{n−1}) R(r + ετ), so that ∫∫Φ̃²√G(ξ, ετ) dξ dτ = 1.
    """

    harmonic: SphericalHarmonic
    radial: RadialModes
    radial_index: int

    def profile(self, tau: np.ndarray) -> np.ndarray:
        """R̃(τ)."""
        p = self.radial.problem
        scale = math.sqrt(p.epsilon * p.r ** (p.n - 1))
        return scale * self.radial.evaluate(self.radial_index, p.r + p.epsilon * np.asarray(tau, dtype=float))


@dataclass(frozen=True)
class CollarGrid:
    """Tensor P2 discretization of the collar (θ, τ) ∈ [0, 2π) × (−1, 1)."""

    spec: CurveInterface
    epsilon: float
    theta_mesh: CurveMesh1D
    tau_mesh: IntervalMesh1D

    @property
    def tau_nodes(self) -> int:
        """Number of τ nodes Nτ."""
        return self.tau_mesh.size

    @property
    def size(self) -> int:
        """Number of unknowns (index iθ·Nτ + jτ)."""
        return self.theta_mesh.nodes_count * self.tau_nodes

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Global indices of the 9 local functions N_a(θ)N_b(τ), shape (Eθ, Eτ, 9)."""
        ct = self.theta_mesh.connectivity
        cs = self.tau_mesh.connectivity
        return (ct[:, None, :, None] * self.tau_nodes + cs[None, :, None, :]).reshape(ct.shape[0], cs.shape[0], 9)

    @cached_property
    def quadrature(self) -> "CollarQuadrature":
        """Tensor quadrature data on every (θ, τ) element."""
        theta, theta_w = self.theta_mesh.quadrature()
        tau, tau_w = self.tau_mesh.quadrature()
        g_inv, sqrt_G = curve_collar(self.spec, theta[:, :, None, None], self.epsilon * tau[None, None, :, :])
        s, _ = gauss_rule(theta.shape[1])
        weights = theta_w[:, :, None, None] * tau_w[None, None, :, :]
        return CollarQuadrature(
            theta=theta,
            tau=tau,
            weights=weights,
            g_inv=g_inv,
            sqrt_G=sqrt_G,
            phi=p2_basis(s),
            dphi_theta=p2_basis_derivative(s) / self.theta_mesh.element_length,
            dphi_tau=p2_basis_derivative(s)[None, :, :] / self.tau_mesh.lengths[:, None, None],
        )

    def local_values(self, vectors: np.ndarray) -> np.ndarray:
        """Nodal values per element, shape (Eθ, Eτ, 3, 3, columns)."""
        local = vectors[self.connectivity]
        return local.reshape(*self.connectivity.shape[:2], 3, 3, vectors.shape[1])

    def reshape(self, vector: np.ndarray) -> np.ndarray:
        """Nodal vector as an (Mθ, Nτ) table."""
        return np.asarray(vector).reshape(self.theta_mesh.nodes_count, self.tau_nodes)


@dataclass(frozen=True)
class CollarQuadrature:
    """Quadrature arrays indexed (eθ, qθ, eτ, qτ)."""

    theta: np.ndarray
    tau: np.ndarray
    weights: np.ndarray
    g_inv: np.ndarray
    sqrt_G: np.ndarray
    phi: np.ndarray
    dphi_theta: np.ndarray
    dphi_tau: np.ndarray

    def values(self, local: np.ndarray) -> np.ndarray:
        """Φ at quadrature points from element nodal values (Eθ, Eτ, 3, 3, c)."""
        return np.einsum("xyabc,pa,qb->xpyqc", local, self.phi, self.phi)


@dataclass(frozen=True)
class CollarMode:
    """Discrete collar eigenfunction on its grid, ∫∫Φ̃²√G(ξ, ετ) dθ dτ = 1."""

    grid: CollarGrid
    nodal: np.ndarray


ShellMode = SphereShellMode | CollarMode


@dataclass(frozen=True)
class ShellEigenResult:
    """Eigenpairs of the two-phase shell problem at one ε.

    Attributes:
        spec: Interface
        coefficients: Two-phase conductivities
        epsilon: Shell half-thickness
        values: λ_{1,ε} ≤ … ≤ λ_{K,ε}
        modes: Eigenfunction handles in collar variables
        solver_path: "radial" or "collar"
        mesh: Human readable mesh description
        max_residual: Largest eigensolver residual
        clamped: Number of eigenvalues lifted to zero
        flux_jump: Largest radial flux mismatch at ρ = r (radial path)
        mass: Collar mass matrix (collar path)
    """

    spec: InterfaceSpec
    coefficients: TwoPhaseCoeff
    epsilon: float
    values: np.ndarray
    modes: list[ShellMode]
    solver_path: Literal["radial", "collar"]
    mesh: str
    max_residual: float
    clamped: int
    flux_jump: float | None = None
    mass: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def count(self) -> int:
        """Number of eigenpairs K."""
        return int(self.values.size)

    def value(self, k: int) -> float:
        """λ_{k,ε} (1-based)."""
        if not 1 <= k <= self.count:
            raise ValueError(f"index k must be in [1, {self.count}], got {k}")
        return float(self.values[k - 1])


def default_l_max(n: int, r: float, count: int) -> int:
    """2 + ceil(√λ_K · r) for the K-th interface eigenvalue λ_K."""
    target = sphere_spectrum(n, r, count).value(count)
    return 2 + math.ceil(math.sqrt(target) * r)


def solve_sphere_shell(
    n: int,
    r: float,
    coefficients: TwoPhaseCoeff,
    epsilon: float,
    count: int,
    l_max: int | None = None,
    elements_per_side: int | None = None,
) -> ShellEigenResult:
    """Shell eigenvalues around S^{n−1}(r) by separation into angular degrees.

    Args:
        n: Ambient dimension
        r: Sphere radius
        coefficients: Two-phase conductivities
        epsilon: Shell half-thickness (0 < ε < r)
        count: Number of eigenvalues K
        l_max: Highest angular degree (default 2 + ceil(√λ_K r))
        elements_per_side: Radial elements on each side of ρ = r

    Returns:
        Merged eigenvalues with multiplicities, ordered by (value, l, radial index, member)

    Raises:
        SolverError: Shell reaches the origin, or mode truncation detected
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    l_max = default_l_max(n, r, count) if l_max is None else l_max
    per_side = elements_per_side or settings.radial_elements_per_side
    logger.info(f"Sphere shell: n={n}, r={r:g}, ε={epsilon:g}, K={count}, l_max={l_max}")

    entries: list[tuple[float, int, int, int, SphereShellMode]] = []
    lowest_top = math.inf
    max_residual = 0.0
    clamped = 0
    flux = 0.0
    for l in range(l_max + 1):
        problem = RadialProblem(
            n=n, r=r, angular=float(l * (l + n - 2)), epsilon=epsilon,
            coefficients=coefficients, elements_per_side=per_side,
        )
        modes = solve_radial_mode(problem, count)
        max_residual = max(max_residual, modes.max_residual)
        clamped += modes.clamped
        flux = max(flux, float(modes.flux_jumps.max()))
        if l == l_max:
            lowest_top = float(modes.values[0])
        labels = list(harmonic_labels(n, l))
        for j, value in enumerate(modes.values):
            for member, (chain, trig) in enumerate(labels):
                harmonic = SphericalHarmonic(n=n, r=r, chain=chain, trig=trig)
                entries.append((float(value), l, j, member, SphereShellMode(harmonic, modes, j)))
        logger.debug(f"Degree l={l}: dim={harmonic_dimension(n, l)}, lowest={modes.values[0]:.10g}")

    entries.sort(key=lambda entry: entry[:4])
    selected = entries[:count]
    if selected[-1][0] >= TRUNCATION_MARGIN * lowest_top:
        raise SolverError(
            f"mode truncation: λ_{count} = {selected[-1][0]:.6g} reaches the lowest eigenvalue "
            f"{lowest_top:.6g} of degree l_max = {l_max}; increase l_max"
        )
    return ShellEigenResult(
        spec=SphereInterface(n=n, r=r),
        coefficients=coefficients,
        epsilon=epsilon,
        values=np.array([entry[0] for entry in selected]),
        modes=[entry[4] for entry in selected],
        solver_path="radial",
        mesh=f"radial P2 {per_side}+{per_side} elements, l_max={l_max}",
        max_residual=max_residual,
        clamped=clamped,
        flux_jump=flux,
    )


def solve_curve_shell(
    spec: CurveInterface,
    coefficients: TwoPhaseCoeff,
    epsilon: float,
    count: int,
    xi_nodes: int | None = None,
    tau_elements: int | None = None,
) -> ShellEigenResult:
    """Shell eigenpairs around a plane curve with tensor P2 collar elements.

    Discretizes ∫∫ σ(g⁻¹ ∂_θΦ ∂_θψ + ε⁻² ∂_τΦ ∂_τψ) √G dθ dτ = λ ∫∫ Φψ √G dθ dτ
    with the exact collar metric; σ = σ₋ on τ < 0 elements and σ₊ on τ > 0.

    Args:
        spec: Plane curve
        coefficients: Two-phase conductivities
        epsilon: Shell half-thickness (ε < reach)
        count: Number of eigenpairs K
        xi_nodes: θ nodes M_xi (even)
        tau_elements: τ elements M_tau (even, so τ = 0 is a node)

    Returns:
        Shell eigenpairs with collar eigenfunctions

    Raises:
        GeometryError: If ε ≥ reach
        SolverError: Unknown cap exceeded or eigensolver failure
    """
    xi_nodes = xi_nodes or settings.curve_mesh_nodes
    tau_elements = tau_elements or settings.shell_tau_elements
    if tau_elements % 2:
        raise ValueError(f"tau_elements must be even, got {tau_elements}")
    limit = reach(spec)
    if epsilon <= 0.0 or epsilon >= limit:
        raise GeometryError(f"ε = {epsilon:g} outside collar: need 0 < ε < reach = {limit:.6g}")

    grid = CollarGrid(
        spec=spec,
        epsilon=epsilon,
        theta_mesh=CurveMesh1D(xi_nodes),
        tau_mesh=IntervalMesh1D(np.linspace(-1.0, 1.0, tau_elements + 1)),
    )
    if grid.size > settings.unknown_cap:
        raise SolverError(f"collar problem has {grid.size} unknowns, above the cap of {settings.unknown_cap}")
    logger.info(f"Curve shell: ε={epsilon:g}, M_xi={xi_nodes}, M_tau={tau_elements}, unknowns={grid.size}, K={count}")

    q = grid.quadrature
    sigma = np.where(grid.tau_mesh.centers < 0.0, coefficients.sigma_minus, coefficients.sigma_plus)
    base = q.weights * q.sqrt_G
    along = sigma[None, None, :, None] * q.g_inv * base
    across = sigma[None, None, :, None] * base / epsilon**2

    phi, dtheta, dtau = q.phi, q.dphi_theta, q.dphi_tau
    local_stiff = np.einsum("xpyq,pa,pc,qb,qd->xyabcd", along, dtheta, dtheta, phi, phi, optimize=True) + np.einsum(
        "xpyq,pa,pc,yqb,yqd->xyabcd", across, phi, phi, dtau, dtau
    )
    local_mass = np.einsum("xpyq,pa,pc,qb,qd->xyabcd", base, phi, phi, phi, phi, optimize=True)
    elements = grid.connectivity.shape[0] * grid.connectivity.shape[1]
    conn = grid.connectivity.reshape(elements, 9)
    stiffness = assemble(conn, local_stiff.reshape(elements, 9, 9), grid.size)
    mass = assemble(conn, local_mass.reshape(elements, 9, 9), grid.size)

    def energy(vectors: np.ndarray) -> np.ndarray:
        local = grid.local_values(vectors)
        d_theta = np.einsum("xyabc,pa,qb->xpyqc", local, dtheta, phi)
        d_tau = np.einsum("xyabc,pa,yqb->xpyqc", local, phi, dtau)
        return np.einsum("xpyq,xpyqc->c", along, d_theta**2) + np.einsum("xpyq,xpyqc->c", across, d_tau**2)

    solution = generalized_eigh(stiffness, mass, count, energy=energy)
    vectors = fix_signs(solution.vectors)
    return ShellEigenResult(
        spec=spec,
        coefficients=coefficients,
        epsilon=epsilon,
        values=solution.values,
        modes=[CollarMode(grid=grid, nodal=vectors[:, i]) for i in range(count)],
        solver_path="collar",
        mesh=f"collar P2 {xi_nodes}x{2 * tau_elements + 1} nodes",
        max_residual=solution.max_residual,
        clamped=solution.clamped,
        mass=mass,
    )


def solve_shell(
    spec: InterfaceSpec, coefficients: TwoPhaseCoeff, epsilon: float, count: int, mesh: MeshConfig | None = None
) -> ShellEigenResult:
    """Dispatch to the radial solver for spheres and the collar solver for curves."""
    mesh = mesh or MeshConfig()
    if isinstance(spec, SphereInterface):
        return solve_sphere_shell(
            spec.n, spec.r, coefficients, epsilon, count,
            l_max=mesh.l_max, elements_per_side=mesh.radial_elements_per_side,
        )
    return solve_curve_shell(
        spec, coefficients, epsilon, count, xi_nodes=mesh.shell_xi_nodes, tau_elements=mesh.tau_elements
    )
