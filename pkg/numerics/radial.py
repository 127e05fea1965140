"""Separated radial problem of a spherical shell: P2 elements and a shooting oracle."""

from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from common.errors import OracleError, SolverError
from common.logger import get_logger
from common.schemas import TwoPhaseCoeff
from common.settings import settings
from numerics.fem import IntervalMesh1D, assemble, gauss_rule, p2_basis, p2_basis_derivative
from numerics.linalg import EigenSolution, fix_signs, generalized_eigh

logger = get_logger(__name__)

GRID_EXTENSIONS = 4


@dataclass(frozen=True)
class RadialProblem:
    """One angular mode of the shell r − ε < ρ < r + ε around S^{n−1}(r).

    Weak form: ∫ σ(u′v′ + Λ/ρ² uv) ρ^{n−1} dρ = λ ∫ uv ρ^{n−1} dρ with natural
    ends; σ = σ₋ for ρ < r and σ₊ for ρ > r.

    Attributes:
        n: Ambient dimension
        r: Interface radius
        angular: Angular eigenvalue Λ = l(l+n−2) (dimensionless)
        epsilon: Shell half-thickness
        coefficients: Two-phase conductivities
        elements_per_side: P2 elements on each side of ρ = r
    """

    n: int
    r: float
    angular: float
    epsilon: float
    coefficients: TwoPhaseCoeff
    elements_per_side: int = settings.radial_elements_per_side

    def __post_init__(self) -> None:
        if self.n < 2 or self.r <= 0.0 or self.epsilon <= 0.0 or self.angular < 0.0:
            raise ValueError(f"invalid radial problem: n={self.n}, r={self.r}, ε={self.epsilon}, Λ={self.angular}")
        if self.r - self.epsilon <= 0.0:
            raise SolverError(f"shell reaches origin: r − ε = {self.r - self.epsilon:.6g} ≤ 0")
        if self.elements_per_side < 1:
            raise ValueError("elements_per_side must be positive")

    @cached_property
    def mesh(self) -> IntervalMesh1D:
        """Interface-aligned mesh with ρ = r as a breakpoint."""
        return IntervalMesh1D.two_sided(
            self.r - self.epsilon, self.r, self.r + self.epsilon, self.elements_per_side
        )

    def sigma(self, rho: np.ndarray) -> np.ndarray:
        """Piecewise conductivity (ρ = r counts as outside)."""
        return np.where(np.asarray(rho) < self.r, self.coefficients.sigma_minus, self.coefficients.sigma_plus)


@dataclass(frozen=True)
class RadialModes:
    """Eigenpairs of one radial problem.

    Attributes:
        problem: The solved problem
        values: Smallest eigenvalues, nondecreasing
        vectors: Nodal vectors, ∫u²ρ^{n−1} dρ = 1
        flux_jumps: |σ₋u′(r⁻) − σ₊u′(r⁺)| per eigenfunction
        max_residual: Largest solver residual
        clamped: Number of floor-clamped eigenvalues
    """

    problem: RadialProblem
    values: np.ndarray
    vectors: np.ndarray
    flux_jumps: np.ndarray
    max_residual: float
    clamped: int

    def evaluate(self, index: int, rho: np.ndarray) -> np.ndarray:
        """Radial eigenfunction ``index`` (0-based) at ρ values inside the shell."""
        mesh = self.problem.mesh
        rho = np.asarray(rho, dtype=float)
        element = np.clip(np.searchsorted(mesh.breaks, rho, side="right") - 1, 0, mesh.elements - 1)
        s = (rho - mesh.breaks[element]) / mesh.lengths[element]
        local = self.vectors[mesh.connectivity[element], index]
        return np.sum(local * p2_basis(s), axis=-1)


def _element_data(problem: RadialProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature points, weights, per-element σ, basis values and physical derivatives."""
    mesh = problem.mesh
    rho, weights = mesh.quadrature()
    s, _ = gauss_rule(rho.shape[1])
    phi = p2_basis(s)
    dphi = p2_basis_derivative(s)[None, :, :] / mesh.lengths[:, None, None]
    sigma = problem.sigma(mesh.centers)
    return rho, weights, sigma, phi, dphi


def solve_radial_mode(problem: RadialProblem, count: int) -> RadialModes:
    """Smallest eigenpairs of the radial problem with P2 elements.

    Transmission conditions are natural: u is continuous by construction and
    the flux condition holds weakly; its discrete mismatch is reported.

    Args:
        problem: Radial problem
        count: Number of eigenpairs

    Returns:
        Radial eigenpairs with flux-jump measurements

    Raises:
        SolverError: Factorization or eigensolver failure
    """
    mesh = problem.mesh
    rho, weights, sigma, phi, dphi = _element_data(problem)
    volume = weights * rho ** (problem.n - 1)
    gradient_w = sigma[:, None] * volume
    angular_w = gradient_w * problem.angular / rho**2

    local_stiff = np.einsum("eq,eqa,eqb->eab", gradient_w, dphi, dphi) + np.einsum(
        "eq,qa,qb->eab", angular_w, phi, phi
    )
    local_mass = np.einsum("eq,qa,qb->eab", volume, phi, phi)
    conn = mesh.connectivity

    def energy(vectors: np.ndarray) -> np.ndarray:
        local = vectors[conn]
        derivative = np.einsum("eac,eqa->eqc", local, dphi)
        value = np.einsum("eac,qa->eqc", local, phi)
        return np.einsum("eq,eqc->c", gradient_w, derivative**2) + np.einsum("eq,eqc->c", angular_w, value**2)

    logger.debug(f"Radial mode: n={problem.n}, Λ={problem.angular:g}, ε={problem.epsilon:g}, nodes={mesh.size}")
    solution: EigenSolution = generalized_eigh(
        assemble(conn, local_stiff, mesh.size),
        assemble(conn, local_mass, mesh.size),
        min(count, mesh.size),
        energy=energy,
    )
    vectors = fix_signs(solution.vectors)
    return RadialModes(
        problem=problem,
        values=solution.values,
        vectors=vectors,
        flux_jumps=flux_jump(problem, vectors),
        max_residual=solution.max_residual,
        clamped=solution.clamped,
    )


def flux_jump(problem: RadialProblem, vectors: np.ndarray) -> np.ndarray:
    """|σ₋u′(r⁻) − σ₊u′(r⁺)| from one-sided P2 derivatives at ρ = r."""
    mesh = problem.mesh
    left = problem.elements_per_side - 1
    right = problem.elements_per_side
    end, start = p2_basis_derivative(np.array([1.0]))[0], p2_basis_derivative(np.array([0.0]))[0]
    inner = end @ vectors[mesh.connectivity[left]] / mesh.lengths[left]
    outer = start @ vectors[mesh.connectivity[right]] / mesh.lengths[right]
    c = problem.coefficients
    return np.abs(c.sigma_minus * inner - c.sigma_plus * outer)


def _miss(problem: RadialProblem, lambdas: np.ndarray) -> np.ndarray:
    """w(r + ε) for the radial ODE started at r − ε with u = 1, w = σu′ = 0.

    All λ values are integrated together as one vectorized system.
    """
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    size = lambdas.size
    n, angular = problem.n, problem.angular

    def rhs_for(sigma: float) -> Callable[[float, np.ndarray], np.ndarray]:
        def rhs(rho: float, y: np.ndarray) -> np.ndarray:
            u, w = y[:size], y[size:]
            return np.concatenate([w / sigma, -(n - 1) / rho * w + (sigma * angular / rho**2 - lambdas) * u])

        return rhs

    state = np.concatenate([np.ones(size), np.zeros(size)])
    c = problem.coefficients
    for sigma, (a, b) in (
        (c.sigma_minus, (problem.r - problem.epsilon, problem.r)),
        (c.sigma_plus, (problem.r, problem.r + problem.epsilon)),
    ):
        solution = solve_ivp(
            rhs_for(sigma), (a, b), state, method="DOP853", rtol=settings.shooting_rtol, atol=settings.shooting_atol
        )
        if not solution.success:
            raise OracleError(f"radial ODE integration failed: {solution.message}")
        state = solution.y[:, -1]
    return state[size:]


def shooting_oracle(problem: RadialProblem, count: int, grid_points: int | None = None) -> list[float]:
    """Eigenvalues of the radial problem by shooting on the miss function w(r + ε).

    The ODE u′ = w/σ, w′ = −((n−1)/ρ)w + (σΛ/ρ² − λ)u is integrated outward
    with an adaptive eighth-order Runge–Kutta method; σu′ is continuous across
    ρ = r because w is the integrated state. Roots are bracketed by sign
    changes on a λ grid and refined by Brent's method.

    Args:
        problem: Radial problem (the FEM mesh is not used)
        count: Number of eigenvalues
        grid_points: Scan grid size (default ``settings.shooting_grid_points``)

    Returns:
        Smallest ``count`` eigenvalues

    Raises:
        OracleError: When fewer than ``count`` roots can be bracketed
    """
    points = grid_points or settings.shooting_grid_points
    c = problem.coefficients
    sigma_max = max(c.sigma_minus, c.sigma_plus)
    upper = 1.5 * sigma_max * (
        problem.angular / (problem.r - problem.epsilon) ** 2 + (count * np.pi / (2.0 * problem.epsilon)) ** 2
    )
    roots: list[float] = [0.0] if problem.angular == 0.0 else []
    lower = upper * 1e-6 if problem.angular == 0.0 else 0.0

    for attempt in range(GRID_EXTENSIONS + 1):
        grid = np.linspace(lower, upper, points)
        miss = _miss(problem, grid)
        found = list(roots)
        for left, right, f_left, f_right in zip(grid[:-1], grid[1:], miss[:-1], miss[1:], strict=True):
            if f_left == 0.0:
                found.append(float(left))
            elif f_left * f_right < 0.0:
                found.append(
                    brentq(lambda lam: float(_miss(problem, np.array([lam]))[0]), left, right, xtol=1e-14, rtol=1e-14)
                )
        if len(found) >= count:
            logger.debug(f"Shooting oracle: {len(found)} roots on [{lower:.3g}, {upper:.3g}] ({points} points)")
            return sorted(found)[:count]
        logger.info(f"Shooting oracle found {len(found)} < {count} roots, extending grid (attempt {attempt + 1})")
        upper *= 2.0
        points *= 2

    raise OracleError(
        f"missed root bracket: found {len(found)} of {count} roots scanning λ ∈ [{lower:.6g}, {upper / 2.0:.6g}] "
        f"with {points // 2} grid points"
    )
