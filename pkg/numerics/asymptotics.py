"""Closed-form thin-shell predictions and the geometric functional Λ_k."""

from dataclasses import dataclass

import numpy as np

from common.errors import HypothesisError
from common.logger import get_logger
from common.schemas import AsymptoticPrediction, CurveInterface, InterfaceSpec, SphereInterface, TwoPhaseCoeff
from common.settings import settings
from numerics.fem import CurveMesh1D
from numerics.geometry import curve_metric
from numerics.interface_spectrum import Spectrum, cluster_indices, is_simple, sphere_quadrature

logger = get_logger(__name__)


@dataclass(frozen=True)
class TransversePair:
    """Neumann eigenpair (μ_l, φ_l) of −d²/dτ² on (−1, 1), normalized in L²(−1, 1)."""

    l: int

    @property
    def mu(self) -> float:
        """μ_l = (l−1)²π²/4."""
        return (self.l - 1) ** 2 * np.pi**2 / 4.0

    def value(self, tau: np.ndarray) -> np.ndarray:
        """φ_l(τ): 1/√2 for l = 1, cos((l−1)πτ/2) for odd l, sin((l−1)πτ/2) for even l."""
        tau = np.asarray(tau, dtype=float)
        if self.l == 1:
            return np.full_like(tau, 1.0 / np.sqrt(2.0))
        phase = (self.l - 1) * np.pi * tau / 2.0
        return np.cos(phase) if self.l % 2 else np.sin(phase)

    def derivative(self, tau: np.ndarray) -> np.ndarray:
        """φ_l′(τ)."""
        tau = np.asarray(tau, dtype=float)
        if self.l == 1:
            return np.zeros_like(tau)
        rate = (self.l - 1) * np.pi / 2.0
        return -rate * np.sin(rate * tau) if self.l % 2 else rate * np.cos(rate * tau)


def transverse_eigenpairs(l_max: int) -> list[TransversePair]:
    """Transverse eigenpairs for l = 1 … l_max."""
    if l_max < 1:
        raise ValueError(f"l_max must be at least 1, got {l_max}")
    return [TransversePair(l) for l in range(1, l_max + 1)]


def _member_indices(spectrum: Spectrum, indices: list[int]) -> None:
    if max(indices) > spectrum.count:
        raise ValueError(
            f"spectrum has {spectrum.count} eigenfunctions but the cluster needs index {max(indices)}; "
            "compute a longer spectrum"
        )


def _functional_matrix(spec: InterfaceSpec, spectrum: Spectrum, indices: list[int]) -> np.ndarray:
    """M_pq = ∫(G̃^{ij} − Hg₀^{ij}) ∂_iΦ_p ∂_jΦ_q √G₀ dξ for p, q in ``indices``."""
    _member_indices(spectrum, indices)
    functions = [spectrum.eigenfunction(k) for k in indices]

    if isinstance(spec, SphereInterface):
        points, weights = sphere_quadrature(spec.n, spec.r)
        g0_diag = np.empty((spec.n - 1, points.shape[1]))
        running = np.full(points.shape[1], spec.r**2)
        for i in range(spec.n - 1):
            g0_diag[i] = running
            if i < spec.n - 2:
                running = running * np.sin(points[i]) ** 2
        b_diag = -g0_diag / spec.r
        mean_curvature = np.sum(b_diag / g0_diag, axis=0)
        coefficient = 2.0 * b_diag / g0_diag**2 - mean_curvature / g0_diag
        grads = np.stack([f.gradient(points) for f in functions])
        return np.einsum("p,ip,aip,bip->ab", weights, coefficient, grads, grads)

    mesh = spectrum.mesh or CurveMesh1D(settings.curve_mesh_nodes)
    theta, weights = mesh.quadrature()
    metric = curve_metric(spec, theta)
    coefficient = metric.G_tilde - metric.H / metric.g0
    grads = np.stack([f.gradient(theta)[0] for f in functions])
    return np.einsum("eq,eq,aeq,beq->ab", weights * metric.sqrt_G0, coefficient, grads, grads)


def lambda_k_functional(spec: InterfaceSpec, spectrum: Spectrum, k: int) -> float:
    """Λ_k = ∫(G̃^{ij} − Hg₀^{ij}) ∂_iΦ_k ∂_jΦ_k √G₀ dξ for a simple λ_k.

    Raises:
        HypothesisError: If λ_k is not simple
    """
    if not is_simple(spectrum, k):
        start, end = cluster_indices(spectrum, k)
        raise HypothesisError(f"Theorem 2 hypothesis violated: λ_{k} lies in the cluster [{start}, {end}]")
    return float(_functional_matrix(spec, spectrum, [k])[0, 0])


def functional_matrix(spec: InterfaceSpec, spectrum: Spectrum, k: int) -> tuple[list[int], np.ndarray]:
    """Cluster matrix of the functional over the cluster containing k.

    Its diagonal for a simple k is Λ_k; its eigenvalues times (σ₊−σ₋)/4 are the
    first-order splitting slopes of the cluster.

    Returns:
        Tuple of (cluster indices, symmetric matrix)
    """
    start, end = cluster_indices(spectrum, k)
    indices = list(range(start, end + 1))
    matrix = _functional_matrix(spec, spectrum, indices)
    return indices, 0.5 * (matrix + matrix.T)


def split_slopes(spec: InterfaceSpec, coefficients: TwoPhaseCoeff, spectrum: Spectrum, k: int) -> list[float]:
    """Sorted first-order slopes of the cluster containing k."""
    _, matrix = functional_matrix(spec, spectrum, k)
    return sorted((0.25 * coefficients.jump * np.linalg.eigvalsh(matrix)).tolist())


def predict(spec: InterfaceSpec, coefficients: TwoPhaseCoeff, spectrum: Spectrum, k: int) -> AsymptoticPrediction:
    """Leading term, first-order slope and remainder claim for λ_{k,ε}.

    Args:
        spec: Interface
        coefficients: Two-phase conductivities
        spectrum: Interface spectrum covering k
        k: 1-based eigenvalue index

    Returns:
        Prediction; the slope is absent for clusters on general curves
    """
    lam = spectrum.value(k)
    leading = coefficients.mean * lam
    simple = is_simple(spectrum, k)
    equal = coefficients.jump == 0.0

    fragile = False
    if simple:
        gap = spectrum.spectral_gap(k)
        fragile = gap < settings.fragile_gap_factor * settings.cluster_rel_tol * max(1.0, lam)
        if fragile:
            logger.warning(f"λ_{k} is simple but its gap {gap:.3e} is close to the cluster tolerance")

    if isinstance(spec, SphereInterface):
        indices, matrix = functional_matrix(spec, spectrum, k)
        functional = float(matrix[indices.index(k), indices.index(k)])
        return AsymptoticPrediction(
            k=k,
            leading=leading,
            slope=(spec.n - 3) / (4.0 * spec.r) * coefficients.jump * lam,
            slope_source="Thm3_sphere",
            remainder_order_claim="O(eps2)" if equal and simple else "o(eps)",
            functional=functional,
            fragile_simplicity=fragile,
        )

    assert isinstance(spec, CurveInterface)
    if simple:
        functional = lambda_k_functional(spec, spectrum, k)
        if equal:
            return AsymptoticPrediction(
                k=k, leading=leading, slope=0.0, slope_source="schatzman_zero_mean_case",
                remainder_order_claim="O(eps2)", functional=functional, fragile_simplicity=fragile,
            )
        return AsymptoticPrediction(
            k=k, leading=leading, slope=0.25 * coefficients.jump * functional, slope_source="Thm2_Lambda_k",
            remainder_order_claim="o(eps)", functional=functional, fragile_simplicity=fragile,
        )

    logger.info(f"λ_{k} is not simple: no first-order slope, reporting cluster split slopes")
    return AsymptoticPrediction(
        k=k,
        leading=leading,
        slope=None,
        slope_source="none_multiplicity",
        remainder_order_claim="O(eps)",
        split_slopes=split_slopes(spec, coefficients, spectrum, k),
    )
