"""Interface geometry: fundamental forms, curvature and the exact collar metric.

Sign convention: ν is the outward normal of the enclosed domain and
b_ij = (∂_i∂_j x, ν), so a circle or sphere of radius r has b = −g₀/r and
mean curvature H = −(n−1)/r.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from common.errors import GeometryError
from common.logger import get_logger
from common.schemas import CurveInterface, InterfaceSpec, SphereInterface
from common.settings import settings

logger = get_logger(__name__)


@dataclass(frozen=True)
class MetricSample:
    """First and second fundamental forms of Γ at one parameter point."""

    xi: np.ndarray
    g0: np.ndarray
    g0_inv: np.ndarray
    sqrt_G0: float
    b: np.ndarray
    G_tilde: np.ndarray
    H: float


@dataclass(frozen=True)
class CurveFrame:
    """Vectorized position and derivatives of a plane curve.

    All arrays have shape (..., 2) over the sampled parameters.
    """

    x: np.ndarray
    dx: np.ndarray
    ddx: np.ndarray


def curve_frame(spec: CurveInterface, theta: np.ndarray | float) -> CurveFrame:
    """Evaluate x, x′ and x″ analytically from the Fourier coefficients.

    Args:
        spec: Plane curve
        theta: Parameter value(s)

    Returns:
        Position and derivatives at ``theta``
    """
    theta = np.asarray(theta, dtype=float)
    a, b = spec.cos_coeffs, spec.sin_coeffs
    j = np.arange(a.shape[0], dtype=float)
    jt = np.multiply.outer(theta, j)
    cos, sin = np.cos(jt)[..., None], np.sin(jt)[..., None]
    x = (a * cos + b * sin).sum(axis=-2)
    dx = (j[:, None] * (b * cos - a * sin)).sum(axis=-2)
    ddx = (-(j**2)[:, None] * (a * cos + b * sin)).sum(axis=-2)
    return CurveFrame(x=x, dx=dx, ddx=ddx)


def orientation(spec: CurveInterface) -> int:
    """+1 for counterclockwise, −1 for clockwise parameterizations (sign of the enclosed signed area)."""
    a, b = spec.cos_coeffs, spec.sin_coeffs
    j = np.arange(a.shape[0])
    area = np.pi * float(np.sum(j * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])))
    if area == 0.0:
        raise GeometryError("curve encloses zero signed area")
    return 1 if area > 0.0 else -1


def outward_normal(spec: CurveInterface, theta: np.ndarray | float) -> np.ndarray:
    """Outward unit normal ν(θ), shape (..., 2)."""
    dx = curve_frame(spec, theta).dx
    rotated = np.stack([dx[..., 1], -dx[..., 0]], axis=-1)
    return orientation(spec) * rotated / np.linalg.norm(dx, axis=-1, keepdims=True)


def _check_speed(speed: np.ndarray, theta: np.ndarray) -> None:
    if np.any(speed < settings.min_speed):
        worst = np.unravel_index(int(np.argmin(speed)), speed.shape) if speed.ndim else ()
        raise GeometryError(
            f"degenerate parameterization: |x'| = {float(speed[worst]):.3e} at xi = {float(theta[worst]):.6f}"
        )


@dataclass(frozen=True)
class CurveMetric:
    """Vectorized 1×1 fundamental forms of a plane curve (scalars per sample)."""

    g0: np.ndarray
    b: np.ndarray

    @property
    def sqrt_G0(self) -> np.ndarray:
        """Speed |x′|."""
        return np.sqrt(self.g0)

    @property
    def H(self) -> np.ndarray:
        """Signed curvature with respect to the outward normal."""
        return self.b / self.g0

    @property
    def G_tilde(self) -> np.ndarray:
        """2 g₀⁻¹ b g₀⁻¹."""
        return 2.0 * self.b / self.g0**2


def curve_metric(spec: CurveInterface, theta: np.ndarray | float) -> CurveMetric:
    """Vectorized metric data of a plane curve.

    Raises:
        GeometryError: When |x′| falls below ``settings.min_speed``
    """
    theta = np.asarray(theta, dtype=float)
    frame = curve_frame(spec, theta)
    speed = np.linalg.norm(frame.dx, axis=-1)
    _check_speed(speed, theta)
    normal = orientation(spec) * np.stack([frame.dx[..., 1], -frame.dx[..., 0]], axis=-1) / speed[..., None]
    return CurveMetric(g0=speed**2, b=np.sum(frame.ddx * normal, axis=-1))


def _sphere_g0_diagonal(n: int, r: float, xi: np.ndarray) -> np.ndarray:
    """Diagonal of g₀ in hyperspherical angles (θ₁, …, θ_{n−2}, φ)."""
    sines = np.sin(xi[: n - 2]) ** 2
    return r**2 * np.concatenate([[1.0], np.cumprod(sines)])


def _sphere_xi(spec: SphereInterface, xi: np.ndarray | float) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (spec.n - 1,):
        raise ValueError(f"sphere S^{spec.n - 1} needs {spec.n - 1} angle(s), got shape {xi.shape}")
    if spec.n > 2 and np.any(np.abs(np.sin(xi[: spec.n - 2])) < 1e-8):
        raise GeometryError(f"xi = {xi.tolist()} lies on a coordinate pole of the hyperspherical chart")
    return xi


def metric_at(spec: InterfaceSpec, xi: np.ndarray | float) -> MetricSample:
    """Fundamental forms, G̃ and mean curvature at one parameter point.

    Args:
        spec: Sphere or plane curve
        xi: θ for curves; hyperspherical angles (θ₁, …, θ_{n−2}, φ) for spheres

    Returns:
        Metric sample with (n−1)×(n−1) matrices

    Raises:
        GeometryError: Degenerate parameterization or coordinate pole
    """
    if isinstance(spec, SphereInterface):
        angles = _sphere_xi(spec, xi)
        g0 = np.diag(_sphere_g0_diagonal(spec.n, spec.r, angles))
        g0_inv = np.diag(1.0 / np.diag(g0))
        b = -g0 / spec.r
        point = angles
    else:
        theta = float(np.asarray(xi, dtype=float).reshape(()))
        metric = curve_metric(spec, theta)
        g0 = np.array([[float(metric.g0)]])
        g0_inv = np.array([[1.0 / float(metric.g0)]])
        b = np.array([[float(metric.b)]])
        point = np.array([theta])

    return MetricSample(
        xi=point,
        g0=g0,
        g0_inv=g0_inv,
        sqrt_G0=float(np.sqrt(np.linalg.det(g0))),
        b=b,
        G_tilde=2.0 * g0_inv @ b @ g0_inv,
        H=float(np.trace(g0_inv @ b)),
    )


def reach(spec: InterfaceSpec) -> float:
    """Largest |t| admitted for the collar map.

    Spheres: r. Curves: ``settings.reach_safety`` × min 1/|κ| sampled on
    ``settings.reach_samples`` points.
    """
    if isinstance(spec, SphereInterface):
        return spec.r
    return settings.reach_safety / _max_curvature(spec, settings.reach_samples)


@lru_cache(maxsize=64)
def _max_curvature(spec: CurveInterface, samples: int) -> float:
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    kappa = float(np.abs(curve_metric(spec, theta).H).max())
    if kappa == 0.0:
        raise GeometryError("closed curve with zero curvature everywhere")
    return kappa


def _check_collar(spec: InterfaceSpec, t: np.ndarray | float) -> None:
    limit = reach(spec)
    if np.any(np.abs(t) >= limit):
        raise GeometryError(f"t = {float(np.max(np.abs(t))):.6g} outside collar (reach {limit:.6g})")


def collar_metric_eval(spec: InterfaceSpec, xi: np.ndarray | float, t: float) -> tuple[np.ndarray, float]:
    """Exact collar metric g(ξ, t) = g₀ − 2t·b + t²·b g₀⁻¹ b.

    Args:
        spec: Interface
        xi: Parameter point
        t: Signed distance along the outward normal

    Returns:
        Tuple of (inverse metric block, √det g)

    Raises:
        GeometryError: If |t| ≥ reach
    """
    _check_collar(spec, t)
    sample = metric_at(spec, xi)
    g = sample.g0 - 2.0 * t * sample.b + t**2 * sample.b @ sample.g0_inv @ sample.b
    return np.linalg.inv(g), float(np.sqrt(np.linalg.det(g)))


def curve_collar(spec: CurveInterface, theta: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized exact collar metric of a plane curve.

    For n = 2 the collar metric factorizes as g = g₀(1 − tH)².

    Args:
        spec: Plane curve
        theta: Parameters, broadcastable against ``t``
        t: Signed distances

    Returns:
        Tuple of (g⁻¹, √G) arrays
    """
    _check_collar(spec, t)
    metric = curve_metric(spec, theta)
    stretch = 1.0 - t * metric.H
    return 1.0 / (metric.g0 * stretch**2), metric.sqrt_G0 * stretch


def perimeter(spec: CurveInterface, samples: int | None = None) -> float:
    """Length of a plane curve (periodic trapezoid rule, spectrally accurate)."""
    theta = np.linspace(0.0, 2.0 * np.pi, samples or settings.reach_samples, endpoint=False)
    return float(2.0 * np.pi * np.mean(np.sqrt(curve_metric(spec, theta).g0)))


def shift_parameter(spec: CurveInterface, shift: float) -> CurveInterface:
    """Coefficients of θ ↦ x(θ + shift), the same curve reparameterized."""
    a, b = spec.cos_coeffs, spec.sin_coeffs
    j = np.arange(a.shape[0])[:, None]
    cos, sin = np.cos(j * shift), np.sin(j * shift)
    new_a = a * cos + b * sin
    new_b = b * cos - a * sin
    return CurveInterface(coefficients=_pairs(new_a, new_b))


def rotate(spec: CurveInterface, angle: float) -> CurveInterface:
    """Coefficients of the curve rigidly rotated by ``angle`` about the origin."""
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    return CurveInterface(coefficients=_pairs(spec.cos_coeffs @ rotation.T, spec.sin_coeffs @ rotation.T))


def _pairs(a: np.ndarray, b: np.ndarray) -> tuple[tuple[tuple[float, float], tuple[float, float]], ...]:
    return tuple(((float(ai[0]), float(ai[1])), (float(bi[0]), float(bi[1]))) for ai, bi in zip(a, b, strict=True))


def sphere_embedding(spec: SphereInterface, xi: np.ndarray) -> np.ndarray:
    """Point of S^{n−1}(r) ⊂ ℝⁿ at hyperspherical angles ``xi``."""
    xi = np.asarray(xi, dtype=float)
    point = np.empty(spec.n)
    running = spec.r
    for i, angle in enumerate(xi[:-1]):
        point[i] = running * np.cos(angle)
        running *= np.sin(angle)
    point[-2] = running * np.cos(xi[-1])
    point[-1] = running * np.sin(xi[-1])
    return point


def b_from_normal_differences(spec: InterfaceSpec, xi: np.ndarray | float, h: float = 1e-5) -> np.ndarray:
    """Second fundamental form −(∂_i x, ∂_j ν) from central differences of ν.

    Used to cross-check the analytic b.
    """
    if isinstance(spec, CurveInterface):
        theta = float(np.asarray(xi, dtype=float).reshape(()))
        dnu = (outward_normal(spec, theta + h) - outward_normal(spec, theta - h)) / (2.0 * h)
        return np.array([[-float(np.dot(curve_frame(spec, theta).dx, dnu))]])

    angles = _sphere_xi(spec, xi)
    dim = spec.n - 1
    dx = np.empty((dim, spec.n))
    dnu = np.empty((dim, spec.n))
    for i in range(dim):
        step = np.zeros(dim)
        step[i] = h
        forward, backward = sphere_embedding(spec, angles + step), sphere_embedding(spec, angles - step)
        dx[i] = (forward - backward) / (2.0 * h)
        dnu[i] = (forward / spec.r - backward / spec.r) / (2.0 * h)
    return -dx @ dnu.T
