"""Fourier coefficients α^{p,l} of shell eigenfunctions in the product basis Φ_p(ξ)φ_l(τ)."""

from dataclasses import dataclass

import numpy as np

from common.logger import get_logger
from numerics.asymptotics import transverse_eigenpairs
from numerics.geometry import curve_metric
from numerics.interface_spectrum import Spectrum, cluster_indices
from numerics.shell_solver import CollarMode, ShellEigenResult, SphereShellMode

logger = get_logger(__name__)


@dataclass(frozen=True)
class FourierTable:
    """Fourier coefficients of Φ̃_{k,ε} and their exact tail sums.

    Attributes:
        k: Shell eigenvalue index
        epsilon: Shell half-thickness
        alpha: α^{p,l} for p = 1 … p_max (rows) and l = 1 … l_max (columns)
        transverse_tail: Σ_p Σ_{l≥2} (α^{p,l})², all p
        longitudinal_mass: Σ_p (α^{p,1})², all p
        cluster_mass: Σ over the cluster of k of (α^{p,1})²
    """

    k: int
    epsilon: float
    alpha: np.ndarray
    transverse_tail: float
    longitudinal_mass: float
    cluster_mass: float


def fourier_diagnostics(
    result: ShellEigenResult, spectrum: Spectrum, k: int, p_max: int, l_max: int
) -> FourierTable:
    """α^{p,l}_k = ∫∫ Φ̃_{k,ε} Φ_p φ_l √G₀ dξ dτ with exact Parseval tail sums.

    The tail sums use the completeness of {Φ_p} and {φ_l}:
    Σ_{p,l≥2} α² = ∫∫(Φ̃ − φ₁∫Φ̃φ₁dτ)²√G₀ and Σ_p (α^{p,1})² = ∫(∫Φ̃φ₁dτ)²√G₀.

    Args:
        result: Shell solve holding eigenfunction handles
        spectrum: Interface spectrum of the same interface
        k: Shell eigenvalue index (1-based)
        p_max: Number of interface eigenfunctions in the table
        l_max: Number of transverse eigenfunctions in the table

    Returns:
        Coefficient table and tail sums

    Raises:
        ValueError: If p_max or l_max exceed the available basis
    """
    if not 1 <= k <= result.count:
        raise ValueError(f"k must be in [1, {result.count}], got {k}")
    if not 1 <= p_max <= spectrum.count:
        raise ValueError(f"p_max = {p_max} exceeds the {spectrum.count} available interface eigenfunctions")
    mode = result.modes[k - 1]
    start, end = cluster_indices(spectrum, k)
    if end > spectrum.count:
        raise ValueError(f"cluster [{start}, {end}] of k = {k} exceeds the spectrum of length {spectrum.count}")

    if isinstance(mode, CollarMode):
        available = mode.grid.tau_nodes
        if l_max > available:
            raise ValueError(f"l_max = {l_max} exceeds the {available} transverse nodes of the collar mesh")
        table = _collar_table(mode, spectrum, k, p_max, l_max, (start, end))
    else:
        table = _sphere_table(mode, spectrum, k, p_max, l_max, (start, end))

    logger.debug(
        f"Fourier diagnostics k={k}, ε={result.epsilon:g}: tail={table.transverse_tail:.3e}, "
        f"mass={table.longitudinal_mass:.12f}"
    )
    return table


def _collar_table(
    mode: CollarMode, spectrum: Spectrum, k: int, p_max: int, l_max: int, cluster: tuple[int, int]
) -> FourierTable:
    grid = mode.grid
    q = grid.quadrature
    shell = q.values(grid.local_values(mode.nodal[:, None]))[..., 0]
    theta_w = grid.theta_mesh.quadrature()[1]
    tau_w = grid.tau_mesh.quadrature()[1]
    surface = theta_w * np.sqrt(curve_metric(grid.spec, q.theta).g0)

    pairs = transverse_eigenpairs(l_max)
    transverse = np.stack([pair.value(q.tau) for pair in pairs])
    # ∫ Φ̃ φ_l dτ as a function of θ, shape (l, Eθ, Q)
    moments = np.einsum("xpyq,yq,lyq->lxp", shell, tau_w, transverse)
    interface = np.stack([spectrum.eigenfunction(p).value(q.theta) for p in range(1, max(p_max, cluster[1]) + 1)])

    alpha = np.einsum("xp,lxp,sxp->sl", surface, moments, interface[:p_max])
    profile = moments[0]
    phi1 = pairs[0].value(q.tau)
    remainder = shell - phi1[None, None, :, :] * profile[:, :, None, None]
    transverse_tail = float(np.einsum("xp,yq,xpyq->", surface, tau_w, remainder**2))
    longitudinal_mass = float(np.sum(surface * profile**2))
    members = interface[cluster[0] - 1 : cluster[1]]
    cluster_mass = float(np.sum(np.einsum("xp,xp,sxp->s", surface, profile, members) ** 2))
    return FourierTable(
        k=k,
        epsilon=grid.epsilon,
        alpha=alpha,
        transverse_tail=transverse_tail,
        longitudinal_mass=longitudinal_mass,
        cluster_mass=cluster_mass,
    )


def _sphere_table(
    mode: SphereShellMode, spectrum: Spectrum, k: int, p_max: int, l_max: int, cluster: tuple[int, int]
) -> FourierTable:
    problem = mode.radial.problem
    rho, rho_w = problem.mesh.quadrature()
    tau = (rho - problem.r) / problem.epsilon
    tau_w = rho_w / problem.epsilon
    profile = mode.profile(tau)

    pairs = transverse_eigenpairs(l_max)
    moments = np.array([np.sum(tau_w * profile * pair.value(tau)) for pair in pairs])
    matches = np.array([spectrum.eigenfunction(p) == mode.harmonic for p in range(1, spectrum.count + 1)], dtype=float)

    alpha = np.outer(matches[:p_max], moments)
    remainder = profile - moments[0] * pairs[0].value(tau)
    in_cluster = float(matches[cluster[0] - 1 : cluster[1]].sum())
    return FourierTable(
        k=k,
        epsilon=problem.epsilon,
        alpha=alpha,
        transverse_tail=float(np.sum(tau_w * remainder**2)),
        longitudinal_mass=float(moments[0]) ** 2,
        cluster_mass=in_cluster * float(moments[0]) ** 2,
    )
