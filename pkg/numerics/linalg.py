"""Dense symmetric-definite generalized eigensolve."""

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from common.errors import SolverError
from common.logger import get_logger
from common.settings import settings

logger = get_logger(__name__)

EnergyForm = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EigenSolution:
    """Lowest eigenpairs of A u = λ B u.

    Attributes:
        values: Eigenvalues in nondecreasing order
        vectors: B-orthonormal eigenvectors as columns
        residuals: Normwise residuals ‖Au − λBu‖ / (‖A‖ ‖u‖)
        clamped: Number of values lifted from [−floor, 0) to 0
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    clamped: int

    @property
    def max_residual(self) -> float:
        """Largest residual of the returned pairs."""
        return float(self.residuals.max()) if self.residuals.size else 0.0


def _dense(matrix: np.ndarray | sp.spmatrix) -> np.ndarray:
    if sp.issparse(matrix):
        return np.asarray(matrix.toarray())
    return np.asarray(matrix, dtype=float)


def generalized_eigh(
    stiffness: np.ndarray | sp.spmatrix,
    mass: np.ndarray | sp.spmatrix,
    count: int,
    energy: EnergyForm | None = None,
) -> EigenSolution:
    """Solve for the ``count`` smallest eigenpairs.

    The pencil is reduced through a Cholesky factorization of the mass matrix
    and solved by tridiagonalization (LAPACK via ``scipy.linalg.eigh``). When
    ``energy`` is given, eigenvalues are recomputed as Rayleigh quotients with
    the numerator evaluated by that quadratic form, which keeps small
    eigenvalues accurate relative to themselves instead of to ‖A‖.

    Args:
        stiffness: Symmetric positive semidefinite matrix A
        mass: Symmetric positive definite matrix B
        count: Number of eigenpairs
        energy: Optional column-wise quadratic form u ↦ uᵀAu

    Returns:
        Eigenpairs with residual report

    Raises:
        ValueError: If count is not in [1, size]
        SolverError: If B is not positive definite, the solver fails or residuals are too large
    """
    a = _dense(stiffness)
    b = _dense(mass)
    size = a.shape[0]
    if not 1 <= count <= size:
        raise ValueError(f"count must be in [1, {size}], got {count}")

    logger.info(f"Generalized eigensolve: size={size}, count={count}")
    try:
        values, vectors = la.eigh(a, b, subset_by_index=[0, count - 1], check_finite=False)
    except la.LinAlgError as e:
        # LAPACK reports a failed factorization of B as "... not positive definite"
        if "positive definite" in str(e):
            raise SolverError(f"mass matrix is not positive definite (assembly bug): {e}") from e
        raise SolverError(f"generalized eigensolver did not converge (size {size}): {e}") from e

    if energy is not None:
        numerators = np.asarray(energy(vectors), dtype=float)
        denominators = np.einsum("ij,ij->j", vectors, b @ vectors)
        values = numerators / denominators
        vectors = vectors / np.sqrt(denominators)

    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    scale = max(float(np.abs(a).sum(axis=1).max()), np.finfo(float).tiny)
    residuals = np.linalg.norm(a @ vectors - (b @ vectors) * values, axis=0) / (scale * np.linalg.norm(vectors, axis=0))
    worst = float(residuals.max())
    if worst > settings.residual_tol:
        raise SolverError(f"eigenpair residuals too large: max {worst:.3e} > {settings.residual_tol:.1e}")

    values, clamped = clamp_floor(values)
    logger.debug(f"Eigensolve done: lowest={values[0]:.6e}, max residual={worst:.3e}")
    return EigenSolution(values=values, vectors=vectors, residuals=residuals, clamped=clamped)


def clamp_floor(values: np.ndarray, floor: float | None = None) -> tuple[np.ndarray, int]:
    """Pin eigenvalues with |λ| < floor to exactly zero.

    Args:
        values: Eigenvalues
        floor: Round-off tolerance around zero (default ``settings.eigen_floor``)

    Returns:
        Tuple of (clamped values, number of negative entries lifted)

    Raises:
        SolverError: If a value lies below −floor
    """
    floor = settings.eigen_floor if floor is None else floor
    values = np.array(values, dtype=float)
    if values.size and values.min() < -floor:
        raise SolverError(f"negative eigenvalue {values.min():.3e} below floor −{floor:.1e}")
    negative = values < 0.0
    if negative.any():
        logger.warning(f"Clamped {int(negative.sum())} eigenvalue(s) in [−{floor:.1e}, 0) to 0")
    values[np.abs(values) < floor] = 0.0
    return values, int(negative.sum())


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that the first entry of significant magnitude is positive."""
    vectors = np.array(vectors, copy=True)
    for i in range(vectors.shape[1]):
        column = vectors[:, i]
        significant = np.flatnonzero(np.abs(column) > 1e-8 * np.abs(column).max())
        if significant.size and column[significant[0]] < 0.0:
            vectors[:, i] = -column
    return vectors
