"""ε-sweeps: solve, track, fit λ_{k,ε} against ε and compare with predictions."""

import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from common.errors import FitError, ShellLabError
from common.logger import get_logger
from common.schemas import (
    AcceptanceOutcome,
    AcceptanceThreshold,
    AsymptoticPrediction,
    CurveInterface,
    KFitReport,
    SolverRunReport,
    SweepConfig,
    SweepReport,
    TailSumReport,
)
from common.settings import settings
from numerics.asymptotics import predict
from numerics.fem import CurveMesh1D
from numerics.fourier_diagnostics import FourierTable, fourier_diagnostics
from numerics.geometry import reach
from numerics.interface_spectrum import Spectrum, cluster_indices, cluster_ranges, curve_spectrum, interface_spectrum
from numerics.shell_solver import CollarMode, ShellEigenResult, solve_shell

logger = get_logger(__name__)

EPSILON_REACH_FRACTION = 0.4
NOISE_FLOOR = 1e-13
INTERCEPT_FLOOR = 1e-9


@dataclass(frozen=True)
class FitResult:
    """Least-squares fit λ(ε) = a + bε (+ cε²) with remainder orders.

    Attributes:
        intercept: a
        slope: b
        curvature: c (degree 2 only)
        stderr: Standard errors of (a, b[, c])
        residuals: λ − fitted model
        remainders: λ − a − bε
        order_estimate: Least-squares slope of log|remainder| against log ε
        pairwise_orders: Successive-ratio orders (None below the noise floor)
    """

    intercept: float
    slope: float
    curvature: float | None
    stderr: tuple[float, ...]
    residuals: np.ndarray
    remainders: np.ndarray
    order_estimate: float | None
    pairwise_orders: list[float | None]

    def model(self, epsilons: np.ndarray) -> np.ndarray:
        """Evaluate the fitted polynomial."""
        eps = np.asarray(epsilons, dtype=float)
        return self.intercept + self.slope * eps + (self.curvature or 0.0) * eps**2


def empirical_order(epsilons: Sequence[float], magnitudes: Sequence[float], scale: float = 1.0) -> tuple[
    float | None, list[float | None]
]:
    """Log-log order of ``magnitudes`` against ε.

    Points below the noise floor (relative to ``scale``) are dropped; fewer than
    two surviving points give no order.

    Returns:
        Tuple of (least-squares order, pairwise orders on successive ε)
    """
    eps = np.asarray(epsilons, dtype=float)
    mag = np.abs(np.asarray(magnitudes, dtype=float))
    usable = mag > NOISE_FLOOR * max(1.0, abs(scale))

    pairwise: list[float | None] = []
    for i in range(len(eps) - 1):
        if usable[i] and usable[i + 1]:
            pairwise.append(float(np.log(mag[i] / mag[i + 1]) / np.log(eps[i] / eps[i + 1])))
        else:
            pairwise.append(None)

    if usable.sum() < 2:
        return None, pairwise
    order = float(np.polyfit(np.log(eps[usable]), np.log(mag[usable]), 1)[0])
    return order, pairwise


def fit_orders(values: Sequence[tuple[float, float]], degree: int = 2) -> FitResult:
    """Ordinary least squares on λ(ε) with a remainder-order estimate.

    Args:
        values: (ε, λ) pairs
        degree: 1 for a + bε, 2 for a + bε + cε²

    Returns:
        Fit with standard errors and orders of λ − a − bε

    Raises:
        FitError: Fewer than 4 points or a rank-deficient design matrix
    """
    if degree not in (1, 2):
        raise FitError(f"fit degree must be 1 or 2, got {degree}")
    if len(values) < 4:
        raise FitError(f"need at least 4 (ε, λ) points, got {len(values)}")
    eps = np.array([v[0] for v in values], dtype=float)
    lam = np.array([v[1] for v in values], dtype=float)

    design = np.vander(eps, degree + 1, increasing=True)
    if np.linalg.matrix_rank(design) < degree + 1:
        raise FitError(f"rank-deficient design matrix for ε = {eps.tolist()}")
    coeffs, _, _, _ = np.linalg.lstsq(design, lam, rcond=None)
    residuals = lam - design @ coeffs
    dof = len(eps) - (degree + 1)
    variance = float(residuals @ residuals) / dof
    covariance = variance * np.linalg.inv(design.T @ design)
    stderr = tuple(float(s) for s in np.sqrt(np.clip(np.diag(covariance), 0.0, None)))

    remainders = lam - coeffs[0] - coeffs[1] * eps
    order, pairwise = empirical_order(eps, remainders, scale=float(np.max(np.abs(lam))))
    return FitResult(
        intercept=float(coeffs[0]),
        slope=float(coeffs[1]),
        curvature=float(coeffs[2]) if degree == 2 else None,
        stderr=stderr,
        residuals=residuals,
        remainders=remainders,
        order_estimate=order,
        pairwise_orders=pairwise,
    )


def _blocks(result: ShellEigenResult) -> list[tuple[int, int]]:
    return cluster_ranges(result.values)


def _block_of(blocks: list[tuple[int, int]], index: int) -> tuple[int, int]:
    return next(block for block in blocks if block[0] <= index <= block[1])


def track_eigenvalue(prev: ShellEigenResult, nxt: ShellEigenResult, k: int) -> int:
    """Index in ``nxt`` of the eigenvalue tracked as index ``k`` in ``prev``.

    Matching is by sorted index within cluster-consistent blocks; degenerate
    clusters are tracked as a whole through their smallest index.
    """
    if not 1 <= k <= min(prev.count, nxt.count):
        raise ValueError(f"index {k} outside the solved range")
    before = _block_of(_blocks(prev), k)
    after = _block_of(_blocks(nxt), before[0])
    if before != after:
        logger.warning(
            f"cluster structure changed between ε = {prev.epsilon:g} {before} and ε = {nxt.epsilon:g} {after}; "
            f"falling back to index {k}"
        )
        return k
    return before[0]


def track_by_overlap(prev: ShellEigenResult, nxt: ShellEigenResult, k: int) -> int:
    """Index in ``nxt`` whose eigenvector has the largest mass-weighted overlap with Φ̃_k of ``prev``.

    Raises:
        ValueError: If the results are not collar solves on the same grid size
    """
    prev_mode = prev.modes[k - 1]
    if not isinstance(prev_mode, CollarMode) or nxt.mass is None:
        raise ValueError("overlap tracking needs collar results")
    if nxt.mass.shape[0] != prev_mode.nodal.size:
        raise ValueError("overlap tracking needs identical collar grids")
    reference = nxt.mass @ prev_mode.nodal
    overlaps = []
    for mode in nxt.modes:
        assert isinstance(mode, CollarMode)
        overlaps.append(abs(float(mode.nodal @ reference)))
    return int(np.argmax(overlaps)) + 1


def scaled_epsilons(cfg: SweepConfig) -> list[float]:
    """ε grid, scaled down uniformly so that max ε ≤ 0.4·reach."""
    limit = EPSILON_REACH_FRACTION * reach(cfg.interface)
    if cfg.epsilons[0] <= limit:
        return list(cfg.epsilons)
    factor = limit / cfg.epsilons[0]
    logger.info(f"Scaling ε grid by {factor:.4g} to stay below {EPSILON_REACH_FRACTION}·reach")
    return [eps * factor for eps in cfg.epsilons]


def _spectrum_for(cfg: SweepConfig) -> Spectrum:
    """Interface spectrum long enough to hold every requested cluster."""
    needed = max([*cfg.k_values, cfg.spectrum_count or 1, cfg.diagnostics.p_max if cfg.diagnostics else 1]) + 1
    mesh = CurveMesh1D(cfg.mesh.curve_nodes) if isinstance(cfg.interface, CurveInterface) else None
    while True:
        spectrum = interface_spectrum(cfg.interface, needed, mesh)
        ends = [cluster_indices(spectrum, k)[1] for k in cfg.k_values]
        if max(ends) <= spectrum.count:
            return spectrum
        needed = max(ends) + 1


def _discretization_estimate(cfg: SweepConfig, spectrum: Spectrum, k: int) -> float:
    """Interface eigenvalue error estimate from halving the shell θ mesh (P2 eigenvalues converge as h⁴)."""
    if not isinstance(cfg.interface, CurveInterface):
        return 0.0
    nodes = cfg.mesh.shell_xi_nodes
    fine = curve_spectrum(cfg.interface, CurveMesh1D(nodes), k).value(k)
    coarse = curve_spectrum(cfg.interface, CurveMesh1D(max(16, nodes // 2)), k).value(k)
    mismatch = abs(spectrum.value(k) - fine)
    return cfg.coefficients.mean * (abs(fine - coarse) / 15.0 + mismatch)


def _solve(cfg: SweepConfig, epsilon: float, count: int) -> ShellEigenResult:
    try:
        return solve_shell(cfg.interface, cfg.coefficients, epsilon, count, cfg.mesh)
    except ShellLabError as e:
        raise type(e)(f"ε = {epsilon:g}: {e}") from e


def _shell_count(cfg: SweepConfig, spectrum: Spectrum) -> int:
    """Number of shell eigenpairs covering every requested cluster plus one."""
    ends = [cluster_indices(spectrum, k)[1] for k in cfg.k_values]
    return max([*ends, cfg.spectrum_count or 1, max(cfg.k_values) + 1])


def solve_grid(cfg: SweepConfig, epsilons: Sequence[float], count: int, threads: int | None = None) -> list[
    ShellEigenResult
]:
    """Solve the shell problem on every ε, in parallel, returned in grid order."""
    workers = max(1, threads or settings.threads)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda eps: _solve(cfg, eps, count), epsilons))


def _track(cfg: SweepConfig, results: list[ShellEigenResult], k: int) -> list[int]:
    indices = [k]
    for prev, nxt in zip(results, results[1:], strict=False):
        if cfg.tracking == "overlap":
            indices.append(track_by_overlap(prev, nxt, indices[-1]))
        else:
            indices.append(track_eigenvalue(prev, nxt, indices[-1]))
    return indices


def fourier_tables(
    cfg: SweepConfig, results: list[ShellEigenResult], spectrum: Spectrum, indices: list[int]
) -> list[FourierTable]:
    """Fourier tables of the tracked eigenfunction at every ε."""
    assert cfg.diagnostics is not None
    return [
        fourier_diagnostics(result, spectrum, index, cfg.diagnostics.p_max, cfg.diagnostics.l_max)
        for result, index in zip(results, indices, strict=True)
    ]


def tail_sum_report(tables: Sequence[FourierTable]) -> TailSumReport:
    """Tail sums across ε with the orders of Σ_{l≥2}α² and Σ_pα^{p,1}² − 1."""
    epsilons = [table.epsilon for table in tables]
    tail = [table.transverse_tail for table in tables]
    mass = [table.longitudinal_mass for table in tables]
    tail_order, _ = empirical_order(epsilons, tail)
    normalization_order, _ = empirical_order(epsilons, [m - 1.0 for m in mass])
    return TailSumReport(
        epsilons=epsilons,
        transverse_tail=tail,
        longitudinal_mass=mass,
        cluster_mass=[table.cluster_mass for table in tables],
        transverse_tail_order=tail_order,
        normalization_order=normalization_order,
    )


def linear_curvature_bias(epsilons: Sequence[float], curvature: float | None) -> float:
    """Intercept a straight-line fit picks up from a pure cε² term on the same ε grid."""
    if not curvature:
        return 0.0
    eps = np.asarray(epsilons, dtype=float)
    design = np.vander(eps, 2, increasing=True)
    coeffs, _, _, _ = np.linalg.lstsq(design, curvature * eps**2, rcond=None)
    return float(coeffs[0])


def _relative(deviation: float, reference: float | None) -> float:
    """|deviation| relative to a nonzero reference, absolute otherwise."""
    return abs(deviation) / abs(reference) if reference else abs(deviation)


def _fit_k(
    cfg: SweepConfig,
    k: int,
    epsilons: list[float],
    results: list[ShellEigenResult],
    spectrum: Spectrum,
    stability: ShellEigenResult | None,
) -> KFitReport:
    indices = _track(cfg, results, k)
    values = [result.value(index) for result, index in zip(results, indices, strict=True)]
    prediction: AsymptoticPrediction = predict(cfg.interface, cfg.coefficients, spectrum, k)

    fit = fit_orders(list(zip(epsilons, values, strict=True)), cfg.fit_degree)
    linear = fit_orders(list(zip(epsilons, values, strict=True)), 1)
    eps = np.array(epsilons)
    lam = np.array(values)

    if prediction.slope is not None:
        remainder_order = fit.order_estimate
        pairwise = fit.pairwise_orders
    else:
        remainder_order, pairwise = empirical_order(eps, lam - fit.intercept, scale=float(np.max(np.abs(lam))))
    deviation_order, _ = empirical_order(eps, lam - prediction.leading, scale=max(1.0, prediction.leading))

    intercept_deviation = fit.intercept - prediction.leading
    slope_deviation = None if prediction.slope is None else fit.slope - prediction.slope
    bound = fit.stderr[0] + _discretization_estimate(cfg, spectrum, k) + INTERCEPT_FLOOR
    # the degree-1 intercept carries the OLS image of cε²; compare after removing it
    bias = linear_curvature_bias(epsilons, fit.curvature)
    consistent = abs(fit.intercept - (linear.intercept - bias)) <= fit.stderr[0] + linear.stderr[0] + bound

    split_slope = None
    if prediction.split_slopes is not None:
        start, _ = cluster_indices(spectrum, k)
        split_slope = prediction.split_slopes[k - start]

    stable = None
    if stability is not None:
        index = track_eigenvalue(results[-1], stability, indices[-1])
        extended = fit_orders([*zip(epsilons, values, strict=True), (stability.epsilon, stability.value(index))],
                              cfg.fit_degree)
        stable = abs(extended.intercept - fit.intercept) <= max(fit.stderr[0], INTERCEPT_FLOOR)

    diagnostics = None
    if cfg.diagnostics is not None and (cfg.diagnostics.k is None or k in cfg.diagnostics.k):
        diagnostics = tail_sum_report(fourier_tables(cfg, results, spectrum, indices))

    logger.info(f"k={k}: a={fit.intercept:.10g} (pred {prediction.leading:.10g}), b={fit.slope:.6g}")
    return KFitReport(
        k=k,
        indices=indices,
        epsilons=epsilons,
        values=values,
        intercept=fit.intercept,
        slope=fit.slope,
        curvature=fit.curvature,
        stderr_intercept=fit.stderr[0],
        stderr_slope=fit.stderr[1],
        stderr_curvature=fit.stderr[2] if cfg.fit_degree == 2 else None,
        linear_intercept=linear.intercept,
        linear_slope=linear.slope,
        linear_stderr_intercept=linear.stderr[0],
        linear_curvature_bias=bias,
        prediction=prediction,
        intercept_deviation=intercept_deviation,
        intercept_rel_deviation=_relative(intercept_deviation, prediction.leading),
        slope_deviation=slope_deviation,
        slope_rel_deviation=None if slope_deviation is None else _relative(slope_deviation, prediction.slope),
        remainder_order=remainder_order,
        pairwise_orders=pairwise,
        deviation_order=deviation_order,
        split_slope=split_slope,
        intercept_error_bound=bound,
        intercept_consistent=consistent,
        extrapolation_stable=stable,
        diagnostics=diagnostics,
    )


def run_sweep(
    cfg: SweepConfig, threads: int | None = None, results_sink: list[ShellEigenResult] | None = None
) -> SweepReport:
    """Solve on the ε grid, track every requested k and fit against the predictions.

    Args:
        cfg: Sweep description
        threads: Worker threads for the ε solves (default ``settings.threads``)
        results_sink: When given, receives the shell solves in ε-grid order

    Returns:
        Sweep report

    Raises:
        ShellLabError: Solver errors, annotated with the failing ε
    """
    epsilons = scaled_epsilons(cfg)
    spectrum = _spectrum_for(cfg)
    count = _shell_count(cfg, spectrum)
    logger.info(f"Sweep: {len(epsilons)} ε values, K={count}, k={cfg.k_values}")

    grid = epsilons + ([epsilons[-1] / 2.0] if cfg.stability_check else [])
    solved = solve_grid(cfg, grid, count, threads)
    results = solved[: len(epsilons)]
    stability = solved[-1] if cfg.stability_check else None
    if results_sink is not None:
        results_sink.extend(results)

    fits = [_fit_k(cfg, k, epsilons, results, spectrum, stability) for k in cfg.k_values]
    return SweepReport(
        interface=cfg.interface,
        coefficients=cfg.coefficients,
        epsilons=epsilons,
        fit_degree=cfg.fit_degree,
        interface_eigenvalues=spectrum.eigenvalues.tolist(),
        fits=fits,
        runs=[
            SolverRunReport(
                epsilon=result.epsilon,
                solver_path=result.solver_path,
                mesh=result.mesh,
                max_residual=result.max_residual,
                clamped=result.clamped,
            )
            for result in solved
        ],
    )


def run_diagnostics(cfg: SweepConfig, threads: int | None = None) -> dict[int, list[FourierTable]]:
    """Fourier tables of every requested k across the ε grid.

    The k list is ``cfg.diagnostics.k`` when given, ``cfg.k_values`` otherwise.

    Raises:
        ValueError: If the sweep carries no diagnostics request
    """
    if cfg.diagnostics is None:
        raise ValueError("diagnostics request missing from sweep config")
    if cfg.diagnostics.k is not None:
        cfg = cfg.model_copy(update={"k_values": list(cfg.diagnostics.k)})
    epsilons = scaled_epsilons(cfg)
    spectrum = _spectrum_for(cfg)
    results = solve_grid(cfg, epsilons, _shell_count(cfg, spectrum), threads)
    return {k: fourier_tables(cfg, results, spectrum, _track(cfg, results, k)) for k in cfg.k_values}


def _quantity(fit: KFitReport, threshold: AcceptanceThreshold) -> tuple[float | None, float | None]:
    """(measured value, predicted target) of a threshold quantity."""
    match threshold.quantity:
        case "intercept":
            return fit.intercept, fit.prediction.leading
        case "slope":
            return fit.slope, fit.prediction.slope
        case "split_slope":
            return fit.slope, fit.split_slope
        case "remainder_order":
            return fit.remainder_order, None
        case "deviation_order":
            return fit.deviation_order, None
        case "transverse_tail_order":
            return (fit.diagnostics.transverse_tail_order if fit.diagnostics else None), None
        case "normalization_order":
            return (fit.diagnostics.normalization_order if fit.diagnostics else None), None
    raise ValueError(f"unknown quantity {threshold.quantity}")


ORDER_QUANTITIES = {"remainder_order", "deviation_order", "transverse_tail_order", "normalization_order"}


def evaluate_acceptance(report: SweepReport, thresholds: Sequence[AcceptanceThreshold]) -> list[AcceptanceOutcome]:
    """Check acceptance thresholds against a sweep report.

    Orders reported as None (remainders below the noise floor) count as exact
    and satisfy lower bounds.
    """
    outcomes = []
    for threshold in thresholds:
        name = threshold.name or f"k{threshold.k}-{threshold.quantity}"
        try:
            fit = report.fit_for(threshold.k)
        except KeyError:
            outcomes.append(AcceptanceOutcome(
                name=name, k=threshold.k, quantity=threshold.quantity, value=None,
                expected=f"k = {threshold.k} in sweep", passed=False,
            ))
            continue

        value, predicted = _quantity(fit, threshold)
        checks: list[bool] = []
        expected: list[str] = []
        if threshold.target is not None:
            target = predicted if threshold.target == "predicted" else float(threshold.target)
            tolerance = max(threshold.abs_tol or 0.0, (threshold.rel_tol or 0.0) * abs(target or 0.0))
            expected.append(f"{target} ± {tolerance:.3g}")
            checks.append(value is not None and target is not None and abs(value - target) <= tolerance)
        if threshold.min is not None:
            expected.append(f"≥ {threshold.min}")
            exact = value is None and threshold.quantity in ORDER_QUANTITIES
            checks.append(exact or (value is not None and value >= threshold.min))
        if threshold.max is not None:
            expected.append(f"≤ {threshold.max}")
            checks.append(value is not None and value <= threshold.max)

        passed = all(checks)
        if not passed:
            logger.warning(f"Acceptance '{name}' failed: value={value}, expected {', '.join(expected)}")
        outcomes.append(AcceptanceOutcome(
            name=name,
            k=threshold.k,
            quantity=threshold.quantity,
            value=None if value is None or math.isnan(value) else value,
            expected=", ".join(expected),
            passed=passed,
        ))
    return outcomes
