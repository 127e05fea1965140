"""Tests for fits, tracking, sweeps and acceptance checks."""

from pathlib import Path

import numpy as np
import pytest
from numpy.testing import assert_allclose

from cli.config_loader import load_experiment
from common.errors import FitError
from common.schemas import (
    AcceptanceThreshold,
    CurveInterface,
    DiagnosticsConfig,
    MeshConfig,
    SphereInterface,
    SweepConfig,
    TwoPhaseCoeff,
)
from numerics.geometry import reach
from numerics.shell_solver import ShellEigenResult, solve_curve_shell, solve_sphere_shell
from numerics.sweep import (
    EPSILON_REACH_FRACTION,
    empirical_order,
    evaluate_acceptance,
    fit_orders,
    linear_curvature_bias,
    run_diagnostics,
    run_sweep,
    scaled_epsilons,
    track_by_overlap,
    track_eigenvalue,
)

GRID = [0.08, 0.04, 0.02, 0.01, 0.005]
SCENARIOS = Path(__file__).parents[1] / "scenarios"


def _result(values: list[float], epsilon: float) -> ShellEigenResult:
    return ShellEigenResult(
        spec=SphereInterface(n=2, r=1.0),
        coefficients=TwoPhaseCoeff(sigma_minus=1.0, sigma_plus=2.0),
        epsilon=epsilon,
        values=np.array(values),
        modes=[],
        solver_path="radial",
        mesh="synthetic",
        max_residual=0.0,
        clamped=0,
    )


@pytest.fixture(scope="module")
def circle_report():
    cfg = SweepConfig(
        interface=SphereInterface(n=2, r=1.0),
        coefficients=TwoPhaseCoeff(sigma_minus=1.0, sigma_plus=2.0),
        k_values=[1, 2],
    )
    return run_sweep(cfg)


@pytest.fixture(scope="module")
def scenario_run():
    """Sweep report and acceptance outcomes of a shipped scenario, computed once per module."""
    cache = {}

    def run(name: str):
        if name not in cache:
            config = load_experiment(SCENARIOS / f"{name}.yaml")
            report = run_sweep(config.to_sweep_config(), threads=1)
            cache[name] = report, evaluate_acceptance(report, config.acceptance)
        return cache[name]

    return run


@pytest.fixture(scope="module")
def collar_pair():
    ellipse = CurveInterface.ellipse(2.0, 1.0)
    coefficients = TwoPhaseCoeff(sigma_minus=1.0, sigma_plus=2.0)
    return [solve_curve_shell(ellipse, coefficients, eps, 4, xi_nodes=64, tau_elements=4) for eps in (0.04, 0.02)]


class TestFitOrders:
    """Least-squares fits and remainder orders."""

    def test_quadratic_is_recovered(self):
        eps = np.array(GRID)
        fit = fit_orders(list(zip(eps, 1.5 - 0.25 * eps + 0.3 * eps**2, strict=True)))
        assert_allclose([fit.intercept, fit.slope, fit.curvature], [1.5, -0.25, 0.3], atol=1e-10)
        assert_allclose(fit.order_estimate, 2.0, atol=1e-6)
        assert all(order is not None and abs(order - 2.0) < 1e-6 for order in fit.pairwise_orders)
        assert_allclose(fit.model(eps), 1.5 - 0.25 * eps + 0.3 * eps**2, atol=1e-12)

    def test_linear_fit_has_no_curvature(self):
        eps = np.array(GRID)
        fit = fit_orders(list(zip(eps, 2.0 + eps, strict=True)), degree=1)
        assert fit.curvature is None
        assert len(fit.stderr) == 2
        assert fit.order_estimate is None

    def test_curvature_bias_of_linear_intercept(self):
        eps = np.array(GRID)
        values = list(zip(eps, 1.5 - 0.25 * eps + 0.6 * eps**2, strict=True))
        quadratic, linear = fit_orders(values), fit_orders(values, degree=1)
        bias = linear_curvature_bias(GRID, quadratic.curvature)
        assert abs(linear.intercept - quadratic.intercept) > 1e-4
        assert_allclose(linear.intercept - bias, quadratic.intercept, atol=1e-12)
        assert linear_curvature_bias(GRID, None) == 0.0

    def test_too_few_points(self):
        with pytest.raises(FitError, match="at least 4"):
            fit_orders([(0.1, 1.0), (0.05, 1.0), (0.025, 1.0)])

    def test_unknown_degree(self):
        with pytest.raises(FitError, match="degree"):
            fit_orders([(e, 1.0) for e in GRID], degree=3)

    def test_repeated_epsilon_is_rank_deficient(self):
        with pytest.raises(FitError, match="rank-deficient"):
            fit_orders([(0.1, 1.0), (0.1, 1.1), (0.1, 1.2), (0.1, 1.3)], degree=2)


class TestEmpiricalOrder:
    """Log-log orders with a noise floor."""

    def test_power_law(self):
        order, pairwise = empirical_order(GRID, [3.0 * e**1.5 for e in GRID])
        assert_allclose(order, 1.5)
        assert_allclose(pairwise, [1.5] * 4)

    def test_noise_floor(self):
        order, pairwise = empirical_order(GRID, [1e-3, 1e-4, 1e-16, 1e-17, 0.0])
        assert order is not None
        assert pairwise[1:] == [None, None, None]

    def test_all_below_floor(self):
        order, _ = empirical_order(GRID, [0.0] * 5)
        assert order is None


class TestTracking:
    """Cluster-consistent index tracking."""

    def test_cluster_start_is_tracked(self):
        prev = _result([0.0, 1.0, 1.0, 4.0], 0.02)
        nxt = _result([0.0, 0.99, 0.99, 3.9], 0.01)
        assert track_eigenvalue(prev, nxt, 3) == 2
        assert track_eigenvalue(prev, nxt, 4) == 4

    def test_changed_structure_falls_back_to_index(self):
        prev = _result([0.0, 1.0, 1.0, 4.0], 0.02)
        nxt = _result([0.0, 0.9, 1.1, 4.0], 0.01)
        assert track_eigenvalue(prev, nxt, 3) == 3

    def test_outside_solved_range(self):
        with pytest.raises(ValueError):
            track_eigenvalue(_result([0.0, 1.0], 0.02), _result([0.0, 1.0], 0.01), 3)

    def test_overlap_agrees_with_index(self, collar_pair):
        prev, nxt = collar_pair
        assert [track_by_overlap(prev, nxt, k) for k in (1, 2, 3)] == [1, 2, 3]
        assert [track_eigenvalue(prev, nxt, k) for k in (1, 2, 3)] == [1, 2, 3]

    def test_overlap_needs_collar_results(self, two_phase):
        radial = [solve_sphere_shell(2, 1.0, two_phase, eps, 3, elements_per_side=8) for eps in (0.04, 0.02)]
        with pytest.raises(ValueError, match="collar results"):
            track_by_overlap(radial[0], radial[1], 2)

    def test_overlap_needs_identical_grids(self, collar_pair, ellipse, two_phase):
        finer = solve_curve_shell(ellipse, two_phase, 0.02, 4, xi_nodes=32, tau_elements=4)
        with pytest.raises(ValueError, match="identical collar grids"):
            track_by_overlap(collar_pair[0], finer, 2)


class TestScaledEpsilons:
    """ε grid limited by the reach."""

    def test_small_grid_is_kept(self, ellipse, two_phase):
        cfg = SweepConfig(interface=ellipse, coefficients=two_phase, k_values=[2])
        assert scaled_epsilons(cfg) == GRID

    def test_large_grid_is_scaled(self, ellipse, two_phase):
        cfg = SweepConfig(interface=ellipse, coefficients=two_phase, k_values=[2], epsilons=[0.8, 0.4, 0.2, 0.1])
        scaled = scaled_epsilons(cfg)
        assert_allclose(scaled[0], EPSILON_REACH_FRACTION * reach(ellipse))
        assert_allclose(np.array(scaled[:-1]) / np.array(scaled[1:]), 2.0)

    def test_grid_must_decrease(self, ellipse, two_phase):
        with pytest.raises(ValueError, match="decreasing"):
            SweepConfig(interface=ellipse, coefficients=two_phase, k_values=[2], epsilons=[0.01, 0.02, 0.04, 0.08])


class TestRunSweep:
    """ε-sweep around the unit circle handled as S¹."""

    def test_fits_match_predictions(self, circle_report):
        fit = circle_report.fit_for(2)
        assert fit.indices == [2] * len(GRID)
        assert_allclose(fit.intercept, 1.5, atol=1e-3)
        assert_allclose(fit.slope, -0.25, atol=0.0125)
        assert fit.prediction.slope_source == "Thm3_sphere"
        assert fit.intercept_consistent
        assert_allclose(fit.linear_intercept - fit.linear_curvature_bias, fit.intercept, atol=1e-10)
        assert fit.extrapolation_stable is None

    def test_zero_mode(self, circle_report):
        fit = circle_report.fit_for(1)
        assert_allclose(fit.values, 0.0, atol=1e-9)
        assert_allclose(fit.prediction.leading, 0.0)

    def test_run_metadata(self, circle_report):
        assert [run.epsilon for run in circle_report.runs] == GRID
        assert all(run.solver_path == "radial" for run in circle_report.runs)
        with pytest.raises(KeyError):
            circle_report.fit_for(7)

    def test_diagnostics_are_attached(self, two_phase):
        cfg = SweepConfig(
            interface=SphereInterface(n=2, r=1.0),
            coefficients=two_phase,
            k_values=[2],
            epsilons=GRID[:4],
            diagnostics=DiagnosticsConfig(p_max=4, l_max=3),
        )
        fit = run_sweep(cfg).fit_for(2)
        assert fit.diagnostics is not None
        assert fit.diagnostics.epsilons == GRID[:4]
        tables = run_diagnostics(cfg)
        assert list(tables) == [2]
        assert tables[2][0].alpha.shape == (4, 3)

    def test_diagnostics_request_required(self, two_phase):
        cfg = SweepConfig(interface=SphereInterface(n=2, r=1.0), coefficients=two_phase, k_values=[2])
        with pytest.raises(ValueError, match="diagnostics"):
            run_diagnostics(cfg)

    def test_stability_check_adds_half_step(self, two_phase):
        cfg = SweepConfig(
            interface=SphereInterface(n=2, r=1.0), coefficients=two_phase, k_values=[2], stability_check=True
        )
        report = run_sweep(cfg)
        assert [run.epsilon for run in report.runs] == [*GRID, GRID[-1] / 2.0]
        fit = report.fit_for(2)
        assert fit.epsilons == GRID
        assert isinstance(fit.extrapolation_stable, bool)

    def test_overlap_tracking_sweep(self, ellipse, two_phase):
        cfg = SweepConfig(
            interface=ellipse,
            coefficients=two_phase,
            k_values=[2],
            tracking="overlap",
            mesh=MeshConfig(curve_nodes=64, tau_elements=4),
        )
        assert run_sweep(cfg, threads=2).fit_for(2).indices == [2] * len(GRID)

    @pytest.mark.slow
    def test_ellipse_cluster_splits(self, ellipse, two_phase):
        cfg = SweepConfig(
            interface=ellipse,
            coefficients=two_phase,
            k_values=[2],
            mesh=MeshConfig(curve_nodes=128, tau_elements=4),
        )
        fit = run_sweep(cfg, threads=2).fit_for(2)
        assert fit.prediction.slope is None
        assert fit.split_slope is not None
        assert_allclose(fit.intercept, fit.prediction.leading, rtol=1e-3)


class TestAcceptance:
    """Threshold verdicts on a sweep report."""

    def test_predicted_target(self, circle_report):
        thresholds = [
            AcceptanceThreshold(k=2, quantity="intercept", target="predicted", rel_tol=1e-3),
            AcceptanceThreshold(k=2, quantity="slope", target=-0.25, abs_tol=0.0125),
        ]
        outcomes = evaluate_acceptance(circle_report, thresholds)
        assert [o.passed for o in outcomes] == [True, True]
        assert outcomes[0].name == "k2-intercept"

    def test_violated_bound(self, circle_report):
        outcome = evaluate_acceptance(
            circle_report, [AcceptanceThreshold(name="too-steep", k=2, quantity="slope", min=0.0)]
        )[0]
        assert not outcome.passed
        assert outcome.name == "too-steep"
        assert outcome.expected == "≥ 0.0"

    def test_exact_order_meets_lower_bound(self, circle_report):
        exact = circle_report.fit_for(2).model_copy(update={"remainder_order": None})
        report = circle_report.model_copy(update={"fits": [exact]})
        outcome = evaluate_acceptance(
            report, [AcceptanceThreshold(k=2, quantity="remainder_order", min=1.5)]
        )[0]
        assert outcome.passed
        assert outcome.value is None

    def test_missing_k(self, circle_report):
        outcome = evaluate_acceptance(circle_report, [AcceptanceThreshold(k=9, quantity="slope", max=1.0)])[0]
        assert not outcome.passed
        assert outcome.value is None

    def test_threshold_needs_criterion(self):
        with pytest.raises(ValueError, match="target or min/max"):
            AcceptanceThreshold(k=2, quantity="slope")


class TestShippedScenarios:
    """Sweeps of the configs under scenarios/."""

    @pytest.mark.parametrize(
        "name",
        [
            "circle-two-phase",
            "circle-diagnostics",
            "sphere3-null-slope",
            "sphere4-sign-flip",
            pytest.param("ellipse-spectrum", marks=pytest.mark.slow),
            pytest.param("ellipse-split-slopes", marks=pytest.mark.slow),
            pytest.param("schatzman-limit", marks=pytest.mark.slow),
        ],
    )
    def test_fits_are_consistent_and_accepted(self, scenario_run, name):
        report, outcomes = scenario_run(name)
        for fit in report.fits:
            assert fit.intercept_consistent, (fit.k, fit.intercept, fit.linear_intercept, fit.linear_curvature_bias)
        assert [outcome.name for outcome in outcomes if not outcome.passed] == []

    def test_null_slope_on_two_sphere(self, scenario_run):
        fit = scenario_run("sphere3-null-slope")[0].fit_for(2)
        assert fit.prediction.slope == 0.0
        assert abs(fit.slope) <= 0.01 * 1.0 * 2.0
        assert fit.remainder_order is None or fit.remainder_order >= 1.5

    def test_sign_flip_on_three_sphere(self, scenario_run):
        fit = scenario_run("sphere4-sign-flip")[0].fit_for(2)
        assert fit.slope > 0.0
        assert_allclose(fit.slope, 0.25 * 1.0 * 3.0, rtol=0.05)
        assert_allclose(fit.intercept, 4.5, rtol=1e-3)

    @pytest.mark.slow
    def test_ellipse_slopes_follow_cluster_splitting(self, scenario_run):
        report = scenario_run("ellipse-split-slopes")[0]
        for k in (2, 3):
            fit = report.fit_for(k)
            assert fit.split_slope is not None
            assert_allclose(fit.slope, fit.split_slope, rtol=0.05)
        assert report.fit_for(2).split_slope < report.fit_for(3).split_slope

    @pytest.mark.slow
    def test_equal_conductivities_deviate_at_second_order(self, scenario_run):
        report = scenario_run("schatzman-limit")[0]
        assert_allclose(report.fit_for(1).values, 0.0, atol=1e-9)
        fit = report.fit_for(2)
        assert fit.prediction.slope_source == "none_multiplicity"
        assert fit.split_slope == 0.0
        assert fit.deviation_order is not None and fit.deviation_order >= 1.8
