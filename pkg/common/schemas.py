"""Data schema definitions."""

from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from common.settings import settings

# Default ε grid (geometric, ratio 2)
DEFAULT_EPSILONS = [0.08, 0.04, 0.02, 0.01, 0.005]

CoefficientPair = tuple[tuple[float, float], tuple[float, float]]

SlopeSource = Literal["Thm2_Lambda_k", "Thm3_sphere", "none_multiplicity", "schatzman_zero_mean_case"]
RemainderClaim = Literal["O(eps)", "o(eps)", "O(eps2)"]
FitQuantity = Literal[
    "intercept",
    "slope",
    "remainder_order",
    "deviation_order",
    "split_slope",
    "transverse_tail_order",
    "normalization_order",
]


class SphereInterface(BaseModel):
    """Sphere S^{n-1}(r) in R^n."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["sphere"] = "sphere"
    n: int = Field(ge=2)
    r: float = Field(gt=0.0)


class CurveInterface(BaseModel):
    """Closed plane curve x(θ) = Σ_j a_j cos(jθ) + b_j sin(jθ), a_j, b_j ∈ R².

    Simplicity of the curve is a documented precondition and is not checked.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["curve"] = "curve"
    coefficients: tuple[CoefficientPair, ...]

    @field_validator("coefficients")
    @classmethod
    def _at_least_first_harmonic(cls, value: tuple[CoefficientPair, ...]) -> tuple[CoefficientPair, ...]:
        if len(value) < 2:
            raise ValueError("curve needs coefficient pairs for j = 0 and at least j = 1")
        return value

    @model_validator(mode="after")
    def _regular_parameterization(self) -> "CurveInterface":
        theta = np.linspace(0.0, 2.0 * np.pi, settings.reach_samples, endpoint=False)
        j = np.arange(len(self.coefficients))[:, None]
        a, b = self.cos_coeffs, self.sin_coeffs
        derivative = (-(j * a)[:, None, :] * np.sin(j * theta)[..., None]
                      + (j * b)[:, None, :] * np.cos(j * theta)[..., None]).sum(axis=0)
        speed = np.linalg.norm(derivative, axis=1)
        worst = int(np.argmin(speed))
        if speed[worst] < settings.min_speed:
            raise ValueError(f"degenerate parameterization: |x'(θ)| = {speed[worst]:.3e} at θ = {theta[worst]:.6f}")
        return self

    @property
    def cos_coeffs(self) -> np.ndarray:
        """Coefficients a_j as a (J+1, 2) array."""
        return np.array([pair[0] for pair in self.coefficients], dtype=float)

    @property
    def sin_coeffs(self) -> np.ndarray:
        """Coefficients b_j as a (J+1, 2) array."""
        return np.array([pair[1] for pair in self.coefficients], dtype=float)

    @classmethod
    def ellipse(cls, a: float, b: float) -> "CurveInterface":
        """Axis-aligned ellipse (a cos θ, b sin θ)."""
        return cls(coefficients=(((0.0, 0.0), (0.0, 0.0)), ((a, 0.0), (0.0, b))))

    @classmethod
    def circle(cls, r: float) -> "CurveInterface":
        """Circle of radius r, counterclockwise."""
        return cls.ellipse(r, r)


InterfaceSpec = Annotated[SphereInterface | CurveInterface, Field(discriminator="kind")]


class TwoPhaseCoeff(BaseModel):
    """Piecewise constant conductivities: σ₋ inside (t < 0), σ₊ outside (t > 0)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sigma_minus: float = Field(gt=0.0)
    sigma_plus: float = Field(gt=0.0)

    @property
    def mean(self) -> float:
        """Arithmetic mean (σ₋ + σ₊)/2."""
        return 0.5 * (self.sigma_minus + self.sigma_plus)

    @property
    def jump(self) -> float:
        """σ₊ − σ₋."""
        return self.sigma_plus - self.sigma_minus

    def scaled(self, factor: float) -> "TwoPhaseCoeff":
        """Both coefficients multiplied by ``factor``."""
        return TwoPhaseCoeff(sigma_minus=factor * self.sigma_minus, sigma_plus=factor * self.sigma_plus)


class AsymptoticPrediction(BaseModel):
    """Closed-form prediction λ_{k,ε} ≈ leading + slope·ε."""

    k: int
    leading: float = Field(ge=0.0)
    slope: float | None = None
    slope_source: SlopeSource
    remainder_order_claim: RemainderClaim
    functional: float | None = None  # Λ_k when evaluated
    fragile_simplicity: bool = False
    split_slopes: list[float] | None = None  # first-order splitting of a cluster (verification only)


class MeshConfig(BaseModel):
    """Discretization parameters."""

    model_config = ConfigDict(extra="forbid")

    curve_nodes: int = Field(default_factory=lambda: settings.curve_mesh_nodes, ge=16)
    xi_nodes: int | None = Field(default=None, ge=16)
    tau_elements: int = Field(default_factory=lambda: settings.shell_tau_elements, ge=2)
    radial_elements_per_side: int = Field(default_factory=lambda: settings.radial_elements_per_side, ge=2)
    l_max: int | None = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _even_counts(self) -> "MeshConfig":
        if self.curve_nodes % 2:
            raise ValueError("curve_nodes must be even (quadratic elements)")
        if self.xi_nodes is not None and self.xi_nodes % 2:
            raise ValueError("xi_nodes must be even (quadratic elements)")
        if self.tau_elements % 2:
            raise ValueError("tau_elements must be even so that τ = 0 is a node")
        return self

    @property
    def shell_xi_nodes(self) -> int:
        """Number of θ nodes used by the collar solver."""
        return self.xi_nodes if self.xi_nodes is not None else self.curve_nodes


class DiagnosticsConfig(BaseModel):
    """Fourier-coefficient diagnostics request."""

    model_config = ConfigDict(extra="forbid")

    p_max: int = Field(default=6, ge=1)
    l_max: int = Field(default=4, ge=1)
    k: list[int] | None = None


class SweepConfig(BaseModel):
    """ε-sweep description."""

    model_config = ConfigDict(extra="forbid")

    interface: InterfaceSpec
    coefficients: TwoPhaseCoeff
    k_values: list[int] = Field(min_length=1)
    epsilons: list[float] = Field(default_factory=lambda: list(DEFAULT_EPSILONS))
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    fit_degree: Literal[1, 2] = 2
    spectrum_count: int | None = Field(default=None, ge=1)
    diagnostics: DiagnosticsConfig | None = None
    stability_check: bool = False
    tracking: Literal["index", "overlap"] = "index"

    @field_validator("k_values")
    @classmethod
    def _positive_k(cls, value: list[int]) -> list[int]:
        if any(k < 1 for k in value):
            raise ValueError("k values are 1-based")
        return value

    @field_validator("epsilons")
    @classmethod
    def _decreasing_grid(cls, value: list[float]) -> list[float]:
        if len(value) < 4:
            raise ValueError("at least 4 ε values are needed for order estimation")
        if any(eps <= 0.0 for eps in value):
            raise ValueError("ε values must be positive")
        if any(later >= earlier for earlier, later in zip(value, value[1:], strict=False)):
            raise ValueError("ε grid must be strictly decreasing")
        return value


class TailSumReport(BaseModel):
    """Fourier tail sums across the ε grid for one k."""

    epsilons: list[float]
    transverse_tail: list[float]
    longitudinal_mass: list[float]
    cluster_mass: list[float]
    transverse_tail_order: float | None
    normalization_order: float | None


class KFitReport(BaseModel):
    """Fit of λ_{k,ε} against ε for one k."""

    k: int
    indices: list[int]
    epsilons: list[float]
    values: list[float]
    intercept: float
    slope: float
    curvature: float | None
    stderr_intercept: float
    stderr_slope: float
    stderr_curvature: float | None
    linear_intercept: float
    linear_slope: float
    linear_stderr_intercept: float
    linear_curvature_bias: float = 0.0
    prediction: AsymptoticPrediction
    intercept_deviation: float
    intercept_rel_deviation: float
    slope_deviation: float | None
    slope_rel_deviation: float | None
    remainder_order: float | None
    pairwise_orders: list[float | None]
    deviation_order: float | None
    split_slope: float | None = None
    intercept_error_bound: float
    intercept_consistent: bool
    extrapolation_stable: bool | None = None
    diagnostics: TailSumReport | None = None


class SolverRunReport(BaseModel):
    """Metadata of one shell solve inside a sweep."""

    epsilon: float
    solver_path: str
    mesh: str
    max_residual: float
    clamped: int


class SweepReport(BaseModel):
    """Result of an ε-sweep."""

    interface: InterfaceSpec
    coefficients: TwoPhaseCoeff
    epsilons: list[float]
    fit_degree: int
    interface_eigenvalues: list[float]
    fits: list[KFitReport]
    runs: list[SolverRunReport]

    def fit_for(self, k: int) -> KFitReport:
        """Return the fit for ``k``.

        Raises:
            KeyError: When k was not part of the sweep
        """
        for fit in self.fits:
            if fit.k == k:
                return fit
        raise KeyError(f"k = {k} not in sweep report")


class AcceptanceThreshold(BaseModel):
    """One scientific acceptance check on a sweep report."""

    model_config = ConfigDict(extra="forbid")

    name: str | None = None
    k: int = Field(ge=1)
    quantity: FitQuantity
    target: float | Literal["predicted"] | None = None
    abs_tol: float | None = Field(default=None, ge=0.0)
    rel_tol: float | None = Field(default=None, ge=0.0)
    min: float | None = None
    max: float | None = None

    @model_validator(mode="after")
    def _has_criterion(self) -> "AcceptanceThreshold":
        if self.target is None and self.min is None and self.max is None:
            raise ValueError("threshold needs a target or min/max bounds")
        if self.target is not None and self.abs_tol is None and self.rel_tol is None:
            raise ValueError("threshold with a target needs abs_tol or rel_tol")
        return self


class AcceptanceOutcome(BaseModel):
    """Evaluated acceptance threshold."""

    name: str
    k: int
    quantity: FitQuantity
    value: float | None
    expected: str
    passed: bool


class FitSettings(BaseModel):
    """Fit section of an experiment config."""

    model_config = ConfigDict(extra="forbid")

    degree: Literal[1, 2] = 2
    tracking: Literal["index", "overlap"] = "index"
    stability_check: bool = False


class SpectrumSettings(BaseModel):
    """Spectrum section of an experiment config."""

    model_config = ConfigDict(extra="forbid")

    count: int = Field(default=10, ge=1)


class OutputSettings(BaseModel):
    """Output section of an experiment config."""

    model_config = ConfigDict(extra="forbid")

    directory: str = "results"


class FlagSettings(BaseModel):
    """Optional behaviour toggles."""

    model_config = ConfigDict(extra="forbid")

    dump_eigenfunctions: bool = False
    run_diagnostics: bool = False
    oracle_check: bool = False


class ExperimentConfig(BaseModel):
    """Experiment config file schema (unknown keys rejected)."""

    model_config = ConfigDict(extra="forbid")

    scenario: str
    interface: InterfaceSpec
    coefficients: TwoPhaseCoeff = TwoPhaseCoeff(sigma_minus=1.0, sigma_plus=2.0)
    k: list[int] = Field(default_factory=lambda: [2])
    epsilons: list[float] = Field(default_factory=lambda: list(DEFAULT_EPSILONS))
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    fit: FitSettings = Field(default_factory=FitSettings)
    spectrum: SpectrumSettings = Field(default_factory=SpectrumSettings)
    diagnostics: DiagnosticsConfig = Field(default_factory=DiagnosticsConfig)
    acceptance: list[AcceptanceThreshold] = Field(default_factory=list)
    output: OutputSettings = Field(default_factory=OutputSettings)
    flags: FlagSettings = Field(default_factory=FlagSettings)

    def to_sweep_config(self) -> SweepConfig:
        """Build the sweep description of this experiment."""
        return SweepConfig(
            interface=self.interface,
            coefficients=self.coefficients,
            k_values=self.k,
            epsilons=self.epsilons,
            mesh=self.mesh,
            fit_degree=self.fit.degree,
            spectrum_count=self.spectrum.count,
            diagnostics=self.diagnostics if self.flags.run_diagnostics else None,
            stability_check=self.fit.stability_check,
            tracking=self.fit.tracking,
        )
