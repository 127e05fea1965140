"""Shared fixtures."""

import pytest

from common.schemas import CurveInterface, SphereInterface, TwoPhaseCoeff


@pytest.fixture
def circle() -> CurveInterface:
    """Unit circle as a Fourier curve."""
    return CurveInterface.circle(1.0)


@pytest.fixture
def ellipse() -> CurveInterface:
    """Ellipse (2cos θ, sin θ)."""
    return CurveInterface.ellipse(2.0, 1.0)


@pytest.fixture
def unit_circle_sphere() -> SphereInterface:
    """S¹(1) handled by angular separation."""
    return SphereInterface(n=2, r=1.0)


@pytest.fixture
def unit_sphere() -> SphereInterface:
    """S²(1) in R³."""
    return SphereInterface(n=3, r=1.0)


@pytest.fixture
def two_phase() -> TwoPhaseCoeff:
    """σ₋ = 1, σ₊ = 2."""
    return TwoPhaseCoeff(sigma_minus=1.0, sigma_plus=2.0)


@pytest.fixture
def one_phase() -> TwoPhaseCoeff:
    """σ₋ = σ₊ = 1."""
    return TwoPhaseCoeff(sigma_minus=1.0, sigma_plus=1.0)
