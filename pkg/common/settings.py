"""Application settings management."""

from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class AppSettings(BaseSettings):
    """Application settings loaded from environment variables (prefix ``SHELL_LAB_``)."""

    model_config = SettingsConfigDict(
        env_prefix="SHELL_LAB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
        validate_assignment=True,
    )

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "WARNING"

    # geometry
    reach_safety: float = 0.9
    reach_samples: int = 4096
    min_speed: float = 1e-10

    # discretization
    curve_mesh_nodes: int = 256
    shell_tau_elements: int = 8
    radial_elements_per_side: int = 128
    unknown_cap: int = 6000  # memory guard for the dense collar solve

    # spectra
    cluster_rel_tol: float = 1e-6
    fragile_gap_factor: float = 100.0
    eigen_floor: float = 1e-9
    residual_tol: float = 1e-8

    # shooting oracle
    shooting_rtol: float = 1e-12
    shooting_atol: float = 1e-14
    shooting_grid_points: int = 2000

    # execution / output
    threads: int = 1
    csv_digits: int = 17


settings = AppSettings()
