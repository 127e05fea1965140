"""Numerical core: geometry, spectra, shell solvers, asymptotics and sweeps."""
