"""Simulators and clock statistics for a measurement-driven qubit clock."""

from ._core import (
    AdiabaticParams,
    Config,
    ConfigError,
    FullSystemParams,
    StoqError,
    analyze,
    butter2_lowpass,
    clock_periods,
    derive_adiabatic,
    derive_dispersive,
    from_photon_number,
    invgauss_fit,
    jump_rates,
    lorentzian_fit,
    periodogram,
    regime,
    sample_first_passage,
    simulate,
    simulate_bloch,
    simulate_conditional,
    simulate_telegraph,
    simulate_unconditional,
    statistical_distance_rate,
    steady_alpha,
    sweep,
    version,
    wald_moments,
)

__version__ = version()
__all__ = [name for name in dir() if not name.startswith("_")]
