"""Presentation-layer unit conversion. Internally hbar = 1."""

HBAR_MEV_PS = 0.6582119  # hbar in meV * ps


def time_to_ps(t: float, energy_unit_mev: float = 1.0) -> float:
    """Convert a time measured in ``hbar / E`` into picoseconds, ``E`` given in meV."""
    return t * HBAR_MEV_PS / energy_unit_mev


def energy_to_mev(e: float, energy_unit_mev: float = 1.0) -> float:
    return e * energy_unit_mev
