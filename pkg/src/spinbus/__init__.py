"""Effective long-range qubit coupling through a two-leg spin-1/2 ladder bus."""

from .effective import BusCouplings, EffectiveCoupling, compute_coupling, effective_hamiltonian
from .errors import (
    BudgetError,
    ConvergenceError,
    DegenerateGroundStateError,
    DomainError,
    WeakCouplingError,
)
from .hilbert import SiteIndex, build_sector, node_to_site, site_to_node
from .ladder import LadderSpec, apply_fluctuations, build_hamiltonian
from .spectra import analytic_spectrum_l2, cubic_roots, full_spectrum, ground_and_gap

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "BusCouplings",
    "ConvergenceError",
    "DegenerateGroundStateError",
    "DomainError",
    "EffectiveCoupling",
    "LadderSpec",
    "SiteIndex",
    "WeakCouplingError",
    "analytic_spectrum_l2",
    "apply_fluctuations",
    "build_hamiltonian",
    "build_sector",
    "compute_coupling",
    "cubic_roots",
    "effective_hamiltonian",
    "full_spectrum",
    "ground_and_gap",
    "node_to_site",
    "site_to_node",
]
