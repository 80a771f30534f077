"""Work cost and work fluctuations of correlation-creating unitaries.

Tools for the cheapest way to correlate two initially independent thermal
systems with equally spaced levels: the unitary family that does it, the
work/mutual-information tradeoff, two-point-measurement work statistics, and
the phase-programmed generalization to pairs of d-level systems.
"""

__version__ = "0.1.0"

from .qubit import (
    UnitaryParams,
    correlating_unitary,
    final_inverse_temperature,
    final_state_closed_form,
    iso_work_theta,
    max_correlations,
    mutual_information_from_temperatures,
    work_cost,
    work_cost_from_temperatures,
)
from .qudit import (
    bell_basis,
    circulant_unitary,
    find_phases_for_target,
    solve_mixing_weights,
    validate_local_gibbs,
)
from .thermal import (
    build_hamiltonian,
    local_inverse_temperature,
    mutual_information,
    thermal_state,
    von_neumann_entropy,
)
from .workstats import (
    WorkDistribution,
    distribution_moments,
    energy_covariance_decomposition,
    two_time_work_distribution,
    work_variance_from_angles,
    work_variance_from_temperatures,
)

__all__ = [
    "__version__",
    "UnitaryParams",
    "correlating_unitary",
    "final_inverse_temperature",
    "final_state_closed_form",
    "iso_work_theta",
    "max_correlations",
    "mutual_information_from_temperatures",
    "work_cost",
    "work_cost_from_temperatures",
    "bell_basis",
    "circulant_unitary",
    "find_phases_for_target",
    "solve_mixing_weights",
    "validate_local_gibbs",
    "build_hamiltonian",
    "local_inverse_temperature",
    "mutual_information",
    "thermal_state",
    "von_neumann_entropy",
    "WorkDistribution",
    "distribution_moments",
    "energy_covariance_decomposition",
    "two_time_work_distribution",
    "work_variance_from_angles",
    "work_variance_from_temperatures",
]
