"""Mollification, energy quadrature, convergence traces, and the
smooth-approximation (energy-gap) probe."""

from .mollifier import (
    MollifierSpec,
    discrete_kernel,
    gradient_bound_check,
    kernel_lp_norm,
    kernel_radius_cells,
    mollify,
    mollify_array,
)
from .energy import (
    ConvergenceTrace,
    energy,
    energy_convergence,
    scalar_truncation_energy_split,
    truncation_report,
)
from .lavrentiev import (
    DescentResult,
    LavrentievProbeResult,
    ProbeLevel,
    lavrentiev_probe,
)

__all__ = [
    "MollifierSpec",
    "discrete_kernel",
    "gradient_bound_check",
    "kernel_lp_norm",
    "kernel_radius_cells",
    "mollify",
    "mollify_array",
    "ConvergenceTrace",
    "energy",
    "energy_convergence",
    "scalar_truncation_energy_split",
    "truncation_report",
    "DescentResult",
    "LavrentievProbeResult",
    "ProbeLevel",
    "lavrentiev_probe",
]
