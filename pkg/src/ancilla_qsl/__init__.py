"""Quantum speed limit of a qubit assisted by a hopping-coupled ancilla in Lorentzian baths."""

__version__ = "0.1.0"

from .dynamics import (
    CubicRoots,
    amplitude,
    amplitude_common,
    amplitude_derivative,
    amplitude_independent,
    amplitude_system_only,
    analytic_trajectory,
    damped_jc_amplitude,
    solve_cubic,
)
from .engine import QsltResult, bures_angle_pure, evolution_rates, qslt, qslt_for
from .errors import (
    DomainError,
    Infeasible,
    NearDegenerateRoots,
    NormDrift,
    QslError,
    QuadratureFailure,
    StepSizeUnderflow,
    ToleranceExceeded,
)
from .model import (
    AmplitudeTrajectory,
    Frame,
    ModelConfig,
    SpectralParams,
    Topology,
    lorentzian_density,
    memory_kernel,
    time_grid,
)
from .oracle import DiscreteBath, excitation_balance, integrate_discrete_bath, integrate_kernel

__all__ = [
    "AmplitudeTrajectory", "CubicRoots", "DiscreteBath", "DomainError", "Frame", "Infeasible",
    "ModelConfig", "NearDegenerateRoots", "NormDrift", "QslError", "QsltResult", "QuadratureFailure",
    "SpectralParams", "StepSizeUnderflow", "ToleranceExceeded", "Topology", "amplitude",
    "amplitude_common", "amplitude_derivative", "amplitude_independent", "amplitude_system_only",
    "analytic_trajectory", "bures_angle_pure", "damped_jc_amplitude", "evolution_rates",
    "excitation_balance", "integrate_discrete_bath", "integrate_kernel", "lorentzian_density",
    "memory_kernel", "qslt", "qslt_for", "solve_cubic", "time_grid",
]
