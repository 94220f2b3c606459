"""Grid modeling: network data, AC power flow, sensitivities, linearization."""

from .network import (
    Branch,
    BessSpec,
    EvcsSpec,
    GridCase,
    LoadSpec,
    NetworkError,
    NetworkModel,
    PvSpec,
    VirtualResource,
    add_virtual_resource_branch,
    build_admittance,
    grid_case_from_dict,
    load_grid_case,
    virtual_resistance_for_efficiency,
)
from .powerflow import (
    OperatingPoint,
    PowerFlowError,
    branch_currents,
    bus_injections,
    solve_power_flow,
)
from .sensitivity import (
    SensitivityCoefficients,
    SensitivityError,
    compute_pfsc,
    finite_difference_pfsc,
    max_relative_error,
)
from .linear_model import (
    GridBounds,
    LinearGridModel,
    assemble_linear_model,
    linearize_at,
)

__all__ = [
    "Branch",
    "BessSpec",
    "EvcsSpec",
    "GridBounds",
    "GridCase",
    "LinearGridModel",
    "LoadSpec",
    "NetworkError",
    "NetworkModel",
    "OperatingPoint",
    "PowerFlowError",
    "PvSpec",
    "SensitivityCoefficients",
    "SensitivityError",
    "VirtualResource",
    "add_virtual_resource_branch",
    "assemble_linear_model",
    "branch_currents",
    "build_admittance",
    "bus_injections",
    "compute_pfsc",
    "finite_difference_pfsc",
    "grid_case_from_dict",
    "linearize_at",
    "load_grid_case",
    "max_relative_error",
    "solve_power_flow",
    "virtual_resistance_for_efficiency",
]
