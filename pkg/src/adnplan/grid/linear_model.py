"""Affine grid model built from sensitivity coefficients at an operating point.

Voltage magnitudes, branch current magnitudes and GCP power are expressed
as A [p; q] + b in the stacked non-slack injection vector [pu].  The model
is exact at its expansion point and first-order accurate around it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkModel, build_admittance
from .powerflow import OperatingPoint, solve_power_flow
from .sensitivity import SensitivityCoefficients, compute_pfsc


@dataclass(frozen=True)
class GridBounds:
    v_min: float = 0.95
    v_max: float = 1.05
    pf_min: float = 0.0  # 0 disables the power-factor constraint


@dataclass(frozen=True)
class LinearGridModel:
    """Affine map from nodal injections to grid quantities at one (t, scenario).

    a_v: (n_bus-1, 2(n_bus-1)); a_i: (n_branch, 2(n_bus-1));
    a_0: (2, 2(n_bus-1)) for (p_0, q_0).  Masks mark which voltage rows /
    current rows carry operational limits (virtual buses and branches are
    exempt).
    """

    a_v: np.ndarray
    b_v: np.ndarray
    a_i: np.ndarray
    b_i: np.ndarray
    a_0: np.ndarray
    b_0: np.ndarray
    v_min: float
    v_max: float
    ampacity: np.ndarray
    s_max: float
    pf_min: float
    voltage_row_mask: np.ndarray
    current_row_mask: np.ndarray

    def voltages(self, x: np.ndarray) -> np.ndarray:
        return self.a_v @ x + self.b_v

    def currents(self, x: np.ndarray) -> np.ndarray:
        return self.a_i @ x + self.b_i

    def gcp_power(self, x: np.ndarray) -> np.ndarray:
        return self.a_0 @ x + self.b_0


def assemble_linear_model(
    network: NetworkModel,
    pfsc: SensitivityCoefficients,
    op: OperatingPoint,
    bounds: GridBounds,
) -> LinearGridModel:
    """Build the affine model at `op`; constants absorb the expansion point."""
    nn = network.n_bus - 1
    if pfsc.dv_dp.shape != (nn, nn) or pfsc.di_dp.shape != (network.n_branch, nn):
        raise ValueError("sensitivity blocks do not match the network dimensions")

    a_v = np.hstack([pfsc.dv_dp, pfsc.dv_dq])
    a_i = np.hstack([pfsc.di_dp, pfsc.di_dq])
    a_0 = np.vstack(
        [
            np.concatenate([pfsc.dp0_dp, pfsc.dp0_dq]),
            np.concatenate([pfsc.dq0_dp, pfsc.dq0_dq]),
        ]
    )
    x_op = np.concatenate([op.p_inj[1:], op.q_inj[1:]])
    b_v = op.v_mag[1:] - a_v @ x_op
    b_i = op.i_branch - a_i @ x_op
    b_0 = np.array([op.p_slack, op.q_slack]) - a_0 @ x_op

    return LinearGridModel(
        a_v=a_v,
        b_v=b_v,
        a_i=a_i,
        b_i=b_i,
        a_0=a_0,
        b_0=b_0,
        v_min=bounds.v_min,
        v_max=bounds.v_max,
        ampacity=np.array([br.ampacity for br in network.branches]),
        s_max=network.s_max,
        pf_min=bounds.pf_min,
        voltage_row_mask=network.real_bus_mask(),
        current_row_mask=network.real_branch_mask(),
    )


def linearize_at(
    network: NetworkModel,
    p: np.ndarray,
    q: np.ndarray,
    bounds: GridBounds,
    slack_v: float = 1.0,
    ybus: np.ndarray | None = None,
) -> tuple[LinearGridModel, OperatingPoint]:
    """Solve the power flow at (p, q) and linearize there."""
    if ybus is None:
        ybus = build_admittance(network)
    op = solve_power_flow(network, p, q, slack_v, ybus=ybus)
    pfsc = compute_pfsc(network, op, ybus=ybus)
    return assemble_linear_model(network, pfsc, op, bounds), op
