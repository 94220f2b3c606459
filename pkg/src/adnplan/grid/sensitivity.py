"""Power-flow sensitivity coefficients (PFSC).

Partial derivatives of voltage magnitudes, branch current magnitudes and
slack (GCP) power with respect to every non-slack nodal injection,
obtained by differentiating the power-flow equations at an operating
point.  For injection x at bus l, the complex voltage sensitivities
u_j = dV_j/dx satisfy, at every non-slack bus i,

    dS_i/dx = u_i conj(I_i) + V_i conj(sum_j Y_ij u_j),

a real-linear system in (Re u, Im u) whose matrix depends only on the
operating point.  One LU factorization therefore serves all 2(n-1)
right-hand sides (unit active and reactive perturbations).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .network import NetworkModel, build_admittance
from .powerflow import OperatingPoint, branch_currents, solve_power_flow

# branch currents below this magnitude have no usable direction; their
# magnitude sensitivities are reported as zero
_CURRENT_EPS = 1e-9


class SensitivityError(RuntimeError):
    """Degenerate operating point: the sensitivity system is singular."""


@dataclass(frozen=True)
class SensitivityCoefficients:
    """Sensitivities at one operating point.

    Column j corresponds to the injection at bus j+1 (non-slack ordering);
    voltage rows likewise cover buses 1..n-1, current rows all branches.
    """

    dv_dp: np.ndarray  # (n_bus-1, n_bus-1)
    dv_dq: np.ndarray
    di_dp: np.ndarray  # (n_branch, n_bus-1)
    di_dq: np.ndarray
    dp0_dp: np.ndarray  # (n_bus-1,)
    dp0_dq: np.ndarray
    dq0_dp: np.ndarray
    dq0_dq: np.ndarray


def compute_pfsc(
    network: NetworkModel,
    op: OperatingPoint,
    ybus: np.ndarray | None = None,
) -> SensitivityCoefficients:
    """Sensitivity coefficients of |v|, |i| and GCP power at `op`."""
    if ybus is None:
        ybus = build_admittance(network)
    n = network.n_bus
    v = op.voltage
    i_bus = ybus @ v

    y_sub = ybus[1:, 1:]
    # coefficient on u_j: K; on conj(u_j): L
    k_mat = np.diag(np.conj(i_bus[1:]))
    l_mat = np.diag(v[1:]) @ np.conj(y_sub)
    m = np.block(
        [
            [(k_mat + l_mat).real, -(k_mat - l_mat).imag],
            [(k_mat + l_mat).imag, (k_mat - l_mat).real],
        ]
    )
    # unit active perturbations: rhs e_l; reactive: rhs j e_l
    nn = n - 1
    rhs = np.zeros((2 * nn, 2 * nn))
    rhs[:nn, :nn] = np.eye(nn)  # Re(dS) for p columns
    rhs[nn:, nn:] = np.eye(nn)  # Im(dS) for q columns
    try:
        lu = scipy.linalg.lu_factor(m)
        sol = scipy.linalg.lu_solve(lu, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SensitivityError("singular sensitivity system") from exc
    if not np.all(np.isfinite(sol)):
        raise SensitivityError("singular sensitivity system")

    # u[j, c]: complex dV_{j+1}/d(injection c); columns 0..nn-1 are p, nn.. are q
    u = sol[:nn, :] + 1j * sol[nn:, :]

    dvmag = (np.conj(v[1:])[:, None] * u).real / np.abs(v[1:])[:, None]

    i_br = branch_currents(network, v)
    di = np.zeros((network.n_branch, 2 * nn))
    for k, br in enumerate(network.branches):
        uf = u[br.from_bus - 1, :] if br.from_bus > 0 else 0.0
        ut = u[br.to_bus - 1, :] if br.to_bus > 0 else 0.0
        d_i = (uf - ut) / br.z + 1j * br.b_shunt / 2.0 * uf
        if abs(i_br[k]) > _CURRENT_EPS:
            di[k, :] = (np.conj(i_br[k]) * d_i).real / abs(i_br[k])

    # slack voltage is fixed, so dS_0/dx = V_0 conj(sum_j Y_0j u_j)
    ds0 = v[0] * np.conj(ybus[0, 1:] @ u)

    return SensitivityCoefficients(
        dv_dp=dvmag[:, :nn],
        dv_dq=dvmag[:, nn:],
        di_dp=di[:, :nn],
        di_dq=di[:, nn:],
        dp0_dp=ds0.real[:nn],
        dp0_dq=ds0.real[nn:],
        dq0_dp=ds0.imag[:nn],
        dq0_dq=ds0.imag[nn:],
    )


def finite_difference_pfsc(
    network: NetworkModel,
    p: np.ndarray,
    q: np.ndarray,
    slack_v: float = 1.0,
    step: float = 1e-6,
    ybus: np.ndarray | None = None,
) -> SensitivityCoefficients:
    """Central-difference estimate of the PFSC, for validation.

    Independent of compute_pfsc: it only re-solves the exact power flow at
    perturbed injections.
    """
    if ybus is None:
        ybus = build_admittance(network)
    nn = network.n_bus - 1
    nl = network.n_branch
    dv = np.zeros((nn, 2 * nn))
    di = np.zeros((nl, 2 * nn))
    d0 = np.zeros((2, 2 * nn))

    def solved(pp, qq):
        return solve_power_flow(network, pp, qq, slack_v, ybus=ybus, tol=1e-12)

    for c in range(2 * nn):
        bus = c % nn
        dp = np.zeros(nn)
        dq = np.zeros(nn)
        (dp if c < nn else dq)[bus] = step
        hi = solved(p + dp, q + dq)
        lo = solved(p - dp, q - dq)
        dv[:, c] = (hi.v_mag[1:] - lo.v_mag[1:]) / (2 * step)
        di[:, c] = (hi.i_branch - lo.i_branch) / (2 * step)
        d0[0, c] = (hi.p_slack - lo.p_slack) / (2 * step)
        d0[1, c] = (hi.q_slack - lo.q_slack) / (2 * step)

    return SensitivityCoefficients(
        dv_dp=dv[:, :nn],
        dv_dq=dv[:, nn:],
        di_dp=di[:, :nn],
        di_dq=di[:, nn:],
        dp0_dp=d0[0, :nn],
        dp0_dq=d0[0, nn:],
        dq0_dp=d0[1, :nn],
        dq0_dq=d0[1, nn:],
    )


def max_relative_error(
    a: SensitivityCoefficients,
    b: SensitivityCoefficients,
    floor: float = 1e-6,
) -> float:
    """Worst |a - b| / max(|b|, floor) over all coefficient blocks.

    The floor keeps near-zero coefficients from dominating the relative
    comparison with round-off noise.
    """
    worst = 0.0
    for name in ("dv_dp", "dv_dq", "di_dp", "di_dq", "dp0_dp", "dp0_dq", "dq0_dp", "dq0_dq"):
        x = np.asarray(getattr(a, name), dtype=float)
        y = np.asarray(getattr(b, name), dtype=float)
        denom = np.maximum(np.abs(y), floor)
        worst = max(worst, float(np.max(np.abs(x - y) / denom)))
    return worst
