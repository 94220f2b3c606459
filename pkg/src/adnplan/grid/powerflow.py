"""Exact AC power flow via Newton-Raphson in polar coordinates.

Injection convention: p, q > 0 means power delivered *into* the network at
that bus (generation positive).  All non-slack buses are PQ.  The slack
bus (index 0) holds its voltage magnitude at the configured value and
zero angle; its injection balances the system, so p_slack > 0 means the
network imports power through the grid connection point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import NetworkModel, build_admittance


class PowerFlowError(RuntimeError):
    """Newton iteration failed to converge."""

    def __init__(self, message: str, trace: list[float] | None = None):
        super().__init__(message)
        self.trace = trace or []


@dataclass(frozen=True)
class OperatingPoint:
    """A converged power-flow solution."""

    v_mag: np.ndarray  # (n_bus,) voltage magnitudes [pu]
    v_ang: np.ndarray  # (n_bus,) voltage angles [rad]
    p_inj: np.ndarray  # (n_bus,) active injections incl. slack [pu]
    q_inj: np.ndarray  # (n_bus,) reactive injections incl. slack [pu]
    i_branch: np.ndarray  # (n_branch,) from-side current magnitudes [pu]
    slack_v: float
    residual: float
    iterations: int

    @property
    def voltage(self) -> np.ndarray:
        """Complex bus voltages."""
        return self.v_mag * np.exp(1j * self.v_ang)

    @property
    def p_slack(self) -> float:
        return float(self.p_inj[0])

    @property
    def q_slack(self) -> float:
        return float(self.q_inj[0])


def bus_injections(ybus: np.ndarray, voltage: np.ndarray) -> np.ndarray:
    """Complex nodal injections S = diag(V) conj(Y V)."""
    return voltage * np.conj(ybus @ voltage)


def branch_currents(network: NetworkModel, voltage: np.ndarray) -> np.ndarray:
    """Complex from-side branch currents."""
    out = np.empty(network.n_branch, dtype=complex)
    for k, br in enumerate(network.branches):
        vf, vt = voltage[br.from_bus], voltage[br.to_bus]
        out[k] = (vf - vt) / br.z + 1j * br.b_shunt / 2.0 * vf
    return out


def solve_power_flow(
    network: NetworkModel,
    p: np.ndarray,
    q: np.ndarray,
    slack_v: float = 1.0,
    ybus: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 40,
) -> OperatingPoint:
    """Solve the AC power flow for given non-slack injections [pu].

    p, q have length n_bus - 1 (buses 1..n-1).  Raises PowerFlowError with
    the mismatch trace when the Newton iteration does not reach `tol`
    (typically an infeasible loading beyond the network's transfer limit).
    """
    n = network.n_bus
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != (n - 1,) or q.shape != (n - 1,):
        raise ValueError(f"injections must have shape ({n - 1},)")
    if ybus is None:
        ybus = build_admittance(network)

    pq = np.arange(1, n)
    s_spec = p + 1j * q
    vm = np.full(n, slack_v, dtype=float)
    va = np.zeros(n)

    trace: list[float] = []
    for it in range(max_iter):
        v = vm * np.exp(1j * va)
        mis = bus_injections(ybus, v)[pq] - s_spec
        f = np.concatenate([mis.real, mis.imag])
        err = float(np.max(np.abs(f))) if f.size else 0.0
        trace.append(err)
        if err <= tol:
            s_all = bus_injections(ybus, v)
            return OperatingPoint(
                v_mag=vm.copy(),
                v_ang=va.copy(),
                p_inj=s_all.real,
                q_inj=s_all.imag,
                i_branch=np.abs(branch_currents(network, v)),
                slack_v=slack_v,
                residual=err,
                iterations=it,
            )
        j11, j12, j21, j22 = _jacobian_blocks(ybus, v, pq)
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError as exc:
            raise PowerFlowError(f"singular Jacobian at iteration {it}", trace) from exc
        va[pq] += dx[: n - 1]
        vm[pq] += dx[n - 1 :]
        if np.any(vm[pq] <= 0) or not np.all(np.isfinite(vm[pq])):
            raise PowerFlowError("voltage collapse during iteration", trace)

    raise PowerFlowError(
        f"no convergence after {max_iter} iterations (residual {trace[-1]:.3e})",
        trace,
    )


def _jacobian_blocks(ybus, v, pq):
    """dP/dtheta, dP/dVm, dQ/dtheta, dQ/dVm restricted to PQ buses."""
    ibus = ybus @ v
    diag_v = np.diag(v)
    diag_i = np.diag(ibus)
    diag_vnorm = np.diag(v / np.abs(v))
    ds_dva = 1j * diag_v @ np.conj(diag_i - ybus @ diag_v)
    ds_dvm = diag_v @ np.conj(ybus @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm
    ix = np.ix_(pq, pq)
    return ds_dva[ix].real, ds_dvm[ix].real, ds_dva[ix].imag, ds_dvm[ix].imag


def verify_operating_point(
    network: NetworkModel,
    op: OperatingPoint,
    p: np.ndarray,
    q: np.ndarray,
    ybus: np.ndarray | None = None,
) -> float:
    """Max power mismatch of `op` against specified non-slack injections."""
    if ybus is None:
        ybus = build_admittance(network)
    s = bus_injections(ybus, op.voltage)[1:]
    return float(np.max(np.abs(s - (np.asarray(p) + 1j * np.asarray(q)))))
