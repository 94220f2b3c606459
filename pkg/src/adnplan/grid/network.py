"""Network model: buses, branches, virtual resource branches, admittance matrix.

All internal electrical quantities are in per-unit on a single-phase
equivalent base (S_base, V_base).  Index 0 is always the slack bus (the
grid connection point).  File formats carry SI units; conversion happens
at load time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class NetworkError(ValueError):
    """Invalid network description (disconnected graph, bad impedance, ...)."""


@dataclass(frozen=True)
class Branch:
    """Series branch between two buses.

    r, x: series impedance [pu]; b_shunt: total shunt susceptance [pu]
    (split half/half between terminals); ampacity: current limit [pu].
    Virtual branches model converter losses and carry no ampacity limit.
    """

    from_bus: int
    to_bus: int
    r: float
    x: float
    b_shunt: float = 0.0
    ampacity: float = np.inf
    virtual: bool = False

    @property
    def z(self) -> complex:
        return complex(self.r, self.x)


@dataclass(frozen=True)
class VirtualResource:
    """A resource relocated behind a virtual loss branch."""

    resource_id: str
    host_bus: int
    leaf_bus: int
    r_virt: float


@dataclass(frozen=True)
class NetworkModel:
    """Static grid data. Bus 0 is the slack bus / grid connection point."""

    n_bus: int
    branches: tuple[Branch, ...]
    s_max: float  # transformer (GCP) apparent power rating [pu]
    s_base_kva: float
    v_base_kv: float
    bus_names: tuple[str, ...] = ()
    virtual_resources: tuple[VirtualResource, ...] = ()

    def __post_init__(self):
        if self.n_bus < 2:
            raise NetworkError("network needs at least two buses")
        for br in self.branches:
            if abs(br.z) == 0.0:
                raise NetworkError(
                    f"branch {br.from_bus}-{br.to_bus} has zero series impedance"
                )
            if not (br.ampacity > 0):
                raise NetworkError(
                    f"branch {br.from_bus}-{br.to_bus} has non-positive ampacity"
                )
            for b in (br.from_bus, br.to_bus):
                if not (0 <= b < self.n_bus):
                    raise NetworkError(f"branch endpoint {b} is not a bus")
        if not self._connected():
            raise NetworkError("network graph is not connected")

    def _connected(self) -> bool:
        adj: list[list[int]] = [[] for _ in range(self.n_bus)]
        for br in self.branches:
            adj[br.from_bus].append(br.to_bus)
            adj[br.to_bus].append(br.from_bus)
        seen = {0}
        stack = [0]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.n_bus

    @property
    def n_branch(self) -> int:
        return len(self.branches)

    @property
    def z_base_ohm(self) -> float:
        return (self.v_base_kv * 1e3) ** 2 / (self.s_base_kva * 1e3)

    @property
    def i_base_a(self) -> float:
        return (self.s_base_kva * 1e3) / (self.v_base_kv * 1e3)

    def leaf_bus_of(self, resource_id: str) -> int:
        for vr in self.virtual_resources:
            if vr.resource_id == resource_id:
                return vr.leaf_bus
        raise KeyError(f"no virtual branch for resource {resource_id!r}")

    @property
    def virtual_buses(self) -> frozenset[int]:
        return frozenset(vr.leaf_bus for vr in self.virtual_resources)

    def real_bus_mask(self) -> np.ndarray:
        """Boolean mask over non-slack buses: True for physical buses."""
        mask = np.ones(self.n_bus - 1, dtype=bool)
        for vb in self.virtual_buses:
            mask[vb - 1] = False
        return mask

    def real_branch_mask(self) -> np.ndarray:
        return np.array([not br.virtual for br in self.branches], dtype=bool)


def build_admittance(network: NetworkModel) -> np.ndarray:
    """Bus admittance matrix of the network [pu].

    Off-diagonal (i, j) entries are -1/z_ij summed over parallel branches;
    diagonals collect series admittances plus shunt halves.  Symmetric for
    networks without phase shifters.
    """
    n = network.n_bus
    ybus = np.zeros((n, n), dtype=complex)
    for br in network.branches:
        y = 1.0 / br.z
        f, t = br.from_bus, br.to_bus
        ybus[f, t] -= y
        ybus[t, f] -= y
        ybus[f, f] += y + 1j * br.b_shunt / 2.0
        ybus[t, t] += y + 1j * br.b_shunt / 2.0
    return ybus


def virtual_resistance_for_efficiency(
    efficiency: float, rated_power_pu: float, v_nominal: float = 1.0
) -> float:
    """Series resistance [pu] dissipating (1 - efficiency) of rated throughput.

    Calibrated exactly for the consumption direction (resource drawing its
    rated power through the branch):  with loss fraction f = 1 - eta the
    branch current at rated draw is i = (1 + f) p / v, so
    r = f v^2 / ((1 + f)^2 p) yields an i^2 r loss of exactly f * p.
    """
    if not (0.0 < efficiency < 1.0):
        raise ValueError("efficiency must be in (0, 1)")
    if rated_power_pu <= 0:
        raise ValueError("rated power must be positive")
    f = 1.0 - efficiency
    return f * v_nominal**2 / ((1.0 + f) ** 2 * rated_power_pu)


def add_virtual_resource_branch(
    network: NetworkModel, bus: int, r_virt: float, resource_id: str
) -> NetworkModel:
    """Attach a resource behind a new leaf bus via a pure-resistance branch.

    The resource's injection is then placed at the leaf bus, so its
    converter losses show up as ordinary line losses in the power flow.
    The virtual branch has no ampacity limit and the leaf bus is excluded
    from operational voltage bounds.
    """
    if not (0 <= bus < network.n_bus):
        raise NetworkError(f"host bus {bus} does not exist")
    if r_virt <= 0:
        raise NetworkError("virtual resistance must be positive")
    if any(vr.resource_id == resource_id for vr in network.virtual_resources):
        raise NetworkError(f"duplicate resource id {resource_id!r}")
    leaf = network.n_bus
    branch = Branch(from_bus=bus, to_bus=leaf, r=r_virt, x=0.0, virtual=True)
    names = network.bus_names + (f"virtual:{resource_id}",) if network.bus_names else ()
    return replace(
        network,
        n_bus=network.n_bus + 1,
        branches=network.branches + (branch,),
        bus_names=names,
        virtual_resources=network.virtual_resources
        + (VirtualResource(resource_id, bus, leaf, r_virt),),
    )


# --- resource descriptions carried alongside the grid file ---------------


@dataclass(frozen=True)
class BessSpec:
    name: str
    bus: int
    e_max_kwh: float
    s_max_kva: float
    soc_min: float = 0.1
    soc_max: float = 0.9
    soc_init: float = 0.5
    efficiency: float = 0.96


@dataclass(frozen=True)
class EvcsSpec:
    name: str
    bus: int
    n_plugs: int
    max_active_plugs: int = 2
    plug_p_max_kw: float = 22.0
    efficiency: float = 0.96


@dataclass(frozen=True)
class PvSpec:
    name: str
    bus: int
    capacity_kw: float


@dataclass(frozen=True)
class LoadSpec:
    name: str
    bus: int


@dataclass(frozen=True)
class GridCase:
    """A network plus the resources attached to it (SI-unit ratings)."""

    network: NetworkModel
    bess: tuple[BessSpec, ...] = ()
    evcs: tuple[EvcsSpec, ...] = ()
    pv: tuple[PvSpec, ...] = ()
    loads: tuple[LoadSpec, ...] = ()

    def with_virtual_branches(self) -> GridCase:
        """Append one virtual loss branch per BESS and EVCS."""
        net = self.network
        for b in self.bess:
            r = virtual_resistance_for_efficiency(
                b.efficiency, b.s_max_kva / net.s_base_kva
            )
            net = add_virtual_resource_branch(net, b.bus, r, b.name)
        for e in self.evcs:
            rated = e.max_active_plugs * e.plug_p_max_kw / net.s_base_kva
            r = virtual_resistance_for_efficiency(e.efficiency, rated)
            net = add_virtual_resource_branch(net, e.bus, r, e.name)
        return replace(self, network=net)


def grid_case_from_dict(data: dict) -> GridCase:
    """Parse the network description format (SI units) into per-unit."""
    bases = data["bases"]
    s_base = float(bases["s_base_kva"])
    v_base = float(bases["v_base_kv"])
    z_base = (v_base * 1e3) ** 2 / (s_base * 1e3)
    i_base = (s_base * 1e3) / (v_base * 1e3)

    buses = data["buses"]
    ids = [b["id"] for b in buses]
    if len(set(ids)) != len(ids):
        raise NetworkError("duplicate bus ids")
    slack = [b["id"] for b in buses if b.get("type", "pq") == "slack"]
    if len(slack) != 1:
        raise NetworkError("exactly one slack bus required")
    # slack first, then file order
    order = slack + [i for i in ids if i not in slack]
    index = {bus_id: k for k, bus_id in enumerate(order)}

    branches = tuple(
        Branch(
            from_bus=index[br["from"]],
            to_bus=index[br["to"]],
            r=float(br["r_ohm"]) / z_base,
            x=float(br["x_ohm"]) / z_base,
            b_shunt=float(br.get("b_s", 0.0)) * z_base,
            ampacity=float(br.get("ampacity_a", np.inf)) / i_base,
        )
        for br in data["branches"]
    )
    network = NetworkModel(
        n_bus=len(buses),
        branches=branches,
        s_max=float(data["transformer"]["s_max_kva"]) / s_base,
        s_base_kva=s_base,
        v_base_kv=v_base,
        bus_names=tuple(order),
    )

    bess, evcs, pv, loads = [], [], [], []
    for res in data.get("resources", []):
        kind = res["type"]
        bus = index[res["bus"]]
        if kind == "bess":
            bess.append(
                BessSpec(
                    name=res["name"],
                    bus=bus,
                    e_max_kwh=float(res["e_max_kwh"]),
                    s_max_kva=float(res["s_max_kva"]),
                    soc_min=float(res.get("soc_min", 0.1)),
                    soc_max=float(res.get("soc_max", 0.9)),
                    soc_init=float(res.get("soc_init", 0.5)),
                    efficiency=float(res.get("efficiency", 0.96)),
                )
            )
        elif kind == "evcs":
            evcs.append(
                EvcsSpec(
                    name=res["name"],
                    bus=bus,
                    n_plugs=int(res["n_plugs"]),
                    max_active_plugs=int(res.get("max_active_plugs", 2)),
                    plug_p_max_kw=float(res.get("plug_p_max_kw", 22.0)),
                    efficiency=float(res.get("efficiency", 0.96)),
                )
            )
        elif kind == "pv":
            pv.append(PvSpec(res["name"], bus, float(res["capacity_kw"])))
        elif kind == "load":
            loads.append(LoadSpec(res["name"], bus))
        else:
            raise NetworkError(f"unknown resource type {kind!r}")
    return GridCase(network, tuple(bess), tuple(evcs), tuple(pv), tuple(loads))


def load_grid_case(path: str | Path) -> GridCase:
    with open(path) as fh:
        return grid_case_from_dict(json.load(fh))
