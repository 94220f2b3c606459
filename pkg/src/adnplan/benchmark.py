"""Synthetic benchmark: desk-scale feeders and input data generators.

Provides the networks used by the validation suite (a 10-bus radial
feeder and a 6-bus meshed variant) and writers that synthesize a full set
of pipeline inputs (session history, load history, PV forecast, plant and
pipeline configs) into a directory, so the CLI can run end to end without
proprietary data.
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from .grid.network import (
    BessSpec,
    Branch,
    EvcsSpec,
    GridCase,
    LoadSpec,
    NetworkModel,
    PvSpec,
)

T_STEPS = 288
DT_S = 300.0


def ten_bus_feeder() -> GridCase:
    """Radial 10-bus low-voltage feeder with 2 BESS, 2 EVCS, 3 PV, 2 loads.

    Bases 500 kVA / 0.4 kV; line impedances a few percent, ampacities
    generous but finite.
    """
    z = 0.32  # ohm per pu at these bases
    line = dict(r_pu=0.02, x_pu=0.015)
    chain = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9)]
    branches = tuple(
        Branch(f, t, line["r_pu"], line["x_pu"], b_shunt=0.0, ampacity=1.5)
        for f, t in chain
    )
    net = NetworkModel(
        n_bus=10,
        branches=branches,
        s_max=1.2,  # 600 kVA transformer
        s_base_kva=500.0,
        v_base_kv=0.4,
        bus_names=tuple(f"B{i:02d}" for i in range(10)),
    )
    return GridCase(
        network=net,
        bess=(
            BessSpec("BESS1", bus=3, e_max_kwh=300.0, s_max_kva=150.0),
            BessSpec("BESS2", bus=8, e_max_kwh=100.0, s_max_kva=50.0),
        ),
        evcs=(
            EvcsSpec("EVCS1", bus=2, n_plugs=5, max_active_plugs=2, plug_p_max_kw=43.0),
            EvcsSpec("EVCS2", bus=6, n_plugs=3, max_active_plugs=2, plug_p_max_kw=22.0),
        ),
        pv=(
            PvSpec("PV1", bus=4, capacity_kw=13.0),
            PvSpec("PV2", bus=5, capacity_kw=16.0),
            PvSpec("PV3", bus=7, capacity_kw=13.2),
        ),
        loads=(LoadSpec("L1", bus=3), LoadSpec("L2", bus=9)),
    )


def six_bus_meshed() -> GridCase:
    """Small meshed network (a ring with a chord) for PFSC validation."""
    branches = (
        Branch(0, 1, 0.02, 0.02, ampacity=1.5),
        Branch(1, 2, 0.025, 0.02, ampacity=1.2),
        Branch(2, 3, 0.03, 0.02, ampacity=1.2),
        Branch(3, 4, 0.025, 0.015, ampacity=1.2),
        Branch(4, 5, 0.02, 0.02, ampacity=1.2),
        Branch(5, 0, 0.03, 0.025, ampacity=1.5),
        Branch(1, 4, 0.04, 0.03, ampacity=1.0),  # chord
    )
    net = NetworkModel(
        n_bus=6,
        branches=branches,
        s_max=1.2,
        s_base_kva=500.0,
        v_base_kv=0.4,
        bus_names=tuple(f"B{i:02d}" for i in range(6)),
    )
    return GridCase(network=net, loads=(LoadSpec("L1", bus=2), LoadSpec("L2", bus=4)))


def grid_case_to_dict(case: GridCase) -> dict:
    """Serialize a GridCase back to the SI-unit network file format."""
    net = case.network
    z_base = net.z_base_ohm
    i_base = net.i_base_a
    names = net.bus_names or tuple(f"B{i:02d}" for i in range(net.n_bus))
    buses = [{"id": names[0], "type": "slack"}] + [
        {"id": names[i], "type": "pq"} for i in range(1, net.n_bus)
    ]
    branches = [
        {
            "from": names[br.from_bus],
            "to": names[br.to_bus],
            "r_ohm": br.r * z_base,
            "x_ohm": br.x * z_base,
            "b_s": br.b_shunt / z_base,
            "ampacity_a": br.ampacity * i_base,
        }
        for br in net.branches
        if not br.virtual
    ]
    resources: list[dict] = []
    for b in case.bess:
        resources.append(
            {
                "type": "bess",
                "name": b.name,
                "bus": names[b.bus],
                "e_max_kwh": b.e_max_kwh,
                "s_max_kva": b.s_max_kva,
                "soc_min": b.soc_min,
                "soc_max": b.soc_max,
                "soc_init": b.soc_init,
                "efficiency": b.efficiency,
            }
        )
    for e in case.evcs:
        resources.append(
            {
                "type": "evcs",
                "name": e.name,
                "bus": names[e.bus],
                "n_plugs": e.n_plugs,
                "max_active_plugs": e.max_active_plugs,
                "plug_p_max_kw": e.plug_p_max_kw,
                "efficiency": e.efficiency,
            }
        )
    for p in case.pv:
        resources.append(
            {"type": "pv", "name": p.name, "bus": names[p.bus], "capacity_kw": p.capacity_kw}
        )
    for ld in case.loads:
        resources.append({"type": "load", "name": ld.name, "bus": names[ld.bus]})
    return {
        "bases": {"s_base_kva": net.s_base_kva, "v_base_kv": net.v_base_kv},
        "buses": buses,
        "branches": branches,
        "transformer": {"s_max_kva": net.s_max * net.s_base_kva},
        "resources": resources,
    }


# --- synthetic input data -------------------------------------------------


def synth_session_history(
    rng: np.random.Generator,
    n_days: int = 160,
    start: str = "2024-01-01",
) -> pd.DataFrame:
    """EV session history with a two-mode (morning / evening) behavior mix."""
    dates = pd.date_range(start, periods=n_days, freq="D")
    rows = []
    for date in dates:
        day_type = ["weekday"] * 5 + ["weekend"] * 2
        label = day_type[date.weekday()]
        lam = 3.0 if label == "weekday" else 2.0
        n_sessions = max(1, int(rng.poisson(lam)))
        for _ in range(n_sessions):
            if rng.random() < 0.6:  # morning commuter, long dwell
                t0 = rng.normal(8.5 * 3600, 40 * 60)
                dwell = rng.normal(8.0 * 3600, 60 * 60)
            else:  # evening top-up, shorter dwell
                t0 = rng.normal(17.5 * 3600, 50 * 60)
                dwell = rng.normal(4.0 * 3600, 45 * 60)
            t0 = float(np.clip(t0, 0, 82800.0))
            tf = float(np.clip(t0 + max(dwell, 1800.0), t0 + 900.0, 86400.0))
            e_max = float(rng.choice([30.0, 44.0, 60.0, 77.0]))
            soc_init = float(np.clip(rng.normal(0.35, 0.12), 0.05, 0.8))
            soc_target = float(np.clip(soc_init + rng.normal(0.45, 0.1), soc_init, 1.0))
            p_max = float(rng.choice([11.0, 22.0]))
            rows.append(
                {
                    "date": date.date().isoformat(),
                    "plug_id": int(rng.integers(0, 3)),
                    "t_arrival": round(t0, 1),
                    "t_departure": round(tf, 1),
                    "soc_init": round(soc_init, 4),
                    "soc_target": round(soc_target, 4),
                    "e_max_kwh": e_max,
                    "p_min_kw": 0.0,
                    "p_max_kw": p_max,
                    "day_type": label,
                }
            )
    return pd.DataFrame(rows)


def synth_load_history(
    rng: np.random.Generator,
    n_days: int = 120,
    peak_kw: float = 20.0,
    start: str = "2024-01-01",
) -> pd.DataFrame:
    """Daily load shape plus AR(1) noise, weekday/weekend amplitude split."""
    t = np.arange(T_STEPS) / T_STEPS
    shape = 0.45 + 0.35 * np.exp(-0.5 * ((t - 0.45) / 0.13) ** 2)
    shape += 0.30 * np.exp(-0.5 * ((t - 0.80) / 0.07) ** 2)
    dates = pd.date_range(start, periods=n_days, freq="D")
    rows = []
    for date in dates:
        scale = 1.0 if date.weekday() < 5 else 0.7
        noise = np.empty(T_STEPS)
        noise[0] = rng.normal(0, 1)
        for k in range(1, T_STEPS):
            noise[k] = 0.97 * noise[k - 1] + math.sqrt(1 - 0.97**2) * rng.normal(0, 1)
        p = np.clip(peak_kw * scale * shape + 0.06 * peak_kw * noise, 0.0, None)
        q = 0.33 * p  # near-constant power factor demand
        row: dict = {"date": date.date().isoformat()}
        row.update({f"p{k:03d}": round(float(p[k]), 3) for k in range(T_STEPS)})
        row.update({f"q{k:03d}": round(float(q[k]), 3) for k in range(T_STEPS)})
        rows.append(row)
    return pd.DataFrame(rows)


def synth_pv_forecast(rng: np.random.Generator, date: str = "2024-06-12") -> pd.DataFrame:
    """Day-ahead GHI point/quantile forecast at 15-minute resolution."""
    times = pd.date_range(f"{date} 00:00", periods=96, freq="15min", tz="UTC")
    hours = times.hour + times.minute / 60.0
    elev = np.sin(np.pi * np.clip((hours - 5.0) / 14.0, 0.0, 1.0))
    point = 820.0 * np.maximum(elev, 0.0) ** 1.3
    width = 0.35 * point
    q05 = np.maximum(point - width, 0.0)
    q95 = point + 0.55 * width * (1 + 0.2 * rng.standard_normal(len(times)))
    q95 = np.maximum(q95, point)
    temp = 14.0 + 9.0 * np.maximum(elev, 0.0) + 0.4 * rng.standard_normal(len(times))
    return pd.DataFrame(
        {
            "timestamp": times.strftime("%Y-%m-%dT%H:%M:%SZ"),
            "ghi_point": np.round(point, 2),
            "ghi_q05": np.round(q05, 2),
            "ghi_q95": np.round(q95, 2),
            "temp_c": np.round(temp, 2),
        }
    )


def write_benchmark(out_dir: str | Path, seed: int = 2024) -> Path:
    """Write the full benchmark input set; returns the pipeline config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    case = ten_bus_feeder()
    (out / "network.json").write_text(json.dumps(grid_case_to_dict(case), indent=2))

    seq = np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(s) for s in seq.spawn(5)]
    synth_session_history(rngs[0]).to_csv(out / "sessions_EVCS1.csv", index=False)
    synth_session_history(rngs[1]).to_csv(out / "sessions_EVCS2.csv", index=False)
    synth_load_history(rngs[2], peak_kw=22.0).to_csv(out / "load_L1.csv", index=False)
    synth_load_history(rngs[3], peak_kw=9.0).to_csv(out / "load_L2.csv", index=False)
    synth_pv_forecast(rngs[4]).to_csv(out / "pv_forecast.csv", index=False)

    plants = {
        "PV1": {"tilt_deg": 10.0, "azimuth_deg": 180.0, "capacity_kw": 13.0,
                "latitude": 46.52, "longitude": 6.57},
        "PV2": {"tilt_deg": 15.0, "azimuth_deg": 170.0, "capacity_kw": 16.0,
                "latitude": 46.52, "longitude": 6.57},
        "PV3": {"tilt_deg": 10.0, "azimuth_deg": 190.0, "capacity_kw": 13.2,
                "latitude": 46.52, "longitude": 6.57},
    }
    (out / "plants.json").write_text(json.dumps(plants, indent=2))

    config = {
        "network": "network.json",
        "sessions": {"EVCS1": "sessions_EVCS1.csv", "EVCS2": "sessions_EVCS2.csv"},
        "load_history": {"L1": "load_L1.csv", "L2": "load_L2.csv"},
        "pv_forecast": "pv_forecast.csv",
        "pv_plants": "plants.json",
        "target_date": "2024-06-12",
        "day_type": "weekday",
        "n_ev": 2,
        "n_load": 2,
        "n_pv": 2,
        "seed": seed,
        "scenario_cap": 1000,
        "weights": {
            "alpha_p": 1.0,
            "alpha_q": 0.1,
            "alpha_disp": 1.0,
            "alpha_evcs": 1.0,
            "alpha_bess": 0.001,
        },
        "bounds": {"v_min": 0.95, "v_max": 1.05, "pf_min": 0.0},
        "slack_v": 1.0,
        "correction_tolerance": 1e-3,
        "max_correction_iters": 10,
        "out_dir": "out",
    }
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config, indent=2))
    return cfg_path


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="Write the synthetic benchmark inputs")
    parser.add_argument("--out", default="bench", help="output directory")
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args(argv)
    cfg = write_benchmark(args.out, args.seed)
    print(f"benchmark inputs written, config at {cfg}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
