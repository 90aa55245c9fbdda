"""Regenerate the bundled fixture configs in src/rydberg_mwis/fixtures/."""

import json
from pathlib import Path

from rydberg_mwis.embedding import chain_layout, grid_gadget_embedding
from rydberg_mwis.experiment import canonical_json
from rydberg_mwis.schedule import RampParams, params_for_crossing

OUT = Path(__file__).resolve().parents[1] / "src" / "rydberg_mwis" / "fixtures"

SYSTEM = {"c6_ghz_um6": -3376.0, "omega_mhz": 2.70, "truncate_tails": False}
EVOLUTION = {"dt_us": 0.001, "method": "split4", "shots": 1000, "snapshots_us": [], "trajectory_floor": 1e-4}

# 3 us sweep crossing zero at mid-sweep
RAMP_1D = RampParams(0.0, 3.0, -10.0, 10.0)
# 1.65 us sweep crossing zero at 0.6 us
RAMP_2D = params_for_crossing(0.8, 1.65, 0.6, 2.3, t_rise=0.02, t_fall=0.15)


def calibration_block(target):
    return {"target": list(target), "max_iters": 20, "tol": 0.02,
            "random": {"n_plants": 100, "gain_spread": 0.3, "crosstalk": 0.0, "noise": 0.005}}


def one_d(name, weights):
    layout = chain_layout(weights)
    return {
        "name": name,
        "layout": layout.to_dict(),
        "system": SYSTEM,
        "ramp": RAMP_1D.to_config(),
        "evolution": EVOLUTION,
        "optimizer": {"tunables": ["s", "tau", "delta_min", "delta_max"],
                      "bounds": {"s": [0.0, 1.0], "tau": [0.5, 3.0],
                                 "delta_min": [-12.0, -0.5], "delta_max": [0.5, 12.0]},
                      "budget": 80, "shots": 250, "verify_shots": 1000},
        "calibration": calibration_block(layout.site_weights.tolist()),
        "penalty": None,
        "seed": 0,
        "out": f"runs/{name}",
    }


def two_d(name, weights):
    e = grid_gadget_embedding(weights)
    return {
        "name": name,
        "embedding": e.to_dict(),
        "system": SYSTEM,
        "ramp": RAMP_2D.to_config(),
        "evolution": EVOLUTION,
        # delta_max capped below the tightest blockade cap of the three 2D instances
        "optimizer": {"tunables": ["s", "tau", "delta_min", "delta_max"],
                      "bounds": {"s": [0.0, 1.0], "tau": [0.5, 3.0],
                                 "delta_min": [-8.0, -0.5], "delta_max": [0.5, 4.2]},
                      "budget": 80, "shots": 250, "verify_shots": 1000},
        "calibration": calibration_block(e.layout.site_weights.tolist()),
        "penalty": None,
        "seed": 0,
        "out": f"runs/{name}",
    }


def main():
    OUT.mkdir(exist_ok=True)
    fixtures = [
        one_d("1d_uniform", [1.0] * 9),
        one_d("1d_weighted", [1.0, 2.0] * 4 + [1.0]),
        two_d("2d_21211", [2.0, 1.0, 2.0, 1.0, 1.0]),
        two_d("2d_12122", [1.0, 2.0, 1.0, 2.0, 2.0]),
        two_d("2d_fractional", [1.75, 1.25, 2.25, 1.5, 1.0]),
    ]
    for cfg in fixtures:
        (OUT / f"{cfg['name']}.json").write_text(canonical_json(cfg))
        print("wrote", cfg["name"])


if __name__ == "__main__":
    main()
