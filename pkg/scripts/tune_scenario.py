#!/usr/bin/env python3
"""Diagnostic harness for the bundled fire-room scenario.

Plans under the perception profiles used in the experiments and reports the
quantities the acceptance checks care about: risk climbed under the
risk-averse field, path lengths across the delta sweep, and how distinct the
profile paths are from each other.  Purely informational; run while
adjusting scenario geometry.
"""

import argparse
import time

import numpy as np

import riskplan as rp
from riskplan.scenarios import FIRE_GOAL, FIRE_START, fire_room

PROFILES = {
    "risk_averse": rp.CptParams(0.74, 2.0, 0.9, 10.0),
    "unc_insensitive": rp.CptParams(0.74, 0.05, 0.88, 2.25),
    "unc_averse": rp.CptParams(0.74, 3.0, 0.88, 2.25),
    "nominal": rp.CptParams(0.74, 1.0, 0.88, 2.25),
}


def ascii_field(grid, rows=22, cols=44):
    chars = " .:-=+*#%@"
    top = grid.max() if grid.max() > 0 else 1.0
    sub = grid[:: max(1, grid.shape[0] // rows), :: max(1, grid.shape[1] // cols)]
    return "\n".join(
        "".join(chars[min(int(v / top * 9.999), 9)] for v in row) for row in sub[::-1]
    )


def path_marks(path, space, rows=22, cols=44):
    canvas = [[" "] * cols for _ in range(rows)]
    for wp in path.waypoints:
        cx = int((wp[0] - space.lower[0]) / space.extent[0] * (cols - 1))
        cy = int((wp[1] - space.lower[1]) / space.extent[1] * (rows - 1))
        canvas[rows - 1 - cy][cx] = "o"
    return "\n".join("".join(r) for r in canvas)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--resolution", type=int, default=201)
    ap.add_argument("--show-fields", action="store_true")
    args = ap.parse_args()

    field = fire_room()
    fields = {}
    for name, theta in PROFILES.items():
        fields[name] = rp.build_risk_field(field, rp.CptModel(theta), 20, args.resolution)
    fields["expected"] = rp.build_risk_field(field, rp.ExpectedModel(), 20, args.resolution)
    fields["cvar_0.9"] = rp.build_risk_field(field, rp.CvarModel(0.9), 20, args.resolution)

    rc = fields["risk_averse"]
    paths = {}
    for name, rf in fields.items():
        cfg = rp.PlannerConfig(FIRE_START, FIRE_GOAL, iterations=args.iters,
                               delta=1e-4, seed=args.seed)
        t0 = time.time()
        _, path = rp.plan(field.space, rf, cfg)
        paths[name] = path
        own_cost = rp.path_cost(path, rf, 0.0)
        averse_cost = rp.path_cost(path, rc, 0.0)
        print(f"{name:16s} plan {time.time()-t0:5.1f}s  len={rp.arc_length(path):6.2f}"
              f"  risk(own)={own_cost:8.3f}  risk(R_averse)={averse_cost:8.3f}")
        if args.show_fields:
            print(ascii_field(rf.grid))
            print(path_marks(path, field.space))

    print("\ndelta sweep (risk-averse profile):")
    for delta in (1e-4, 1.0, 100.0):
        cfg = rp.PlannerConfig(FIRE_START, FIRE_GOAL, iterations=args.iters,
                               delta=delta, seed=args.seed)
        _, path = rp.plan(field.space, rc, cfg)
        print(f"  delta={delta:g} len={rp.arc_length(path):6.2f} "
              f"risk={rp.path_cost(path, rc, 0.0):8.3f}")

    print("\npairwise areas between profile paths:")
    names = list(paths)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            try:
                ar = rp.area_between(paths[a], paths[b], eps_end=2.0)
            except ValueError:
                ar = float("nan")
            print(f"  Ar({a}, {b}) = {ar:.2f}")


if __name__ == "__main__":
    main()
