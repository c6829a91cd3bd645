"""Bundled demo scenario: a room on fire with an ink-blotted floor map.

The layout is a visual approximation of the published floor-plan sketch (the
original gives no numeric coordinates).  A wall of burning obstacles spans
the room, pierced by two passages: the west passage runs between two fire
sources and carries a mean-cost floor of about 4.6, while the east passage
is cheaper in expectation (about 2.1) but sits under the ink spot / torn
region of the map, so its cost is highly uncertain (sigma about 6).  Which
passage a planner prefers, and how closely it hugs the fires, depends
entirely on its risk perception, which is what the experiments probe.
"""

from __future__ import annotations

import numpy as np

from .cost_field import CostField, scenario_from_dict

__all__ = ["FIRE_ROOM", "FIRE_START", "FIRE_GOAL", "fire_room"]

FIRE_START = np.array([0.5, -5.5])
FIRE_GOAL = np.array([0.5, 5.5])

FIRE_ROOM = {
    "space": {"lower": [-10.0, -10.0], "upper": [10.0, 10.0]},
    "bumps": [
        {"center": [-8.0, 0.0], "inner": [2.6, 1.5], "outer": [3.8, 2.5],
         "rho_max": 20.0},
        {"center": [0.5, 0.0], "inner": [2.1, 1.5], "outer": [3.3, 2.5],
         "rho_max": 20.0},
        {"center": [9.7, 0.0], "inner": [3.3, 1.5], "outer": [4.5, 2.5],
         "rho_max": 20.0},
        {"center": [-7.5, 6.5], "inner": [1.3, 1.1], "outer": [2.1, 1.9],
         "rho_max": 20.0},
    ],
    "gaussians_mu": [
        {"mean": [-8.0, 0.0], "cov": [[8.0, 0.0], [0.0, 4.0]],
         "amplitude": 16.0},
        {"mean": [0.5, 0.0], "cov": [[5.0, 0.0], [0.0, 4.0]],
         "amplitude": 6.0},
        {"mean": [9.7, 0.0], "cov": [[8.0, 0.0], [0.0, 4.0]],
         "amplitude": 5.0},
        {"mean": [-7.5, 6.5], "cov": [[4.0, 0.0], [0.0, 4.0]],
         "amplitude": 7.0},
    ],
    "gaussians_sigma": [
        {"mean": [4.5, 0.0], "cov": [[2.2, 0.0], [0.0, 5.0]],
         "amplitude": 7.5},
    ],
}


def fire_room() -> CostField:
    """Cost field of the bundled fire-room scenario."""
    return scenario_from_dict(FIRE_ROOM)
