"""Polyline paths and the geometric functionals used for planning and fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fileio import atomic_write_text

__all__ = [
    "Path",
    "arc_length",
    "area_between",
    "load_path_csv",
    "save_path_csv",
]

#: endpoint gap (world units) below which two paths count as "same endpoints"
ENDPOINT_TOL = 0.5


@dataclass(frozen=True)
class Path:
    """Ordered waypoint polyline; consecutive duplicates are dropped."""

    waypoints: np.ndarray

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
        if w.size == 0:
            raise ValueError("path needs at least one waypoint")
        if w.shape[0] > 1:
            keep = np.concatenate([[True], np.any(np.diff(w, axis=0) != 0.0, axis=1)])
            w = w[keep]
        object.__setattr__(self, "waypoints", w)

    def __len__(self) -> int:
        return self.waypoints.shape[0]

    @property
    def start(self) -> np.ndarray:
        return self.waypoints[0]

    @property
    def end(self) -> np.ndarray:
        return self.waypoints[-1]

    def translated(self, offset) -> "Path":
        return Path(self.waypoints + np.asarray(offset, dtype=float))


def arc_length(path: Path) -> float:
    """Total Euclidean length; 0 for a single-point path."""
    w = path.waypoints
    if w.shape[0] < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(w, axis=0), axis=1).sum())


def _shoelace(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def area_between(p_a: Path, p_b: Path, eps_end: float = ENDPOINT_TOL) -> float:
    """Net area enclosed by one path and the reverse of the other.

    The two paths must share endpoints to within ``eps_end``; residual gaps
    are closed by straight segments (implicit in the shoelace loop).  The
    value is the absolute signed area of the closed loop, so lobes of a
    self-intersecting loop partially cancel; it is symmetric in its
    arguments, zero for identical polylines, and translation invariant.
    """
    a, b = p_a.waypoints, p_b.waypoints
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("area_between needs non-degenerate paths (>= 2 waypoints)")
    if a.shape[1] != 2 or b.shape[1] != 2:
        raise ValueError("area_between is defined for planar paths")
    gap_start = float(np.linalg.norm(a[0] - b[0]))
    gap_end = float(np.linalg.norm(a[-1] - b[-1]))
    if gap_start > eps_end or gap_end > eps_end:
        raise ValueError(
            f"paths do not share endpoints (start gap {gap_start:.3g}, "
            f"end gap {gap_end:.3g}, tolerance {eps_end:.3g})")
    loop = np.vstack([a, b[::-1]])
    return abs(_shoelace(loop))


def save_path_csv(path: Path, file, synthetic_goal_snap: bool = False):
    """Waypoint CSV, one `x,y` row per waypoint, root-first.

    ``synthetic_goal_snap`` marks files whose final row is a goal point that
    was appended after planning rather than reached by the tree.
    """
    lines = []
    if synthetic_goal_snap:
        lines.append("# synthetic_goal_snap=1")
    lines.append("x,y")
    for wp in path.waypoints:
        lines.append(",".join(repr(v) for v in wp))
    atomic_write_text(file, "\n".join(lines) + "\n")


def load_path_csv(file) -> Path:
    """Read a waypoint CSV (comment lines and an `x,y` header are skipped)."""
    rows = []
    with open(file, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            first = line.split(",")[0]
            try:
                float(first)
            except ValueError:
                continue    # header row
            rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"no waypoints found in {file}")
    return Path(np.asarray(rows))
