"""Risk-aware RRT* over a precomputed perceived-risk field.

The planner grows a rewired tree minimizing, per edge, the positive increase
of perceived risk plus a delta-weighted Euclidean length:

    cost(x1, x2) = max(0, R(x2) - R(x1)) + delta * ||x2 - x1||

The same loop serves every perception model; only the risk field differs.
Runs are deterministic for a fixed seed: samples come from one
``numpy.random.default_rng`` stream and all ties break toward the lowest
node index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cost_field import ConfigSpace
from .fileio import atomic_write_text
from .geometry import Path
from .risk import RiskField

__all__ = [
    "PlannerConfig",
    "Tree",
    "edge_cost",
    "path_cost",
    "steer",
    "near_radius",
    "plan",
    "extract_path",
    "tree_additivity_gap",
    "save_tree_csv",
    "load_tree_csv",
    "GridBucketIndex",
    "BruteForceIndex",
]


@dataclass
class PlannerConfig:
    x_start: np.ndarray
    x_goal: np.ndarray
    iterations: int
    delta: float = 1e-4          # urgency (length) weight
    steer_distance: float = 0.35
    gamma_rrt: float = 100.0
    seed: int = 0

    def __post_init__(self):
        self.x_start = np.asarray(self.x_start, dtype=float)
        self.x_goal = np.asarray(self.x_goal, dtype=float)
        if self.iterations < 1:
            raise ValueError("need at least one iteration")
        if self.delta < 0.0:
            raise ValueError("delta must be nonnegative")
        if self.steer_distance <= 0.0 or self.gamma_rrt <= 0.0:
            raise ValueError("steer distance and gamma must be positive")


class Tree:
    """Rooted planning tree with parent links and cumulative costs.

    Node storage is preallocated to ``capacity``; ``nodes``, ``parent`` and
    ``j_cum`` expose views of the filled prefix.
    """

    def __init__(self, root, capacity: int):
        root = np.asarray(root, dtype=float)
        self._pts = np.empty((capacity, root.size))
        self._parent = np.full(capacity, -1, dtype=np.int64)
        self._j_cum = np.zeros(capacity)
        self._risk = np.zeros(capacity)       # cached field value per node
        self.children: list[list[int]] = [[]]
        self.size = 1
        self._pts[0] = root

    @property
    def nodes(self) -> np.ndarray:
        return self._pts[: self.size]

    @property
    def parent(self) -> np.ndarray:
        return self._parent[: self.size]

    @property
    def j_cum(self) -> np.ndarray:
        return self._j_cum[: self.size]

    @property
    def node_risk(self) -> np.ndarray:
        return self._risk[: self.size]

    def add(self, point, parent: int, j_cum: float, risk_value: float) -> int:
        i = self.size
        self._pts[i] = point
        self._parent[i] = parent
        self._j_cum[i] = j_cum
        self._risk[i] = risk_value
        self.children.append([])
        self.children[parent].append(i)
        self.size = i + 1
        return i

    def rewire(self, node: int, new_parent: int, new_cost: float):
        """Reattach ``node`` under ``new_parent`` and shift the cumulative
        costs of its entire subtree by the improvement."""
        old_parent = self._parent[node]
        self.children[old_parent].remove(node)
        self.children[new_parent].append(node)
        self._parent[node] = new_parent
        delta = new_cost - self._j_cum[node]
        stack = [node]
        while stack:
            v = stack.pop()
            self._j_cum[v] += delta
            stack.extend(self.children[v])

    def snapshot(self) -> "Tree":
        clone = Tree.__new__(Tree)
        clone._pts = self.nodes.copy()
        clone._parent = self.parent.copy()
        clone._j_cum = self.j_cum.copy()
        clone._risk = self.node_risk.copy()
        clone.children = [list(c) for c in self.children]
        clone.size = self.size
        return clone


# --- geometric primitives ---------------------------------------------------


def steer(x1, x2, d: float):
    """x2 if within distance d of x1, else the point d along x1 -> x2."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    gap = np.linalg.norm(x2 - x1)
    if gap <= d:
        return x2.copy()
    return x1 + (d / gap) * (x2 - x1)


def near_radius(n: int, dim: int, gamma_rrt: float, d: float) -> float:
    """Shrinking neighbor radius min(gamma * (ln n / n)**(1/dim), d); d at n=1."""
    if n < 1:
        raise ValueError("tree size must be >= 1")
    if n == 1:
        return d
    return min(gamma_rrt * (np.log(n) / n) ** (1.0 / dim), d)


def edge_cost(x1, x2, risk: RiskField, delta: float) -> float:
    """max(0, R(x2) - R(x1)) + delta * ||x2 - x1||; asymmetric by design."""
    x1 = risk.space.require_inside(x1)
    x2 = risk.space.require_inside(x2)
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    rise = max(0.0, risk.value_at(x2) - risk.value_at(x1))
    return rise + delta * float(np.linalg.norm(x2 - x1))


def path_cost(path: Path, risk: RiskField, delta: float) -> float:
    """Sum of edge costs over consecutive waypoints; 0 for a single point."""
    w = path.waypoints
    if w.shape[0] < 2:
        return 0.0
    r = risk.value_at(w)
    rises = np.maximum(0.0, np.diff(r))
    lengths = np.linalg.norm(np.diff(w, axis=0), axis=1)
    return float(rises.sum() + delta * lengths.sum())


# --- spatial indices ----------------------------------------------------------


class GridBucketIndex:
    """Uniform bucket grid for exact nearest/radius queries over tree nodes.

    Results are identical to brute force: distances are exact and candidate
    ids are scanned in ascending order, so ties resolve to the lowest index.
    Ring expansion for nearest queries is clipped to the bounding box of
    occupied cells, which keeps early queries cheap while the tree is still
    concentrated around the root.
    """

    def __init__(self, space: ConfigSpace, cell: float):
        self.lower = space.lower
        self.cell = float(cell)
        self.shape = np.maximum(
            np.ceil(space.extent / self.cell).astype(int), 1)
        self.buckets: dict[tuple, list[int]] = {}
        self._kmin = None    # occupied-key bounding box
        self._kmax = None

    def _key(self, x) -> tuple:
        k = ((np.asarray(x) - self.lower) // self.cell).astype(int)
        return tuple(np.clip(k, 0, self.shape - 1).tolist())

    def add(self, idx: int, x):
        key = self._key(x)
        self.buckets.setdefault(key, []).append(idx)
        if self._kmin is None:
            self._kmin = list(key)
            self._kmax = list(key)
        else:
            self._kmin = [min(a, b) for a, b in zip(self._kmin, key)]
            self._kmax = [max(a, b) for a, b in zip(self._kmax, key)]

    def _ring_keys(self, center: tuple, ring: int):
        """Keys on the Chebyshev ring, clipped to the occupied bounding box."""
        kmin, kmax = self._kmin, self._kmax
        dim = len(center)
        if ring == 0:
            if all(a <= c <= b for c, a, b in zip(center, kmin, kmax)):
                yield center
            return
        for axis in range(dim):
            for face in (center[axis] - ring, center[axis] + ring):
                if not kmin[axis] <= face <= kmax[axis]:
                    continue
                # axes before `axis` span the full ring width, later axes
                # one less, so every ring cell is produced exactly once
                spans = []
                ok = True
                for a in range(dim):
                    if a == axis:
                        continue
                    w = ring if a < axis else ring - 1
                    lo = max(center[a] - w, kmin[a])
                    hi = min(center[a] + w, kmax[a])
                    if lo > hi:
                        ok = False
                        break
                    spans.append(range(lo, hi + 1))
                if not ok:
                    continue
                for rest in itertools.product(*spans):
                    yield rest[:axis] + (face,) + rest[axis:]

    def nearest(self, x, points: np.ndarray) -> int:
        x = np.asarray(x, dtype=float)
        center = self._key(x)
        # rings below the box distance cannot contain occupied cells
        start = max((a - c if c < a else c - b if c > b else 0)
                    for c, a, b in zip(center, self._kmin, self._kmax))
        stop = max(max(abs(c - a), abs(c - b))
                   for c, a, b in zip(center, self._kmin, self._kmax))
        cand: list[int] = []
        best_d2 = np.inf
        for ring in range(start, stop + 1):
            fresh: list[int] = []
            for key in self._ring_keys(center, ring):
                ids = self.buckets.get(key)
                if ids:
                    fresh.extend(ids)
            if fresh:
                cand.extend(fresh)
                diff = points[fresh] - x
                best_d2 = min(best_d2, float((diff * diff).sum(axis=1).min()))
            # points in rings beyond `ring` lie at distance >= ring * cell
            if cand and best_d2 <= (ring * self.cell) ** 2:
                break
        ids = np.sort(np.asarray(cand))
        diff = points[ids] - x
        return int(ids[int(np.argmin((diff * diff).sum(axis=1)))])

    def within(self, x, r: float, points: np.ndarray) -> np.ndarray:
        """Ascending node ids with ||p - x|| <= r."""
        x = np.asarray(x, dtype=float)
        lo = self._key(x - r)
        hi = self._key(x + r)
        cand: list[int] = []
        for key in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
            ids = self.buckets.get(key)
            if ids:
                cand.extend(ids)
        if not cand:
            return np.empty(0, dtype=np.int64)
        ids = np.sort(np.asarray(cand))
        diff = points[ids] - x
        return ids[(diff * diff).sum(axis=1) <= r * r]


class BruteForceIndex:
    """Reference index: linear scans, used as the oracle for GridBucketIndex."""

    def __init__(self, space: ConfigSpace, cell: float):
        self.count = 0

    def add(self, idx: int, x):
        self.count = max(self.count, idx + 1)

    def nearest(self, x, points: np.ndarray) -> int:
        d = np.linalg.norm(points[: self.count] - np.asarray(x), axis=1)
        return int(np.argmin(d))

    def within(self, x, r: float, points: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(points[: self.count] - np.asarray(x), axis=1)
        return np.flatnonzero(d <= r).astype(np.int64)


# --- the planning loop --------------------------------------------------------


def plan(space: ConfigSpace, risk: RiskField, cfg: PlannerConfig,
         checkpoint_every: int = 0, on_checkpoint=None,
         index_factory=GridBucketIndex):
    """Run ``cfg.iterations`` rounds of sample / steer / choose-parent / rewire.

    Every sample is inserted (there is no collision checking); parents and
    rewires minimize cumulative cost under the risk field.  Returns the final
    tree together with the extracted path to ``cfg.x_goal``.

    ``on_checkpoint(iteration, tree)`` fires after every ``checkpoint_every``
    iterations when both are given; the tree argument is live and must be
    treated as read-only (use ``tree.snapshot()`` to retain state).
    """
    x_start = space.require_inside(cfg.x_start, "start")
    x_goal = space.require_inside(cfg.x_goal, "goal")
    dim = space.dim
    d = cfg.steer_distance
    delta = cfg.delta

    rng = np.random.default_rng(cfg.seed)
    tree = Tree(x_start, capacity=cfg.iterations + 1)
    tree._risk[0] = risk.value_at(x_start)
    index = index_factory(space, d)
    index.add(0, x_start)
    lower, extent = space.lower, space.extent

    for it in range(1, cfg.iterations + 1):
        x_rand = lower + rng.random(dim) * extent
        pts = tree.nodes
        i_nearest = index.nearest(x_rand, pts)
        x_new = steer(pts[i_nearest], x_rand, d)

        r = near_radius(tree.size, dim, cfg.gamma_rrt, d)
        near = index.within(x_new, r, pts)
        risk_new = float(risk.value_at(x_new))

        # parent choice: nearest first, then near nodes in index order
        cand = np.concatenate([[i_nearest], near]).astype(np.int64)
        lengths = np.linalg.norm(pts[cand] - x_new, axis=1)
        rises = np.maximum(0.0, risk_new - tree.node_risk[cand])
        totals = tree.j_cum[cand] + rises + delta * lengths
        best = int(np.argmin(totals))            # first minimum wins
        i_new = tree.add(x_new, parent=int(cand[best]),
                         j_cum=float(totals[best]), risk_value=risk_new)
        index.add(i_new, x_new)

        if near.size:
            # rewire near nodes through x_new when strictly cheaper;
            # sequential re-check because earlier rewires shift costs
            back_lengths = np.linalg.norm(tree.nodes[near] - x_new, axis=1)
            back_rises = np.maximum(0.0, tree.node_risk[near] - risk_new)
            back_costs = back_rises + delta * back_lengths
            j_new = tree.j_cum[i_new]
            for i_near, c_edge in zip(near, back_costs):
                c_through = j_new + c_edge
                if c_through < tree.j_cum[i_near]:
                    tree.rewire(int(i_near), i_new, c_through)

        if checkpoint_every and on_checkpoint is not None \
                and it % checkpoint_every == 0:
            on_checkpoint(it, tree)

    return tree, extract_path(tree, x_goal)


def extract_path(tree: Tree, x_goal) -> Path:
    """Parent walk from the node nearest to ``x_goal`` back to the root."""
    x_goal = np.asarray(x_goal, dtype=float)
    d = np.linalg.norm(tree.nodes - x_goal, axis=1)
    node = int(np.argmin(d))
    chain = [node]
    while tree.parent[node] >= 0:
        node = int(tree.parent[node])
        chain.append(node)
    return Path(tree.nodes[chain[::-1]])


def tree_additivity_gap(tree: Tree, risk: RiskField, delta: float) -> float:
    """Largest |J_cum(node) - J_cum(parent) - edge_cost(parent, node)|."""
    if tree.size < 2:
        return 0.0
    child = np.arange(1, tree.size)
    par = tree.parent[child]
    r = risk.value_at(tree.nodes)
    rises = np.maximum(0.0, r[child] - r[par])
    lengths = np.linalg.norm(tree.nodes[child] - tree.nodes[par], axis=1)
    gaps = tree.j_cum[child] - tree.j_cum[par] - rises - delta * lengths
    return float(np.abs(gaps).max())


# --- exports ------------------------------------------------------------------


def save_tree_csv(tree: Tree, file):
    lines = ["node_id,parent_id,x,y,j_cum"]
    for i in range(tree.size):
        x, y = tree.nodes[i][:2]
        lines.append(f"{i},{tree.parent[i]},{x!r},{y!r},{tree.j_cum[i]!r}")
    atomic_write_text(file, "\n".join(lines) + "\n")


def load_tree_csv(file):
    """Returns (nodes, parent, j_cum) arrays from a tree CSV."""
    raw = np.loadtxt(file, delimiter=",", skiprows=1, ndmin=2)
    nodes = raw[:, 2:4]
    parent = raw[:, 1].astype(np.int64)
    j_cum = raw[:, 4]
    return nodes, parent, j_cum
