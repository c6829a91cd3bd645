"""Perceived-risk models over uncertain spatial costs.

The uncertain cost at a point, summarized by (rho_mu, rho_sigma), is
discretized into an M-outcome prospect with equal bin probabilities and
half-normal bin-midpoint quantiles.  Three perception models map a prospect
to a scalar risk:

* expected risk      -- the rational probability-weighted mean,
* CPT risk           -- nonlinear utility v(rho) = lambda * rho**gamma paired
                        with Prelec-weighted cumulative decision weights,
* CVaR risk          -- mean of the worst (1 - q) probability mass.

``build_risk_field`` applies the selected model at every cell of a uniform
grid; off-grid queries interpolate bilinearly.  Because bin probabilities are
location-independent, the per-cell risk reduces to a fixed weight vector
applied to the per-cell outcome quantiles, which keeps grid construction
vectorized.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np
from scipy import special

from .cost_field import ConfigSpace, CostField
from .fileio import atomic_write_bytes, atomic_write_text

__all__ = [
    "CptParams",
    "Prospect",
    "ExpectedModel",
    "CptModel",
    "CvarModel",
    "RiskModel",
    "RiskField",
    "utility_v",
    "prelec_w",
    "discretize_prospect",
    "decision_weights",
    "cpt_risk",
    "expected_risk",
    "cvar_risk",
    "perceived_risk",
    "build_risk_field",
    "save_risk_grid",
    "load_risk_grid",
    "save_risk_pgm",
]

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class CptParams:
    """CPT perception parameters: alpha, beta > 0; 0 < gamma < 1; lambda > 1."""

    alpha: float
    beta: float
    gamma: float
    lam: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not self.lam > 1.0:
            raise ValueError(f"lambda must be > 1, got {self.lam}")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.lam])

    @classmethod
    def from_array(cls, theta) -> "CptParams":
        a, b, g, l = np.asarray(theta, dtype=float)
        return cls(a, b, g, l)


@dataclass(frozen=True)
class Prospect:
    """Finite cost prospect: outcomes sorted strictly descending, ties merged,
    probabilities nonnegative and summing to 1."""

    outcomes: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        out = np.asarray(self.outcomes, dtype=float).ravel()
        pr = np.asarray(self.probs, dtype=float).ravel()
        if out.size == 0 or out.size != pr.size:
            raise ValueError("need equally many outcomes and probabilities, >= 1")
        if np.any(pr < 0.0):
            raise ValueError("probabilities must be nonnegative")
        if abs(pr.sum() - 1.0) > 1e-12 * max(1.0, out.size):
            raise ValueError(f"probabilities must sum to 1, got {pr.sum()!r}")
        order = np.argsort(-out, kind="stable")
        out, pr = out[order], pr[order]
        # merge ties so the ordering is strictly descending
        keep = np.concatenate([[True], np.diff(out) < 0.0])
        idx = np.cumsum(keep) - 1
        merged_p = np.zeros(int(idx[-1]) + 1)
        np.add.at(merged_p, idx, pr)
        object.__setattr__(self, "outcomes", out[keep])
        object.__setattr__(self, "probs", merged_p)

    @property
    def size(self) -> int:
        return self.outcomes.size


@dataclass(frozen=True)
class ExpectedModel:
    tag: ClassVar[str] = "expected"


@dataclass(frozen=True)
class CptModel:
    params: CptParams
    tag: ClassVar[str] = "cpt"


@dataclass(frozen=True)
class CvarModel:
    q: float
    tag: ClassVar[str] = "cvar"

    def __post_init__(self):
        if not 0.0 <= self.q < 1.0:
            raise ValueError(f"q must lie in [0, 1), got {self.q}")


RiskModel = Union[ExpectedModel, CptModel, CvarModel]


def utility_v(rho, params: CptParams):
    """Perceived cost v(rho) = lambda * rho**gamma (rho >= 0)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0.0):
        raise ValueError("cost must be nonnegative")
    val = params.lam * rho**params.gamma
    return val if val.ndim else float(val)


def prelec_w(p, params: CptParams):
    """Prelec probability weighting w(p) = exp(-beta * (-ln p)**alpha), w(0) = 0."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("probability must lie in [0, 1]")
    out = np.zeros_like(p)
    pos = p > 0.0
    out[pos] = np.exp(-params.beta * (-np.log(p[pos])) ** params.alpha)
    return out if out.ndim else float(out)


def _halfnormal_quantiles_desc(M: int) -> np.ndarray:
    """Unit-sigma |N(0,1)| quantiles at the M equal-mass bin midpoints, descending."""
    u = (np.arange(M, 0, -1) - 0.5) / M
    return np.sqrt(2.0) * special.erfinv(u)


def discretize_prospect(rho_mu: float, rho_sigma: float, M: int) -> Prospect:
    """Equal-probability M-bin prospect for rho = rho_mu + |N(0, rho_sigma^2)|.

    Outcome i is the quantile of rho at its bin's probability midpoint,
    sorted descending.  A zero-sigma point collapses to the single certain
    outcome rho_mu.
    """
    if M < 1:
        raise ValueError("need at least one bin")
    if rho_mu < 0.0 or rho_sigma < 0.0:
        raise ValueError("moments must be nonnegative")
    if rho_sigma == 0.0:
        return Prospect(np.array([rho_mu]), np.array([1.0]))
    outcomes = rho_mu + rho_sigma * _halfnormal_quantiles_desc(M)
    return Prospect(outcomes, np.full(M, 1.0 / M))


def decision_weights(probs, params: CptParams) -> np.ndarray:
    """Cumulative decision weights pi_j = w(S_j) - w(S_{j+1}).

    S_j sums the probabilities of outcomes j..M (descending-outcome order)
    and S_{M+1} = 0, so the weights telescope to w(S_1) = w(1) = 1 and each
    pi_j is nonnegative by monotonicity of w.
    """
    probs = np.asarray(probs, dtype=float)
    if abs(probs.sum() - 1.0) > _PROB_TOL:
        raise ValueError(f"probabilities must sum to 1, got {probs.sum()!r}")
    suffix = np.concatenate([np.cumsum(probs[::-1])[::-1], [0.0]])
    w = prelec_w(np.clip(suffix, 0.0, 1.0), params)
    return w[:-1] - w[1:]


def cpt_risk(prospect: Prospect, params: CptParams) -> float:
    """CPT perceived risk: sum_j v(rho_j) * pi_j."""
    pi = decision_weights(prospect.probs, params)
    return float(np.dot(utility_v(prospect.outcomes, params), pi))


def expected_risk(prospect: Prospect) -> float:
    """Rational expected risk: sum_i rho_i * p_i."""
    return float(np.dot(prospect.outcomes, prospect.probs))


def cvar_risk(prospect: Prospect, q: float) -> float:
    """Mean of the worst (1 - q) probability mass of the prospect.

    Walks outcomes in descending order, taking a fractional share of the bin
    that straddles the mass boundary, so the value is continuous and monotone
    non-decreasing in q.  cvar_risk(., 0) equals expected_risk.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    mass = 1.0 - q
    takes = np.minimum(prospect.probs,
                       np.maximum(mass - np.concatenate([[0.0], np.cumsum(prospect.probs)[:-1]]), 0.0))
    return float(np.dot(prospect.outcomes, takes) / mass)


def perceived_risk(prospect: Prospect, model: RiskModel) -> float:
    """Scalar risk of a prospect under the given perception model."""
    if isinstance(model, ExpectedModel):
        return expected_risk(prospect)
    if isinstance(model, CptModel):
        return cpt_risk(prospect, model.params)
    if isinstance(model, CvarModel):
        return cvar_risk(prospect, model.q)
    raise TypeError(f"unknown risk model {model!r}")


# --- precomputed risk grids -------------------------------------------------


@dataclass
class RiskField:
    """Perceived risk sampled on a uniform grid over a 2-D space.

    ``grid[iy, ix]`` holds the risk at the cell center with the ix-th x
    coordinate and iy-th y coordinate (both increasing).  ``value_at``
    interpolates bilinearly between cell centers and clamps to the boundary
    cells at the edges.
    """

    model: RiskModel
    grid: np.ndarray
    space: ConfigSpace
    resolution: int

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.shape != (self.resolution, self.resolution):
            raise ValueError(f"grid shape {self.grid.shape} does not match "
                             f"resolution {self.resolution}")
        if not np.all(np.isfinite(self.grid)) or np.any(self.grid < 0.0):
            raise ValueError("grid values must be finite and nonnegative")
        step = self.space.extent / self.resolution
        self._step = step
        self._origin = self.space.lower + 0.5 * step   # first cell center

    def cell_centers(self):
        """(xs, ys) 1-D arrays of cell-center coordinates."""
        n = self.resolution
        xs = self._origin[0] + self._step[0] * np.arange(n)
        ys = self._origin[1] + self._step[1] * np.arange(n)
        return xs, ys

    def value_at(self, x):
        """Bilinear risk at point(s) x of shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        t = (x - self._origin) / self._step
        n = self.resolution
        i0 = np.clip(np.floor(t).astype(int), 0, n - 2)
        frac = np.clip(t - i0, 0.0, 1.0)
        fx, fy = frac[..., 0], frac[..., 1]
        ix, iy = i0[..., 0], i0[..., 1]
        g = self.grid
        val = (g[iy, ix] * (1 - fx) * (1 - fy)
               + g[iy, ix + 1] * fx * (1 - fy)
               + g[iy + 1, ix] * (1 - fx) * fy
               + g[iy + 1, ix + 1] * fx * fy)
        return val if val.ndim else float(val)


def _grid_weights(model: RiskModel, M: int) -> np.ndarray:
    """Outcome weights for M descending equal-mass bins under the model.

    Valid because bin probabilities do not depend on location, so the risk at
    a cell is the dot product of this vector with the cell's outcome
    quantiles (after utility transform, for CPT).
    """
    probs = np.full(M, 1.0 / M)
    if isinstance(model, (ExpectedModel, CptModel)):
        if isinstance(model, CptModel):
            return decision_weights(probs, model.params)
        return probs
    if isinstance(model, CvarModel):
        mass = 1.0 - model.q
        takes = np.minimum(probs, np.maximum(
            mass - np.concatenate([[0.0], np.cumsum(probs)[:-1]]), 0.0))
        return takes / mass
    raise TypeError(f"unknown risk model {model!r}")


def build_risk_field(field: CostField, model: RiskModel, M: int,
                     resolution: int) -> RiskField:
    """Precompute the perceived-risk grid of a cost field.

    Every cell value equals ``perceived_risk(discretize_prospect(moments at
    the cell center), model)``; the computation is vectorized over cells.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if M < 1:
        raise ValueError("need at least one bin")
    if field.space.dim != 2:
        raise ValueError("risk grids require a 2-D configuration space")
    space = field.space
    step = space.extent / resolution
    xs = space.lower[0] + step[0] * (np.arange(resolution) + 0.5)
    ys = space.lower[1] + step[1] * (np.arange(resolution) + 0.5)
    pts = np.stack(np.meshgrid(xs, ys, indexing="xy"), axis=-1)  # (res, res, 2)
    mu, sigma = field.moments(pts)

    hq = _halfnormal_quantiles_desc(M)
    outcomes = mu[..., None] + sigma[..., None] * hq              # (res, res, M)
    weights = _grid_weights(model, M)
    if isinstance(model, CptModel):
        p = model.params
        grid = p.lam * (outcomes**p.gamma @ weights)
    else:
        grid = outcomes @ weights
    return RiskField(model=model, grid=grid, space=space, resolution=resolution)


# --- grid file formats ------------------------------------------------------


def _space_token(space: ConfigSpace) -> str:
    return (f"[{','.join(repr(v) for v in space.lower)}]"
            f"x[{','.join(repr(v) for v in space.upper)}]")


def save_risk_grid(rf: RiskField, path):
    """CSV export: one `# model=... resolution=... space=...` header line,
    then resolution rows (increasing y) of resolution comma-separated values
    (increasing x)."""
    lines = [f"# model={rf.model.tag} resolution={rf.resolution} "
             f"space={_space_token(rf.space)}"]
    for row in rf.grid:
        lines.append(",".join(repr(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_risk_grid(path):
    """Parse a risk-grid CSV; returns (tag, grid, space, resolution)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        m = re.match(r"#\s*model=(\S+)\s+resolution=(\d+)\s+"
                     r"space=\[([^\]]*)\]x\[([^\]]*)\]", header)
        if m is None:
            raise ValueError(f"bad risk-grid header in {path}: {header!r}")
        tag, res = m.group(1), int(m.group(2))
        lower = [float(v) for v in m.group(3).split(",")]
        upper = [float(v) for v in m.group(4).split(",")]
        grid = np.loadtxt(fh, delimiter=",", ndmin=2)
    space = ConfigSpace(lower, upper)
    if grid.shape != (res, res):
        raise ValueError(f"grid shape {grid.shape} does not match declared "
                         f"resolution {res}")
    return tag, grid, space, res


def save_risk_pgm(rf: RiskField, path):
    """Binary P5 graymap preview, min-max normalized to 0..255, north-up."""
    g = rf.grid
    lo, hi = g.min(), g.max()
    if hi > lo:
        img = np.round((g - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        img = np.zeros_like(g, dtype=np.uint8)
    img = img[::-1]    # row 0 of the file is the largest y
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + img.tobytes())
