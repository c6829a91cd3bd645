"""Uncertain spatial cost maps built from declarative scenario primitives.

A cost field assigns to every point x of a rectangular configuration space
the first two moments of an uncertain scalar cost: a mean ``rho_mu(x) >= 0``
and a standard deviation ``rho_sigma(x) >= 0``.  The mean layer is a sum of
smooth compactly-supported "bump" obstacles and unnormalized Gaussian
sources; the uncertainty layer is a sum of Gaussian blobs.

All evaluation functions broadcast over leading axes: a point argument may
be a single ``(dim,)`` vector or an ``(..., dim)`` stack of points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConfigSpace",
    "BumpObstacle",
    "GaussianSource",
    "CostField",
    "bump_mean",
    "gaussian_value",
    "eval_moments",
    "load_scenario",
    "save_scenario",
    "scenario_to_dict",
    "ScenarioError",
]


class ScenarioError(ValueError):
    """Malformed scenario document (bad key, shape, or value)."""


@dataclass(frozen=True)
class ConfigSpace:
    """Axis-aligned rectangular configuration space."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or hi.shape != lo.shape:
            raise ValueError("lower/upper must be 1-D arrays of equal length")
        if lo.size < 2:
            raise ValueError("configuration space must have dim >= 2")
        if not np.all(lo < hi):
            raise ValueError(f"need lower < upper per axis, got {lo} vs {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def extent(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> np.ndarray:
        """True where each point of x (..., dim) lies inside the box (inclusive)."""
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lower) & (x <= self.upper), axis=-1)

    def require_inside(self, x, what: str = "point"):
        x = np.asarray(x, dtype=float)
        if not np.all(self.contains(x)):
            raise ValueError(f"{what} {x} outside configuration space "
                             f"[{self.lower}, {self.upper}]")
        return x


@dataclass
class BumpObstacle:
    """Smooth rectangular bump: constant ``rho_max`` on the inner box
    ``|x_i - c_i| <= a_i``, zero outside the outer box ``|x_i - c_i| >= b_i``,
    infinitely differentiable in between.
    """

    center: np.ndarray
    inner: np.ndarray   # per-axis half-widths a_i
    outer: np.ndarray   # per-axis half-widths b_i
    rho_max: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.inner = np.asarray(self.inner, dtype=float)
        self.outer = np.asarray(self.outer, dtype=float)
        self.rho_max = float(self.rho_max)
        if not (self.center.shape == self.inner.shape == self.outer.shape):
            raise ValueError("center/inner/outer must share one shape")
        if not np.all(self.inner > 0.0):
            raise ValueError("inner half-widths must be positive")
        if not np.all(self.outer > self.inner):
            raise ValueError(
                f"outer half-widths must exceed inner ones, got inner={self.inner} "
                f"outer={self.outer}")
        if self.rho_max < 0.0:
            raise ValueError("rho_max must be nonnegative")

    def value(self, x) -> np.ndarray:
        return bump_mean(x, self)


@dataclass
class GaussianSource:
    """Unnormalized Gaussian hill: peak value ``amplitude`` at ``mean``."""

    mean: np.ndarray
    covariance: np.ndarray
    amplitude: float
    _cov_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        self.amplitude = float(self.amplitude)
        d = self.mean.size
        if self.covariance.shape != (d, d):
            raise ValueError(f"covariance must be {d}x{d}")
        if not np.allclose(self.covariance, self.covariance.T, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(self.covariance)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        if self.amplitude < 0.0:
            raise ValueError("amplitude must be nonnegative")
        self._cov_inv = np.linalg.inv(self.covariance)

    def value(self, x) -> np.ndarray:
        return gaussian_value(x, self)


def _smooth_step_f(y: np.ndarray) -> np.ndarray:
    """f(y) = exp(-1/y) for y > 0, 0 otherwise (continued by its limit at 0)."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    pos = y > 0.0
    out[pos] = np.exp(-1.0 / y[pos])
    return out


def _smooth_step_g(y: np.ndarray) -> np.ndarray:
    """g(y) = f(y) / (f(y) + f(1-y)); ramps 0 -> 1 across [0, 1]."""
    fy = _smooth_step_f(y)
    f1y = _smooth_step_f(1.0 - y)
    # denominator is zero only when y <= 0 and y >= 1 simultaneously: impossible
    return fy / (fy + f1y)


def bump_mean(x, obstacle: BumpObstacle) -> np.ndarray:
    """Evaluate a bump obstacle at point(s) x.

    Returns ``rho_max * prod_i h(x_i - c_i)`` with
    ``h(y) = 1 - g((y^2 - a_i^2) / (b_i^2 - a_i^2))``.  The result lies in
    ``[0, rho_max]``, equals ``rho_max`` on the inner box and 0 outside the
    outer box.
    """
    x = np.asarray(x, dtype=float)
    d = x - obstacle.center                       # (..., dim)
    a2 = obstacle.inner**2
    b2 = obstacle.outer**2
    h = 1.0 - _smooth_step_g((d * d - a2) / (b2 - a2))
    val = obstacle.rho_max * np.prod(h, axis=-1)
    return val if val.ndim else float(val)


def gaussian_value(x, source: GaussianSource) -> np.ndarray:
    """Evaluate an unnormalized Gaussian source at point(s) x."""
    x = np.asarray(x, dtype=float)
    d = x - source.mean
    quad = np.einsum("...i,ij,...j->...", d, source._cov_inv, d)
    val = source.amplitude * np.exp(-0.5 * quad)
    return val if val.ndim else float(val)


@dataclass
class CostField:
    """Uncertain cost over a configuration space.

    ``mean_terms`` (bumps and Gaussians) sum to rho_mu; ``sigma_terms``
    (Gaussians) sum to rho_sigma.
    """

    space: ConfigSpace
    mean_terms: list
    sigma_terms: list

    def moments(self, x):
        """(rho_mu, rho_sigma) at point(s) x inside the space."""
        return eval_moments(self, x)


def eval_moments(field: CostField, x):
    """Sum the mean and sigma term stacks at point(s) x.

    Raises ValueError when any point falls outside the configuration space.
    """
    x = field.space.require_inside(x)
    base = np.zeros(x.shape[:-1], dtype=float)
    mu = base.copy()
    for term in field.mean_terms:
        mu = mu + term.value(x)
    sigma = base.copy()
    for term in field.sigma_terms:
        sigma = sigma + term.value(x)
    if mu.ndim:
        return mu, sigma
    return float(mu), float(sigma)


# --- scenario documents ---------------------------------------------------
#
# JSON schema: {"space": {"lower": [...], "upper": [...]},
#               "bumps": [{"center", "inner", "outer", "rho_max"}, ...],
#               "gaussians_mu": [{"mean", "cov", "amplitude"}, ...],
#               "gaussians_sigma": [...]}
# Covariances are row-major: nested lists, or flat lists of dim*dim numbers.


def _ctx(where: str, exc: Exception) -> ScenarioError:
    return ScenarioError(f"scenario error at {where}: {exc}")


def _get(doc: dict, key: str, where: str):
    if key not in doc:
        raise ScenarioError(f"scenario error at {where}: missing key '{key}'")
    return doc[key]


def _as_cov(raw, where: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        d = int(round(np.sqrt(arr.size)))
        if d * d != arr.size:
            raise ScenarioError(
                f"scenario error at {where}: flat covariance length {arr.size} "
                "is not a perfect square")
        arr = arr.reshape(d, d)
    return arr


def _parse_gaussian(doc: dict, where: str) -> GaussianSource:
    try:
        return GaussianSource(
            mean=_get(doc, "mean", where),
            covariance=_as_cov(_get(doc, "cov", where), f"{where}.cov"),
            amplitude=_get(doc, "amplitude", where),
        )
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise _ctx(where, exc) from exc


def scenario_from_dict(doc: dict) -> CostField:
    """Build a CostField from a parsed scenario document."""
    if not isinstance(doc, dict):
        raise ScenarioError("scenario error at top level: document must be an object")
    sp = _get(doc, "space", "top level")
    try:
        space = ConfigSpace(_get(sp, "lower", "space"), _get(sp, "upper", "space"))
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise _ctx("space", exc) from exc

    mean_terms = []
    for i, b in enumerate(doc.get("bumps", [])):
        where = f"bumps[{i}]"
        try:
            mean_terms.append(BumpObstacle(
                center=_get(b, "center", where),
                inner=_get(b, "inner", where),
                outer=_get(b, "outer", where),
                rho_max=_get(b, "rho_max", where),
            ))
        except ScenarioError:
            raise
        except (ValueError, TypeError) as exc:
            raise _ctx(where, exc) from exc
    for i, g in enumerate(doc.get("gaussians_mu", [])):
        mean_terms.append(_parse_gaussian(g, f"gaussians_mu[{i}]"))
    sigma_terms = [
        _parse_gaussian(g, f"gaussians_sigma[{i}]")
        for i, g in enumerate(doc.get("gaussians_sigma", []))
    ]
    return CostField(space=space, mean_terms=mean_terms, sigma_terms=sigma_terms)


def scenario_to_dict(field: CostField) -> dict:
    doc = {
        "space": {"lower": field.space.lower.tolist(),
                  "upper": field.space.upper.tolist()},
        "bumps": [],
        "gaussians_mu": [],
        "gaussians_sigma": [],
    }
    for term in field.mean_terms:
        if isinstance(term, BumpObstacle):
            doc["bumps"].append({
                "center": term.center.tolist(),
                "inner": term.inner.tolist(),
                "outer": term.outer.tolist(),
                "rho_max": term.rho_max,
            })
        else:
            doc["gaussians_mu"].append({
                "mean": term.mean.tolist(),
                "cov": term.covariance.tolist(),
                "amplitude": term.amplitude,
            })
    for term in field.sigma_terms:
        doc["gaussians_sigma"].append({
            "mean": term.mean.tolist(),
            "cov": term.covariance.tolist(),
            "amplitude": term.amplitude,
        })
    return doc


def load_scenario(path) -> CostField:
    """Load a scenario JSON file; parse errors carry line/key context."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(
                f"scenario parse error in {path} at line {exc.lineno} "
                f"column {exc.colno}: {exc.msg}") from exc
    return scenario_from_dict(doc)


def save_scenario(field: CostField, path):
    from .fileio import atomic_write_text

    atomic_write_text(path, json.dumps(scenario_to_dict(field), indent=2) + "\n")
