"""Simultaneous-perturbation fitting of risk-model parameters to a target path.

Each iteration perturbs all parameters at once by +/- c_k along a random
Bernoulli direction, plans a path under both perturbed parameter sets,
forms a two-point gradient estimate from the area-between-paths losses, and
takes a projected step of size a_k.  A trial therefore costs at most three
plans per iteration (theta+, theta-, and the post-step test plan) plus one
initial evaluation.

Gain sequences:  a_k = 0.4 / (1.6 + k)**0.601,  c_k = 0.97 / (1.6 + k)**0.301.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fileio import atomic_write_text
from .geometry import Path, area_between
from .planner import PlannerConfig, plan

__all__ = [
    "CPT_BOUNDS",
    "CVAR_BOUNDS",
    "SpsaConfig",
    "FitRecord",
    "FitReport",
    "FitAborted",
    "spsa_gains",
    "perturb",
    "spsa_step",
    "derive_seed",
    "fit",
    "save_fit_report",
    "load_fit_report",
]

# feasible boxes keeping the utility/weighting functions well defined;
# wide enough for every parameter set exercised in the experiments
CPT_BOUNDS = np.array([[0.1, 2.0],     # alpha
                       [0.05, 5.0],    # beta
                       [0.1, 0.99],    # gamma
                       [1.01, 15.0]])  # lambda
CVAR_BOUNDS = np.array([[0.0, 0.99]])  # q


def spsa_gains(k: int) -> tuple[float, float]:
    """(a_k, c_k) for iteration k >= 1; both positive and strictly decreasing."""
    if k < 1:
        raise ValueError("iteration index starts at 1")
    base = 1.6 + k
    return 0.4 / base**0.601, 0.97 / base**0.301


def _clamp(theta: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return np.clip(theta, bounds[:, 0], bounds[:, 1])


def perturb(theta, c_k: float, rng, bounds) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bernoulli +/-1 direction and the two clamped perturbed parameter sets."""
    theta = np.asarray(theta, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    delta_vec = rng.integers(0, 2, size=theta.size) * 2.0 - 1.0
    theta_plus = _clamp(theta + c_k * delta_vec, bounds)
    theta_minus = _clamp(theta - c_k * delta_vec, bounds)
    return theta_plus, theta_minus, delta_vec


def spsa_step(theta_k, k: int, loss_plus: float, loss_minus: float,
              delta_vec, bounds) -> np.ndarray:
    """Projected update theta - a_k * g with g_i = (L+ - L-) / (2 c_k d_i)."""
    theta_k = np.asarray(theta_k, dtype=float)
    delta_vec = np.asarray(delta_vec, dtype=float)
    if not (np.isfinite(loss_plus) and np.isfinite(loss_minus)):
        raise ValueError("losses must be finite")
    a_k, c_k = spsa_gains(k)
    grad = (loss_plus - loss_minus) / (2.0 * c_k * delta_vec)
    return _clamp(theta_k - a_k * grad, np.asarray(bounds, dtype=float))


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic sub-seed for (seed, *path); platform independent."""
    ss = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SpsaConfig:
    theta0: np.ndarray
    bounds: np.ndarray
    kappa: float = 15.0
    max_iters: int = 10
    planner_cfg: PlannerConfig = None
    seed: int = 0

    def __post_init__(self):
        self.theta0 = np.atleast_1d(np.asarray(self.theta0, dtype=float))
        self.bounds = np.asarray(self.bounds, dtype=float)
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")
        if self.max_iters < 1:
            raise ValueError("need at least one iteration")
        if self.bounds.shape != (self.theta0.size, 2):
            raise ValueError("bounds must be (dim, 2)")
        if np.any(self.theta0 < self.bounds[:, 0]) or \
                np.any(self.theta0 > self.bounds[:, 1]):
            raise ValueError("theta0 must lie inside the bounds")
        if self.planner_cfg is None:
            raise ValueError("planner_cfg is required")


@dataclass(frozen=True)
class FitRecord:
    k: int
    theta: np.ndarray
    a_k: float
    c_k: float
    loss: float


@dataclass
class FitReport:
    records: list[FitRecord] = field(default_factory=list)
    final_theta: np.ndarray = None
    final_path: Path = None
    converged: bool = False

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss


class FitAborted(RuntimeError):
    """Planner or metric failure mid-fit; carries the partial report."""

    def __init__(self, message: str, report: FitReport):
        super().__init__(message)
        self.report = report


def _snap_to_goal(path: Path, x_goal) -> Path:
    """Append the goal point when the tree did not land on it exactly, so the
    loss against goal-terminated targets is well defined."""
    x_goal = np.asarray(x_goal, dtype=float)
    if np.array_equal(path.waypoints[-1], x_goal):
        return path
    return Path(np.vstack([path.waypoints, x_goal]))


def fit(target: Path, cfg: SpsaConfig, risk_builder) -> FitReport:
    """Fit risk-model parameters so the planner reproduces ``target``.

    ``risk_builder(theta) -> RiskField`` realizes a parameter vector as a
    perceived-risk field (CPT parameters or a one-element CVaR q).  Planner
    seeds derive from (cfg.seed, k, e) where e numbers the evaluations of an
    iteration: 0 for theta+, 1 for theta-, 2 for the test plan.  Stops as
    soon as a test plan's loss drops below kappa.
    """
    rng = np.random.default_rng(cfg.seed)
    report = FitReport()
    theta = cfg.theta0.copy()

    def evaluate(th, k, which):
        pcfg = PlannerConfig(
            x_start=cfg.planner_cfg.x_start, x_goal=cfg.planner_cfg.x_goal,
            iterations=cfg.planner_cfg.iterations, delta=cfg.planner_cfg.delta,
            steer_distance=cfg.planner_cfg.steer_distance,
            gamma_rrt=cfg.planner_cfg.gamma_rrt,
            seed=derive_seed(cfg.seed, k, which))
        rf = risk_builder(th)
        _, path = plan(rf.space, rf, pcfg)
        path = _snap_to_goal(path, pcfg.x_goal)
        return float(area_between(path, target)), path

    try:
        loss0, path0 = evaluate(theta, 0, 2)
    except (ValueError, RuntimeError) as exc:
        raise FitAborted(f"initial evaluation failed: {exc}", report) from exc
    report.records.append(FitRecord(0, theta.copy(), float("nan"),
                                    float("nan"), loss0))
    report.final_theta = theta.copy()
    report.final_path = path0
    if loss0 < cfg.kappa:
        report.converged = True
        return report

    for k in range(1, cfg.max_iters + 1):
        a_k, c_k = spsa_gains(k)
        theta_plus, theta_minus, delta_vec = perturb(theta, c_k, rng, cfg.bounds)
        try:
            loss_plus, _ = evaluate(theta_plus, k, 0)
            loss_minus, _ = evaluate(theta_minus, k, 1)
            theta = spsa_step(theta, k, loss_plus, loss_minus, delta_vec,
                              cfg.bounds)
            loss_k, path_k = evaluate(theta, k, 2)
        except (ValueError, RuntimeError) as exc:
            raise FitAborted(f"iteration {k} failed: {exc}", report) from exc
        report.records.append(FitRecord(k, theta.copy(), a_k, c_k, loss_k))
        report.final_theta = theta.copy()
        report.final_path = path_k
        if loss_k < cfg.kappa:
            report.converged = True
            break
    return report


# --- report files -------------------------------------------------------------


def save_fit_report(report: FitReport, file, param_names=None):
    dim = report.records[0].theta.size
    if param_names is None:
        param_names = [f"theta{i}" for i in range(dim)]
    lines = ["k," + ",".join(param_names) + ",a_k,c_k,loss"]
    for rec in report.records:
        vals = [str(rec.k)] + [repr(v) for v in rec.theta]
        vals += [repr(rec.a_k), repr(rec.c_k), repr(rec.loss)]
        lines.append(",".join(vals))
    atomic_write_text(file, "\n".join(lines) + "\n")


def load_fit_report(file) -> FitReport:
    report = FitReport()
    with open(file, "r", encoding="utf-8") as fh:
        next(fh)    # header
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            k = int(parts[0])
            theta = np.array([float(v) for v in parts[1:-3]])
            a_k, c_k, loss = (float(v) for v in parts[-3:])
            report.records.append(FitRecord(k, theta, a_k, c_k, loss))
    if report.records:
        report.final_theta = report.records[-1].theta
    return report
