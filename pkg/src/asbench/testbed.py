"""Synthetic test functions and toy optimizers for self-contained experiments.

Five function families with seeded per-instance transformations (shifted
optimum, seeded optimal value, optional rotation for dimension >= 4) and four
simple optimizers.  `generate_archive` runs every optimizer on every instance
and emits records compatible with the archive module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .archive import InstanceKey, PerformanceArchive, ProblemKey, RunRecord
from .presolve import BudgetedObjective, SearchDone, as_box, nelder_mead_search
from .sampling import DEFAULT_BOUNDS, normalize_bounds
from .util import DataError, derive_seed

FAMILIES = ("sphere", "ellipsoid", "rastrigin", "rosenbrock", "linear_slope")
OPTIMIZER_KINDS = ("random_search", "one_plus_one_es", "nelder_mead", "coordinate_search")

_ROTATED = {"ellipsoid", "rastrigin", "rosenbrock"}


@dataclass(frozen=True)
class TestFunction:
    """One instance of a synthetic family; f(shift) == f_opt exactly."""

    family: str
    dimension: int
    instance_id: int
    shift: np.ndarray
    f_opt: float
    bounds: np.ndarray  # (n, 2)
    rotation: np.ndarray | None = None
    slopes: np.ndarray | None = None  # linear_slope coefficients (signed)

    @property
    def key(self) -> InstanceKey:
        return InstanceKey(ProblemKey(self.family, self.dimension), self.instance_id)

    def target(self, epsilon: float = 1e-2) -> float:
        return self.f_opt + epsilon

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        z = pts - self.shift
        if self.rotation is not None:
            z = z @ self.rotation.T
        if self.family == "sphere":
            val = np.sum(z**2, axis=1)
        elif self.family == "ellipsoid":
            n = self.dimension
            expo = np.zeros(n) if n == 1 else 6.0 * np.arange(n) / (n - 1)
            val = np.sum(10.0**expo * z**2, axis=1)
        elif self.family == "rastrigin":
            val = 10.0 * self.dimension + np.sum(z**2 - 10.0 * np.cos(2 * math.pi * z), axis=1)
        elif self.family == "rosenbrock":
            w = z + 1.0  # optimum of the classic form sits at the all-ones vector
            val = np.sum(100.0 * (w[:, 1:] - w[:, :-1] ** 2) ** 2 + (1.0 - w[:, :-1]) ** 2, axis=1)
        else:  # linear_slope: optimum on a seeded box corner
            val = np.sum(np.abs(self.slopes) * np.abs(pts - self.shift), axis=1)
        out = val + self.f_opt
        return float(out[0]) if single else out


def _random_rotation(n: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    return q * np.sign(np.diag(r))


def make_function(family: str, dimension: int, instance_id: int, seed: int,
                  bounds=DEFAULT_BOUNDS) -> TestFunction:
    if family not in FAMILIES:
        raise DataError(f"unknown family {family!r}")
    if family == "rosenbrock" and dimension < 2:
        raise DataError("rosenbrock needs dimension >= 2")
    box = normalize_bounds(bounds, dimension)
    rng = np.random.default_rng(derive_seed(seed, family, dimension, instance_id))
    f_opt = float(rng.uniform(-100.0, 100.0))
    slopes = None
    if family == "linear_slope":
        signs = np.where(rng.random(dimension) < 0.5, -1.0, 1.0)
        slopes = signs * rng.uniform(1.0, 3.0, size=dimension)
        shift = np.where(slopes > 0, box[:, 1], box[:, 0])
    else:
        shift = rng.uniform(-4.0, 4.0, size=dimension)
    rotation = None
    if family in _ROTATED and dimension >= 4:
        rotation = _random_rotation(dimension, rng)
    return TestFunction(
        family=family,
        dimension=dimension,
        instance_id=instance_id,
        shift=shift,
        f_opt=f_opt,
        bounds=box,
        rotation=rotation,
        slopes=slopes,
    )


def make_suite(families, dimensions, instances_per_function: int, seed: int,
               bounds=DEFAULT_BOUNDS) -> list[TestFunction]:
    """Deterministic suite of instantiated test functions."""
    if instances_per_function < 1:
        raise DataError("instances_per_function must be >= 1")
    suite = []
    for family in families:
        for dim in dimensions:
            for instance_id in range(1, instances_per_function + 1):
                suite.append(make_function(family, dim, instance_id, seed, bounds))
    return sorted(suite, key=lambda f: (f.family, f.dimension, f.instance_id))


@dataclass(frozen=True)
class ToyOptimizer:
    kind: str
    budget: int
    seed: int = 0
    optimizer_id: str | None = None

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise DataError(f"unknown optimizer kind {self.kind!r}")
        if self.budget < 1:
            raise DataError("budget must be >= 1")

    @property
    def name(self) -> str:
        return self.optimizer_id or self.kind


def _random_search(tracked: BudgetedObjective, box, rng):
    n = box.shape[0]
    while True:
        chunk = min(1024, tracked.remaining)
        tracked.eval_batch(rng.uniform(box[:, 0], box[:, 1], size=(chunk, n)))


def _one_plus_one_es(tracked: BudgetedObjective, box, rng):
    lo, hi = box[:, 0], box[:, 1]
    x = rng.uniform(lo, hi)
    fx = tracked(x)
    sigma = 0.25 * float(np.mean(hi - lo))
    min_sigma = 1e-12 * float(np.max(hi - lo))
    while True:
        y = np.clip(x + sigma * rng.normal(size=len(x)), lo, hi)
        fy = tracked(y)
        if fy <= fx:  # 1/5 success rule step-size adaptation
            x, fx = y, fy
            sigma *= 1.5
        else:
            sigma *= 1.5 ** (-0.25)
        sigma = min(max(sigma, min_sigma), float(np.max(hi - lo)))


def _nelder_mead(tracked: BudgetedObjective, box, rng):
    while True:  # restart from a fresh point whenever a run converges early
        nelder_mead_search(tracked, box, rng)


def _coordinate_search(tracked: BudgetedObjective, box, rng):
    lo, hi = box[:, 0], box[:, 1]
    while True:
        x = rng.uniform(lo, hi)
        fx = tracked(x)
        step = 0.5 * (hi - lo)
        while np.max(step) > 1e-12 * np.max(hi - lo):
            moved = False
            for i in range(len(x)):
                for direction in (+1.0, -1.0):
                    y = x.copy()
                    y[i] = min(max(y[i] + direction * step[i], lo[i]), hi[i])
                    fy = tracked(y)
                    if fy < fx:
                        x, fx = y, fy
                        moved = True
                        break
            if not moved:
                step *= 0.5


_OPTIMIZER_FUNCS = {
    "random_search": _random_search,
    "one_plus_one_es": _one_plus_one_es,
    "nelder_mead": _nelder_mead,
    "coordinate_search": _coordinate_search,
}


def run_toy_optimizer(optimizer: ToyOptimizer, objective, bounds, target: float,
                      run_seed: int) -> tuple[int, bool]:
    """Run until the target is first reached or the budget is spent.

    Returns (evaluations, success); for successful runs `evaluations` is the
    exact index of the first evaluation at or below the target.
    """
    box = as_box(bounds)
    tracked = BudgetedObjective(objective, optimizer.budget, target)
    rng = np.random.default_rng(run_seed)
    try:
        _OPTIMIZER_FUNCS[optimizer.kind](tracked, box, rng)
    except SearchDone:
        pass
    return tracked.evaluations, tracked.success


def generate_archive(suite, optimizers, epsilon: float = 1e-2, seed: int = 0) -> PerformanceArchive:
    """One record per (optimizer, instance): first hit of f_opt + epsilon or failure."""
    names = [opt.name for opt in optimizers]
    if len(set(names)) != len(names):
        raise DataError(f"duplicate optimizer ids: {names}")
    records = []
    for func in suite:
        for opt in optimizers:
            run_seed = derive_seed(seed, opt.name, opt.seed, func.family, func.dimension, func.instance_id)
            evaluations, success = run_toy_optimizer(opt, func, func.bounds, func.target(epsilon), run_seed)
            records.append(
                RunRecord(
                    optimizer_id=opt.name,
                    instance=func.key,
                    evaluations=evaluations,
                    success=success,
                    budget=opt.budget,
                )
            )
    return PerformanceArchive.from_records(records)
