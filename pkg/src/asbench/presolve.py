"""Pre-solving: budgeted objective instrumentation and a Nelder-Mead baseline.

A pre-solver attacks the problem with a small evaluation budget before any
sampling happens; on reaching the target value the selection pipeline is
skipped entirely.  Pre-solvers are pluggable through the PRESOLVERS registry;
anything with `run(objective, bounds, budget, target, seed) -> PresolveResult`
qualifies.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import normalize_bounds
from .util import DataError


class SearchDone(Exception):
    """Control-flow signal: target reached or budget exhausted."""


class BudgetedObjective:
    """Wraps an objective with exact evaluation counting and first-hit detection.

    Raises SearchDone on the evaluation that reaches the target or spends the
    last budgeted call.  `evaluations` reports the first-hit index after a
    success, otherwise the count actually spent.
    """

    def __init__(self, objective, budget: int, target: float, record_history: bool = False):
        if budget < 1:
            raise DataError(f"budget must be >= 1, got {budget}")
        self._objective = objective
        self.budget = budget
        self.target = target
        self.count = 0
        self.success_at: int | None = None
        self._history: list[tuple[np.ndarray, float]] | None = [] if record_history else None

    @property
    def success(self) -> bool:
        return self.success_at is not None

    @property
    def evaluations(self) -> int:
        return self.success_at if self.success else self.count

    @property
    def remaining(self) -> int:
        return self.budget - self.count

    def history(self) -> tuple[np.ndarray, np.ndarray]:
        if self._history is None:
            raise DataError("history recording was not enabled")
        if not self._history:
            return np.empty((0, 0)), np.empty(0)
        points = np.array([p for p, _ in self._history])
        values = np.array([v for _, v in self._history])
        return points, values

    def __call__(self, x) -> float:
        if self.remaining <= 0:
            raise SearchDone
        x = np.asarray(x, dtype=float)
        value = float(self._objective(x))
        self.count += 1
        if self._history is not None:
            self._history.append((x.copy(), value))
        if value <= self.target and self.success_at is None:
            self.success_at = self.count
            raise SearchDone
        if self.remaining <= 0:
            raise SearchDone
        return value

    def eval_batch(self, X) -> np.ndarray:
        """Evaluate rows of X until done; truncates at the budget or first hit."""
        values = []
        for row in X:
            values.append(self(row))
        return np.array(values)


@dataclass(frozen=True)
class PresolveResult:
    evaluations: int
    success: bool
    points: np.ndarray  # trajectory of evaluated points, in evaluation order
    values: np.ndarray


def _initial_simplex(x0: np.ndarray, box: np.ndarray) -> np.ndarray:
    # axis steps of 0.1 * range, flipped inward when they would leave the box
    n = len(x0)
    step = 0.1 * (box[:, 1] - box[:, 0])
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        if x0[i] + step[i] <= box[i, 1]:
            simplex[i + 1, i] += step[i]
        else:
            simplex[i + 1, i] -= step[i]
    return simplex


def as_box(bounds) -> np.ndarray:
    """Require explicit per-coordinate (n, 2) bounds."""
    box = np.asarray(bounds, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2:
        raise DataError(f"need per-coordinate (n, 2) bounds, got shape {box.shape}")
    return normalize_bounds(box, box.shape[0])


def nelder_mead_search(tracked: BudgetedObjective, bounds, rng,
                       alpha: float = 1.0, gamma: float = 2.0, beta: float = 0.5,
                       delta: float = 0.5, xatol: float = 1e-10, fatol: float = 1e-12) -> None:
    """One Nelder-Mead run inside the box; returns on convergence.

    Termination on target/budget arrives via SearchDone from the tracked
    objective.  Candidate points are clipped to the box.
    """
    box = as_box(bounds)

    def clip(x):
        return np.clip(x, box[:, 0], box[:, 1])

    x0 = rng.uniform(box[:, 0], box[:, 1])
    simplex = _initial_simplex(x0, box)
    fvals = np.array([tracked(v) for v in simplex])

    scale = float(np.max(box[:, 1] - box[:, 0]))
    while True:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        if (np.max(np.abs(simplex[1:] - simplex[0])) < xatol * scale
                and np.max(np.abs(fvals[1:] - fvals[0])) < fatol):
            return
        centroid = simplex[:-1].mean(axis=0)
        reflected = clip(centroid + alpha * (centroid - simplex[-1]))
        f_r = tracked(reflected)
        if fvals[0] <= f_r < fvals[-2]:
            simplex[-1], fvals[-1] = reflected, f_r
            continue
        if f_r < fvals[0]:
            expanded = clip(centroid + gamma * (reflected - centroid))
            f_e = tracked(expanded)
            if f_e < f_r:
                simplex[-1], fvals[-1] = expanded, f_e
            else:
                simplex[-1], fvals[-1] = reflected, f_r
            continue
        contracted = clip(centroid + beta * (simplex[-1] - centroid))
        f_c = tracked(contracted)
        if f_c < fvals[-1]:
            simplex[-1], fvals[-1] = contracted, f_c
            continue
        for i in range(1, len(simplex)):  # shrink toward the best vertex
            simplex[i] = clip(simplex[0] + delta * (simplex[i] - simplex[0]))
            fvals[i] = tracked(simplex[i])


class NelderMeadPresolver:
    """Simplex search with standard coefficients as the built-in pre-solver."""

    name = "nelder_mead"

    def run(self, objective, bounds, budget: int, target: float, seed: int | None = None) -> PresolveResult:
        tracked = BudgetedObjective(objective, budget, target, record_history=True)
        rng = np.random.default_rng(seed)
        try:
            nelder_mead_search(tracked, bounds, rng)
        except SearchDone:
            pass
        points, values = tracked.history()
        if tracked.success:
            points, values = points[: tracked.success_at], values[: tracked.success_at]
        return PresolveResult(
            evaluations=tracked.evaluations,
            success=tracked.success,
            points=points,
            values=values,
        )


PRESOLVERS = {"nelder_mead": NelderMeadPresolver}


def make_presolver(kind: str):
    try:
        return PRESOLVERS[kind]()
    except KeyError:
        raise DataError(f"unknown presolver {kind!r}; available: {sorted(PRESOLVERS)}") from None
