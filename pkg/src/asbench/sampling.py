"""Seeded Latin hypercube sampling of the decision space.

`lhs_sample` places exactly one point per equal-width stratum per coordinate
(uniform position within the stratum), then applies a maximin refinement:
random within-coordinate value swaps between two points are kept whenever
they strictly increase the minimum pairwise distance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .util import DataError

DEFAULT_BOUNDS = (-5.0, 5.0)  # BBOB box convention


def normalize_bounds(bounds, n: int) -> np.ndarray:
    """Accept a (low, high) pair or per-coordinate array; return an (n, 2) array."""
    arr = np.asarray(bounds, dtype=float)
    if arr.shape == (2,):
        arr = np.tile(arr, (n, 1))
    if arr.shape != (n, 2):
        raise DataError(f"bounds must be (low, high) or shape ({n}, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DataError("bounds must be finite")
    if np.any(arr[:, 0] >= arr[:, 1]):
        raise DataError("each lower bound must be strictly below its upper bound")
    return arr


@dataclass(frozen=True)
class SampleSet:
    """A sampled point set with objective values, all within the box bounds."""

    points: np.ndarray  # (s, n)
    values: np.ndarray  # (s,)
    bounds: np.ndarray  # (n, 2)
    seed: int | None = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if points.ndim != 2 or values.ndim != 1 or len(points) != len(values):
            raise DataError(
                f"points {points.shape} and values {values.shape} must be (s, n) and (s,)"
            )
        bounds = normalize_bounds(self.bounds, points.shape[1])
        if not np.all(np.isfinite(values)):
            raise DataError("objective values must be finite")
        eps = 1e-9 * (bounds[:, 1] - bounds[:, 0])
        if np.any(points < bounds[:, 0] - eps) or np.any(points > bounds[:, 1] + eps):
            raise DataError("points lie outside the bounds")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "bounds", bounds)

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]


def default_sample_size(dimension: int, factor: int = 50) -> int:
    """Sample size 50 * n by default; 25/100/200 factors are the studied variants."""
    return factor * dimension


def _min_sq_dist(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    dist = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(dist, np.inf)
    return dist


def lhs_sample(n: int, s: int, bounds=DEFAULT_BOUNDS, seed: int | None = None, refine_iters: int = 100) -> np.ndarray:
    """Draw an s x n Latin hypercube sample within the bounds.

    Deterministic given the seed.  For each coordinate the multiset of
    stratum indices hit is exactly {0..s-1}.
    """
    if s < 1:
        raise DataError(f"sample size must be >= 1, got {s}")
    if n < 1:
        raise DataError(f"dimension must be >= 1, got {n}")
    box = normalize_bounds(bounds, n)
    rng = np.random.default_rng(seed)
    unit = np.empty((s, n))
    for j in range(n):
        unit[:, j] = (rng.permutation(s) + rng.random(s)) / s
    points = box[:, 0] + unit * (box[:, 1] - box[:, 0])
    if s < 2:
        return points

    # maximin refinement: swapping one coordinate's values between two points
    # keeps the stratification and is accepted only on strict improvement
    dist = _min_sq_dist(points)
    current_min = dist.min()
    min_pairs = np.argwhere(dist == current_min)
    for _ in range(refine_iters):
        r1, r2 = rng.choice(s, size=2, replace=False)
        j = int(rng.integers(n))
        # improvement is impossible unless every current minimum pair touches
        # one of the swapped rows
        touched = ((min_pairs == r1) | (min_pairs == r2)).any(axis=1)
        if not touched.all():
            continue
        trial = points.copy()
        trial[r1, j], trial[r2, j] = trial[r2, j], trial[r1, j]
        others = np.delete(np.arange(s), [r1, r2])
        v1 = np.sum((trial[others] - trial[r1]) ** 2, axis=1)
        v2 = np.sum((trial[others] - trial[r2]) ** 2, axis=1)
        d12 = np.sum((trial[r1] - trial[r2]) ** 2)
        cand = min(v1.min(initial=np.inf), v2.min(initial=np.inf), d12)
        if cand <= current_min:
            continue
        rest = dist[np.ix_(others, others)].min() if len(others) > 1 else np.inf
        new_min = min(rest, cand)
        if new_min > current_min:
            points = trial
            for r in (r1, r2):
                d = np.sum((points - points[r]) ** 2, axis=1)
                d[r] = np.inf
                dist[r, :] = d
                dist[:, r] = d
            current_min = new_min
            min_pairs = np.argwhere(dist == current_min)
    return points


def evaluate_sample(points: np.ndarray, objective, bounds=DEFAULT_BOUNDS, seed: int | None = None) -> SampleSet:
    """Evaluate the objective at each point; one evaluation per row."""
    points = np.asarray(points, dtype=float)
    values = np.array([float(objective(p)) for p in points])
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise DataError(f"non-finite objective value at sample point {bad}")
    return SampleSet(points=points, values=values, bounds=normalize_bounds(bounds, points.shape[1]), seed=seed)


def write_sample_json(sample: SampleSet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "bounds": sample.bounds.tolist(),
                "seed": sample.seed,
                "points": sample.points.tolist(),
                "values": sample.values.tolist(),
            },
            fh,
        )
        fh.write("\n")
