"""Portfolios, SP1-based rankings, the quality measure, and local search.

The quality of a portfolio sums, over every (function, dimension) cell,
c * (best rank among members that solve the cell) or a penalty of 1 when no
member solves it, with c = 1 / (universe size * number of cells).  A value
below 1 therefore certifies that every cell is solved by some member.
Portfolios are built by first-improvement local search over 1-swaps.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .archive import PerformanceArchive, ProblemKey
from .measures import sp1
from .util import DataError, derive_seed


@dataclass(frozen=True)
class Portfolio:
    members: tuple[str, ...]
    universe_size: int

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise DataError("duplicate portfolio members")
        if not 1 <= len(self.members) < self.universe_size:
            raise DataError(
                f"portfolio size must satisfy 1 <= k < {self.universe_size}, "
                f"got k={len(self.members)}"
            )


@dataclass(frozen=True)
class RankTable:
    """Per problem: optimizer -> rank (1 = best SP1) or None if unsolved."""

    universe: tuple[str, ...]
    ranks: dict = field(repr=False)

    @property
    def universe_size(self) -> int:
        return len(self.universe)

    def problems(self, dimensions=None) -> list[ProblemKey]:
        problems = sorted(self.ranks)
        if dimensions is None:
            return problems
        dims = set(dimensions)
        return [p for p in problems if p.dimension in dims]


def build_rank_table(archive: PerformanceArchive, universe) -> RankTable:
    """Rank the universe per problem by ascending SP1; SP1 ties break by id."""
    universe = tuple(sorted(universe))
    if len(set(universe)) != len(universe):
        raise DataError("duplicate optimizer ids in universe")
    ranks: dict[ProblemKey, dict[str, int | None]] = {}
    for problem in archive.problems():
        cells = {opt: sp1(archive.runs(opt, problem)) for opt in universe}
        solved = sorted(
            (mv.value, opt) for opt, mv in cells.items() if mv.defined
        )
        table = {opt: None for opt in universe}
        for rank, (_, opt) in enumerate(solved, start=1):
            table[opt] = rank
        ranks[problem] = table
    return RankTable(universe=universe, ranks=ranks)


def _quality_numerator(members, rank_table: RankTable, problems) -> int:
    # m(A) * (l * P) as an exact integer: solved cells contribute their best
    # member rank, unsolved cells contribute the full l * P penalty
    penalty = rank_table.universe_size * len(problems)
    num = 0
    for problem in problems:
        row = rank_table.ranks[problem]
        best = None
        for member in members:
            rank = row[member]
            if rank is not None and (best is None or rank < best):
                best = rank
        num += penalty if best is None else best
    return num


def quality(portfolio: Portfolio, rank_table: RankTable, dimensions=None) -> float:
    """Ranking-based quality m(A); lower is better, >= 1 means a cell is unsolved."""
    if not portfolio.members:
        raise DataError("empty portfolio")
    problems = rank_table.problems(dimensions)
    if not problems:
        raise DataError("rank table has no problems for the requested dimensions")
    num = _quality_numerator(portfolio.members, rank_table, problems)
    return num / (rank_table.universe_size * len(problems))


def check_solves_all(portfolio: Portfolio, rank_table: RankTable, dimensions=None) -> bool:
    return quality(portfolio, rank_table, dimensions) < 1.0


@dataclass(frozen=True)
class LocalSearchResult:
    portfolio: Portfolio
    quality: float
    seed: int
    trace: tuple[float, ...]  # quality after init and after each accepted swap


def local_search(rank_table: RankTable, universe, k: int, seed: int, dimensions=None,
                 initial=None) -> LocalSearchResult:
    """First-improvement 1-swap local search from a seeded random k-subset.

    Scans candidates a' from outside the portfolio in lexicographic order and
    members a in portfolio order; the first strictly improving swap is applied
    and the scan restarts.  Terminates at a 1-swap local optimum.  `initial`
    overrides the random starting subset.
    """
    universe = tuple(sorted(universe))
    l = len(universe)
    if not 1 <= k < l:
        raise DataError(f"k must satisfy 1 <= k < {l}, got {k}")
    problems = rank_table.problems(dimensions)
    denom = rank_table.universe_size * len(problems)

    if initial is not None:
        members = list(initial)
        if len(members) != k or not set(members) <= set(universe):
            raise DataError("initial subset must hold k optimizers from the universe")
    else:
        rng = np.random.default_rng(seed)
        members = [universe[i] for i in sorted(rng.choice(l, size=k, replace=False))]
    current = _quality_numerator(members, rank_table, problems)
    trace = [current / denom]

    improved = True
    while improved:
        improved = False
        outside = [opt for opt in universe if opt not in members]
        for candidate in outside:
            for pos in range(k):
                trial = list(members)
                trial[pos] = candidate
                num = _quality_numerator(trial, rank_table, problems)
                if num < current:
                    members, current = trial, num
                    trace.append(current / denom)
                    improved = True
                    break
            if improved:
                break
    return LocalSearchResult(
        portfolio=Portfolio(members=tuple(members), universe_size=l),
        quality=current / denom,
        seed=seed,
        trace=tuple(trace),
    )


def best_of_restarts(rank_table: RankTable, universe, k: int, restarts: int, seed: int, dimensions=None) -> LocalSearchResult:
    """Best of `restarts` independent local searches (ties favor earlier restarts)."""
    if restarts < 1:
        raise DataError(f"restarts must be >= 1, got {restarts}")
    best = None
    for r in range(restarts):
        result = local_search(rank_table, universe, k, derive_seed(seed, "restart", r), dimensions)
        if best is None or result.quality < best.quality:
            best = result
    return best


def write_portfolio_json(result: LocalSearchResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {"members": list(result.portfolio.members), "quality": result.quality, "seed": result.seed},
            fh,
            indent=2,
        )
        fh.write("\n")
