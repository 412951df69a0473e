import itertools
import json

import numpy as np
import pytest

from asbench.archive import ProblemKey
from asbench.portfolio import (
    LocalSearchResult,
    Portfolio,
    RankTable,
    best_of_restarts,
    build_rank_table,
    check_solves_all,
    local_search,
    quality,
    write_portfolio_json,
)
from asbench.measures import sp1
from asbench.util import DataError

from conftest import grid_archive


def rank_table_from(ranks_by_problem, universe):
    return RankTable(universe=tuple(sorted(universe)), ranks=dict(ranks_by_problem))


def test_build_rank_table_simple():
    archive = grid_archive({"a": {"f1": 10}, "b": {"f1": 5}, "c": {"f1": None}})
    table = build_rank_table(archive, ["a", "b", "c"])
    assert table.ranks[ProblemKey("f1", 2)] == {"a": 2, "b": 1, "c": None}


def test_build_rank_table_ties_by_id():
    archive = grid_archive({"a": {"f1": 7}, "b": {"f1": 7}, "c": {"f1": 7}})
    table = build_rank_table(archive, ["a", "b", "c"])
    assert table.ranks[ProblemKey("f1", 2)] == {"a": 1, "b": 2, "c": 3}


def test_build_rank_table_matches_sort_oracle(rng):
    names = [f"o{i}" for i in range(6)]
    grid = {
        name: {f"f{j}": int(rng.integers(1, 1000)) for j in range(4)} for name in names
    }
    archive = grid_archive(grid)
    table = build_rank_table(archive, names)
    for j in range(4):
        problem = ProblemKey(f"f{j}", 2)
        oracle = sorted(names, key=lambda o: (sp1(archive.runs(o, problem)).value, o))
        for rank, name in enumerate(oracle, start=1):
            assert table.ranks[problem][name] == rank


def _full_rank_table(n_problems, universe, rank_one_member=None, rng=None):
    """Random rank permutations; optionally force one member to rank 1 everywhere."""
    universe = sorted(universe)
    ranks = {}
    for p in range(n_problems):
        perm = list(rng.permutation(len(universe)) + 1) if rng is not None else list(
            range(1, len(universe) + 1)
        )
        row = dict(zip(universe, perm))
        if rank_one_member is not None:
            swap_with = next(o for o, r in row.items() if r == 1)
            row[swap_with] = row[rank_one_member]
            row[rank_one_member] = 1
        ranks[ProblemKey(f"f{p:02d}", 2)] = row
    return RankTable(universe=tuple(universe), ranks=ranks)


def test_quality_all_rank_one_cells(rng):
    universe = [f"o{i:03d}" for i in range(209)]
    table = _full_rank_table(96, universe, rank_one_member="o000", rng=rng)
    pf = Portfolio(members=("o000",), universe_size=209)
    assert quality(pf, table) == pytest.approx(1 / 209, rel=1e-12)


def test_quality_solving_nothing_is_cell_count():
    universe = ["a", "b", "c"]
    ranks = {
        ProblemKey(f"f{i}", 2): {"a": None, "b": None, "c": 1} for i in range(4)
    }
    table = RankTable(universe=tuple(universe), ranks=ranks)
    pf = Portfolio(members=("a", "b"), universe_size=3)
    assert quality(pf, table) == 4.0
    assert not check_solves_all(pf, table)


def test_quality_hand_sum():
    universe = [f"o{i}" for i in range(6)]
    ranks = {
        ProblemKey("f0", 2): {"o0": 1, "o1": 2, "o2": 3, "o3": 4, "o4": 5, "o5": 6},
        ProblemKey("f1", 2): {"o0": 6, "o1": 5, "o2": 4, "o3": 3, "o4": 2, "o5": 1},
        ProblemKey("f2", 2): {"o0": 2, "o1": 1, "o2": None, "o3": 3, "o4": 4, "o5": 5},
        ProblemKey("f3", 2): {"o0": None, "o1": None, "o2": 1, "o3": 2, "o4": 3, "o5": None},
    }
    table = RankTable(universe=tuple(universe), ranks=ranks)
    pf = Portfolio(members=("o0", "o1"), universe_size=6)
    # c = 1/(6*4); scores: f0 -> min(1,2)=1, f1 -> min(6,5)=5, f2 -> min(2,1)=1, f3 unsolved -> 1
    assert quality(pf, table) == pytest.approx((1 + 5 + 1) / 24 + 1, rel=1e-12)


def test_check_solves_all_matches_coverage_scan(rng):
    universe = [f"o{i}" for i in range(5)]
    for trial in range(20):
        ranks = {}
        for p in range(3):
            row = {}
            solved = rng.random(5) < 0.6
            perm = iter(np.argsort(rng.random(int(solved.sum()))) + 1)
            row = {
                o: (int(next(perm)) if s else None) for o, s in zip(universe, solved)
            }
            ranks[ProblemKey(f"f{p}", 2)] = row
        table = RankTable(universe=tuple(universe), ranks=ranks)
        members = tuple(rng.choice(universe, size=2, replace=False))
        pf = Portfolio(members=members, universe_size=5)
        oracle = all(
            any(table.ranks[p][m] is not None for m in members) for p in ranks
        )
        got = check_solves_all(pf, table)
        if oracle:
            # solved everywhere: quality < 1 unless every best rank is maximal
            assert got == (quality(pf, table) < 1.0)
        else:
            assert not got


def _random_sp1_archive(rng, l, n_funcs, fail_prob=0.25):
    grid = {}
    for i in range(l):
        grid[f"o{i}"] = {
            f"f{j}": (None if rng.random() < fail_prob else int(rng.integers(1, 500)))
            for j in range(n_funcs)
        }
    return grid_archive(grid)


def test_local_search_fixed_point_when_initial_is_optimal(rng):
    archive = _random_sp1_archive(rng, 6, 4)
    universe = [f"o{i}" for i in range(6)]
    table = build_rank_table(archive, universe)
    first = local_search(table, universe, 2, seed=1)
    again = local_search(table, universe, 2, seed=99, initial=first.portfolio.members)
    assert again.portfolio.members == first.portfolio.members
    assert again.quality == first.quality
    assert len(again.trace) == 1


def test_local_search_versus_brute_force(rng):
    hits = 0
    trials = 100
    for trial in range(trials):
        l = int(rng.integers(6, 9))
        k = int(rng.integers(2, 4))
        universe = [f"o{i}" for i in range(l)]
        table = build_rank_table(_random_sp1_archive(rng, l, 4), universe)
        best = best_of_restarts(table, universe, k, restarts=10, seed=trial)

        # every restart result must be a verified 1-swap local optimum
        members = best.portfolio.members
        for outside in set(universe) - set(members):
            for pos in range(k):
                trial_members = list(members)
                trial_members[pos] = outside
                pf = Portfolio(members=tuple(trial_members), universe_size=l)
                assert quality(pf, table) >= best.quality - 1e-12

        exhaustive = min(
            quality(Portfolio(members=subset, universe_size=l), table)
            for subset in itertools.combinations(universe, k)
        )
        if best.quality == exhaustive:
            hits += 1
    assert hits >= 0.9 * trials


def test_local_search_trace_monotone(rng):
    for seed in range(20):
        universe = [f"o{i}" for i in range(7)]
        table = build_rank_table(_random_sp1_archive(rng, 7, 5), universe)
        result = local_search(table, universe, 3, seed=seed)
        assert all(a > b for a, b in zip(result.trace, result.trace[1:]))


def test_local_search_deterministic():
    rng = np.random.default_rng(5)
    universe = [f"o{i}" for i in range(6)]
    table = build_rank_table(_random_sp1_archive(rng, 6, 4), universe)
    a = local_search(table, universe, 2, seed=123)
    b = local_search(table, universe, 2, seed=123)
    assert a == b


def test_adding_rank_one_member_never_hurts(rng):
    universe = [f"o{i}" for i in range(6)]
    table = build_rank_table(_random_sp1_archive(rng, 6, 4, fail_prob=0.0), universe)
    for problem, row in table.ranks.items():
        champion = next(o for o, r in row.items() if r == 1)
        base = Portfolio(members=("o0", "o1"), universe_size=6)
        if champion in base.members:
            continue
        grown = Portfolio(members=base.members + (champion,), universe_size=6)
        assert quality(grown, table) <= quality(base, table)


def test_portfolio_validation():
    with pytest.raises(DataError):
        Portfolio(members=("a", "a"), universe_size=5)
    with pytest.raises(DataError):
        Portfolio(members=tuple("abcde"), universe_size=5)
    with pytest.raises(DataError):
        Portfolio(members=(), universe_size=5)


def test_local_search_k_bounds(rng):
    universe = [f"o{i}" for i in range(4)]
    table = build_rank_table(_random_sp1_archive(rng, 4, 2), universe)
    with pytest.raises(DataError):
        local_search(table, universe, 4, seed=0)


def test_portfolio_json(tmp_path, rng):
    universe = [f"o{i}" for i in range(6)]
    table = build_rank_table(_random_sp1_archive(rng, 6, 4), universe)
    result = local_search(table, universe, 2, seed=7)
    out = tmp_path / "portfolio.json"
    write_portfolio_json(result, out)
    data = json.loads(out.read_text())
    assert data == {
        "members": list(result.portfolio.members),
        "quality": result.quality,
        "seed": 7,
    }
