"""Fold generation for the four cross-validation protocols.

LOIO leaves one instance id out per fold, LOPO one function, LOPOAD one
(function, dimension) cell across all dimensions, and RI partitions the
instances of a dimension at random.  LOIO/LOPO/RI operate within a single
dimension; `fold_groups` runs them per dimension of a mixed suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .archive import InstanceKey
from .util import DataError, derive_seed

PROTOCOLS = ("LOIO", "LOPO", "LOPOAD", "RI")


@dataclass(frozen=True)
class FoldSpec:
    protocol: str
    fold_index: int
    train: tuple[InstanceKey, ...]
    test: tuple[InstanceKey, ...]


def training_measure_scope(fold: FoldSpec) -> tuple[InstanceKey, ...]:
    """Instances that training-time statistics may be computed from."""
    return fold.train


def _check_regular(suite) -> tuple:
    suite = sorted(set(suite))
    if not suite:
        raise DataError("empty suite")
    instance_ids = {}
    for key in suite:
        instance_ids.setdefault(key.problem, set()).add(key.instance_id)
    id_sets = set(map(frozenset, instance_ids.values()))
    if len(id_sets) > 1:
        raise DataError("irregular suite: functions have differing instance id sets")
    return tuple(suite)


def _make_folds(protocol, suite, groups) -> list[FoldSpec]:
    all_set = set(suite)
    out = []
    for index, test in enumerate(groups):
        test = tuple(sorted(test))
        train = tuple(sorted(all_set - set(test)))
        if not train:
            raise DataError(f"{protocol}: fold {index} has an empty training set")
        out.append(FoldSpec(protocol=protocol, fold_index=index, train=train, test=test))
    return out


def folds(protocol: str, suite, seed: int | None = None, ri_folds: int = 10) -> list[FoldSpec]:
    """Folds of one protocol cycle; test sets partition the suite.

    LOIO, LOPO, and RI require a single-dimension suite (use `fold_groups`
    for mixed suites); LOPOAD spans all dimensions present.
    """
    if protocol not in PROTOCOLS:
        raise DataError(f"unknown protocol {protocol!r}")
    suite = _check_regular(suite)
    dimensions = sorted({k.problem.dimension for k in suite})

    if protocol == "LOPOAD":
        problems = sorted({k.problem for k in suite})
        if len(problems) < 2:
            raise DataError("LOPOAD needs at least 2 (function, dimension) cells")
        groups = [[k for k in suite if k.problem == p] for p in problems]
        return _make_folds(protocol, suite, groups)

    if len(dimensions) != 1:
        raise DataError(f"{protocol} operates per dimension; suite spans {dimensions}")

    if protocol == "LOIO":
        ids = sorted({k.instance_id for k in suite})
        if len(ids) < 2:
            raise DataError("LOIO needs at least 2 instances per function")
        groups = [[k for k in suite if k.instance_id == i] for i in ids]
        return _make_folds(protocol, suite, groups)

    if protocol == "LOPO":
        functions = sorted({k.problem for k in suite})
        if len(functions) < 2:
            raise DataError("LOPO needs at least 2 functions")
        groups = [[k for k in suite if k.problem == f] for f in functions]
        return _make_folds(protocol, suite, groups)

    # RI: seeded random partition, leftovers distributed round-robin
    count = len(suite)
    n_folds = ri_folds if count >= 2 * ri_folds else max(2, count // 2)
    if count < 2:
        raise DataError("RI needs at least 2 instances")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(count)
    groups = [[suite[i] for i in perm[f::n_folds]] for f in range(n_folds)]
    return _make_folds(protocol, suite, groups)


def fold_groups(protocol: str, suite, seed: int | None = None, ri_folds: int = 10) -> list[list[FoldSpec]]:
    """Fold lists covering a mixed-dimension suite: one per dimension for the
    per-dimension protocols, a single list for LOPOAD."""
    suite = _check_regular(suite)
    if protocol == "LOPOAD":
        return [folds(protocol, suite, seed, ri_folds)]
    out = []
    for dim in sorted({k.problem.dimension for k in suite}):
        sub = [k for k in suite if k.problem.dimension == dim]
        sub_seed = None if seed is None else derive_seed(seed, "dim", dim)
        out.append(folds(protocol, sub, sub_seed, ri_folds))
    return out
