import numpy as np
import pytest

from asbench.archive import InstanceKey, PerformanceArchive, ProblemKey, RunRecord

# FE/success tuples from the published 5-dimensional f24 comparison
TABLE_I = {
    "HCMA": ([3097698, 2254446, 5001954, 5001015, 5001872], [1, 1, 0, 0, 0]),
    "HMLSL": ([100021, 100002, 100206, 100008, 100006], [0, 0, 0, 0, 0]),
    "AS1": ([3097948, 2254696, 100456, 100258, 100256], [1, 1, 0, 0, 0]),
    "AS2": ([3097948, 100252, 100456, 100258, 100256], [1, 0, 0, 0, 0]),
}
TABLE_I_PROBLEM = ProblemKey("f24", 5)


def records_for(optimizer, evaluations, successes, problem=TABLE_I_PROBLEM, budget=None):
    """One record per instance; failed runs default to budget == evaluations."""
    out = []
    for i, (fe, s) in enumerate(zip(evaluations, successes), start=1):
        b = budget if budget is not None else (fe if not s else 6_000_000)
        out.append(
            RunRecord(
                optimizer_id=optimizer,
                instance=InstanceKey(problem, i),
                evaluations=fe,
                success=bool(s),
                budget=max(b, fe),
            )
        )
    return out


@pytest.fixture
def table_i_archive():
    records = []
    for name, (fes, succ) in TABLE_I.items():
        records.extend(records_for(name, fes, succ))
    return PerformanceArchive.from_records(records)


def grid_archive(sp1_evals, functions=None, dimension=2, n_instances=1, budget=10**6):
    """Archive where each optimizer's SP1 on each function is dictated directly.

    sp1_evals: {optimizer: {function: evals or None}}; None means all runs
    fail.  With every run successful at a fixed evaluation count, SP1 equals
    that count exactly.
    """
    records = []
    for opt, by_func in sp1_evals.items():
        for func, evals in by_func.items():
            problem = ProblemKey(func, dimension)
            for i in range(1, n_instances + 1):
                records.append(
                    RunRecord(
                        optimizer_id=opt,
                        instance=InstanceKey(problem, i),
                        evaluations=evals if evals is not None else budget,
                        success=evals is not None,
                        budget=budget,
                    )
                )
    return PerformanceArchive.from_records(records)


def synthetic_suite_keys(n_functions=24, n_instances=5, dimensions=(2, 3, 5, 10)):
    return [
        InstanceKey(ProblemKey(f"f{f:02d}", d), i)
        for f in range(1, n_functions + 1)
        for d in dimensions
        for i in range(1, n_instances + 1)
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
