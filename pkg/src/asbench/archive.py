"""Archived optimizer performance data and its CSV ingestion/export.

The archive stores one run per (optimizer, function, dimension, instance):
the number of objective evaluations spent until the optimizer terminated,
whether the target precision was reached, and the evaluation budget the run
was allowed.  CSV schema (header required, UTF-8, LF):

    optimizer,function,dimension,instance,evaluations,success,budget

with success in {0,1}.  Export reproduces the same schema bit-exactly with
rows ordered by (optimizer, function, dimension, instance).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .util import DataError

CSV_HEADER = "optimizer,function,dimension,instance,evaluations,success,budget"


@dataclass(frozen=True, order=True)
class ProblemKey:
    """A test function at a fixed dimension."""

    function_id: str
    dimension: int

    def __post_init__(self):
        if not self.function_id:
            raise DataError("function_id must be non-empty")
        if self.dimension < 1:
            raise DataError(f"dimension must be >= 1, got {self.dimension}")


@dataclass(frozen=True, order=True)
class InstanceKey:
    """One parameterized instance of a problem."""

    problem: ProblemKey
    instance_id: int

    def __post_init__(self):
        if self.instance_id < 1:
            raise DataError(f"instance_id must be >= 1, got {self.instance_id}")


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one optimizer run on one function instance.

    `evaluations` counts every objective evaluation until termination; for
    unsuccessful runs it is the number actually spent before giving up,
    which may be below `budget`.
    """

    optimizer_id: str
    instance: InstanceKey
    evaluations: int
    success: bool
    budget: int

    def __post_init__(self):
        if not self.optimizer_id:
            raise DataError("optimizer_id must be non-empty")
        if self.evaluations < 1:
            raise DataError(f"evaluations must be >= 1, got {self.evaluations}")
        if self.budget < 1:
            raise DataError(f"budget must be >= 1, got {self.budget}")
        if self.evaluations > self.budget:
            raise DataError(
                f"evaluations ({self.evaluations}) exceed budget ({self.budget}) "
                f"for {self.optimizer_id} on {self.instance}"
            )


@dataclass(frozen=True)
class PerformanceArchive:
    """Immutable, validated collection of run records.

    At most one record exists per (optimizer, instance), and every optimizer
    appearing for a problem covers all of that problem's instances.
    """

    records: tuple[RunRecord, ...]
    _index: dict = field(repr=False, compare=False, default_factory=dict)

    @classmethod
    def from_records(cls, records) -> "PerformanceArchive":
        records = tuple(records)
        index: dict[tuple[str, ProblemKey], dict[int, RunRecord]] = {}
        seen: set[tuple[str, InstanceKey]] = set()
        for rec in records:
            key = (rec.optimizer_id, rec.instance)
            if key in seen:
                raise DataError(f"duplicate record for {key}")
            seen.add(key)
            index.setdefault((rec.optimizer_id, rec.instance.problem), {})[
                rec.instance.instance_id
            ] = rec
        # ragged coverage is rejected per problem: all optimizers present for
        # a problem must cover the same instance set
        per_problem: dict[ProblemKey, dict[str, frozenset]] = {}
        for (opt, problem), by_instance in index.items():
            per_problem.setdefault(problem, {})[opt] = frozenset(by_instance)
        for problem, by_opt in per_problem.items():
            covers = set(by_opt.values())
            if len(covers) > 1:
                raise DataError(
                    f"ragged instance coverage for {problem}: "
                    + "; ".join(f"{o}: {sorted(c)}" for o, c in sorted(by_opt.items()))
                )
        return cls(records=records, _index=index)

    def optimizers(self) -> list[str]:
        return sorted({rec.optimizer_id for rec in self.records})

    def problems(self) -> list[ProblemKey]:
        return sorted({rec.instance.problem for rec in self.records})

    def dimensions(self) -> list[int]:
        return sorted({rec.instance.problem.dimension for rec in self.records})

    def instances_of(self, problem: ProblemKey) -> list[InstanceKey]:
        """All instances recorded for a problem, ascending by instance id."""
        ids: set[int] = set()
        for (_, prob), by_instance in self._index.items():
            if prob == problem:
                ids.update(by_instance)
        if not ids:
            raise DataError(f"unknown problem {problem}")
        return [InstanceKey(problem, i) for i in sorted(ids)]

    def covers(self, optimizer_id: str, problem: ProblemKey) -> bool:
        return (optimizer_id, problem) in self._index

    def runs(self, optimizer_id: str, problem: ProblemKey) -> list[RunRecord]:
        """Records of one optimizer on one problem, ordered by instance id."""
        by_instance = self._index.get((optimizer_id, problem))
        if not by_instance:
            raise DataError(f"no records for optimizer {optimizer_id!r} on {problem}")
        return [by_instance[i] for i in sorted(by_instance)]

    def run(self, optimizer_id: str, instance: InstanceKey) -> RunRecord:
        by_instance = self._index.get((optimizer_id, instance.problem))
        if not by_instance or instance.instance_id not in by_instance:
            raise DataError(f"no record for optimizer {optimizer_id!r} on {instance}")
        return by_instance[instance.instance_id]

    def all_instances(self) -> list[InstanceKey]:
        return sorted({rec.instance for rec in self.records})


def instances_of(archive: PerformanceArchive, problem: ProblemKey) -> list[InstanceKey]:
    return archive.instances_of(problem)


def _parse_row(line: str, lineno: int) -> RunRecord:
    parts = line.split(",")
    if len(parts) != 7:
        raise DataError(f"line {lineno}: expected 7 fields, got {len(parts)}")
    opt, func, dim, inst, evals, success, budget = (p.strip() for p in parts)
    try:
        dim_i = int(dim)
        inst_i = int(inst)
        evals_i = int(evals)
        budget_i = int(budget)
        if success not in ("0", "1"):
            raise ValueError(f"success must be 0 or 1, got {success!r}")
    except ValueError as exc:
        raise DataError(f"line {lineno}: {exc}") from None
    try:
        return RunRecord(
            optimizer_id=opt,
            instance=InstanceKey(ProblemKey(func, dim_i), inst_i),
            evaluations=evals_i,
            success=success == "1",
            budget=budget_i,
        )
    except DataError as exc:
        raise DataError(f"line {lineno}: {exc}") from None


def ingest_csv(path) -> PerformanceArchive:
    """Read and validate an archive CSV (schema in the module docstring)."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty file")
    if lines[0].strip() != CSV_HEADER:
        raise DataError(f"{path}: bad header {lines[0]!r}, expected {CSV_HEADER!r}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        records.append(_parse_row(line, lineno))
    return PerformanceArchive.from_records(records)


def export_csv(archive: PerformanceArchive, path) -> None:
    """Write the archive back out; ingest(export(ingest(x))) is a fixed point."""
    rows = sorted(
        archive.records,
        key=lambda r: (
            r.optimizer_id,
            r.instance.problem.function_id,
            r.instance.problem.dimension,
            r.instance.instance_id,
        ),
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.optimizer_id},{r.instance.problem.function_id},"
                f"{r.instance.problem.dimension},{r.instance.instance_id},"
                f"{r.evaluations},{1 if r.success else 0},{r.budget}\n"
            )
