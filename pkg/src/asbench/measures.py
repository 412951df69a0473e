"""Fixed-target performance measures.

ERT is the summed evaluation count of all runs divided by the number of
successful runs; SP1 is the mean evaluation count of successful runs divided
by the success probability.  Both are undefined when no run succeeded.
Relative measures divide by the best value among a set of optimizers on the
same function; undefined relative values are imputed PAR10-style with ten
times the worst defined relative value of the same dimension.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .archive import PerformanceArchive, ProblemKey
from .util import DataError

ERT = "ERT"
SP1 = "SP1"
REL_ERT = "relERT"
REL_SP1 = "relSP1"
_REL_OF = {ERT: REL_ERT, SP1: REL_SP1}
_BASE_OF = {REL_ERT: ERT, REL_SP1: SP1}


@dataclass(frozen=True)
class MeasureValue:
    kind: str
    value: float | None  # None = undefined (no successful run, not imputed)
    imputed: bool = False

    @property
    def defined(self) -> bool:
        return self.value is not None


def _check_runs(runs) -> None:
    if not runs:
        raise DataError("empty run list")
    keys = {(r.optimizer_id, r.instance.problem) for r in runs}
    if len(keys) > 1:
        raise DataError(f"runs span multiple (optimizer, problem) cells: {sorted(keys)}")


def ert_value(evaluations, successes) -> float | None:
    n_succ = int(sum(bool(s) for s in successes))
    if n_succ == 0:
        return None
    return sum(evaluations) / n_succ


def sp1_value(evaluations, successes) -> float | None:
    # FE_avg / p_succ, arranged as sum * n_run / n_succ^2 so that integer
    # inputs stay exact in floating point
    n_run = len(evaluations)
    n_succ = int(sum(bool(s) for s in successes))
    if n_succ == 0:
        return None
    succ_sum = sum(e for e, s in zip(evaluations, successes) if s)
    return succ_sum * n_run / (n_succ * n_succ)


def ert(runs) -> MeasureValue:
    """Expected runtime of one optimizer's runs on one problem."""
    _check_runs(runs)
    return MeasureValue(ERT, ert_value([r.evaluations for r in runs], [r.success for r in runs]))


def sp1(runs) -> MeasureValue:
    """SP1 of one optimizer's runs on one problem; budget-invariant for failures."""
    _check_runs(runs)
    return MeasureValue(SP1, sp1_value([r.evaluations for r in runs], [r.success for r in runs]))


@dataclass(frozen=True)
class MeasureTable:
    """ERT/SP1 and relative values for a set of optimizers over an archive.

    `values[(optimizer, problem)][kind]` holds a MeasureValue; `best[problem]`
    maps ERT/SP1 to (best value, best optimizer id); `worst[(dimension, rel
    kind)]` holds the pre-imputation maximum used for PAR10.
    """

    optimizers: tuple[str, ...]
    problems: tuple[ProblemKey, ...]
    values: dict = field(repr=False)
    best: dict = field(repr=False)
    worst: dict = field(repr=False, default_factory=dict)
    imputed_dimensions: frozenset = frozenset()

    def value(self, optimizer: str, problem: ProblemKey, kind: str) -> MeasureValue:
        try:
            return self.values[(optimizer, problem)][kind]
        except KeyError:
            raise DataError(f"no {kind} value for ({optimizer!r}, {problem})") from None

    def best_value(self, problem: ProblemKey, kind: str) -> float | None:
        return self.best[problem][kind][0]

    def best_optimizer(self, problem: ProblemKey, kind: str) -> str | None:
        return self.best[problem][kind][1]

    def problems_of_dimension(self, dimension: int) -> list[ProblemKey]:
        return [p for p in self.problems if p.dimension == dimension]


def relative(table: MeasureTable, kind: str, optimizer: str, problem: ProblemKey) -> MeasureValue:
    """value / best value on the function; undefined propagates from the numerator."""
    base = _BASE_OF[kind]
    best = table.best_value(problem, base)
    if best is None:
        raise DataError(
            f"best {base} undefined for {problem}; route through impute_par10"
        )
    num = table.value(optimizer, problem, base)
    if not num.defined:
        return MeasureValue(kind, None)
    return MeasureValue(kind, num.value / best)


def compute_measure_table(archive: PerformanceArchive, optimizers) -> MeasureTable:
    """ERT/SP1 per (optimizer, problem) plus bests and defined relative values.

    Ties for the best optimizer break to the lexicographically smallest id.
    """
    optimizers = tuple(optimizers)
    if not optimizers:
        raise DataError("empty optimizer set")
    problems = tuple(archive.problems())
    values: dict = {}
    best: dict = {}
    for problem in problems:
        for opt in optimizers:
            runs = archive.runs(opt, problem)
            values[(opt, problem)] = {ERT: ert(runs), SP1: sp1(runs)}
        for kind in (ERT, SP1):
            defined = [
                (values[(opt, problem)][kind].value, opt)
                for opt in optimizers
                if values[(opt, problem)][kind].defined
            ]
            best.setdefault(problem, {})[kind] = min(defined) if defined else (None, None)
    table = MeasureTable(optimizers=optimizers, problems=problems, values=values, best=best)
    for problem in problems:
        for opt in optimizers:
            for rel_kind, base in _BASE_OF.items():
                if table.best_value(problem, base) is None:
                    rel = MeasureValue(rel_kind, None)
                else:
                    rel = relative(table, rel_kind, opt, problem)
                values[(opt, problem)][rel_kind] = rel
    return table


def worst_relative(table: MeasureTable, kind: str, dimension: int) -> float:
    """Maximum defined, non-imputed relative value over the dimension's cells."""
    worst = None
    for problem in table.problems_of_dimension(dimension):
        for opt in table.optimizers:
            mv = table.values[(opt, problem)][kind]
            if mv.defined and not mv.imputed:
                worst = mv.value if worst is None else max(worst, mv.value)
    if worst is None:
        raise DataError(f"no defined {kind} value in dimension {dimension}; PAR10 unavailable")
    return worst


def impute_par10(table: MeasureTable, dimension: int) -> MeasureTable:
    """Replace undefined relative values of a dimension with 10x the worst defined one."""
    worst = dict(table.worst)
    values = {cell: dict(kinds) for cell, kinds in table.values.items()}
    for kind in (REL_ERT, REL_SP1):
        w = worst_relative(table, kind, dimension)
        worst[(dimension, kind)] = w
        for problem in table.problems_of_dimension(dimension):
            for opt in table.optimizers:
                mv = values[(opt, problem)][kind]
                if not mv.defined:
                    values[(opt, problem)][kind] = MeasureValue(kind, 10.0 * w, imputed=True)
    return replace(
        table,
        values=values,
        worst=worst,
        imputed_dimensions=table.imputed_dimensions | {dimension},
    )


def impute_all(table: MeasureTable) -> MeasureTable:
    for dimension in sorted({p.dimension for p in table.problems}):
        table = impute_par10(table, dimension)
    return table


def _require_imputed(table: MeasureTable, dimension: int) -> None:
    if dimension not in table.imputed_dimensions:
        raise DataError(f"dimension {dimension} not imputed; call impute_par10 first")


def vbs_relsp1(table: MeasureTable, portfolio, dimension: int) -> dict[str, float]:
    """Per-function minimum relSP1 over the portfolio members (the oracle selector)."""
    members = list(portfolio)
    if not members:
        raise DataError("empty portfolio")
    _require_imputed(table, dimension)
    out = {}
    for problem in table.problems_of_dimension(dimension):
        out[problem.function_id] = min(
            table.value(m, problem, REL_SP1).value for m in members
        )
    return out


def sbs(table: MeasureTable, portfolio, dimension: int) -> str:
    """Member minimizing the mean imputed relSP1 over the dimension's functions."""
    members = sorted(portfolio)
    if not members:
        raise DataError("empty portfolio")
    _require_imputed(table, dimension)
    problems = table.problems_of_dimension(dimension)

    def mean_relsp1(member):
        vals = [table.value(member, p, REL_SP1).value for p in problems]
        return sum(vals) / len(vals)

    return min(members, key=lambda m: (mean_relsp1(m), m))


def sbs_mean_relsp1(table: MeasureTable, member: str, dimension: int) -> float:
    """Mean imputed relSP1 of one member over a dimension (the SBS baseline value)."""
    _require_imputed(table, dimension)
    problems = table.problems_of_dimension(dimension)
    return sum(table.value(member, p, REL_SP1).value for p in problems) / len(problems)


def _fmt(mv: MeasureValue) -> str:
    return "NA" if not mv.defined else f"{mv.value:.6g}"


def write_report_csv(table: MeasureTable, path) -> None:
    """Measure report: optimizer,function,dimension,ERT,SP1,relERT,relSP1,imputed."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("optimizer,function,dimension,ERT,SP1,relERT,relSP1,imputed\n")
        for opt in table.optimizers:
            for problem in sorted(table.problems):
                kinds = table.values[(opt, problem)]
                imputed = kinds[REL_ERT].imputed or kinds[REL_SP1].imputed
                fh.write(
                    f"{opt},{problem.function_id},{problem.dimension},"
                    f"{_fmt(kinds[ERT])},{_fmt(kinds[SP1])},"
                    f"{_fmt(kinds[REL_ERT])},{_fmt(kinds[REL_SP1])},"
                    f"{1 if imputed else 0}\n"
                )
