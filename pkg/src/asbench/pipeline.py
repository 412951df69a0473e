"""End-to-end execution of algorithm-selection systems with FE accounting.

Per test instance: optional pre-solving (success skips everything else),
Latin hypercube sampling charged at s evaluations, feature computation,
selection, and replay of the selected member's archived run.  Every record
decomposes its total exactly into presolver + sampling + replay evaluations.
System scoring computes a per-function relSP1 against the portfolio's best
SP1, PAR10-imputing functions the system never solved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .archive import InstanceKey, PerformanceArchive, ProblemKey
from .cv import fold_groups
from .features import FEATURE_CLASSES, FeatureVector, compute_features
from .measures import REL_SP1, SP1, MeasureTable, compute_measure_table, impute_all, sp1_value
from .portfolio import Portfolio
from .presolve import PresolveResult, make_presolver
from .sampling import SampleSet, default_sample_size, evaluate_sample, lhs_sample
from .selectors import SELECTOR_KINDS, ModelSpec, build_training_set, train
from .util import ConfigError, DataError, derive_seed

FEATURE_SOURCES = ("X_only", "X_union_Y")


@dataclass(frozen=True)
class PresolverConfig:
    kind: str = "nelder_mead"
    budget: int | None = None  # None -> 50 * dimension

    def __post_init__(self):
        if self.budget is not None and self.budget < 1:
            raise ConfigError("presolver budget must be >= 1")

    def budget_for(self, dimension: int) -> int:
        return self.budget if self.budget is not None else default_sample_size(dimension)


@dataclass(frozen=True)
class SystemConfig:
    """One algorithm-selection system: portfolio, selector, and pipeline knobs."""

    name: str
    portfolio: Portfolio
    selector_kind: str
    model_spec: ModelSpec | None = None
    sample_size: int | None = None  # None -> 50 * dimension
    presolver: PresolverConfig | None = None
    feature_classes: tuple = FEATURE_CLASSES
    feature_source: str = "X_only"
    epsilon: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if not self.name:
            raise ConfigError("system name must be non-empty")
        if self.selector_kind not in SELECTOR_KINDS:
            raise ConfigError(f"unknown selector kind {self.selector_kind!r}")
        if self.sample_size is not None and self.sample_size < 1:
            raise ConfigError("sample_size must be >= 1")
        if self.feature_source not in FEATURE_SOURCES:
            raise ConfigError(f"feature_source must be one of {FEATURE_SOURCES}")
        if self.feature_source == "X_union_Y" and self.presolver is None:
            raise ConfigError("feature_source X_union_Y needs a presolver")

    def sample_size_for(self, dimension: int) -> int:
        return self.sample_size if self.sample_size is not None else default_sample_size(dimension)


@dataclass(frozen=True)
class SystemRunRecord:
    """Ledger of one system run on one instance; totals decompose exactly."""

    instance: InstanceKey
    presolver_evals: int
    presolver_success: bool
    sampling_evals: int
    selected: str | None
    replay_evals: int
    total_evals: int
    success: bool

    def __post_init__(self):
        if min(self.presolver_evals, self.sampling_evals, self.replay_evals) < 0:
            raise DataError("evaluation counts must be non-negative")
        if self.total_evals != self.presolver_evals + self.sampling_evals + self.replay_evals:
            raise DataError(
                f"ledger violation on {self.instance}: {self.total_evals} != "
                f"{self.presolver_evals} + {self.sampling_evals} + {self.replay_evals}"
            )
        if self.total_evals < 1:
            raise DataError("total_evals must be >= 1")
        if self.presolver_success and (
            self.sampling_evals or self.replay_evals or self.selected is not None
        ):
            raise DataError("a pre-solver success must skip sampling and selection")


@dataclass(frozen=True)
class InstanceContext:
    """Per (instance, run seed) material shared by training and testing."""

    task: object  # callable with .key, .bounds, .f_opt / .target()
    presolve: PresolveResult | None
    sample: SampleSet
    features: FeatureVector


def _union_sample(sample: SampleSet, presolve: PresolveResult) -> SampleSet:
    if len(presolve.points) == 0:
        return sample
    return SampleSet(
        points=np.vstack([sample.points, presolve.points]),
        values=np.concatenate([sample.values, presolve.values]),
        bounds=sample.bounds,
        seed=sample.seed,
    )


def prepare_instance(config: SystemConfig, task, run_seed: int) -> InstanceContext:
    """Run the pre-solver (if any), draw the sample, and compute features."""
    key = task.key
    n = key.problem.dimension
    iseed = derive_seed(config.seed, run_seed, key.problem.function_id, n, key.instance_id)
    presolve = None
    if config.presolver is not None:
        presolve = make_presolver(config.presolver.kind).run(
            task,
            task.bounds,
            config.presolver.budget_for(n),
            task.target(config.epsilon),
            derive_seed(iseed, "presolve"),
        )
    s = config.sample_size_for(n)
    lhs_seed = derive_seed(iseed, "lhs")
    points = lhs_sample(n, s, task.bounds, lhs_seed)
    sample = evaluate_sample(points, task, task.bounds, seed=lhs_seed)
    source = sample
    if config.feature_source == "X_union_Y" and presolve is not None:
        source = _union_sample(sample, presolve)
    features = compute_features(source, config.feature_classes)
    return InstanceContext(task=task, presolve=presolve, sample=sample, features=features)


def run_instance(config: SystemConfig, selector, archive: PerformanceArchive, task,
                 run_seed: int, context: InstanceContext | None = None) -> SystemRunRecord:
    """Execute the system on one test instance and account every evaluation."""
    if context is None:
        context = prepare_instance(config, task, run_seed)
    key = task.key
    presolver_evals = context.presolve.evaluations if context.presolve is not None else 0

    if context.presolve is not None and context.presolve.success:
        return SystemRunRecord(
            instance=key,
            presolver_evals=presolver_evals,
            presolver_success=True,
            sampling_evals=0,
            selected=None,
            replay_evals=0,
            total_evals=presolver_evals,
            success=True,
        )

    sampling_evals = context.sample.size
    tie_seed = derive_seed(config.seed, run_seed, "tie", key.problem.function_id,
                           key.problem.dimension, key.instance_id)
    member = selector.members[selector.select(context.features, tie_seed)]
    replay = archive.run(member, key)
    return SystemRunRecord(
        instance=key,
        presolver_evals=presolver_evals,
        presolver_success=False,
        sampling_evals=sampling_evals,
        selected=member,
        replay_evals=replay.evaluations,
        total_evals=presolver_evals + sampling_evals + replay.evaluations,
        success=replay.success,
    )


def score_records(records: dict[InstanceKey, SystemRunRecord], table: MeasureTable) -> tuple[dict, dict]:
    """System relSP1 per problem (value, imputed) plus the per-dimension means.

    `table` must be the PAR10-imputed member measure table; its dimension
    worst values impute functions the system never solved.
    """
    by_problem: dict[ProblemKey, list[SystemRunRecord]] = {}
    for rec in records.values():
        by_problem.setdefault(rec.instance.problem, []).append(rec)
    relsp1: dict[ProblemKey, tuple[float, bool]] = {}
    for problem, recs in sorted(by_problem.items()):
        system_sp1 = sp1_value([r.total_evals for r in recs], [r.success for r in recs])
        best = table.best_value(problem, SP1)
        if system_sp1 is None or best is None:
            value = 10.0 * table.worst[(problem.dimension, REL_SP1)]
            relsp1[problem] = (value, True)
        else:
            relsp1[problem] = (system_sp1 / best, False)
    means: dict[int, float] = {}
    for dim in sorted({p.dimension for p in relsp1}):
        vals = [v for p, (v, _) in relsp1.items() if p.dimension == dim]
        means[dim] = sum(vals) / len(vals)
    return relsp1, means


@dataclass(frozen=True)
class RunResult:
    run_seed: int
    records: dict  # InstanceKey -> SystemRunRecord
    relsp1: dict  # ProblemKey -> (value, imputed)
    mean_relsp1: dict  # dimension -> float


@dataclass(frozen=True)
class SystemResult:
    system: str
    protocol: str
    runs: tuple[RunResult, ...]

    def means_by_dimension(self) -> dict[int, list[float]]:
        out: dict[int, list[float]] = {}
        for run in self.runs:
            for dim, mean in run.mean_relsp1.items():
                out.setdefault(dim, []).append(mean)
        return out


def _check_coverage(archive: PerformanceArchive, portfolio: Portfolio, suite) -> None:
    for task in suite:
        for member in portfolio.members:
            archive.run(member, task.key)  # raises DataError on any gap


def evaluate_system(config: SystemConfig, archive: PerformanceArchive, suite,
                    protocol: str, n_runs: int = 31, seeds=None,
                    model_factory=None) -> SystemResult:
    """Run the full leakage-safe train/test cycle for `n_runs` independent runs.

    Per run seed: features and pre-solver outcomes are computed once per
    instance; per fold, a selector is trained on the training split only and
    applied to every test instance.
    """
    suite = sorted(suite, key=lambda t: t.key)
    keys = [t.key for t in suite]
    if len(set(keys)) != len(keys):
        raise DataError("duplicate instances in suite")
    _check_coverage(archive, config.portfolio, suite)
    table = impute_all(compute_measure_table(archive, config.portfolio.members))
    task_by_key = {t.key: t for t in suite}
    if seeds is None:
        seeds = [derive_seed(config.seed, "run", r) for r in range(n_runs)]

    runs = []
    for run_seed in seeds:
        contexts = {t.key: prepare_instance(config, t, run_seed) for t in suite}
        records: dict[InstanceKey, SystemRunRecord] = {}
        for group in fold_groups(protocol, keys, seed=derive_seed(run_seed, "folds")):
            for fold in group:
                training_set = build_training_set(
                    archive,
                    config.portfolio,
                    fold.train,
                    {k: contexts[k].features for k in fold.train},
                )
                selector = train(
                    config.selector_kind,
                    training_set,
                    config.model_spec,
                    seed=derive_seed(config.seed, run_seed, "train", protocol, fold.fold_index,
                                     str(fold.test[0].problem)),
                    model_factory=model_factory,
                )
                for key in fold.test:
                    records[key] = run_instance(
                        config, selector, archive, task_by_key[key], run_seed,
                        context=contexts[key],
                    )
        relsp1, means = score_records(records, table)
        runs.append(RunResult(run_seed=run_seed, records=records, relsp1=relsp1, mean_relsp1=means))
    return SystemResult(system=config.name, protocol=protocol, runs=tuple(runs))


def oracle_run_records(archive: PerformanceArchive, portfolio: Portfolio, suite_keys,
                       per: str = "instance", table: MeasureTable | None = None) -> dict:
    """Zero-overhead oracle records: replay the best member per instance/function.

    per="instance" picks the successful member with the fewest evaluations on
    each instance (the VBS bound); per="function" replays the member with the
    best SP1 on the whole function.
    """
    if per not in ("instance", "function"):
        raise ConfigError(f"per must be 'instance' or 'function', got {per!r}")
    records = {}
    best_by_problem: dict[ProblemKey, str] = {}
    if per == "function":
        if table is None:
            table = compute_measure_table(archive, portfolio.members)
        for problem in sorted({k.problem for k in suite_keys}):
            best = table.best_optimizer(problem, SP1)
            if best is None:
                best = min(portfolio.members)  # nobody solves it; any member ties
            best_by_problem[problem] = best
    for key in sorted(suite_keys):
        if per == "instance":
            def replay_rank(m):
                rec = archive.run(m, key)
                return (not rec.success, rec.evaluations, m)

            member = min(portfolio.members, key=replay_rank)
        else:
            member = best_by_problem[key.problem]
        rec = archive.run(member, key)
        records[key] = SystemRunRecord(
            instance=key,
            presolver_evals=0,
            presolver_success=False,
            sampling_evals=0,
            selected=member,
            replay_evals=rec.evaluations,
            total_evals=rec.evaluations,
            success=rec.success,
        )
    return records


def n_sbs(system_means, sbs_mean: float) -> int:
    """Number of runs whose mean relSP1 strictly beats the SBS baseline."""
    means = list(system_means)
    if not means:
        raise DataError("empty run means")
    return sum(1 for m in means if m < sbs_mean)
