"""Benchmarking toolkit for feature-based algorithm selection in black-box
numerical optimization: fixed-target measures, portfolio construction,
landscape features, selector training, cross-validation protocols, and
statistical ranking of selection systems."""

from .archive import (
    InstanceKey,
    PerformanceArchive,
    ProblemKey,
    RunRecord,
    export_csv,
    ingest_csv,
)
from .measures import (
    MeasureTable,
    MeasureValue,
    compute_measure_table,
    ert,
    impute_all,
    impute_par10,
    relative,
    sbs,
    sp1,
    vbs_relsp1,
)
from .portfolio import Portfolio, RankTable, build_rank_table, check_solves_all, local_search, quality
from .sampling import SampleSet, evaluate_sample, lhs_sample
from .features import FEATURE_CLASSES, FeatureVector, compute_features
from .selectors import SELECTOR_KINDS, ModelSpec, TrainingSet, build_training_set, select, train
from .cv import FoldSpec, PROTOCOLS, fold_groups, folds, training_measure_scope
from .pipeline import (
    PresolverConfig,
    SystemConfig,
    SystemRunRecord,
    evaluate_system,
    n_sbs,
    run_instance,
)
from .stats import ComparisonMatrix, performance_score, rank_sum_test
from .testbed import TestFunction, ToyOptimizer, generate_archive, make_suite
from .util import ConfigError, DataError

__version__ = "0.1.0"
