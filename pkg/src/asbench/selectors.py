"""The five algorithm-selection methods over a pluggable model interface.

Selectors map a landscape feature vector to the index of a portfolio member.
Training rows carry per-instance PAR10 relative costs (lower is better);
regression targets are log10 of those costs.  Any estimator with
fit(X, y)/predict(X) can replace the built-in random forests through the
`model_factory` hook.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .archive import InstanceKey, PerformanceArchive
from .features import FeatureVector
from .models import GMeans, RandomForestClassifier, RandomForestRegressor, as_matrix
from .portfolio import Portfolio
from .util import ConfigError, DataError, derive_seed, midranks

SELECTOR_KINDS = (
    "classification",
    "regression",
    "pairwise_classification",
    "pairwise_regression",
    "clustering",
)

PAR10_FACTOR = 10


@dataclass(frozen=True)
class ModelSpec:
    """Underlying model family plus hyperparameters passed to its constructor."""

    kind: str  # classifier | regressor | clusterer
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("classifier", "regressor", "clusterer"):
            raise ConfigError(f"unknown model kind {self.kind!r}")


def model_kind_for(selector_kind: str) -> str:
    if selector_kind in ("classification", "pairwise_classification"):
        return "classifier"
    if selector_kind in ("regression", "pairwise_regression"):
        return "regressor"
    return "clusterer"


def default_model_factory(spec: ModelSpec, seed: int):
    if spec.kind == "classifier":
        return RandomForestClassifier(random_state=seed, **spec.params)
    if spec.kind == "regressor":
        return RandomForestRegressor(random_state=seed, **spec.params)
    return GMeans(random_state=seed, **spec.params)


@dataclass(frozen=True)
class TrainingSet:
    """Feature rows with per-member PAR10 relative costs and argmin labels."""

    instances: tuple[InstanceKey, ...]
    members: tuple[str, ...]
    feature_names: tuple[str, ...]
    X: np.ndarray  # (rows, features)
    costs: np.ndarray  # (rows, members), row minimum normalized to 1
    labels: np.ndarray  # (rows,) best member index per row

    def __post_init__(self):
        if self.X.shape != (len(self.instances), len(self.feature_names)):
            raise DataError("feature matrix shape mismatch")
        if self.costs.shape != (len(self.instances), len(self.members)):
            raise DataError("cost matrix shape mismatch")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.costs))):
            raise DataError("training set contains non-finite entries")


def build_training_set(
    archive: PerformanceArchive,
    portfolio: Portfolio,
    train_instances,
    features_per_instance,
) -> TrainingSet:
    """Assemble training rows from archived runs of the training instances only.

    The cost of member a on instance i is its evaluation count when the run
    succeeded, else 10x the largest evaluation count observed among portfolio
    members on training instances of the same dimension.  Costs are divided
    by the per-instance minimum; labels are the per-row argmin (ties go to
    the lowest member index).
    """
    instances = tuple(sorted(train_instances))
    if not instances:
        raise DataError("no training instances")
    members = portfolio.members

    max_evals_by_dim: dict[int, int] = {}
    for inst in instances:
        dim = inst.problem.dimension
        for member in members:
            rec = archive.run(member, inst)
            max_evals_by_dim[dim] = max(max_evals_by_dim.get(dim, 0), rec.evaluations)

    try:
        vectors = [features_per_instance[inst] for inst in instances]
    except KeyError as exc:
        raise DataError(f"missing features for training instance {exc.args[0]}") from None
    feature_names = vectors[0].names
    X = np.vstack([fv.as_array(feature_names) for fv in vectors])

    costs = np.empty((len(instances), len(members)))
    for i, inst in enumerate(instances):
        for a, member in enumerate(members):
            rec = archive.run(member, inst)
            costs[i, a] = (
                rec.evaluations
                if rec.success
                else PAR10_FACTOR * max_evals_by_dim[inst.problem.dimension]
            )
    costs = costs / costs.min(axis=1, keepdims=True)
    labels = np.argmin(costs, axis=1)
    return TrainingSet(
        instances=instances,
        members=members,
        feature_names=feature_names,
        X=X,
        costs=costs,
        labels=labels,
    )


class Selector:
    """Trained mapping from a feature vector to a portfolio member index."""

    kind = ""

    def __init__(self, members, feature_names):
        self.members = tuple(members)
        self.feature_names = tuple(feature_names)

    def _row(self, features) -> np.ndarray:
        if isinstance(features, FeatureVector):
            x = features.as_array(self.feature_names)
        else:
            x = np.asarray(features, dtype=float)
        if x.shape != (len(self.feature_names),):
            raise DataError(
                f"feature vector has {x.shape} entries, selector expects {len(self.feature_names)}"
            )
        return x

    def select(self, features, tie_seed: int | None = None) -> int:
        raise NotImplementedError


class ClassificationSelector(Selector):
    kind = "classification"

    def __init__(self, members, feature_names, model):
        super().__init__(members, feature_names)
        self.model = model

    def select(self, features, tie_seed=None) -> int:
        return int(self.model.predict(self._row(features)[None, :])[0])


class RegressionSelector(Selector):
    kind = "regression"

    def __init__(self, members, feature_names, models):
        super().__init__(members, feature_names)
        self.models = list(models)

    def select(self, features, tie_seed=None) -> int:
        row = self._row(features)[None, :]
        predicted = [float(m.predict(row)[0]) for m in self.models]
        return int(np.argmin(predicted))


class PairwiseClassificationSelector(Selector):
    kind = "pairwise_classification"

    def __init__(self, members, feature_names, pair_models):
        super().__init__(members, feature_names)
        self.pair_models = list(pair_models)  # ((i, j), model)

    def select(self, features, tie_seed=None) -> int:
        row = self._row(features)[None, :]
        votes = np.zeros(len(self.members))
        for _, model in self.pair_models:
            votes[int(model.predict(row)[0])] += 1
        best = np.flatnonzero(votes == votes.max())
        if len(best) == 1:
            return int(best[0])
        rng = np.random.default_rng(tie_seed)
        return int(rng.choice(best))


class PairwiseRegressionSelector(Selector):
    kind = "pairwise_regression"

    def __init__(self, members, feature_names, pair_models):
        super().__init__(members, feature_names)
        self.pair_models = list(pair_models)  # ((i, j), model) predicting cost_i - cost_j

    def select(self, features, tie_seed=None) -> int:
        row = self._row(features)[None, :]
        totals = np.zeros(len(self.members))
        for (i, j), model in self.pair_models:
            diff = float(model.predict(row)[0])
            totals[i] += diff
            totals[j] -= diff
        return int(np.argmin(totals))


def minmax_normalize(X, lows, highs) -> np.ndarray:
    # training minimum maps to -1 and maximum to +1; constant features to 0;
    # unseen test values clamp into [-1, 1]
    X = np.atleast_2d(np.asarray(X, dtype=float))
    span = highs - lows
    out = np.zeros_like(X)
    varying = span > 0
    out[:, varying] = -1.0 + 2.0 * (X[:, varying] - lows[varying]) / span[varying]
    return np.clip(out, -1.0, 1.0)


class ClusteringSelector(Selector):
    kind = "clustering"

    def __init__(self, members, feature_names, lows, highs, centers, best_per_cluster):
        super().__init__(members, feature_names)
        self.lows = lows
        self.highs = highs
        self.centers = centers
        self.best_per_cluster = list(best_per_cluster)

    def select(self, features, tie_seed=None) -> int:
        row = minmax_normalize(self._row(features), self.lows, self.highs)
        d2 = np.sum((self.centers - row) ** 2, axis=1)
        return self.best_per_cluster[int(np.argmin(d2))]


def _pairs(k: int):
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def train(kind: str, training_set: TrainingSet, model_spec: ModelSpec | None = None,
          seed: int = 0, model_factory=None) -> Selector:
    """Train a selector of the given kind on the training set."""
    if kind not in SELECTOR_KINDS:
        raise ConfigError(f"unknown selector kind {kind!r}")
    ts = training_set
    if len(ts.instances) < 2:
        raise DataError("need at least 2 training rows")
    k = len(ts.members)
    if kind in ("pairwise_classification", "pairwise_regression") and k < 2:
        raise DataError("pairwise selectors need at least 2 members")
    if model_spec is None:
        model_spec = ModelSpec(kind=model_kind_for(kind))
    elif model_spec.kind != model_kind_for(kind):
        raise ConfigError(
            f"selector {kind!r} needs a {model_kind_for(kind)} model, got {model_spec.kind!r}"
        )
    factory = model_factory or default_model_factory

    if kind == "classification":
        model = factory(model_spec, derive_seed(seed, "clf")).fit(ts.X, ts.labels)
        return ClassificationSelector(ts.members, ts.feature_names, model)

    if kind == "regression":
        log_costs = np.log10(ts.costs)
        models = [
            factory(model_spec, derive_seed(seed, "reg", a)).fit(ts.X, log_costs[:, a])
            for a in range(k)
        ]
        return RegressionSelector(ts.members, ts.feature_names, models)

    if kind == "pairwise_classification":
        pair_models = []
        for i, j in _pairs(k):
            better = np.where(ts.costs[:, j] < ts.costs[:, i], j, i)  # cost ties go to i
            model = factory(model_spec, derive_seed(seed, "pc", i, j)).fit(ts.X, better)
            pair_models.append(((i, j), model))
        return PairwiseClassificationSelector(ts.members, ts.feature_names, pair_models)

    if kind == "pairwise_regression":
        log_costs = np.log10(ts.costs)
        pair_models = []
        for i, j in _pairs(k):
            diff = log_costs[:, i] - log_costs[:, j]
            model = factory(model_spec, derive_seed(seed, "pr", i, j)).fit(ts.X, diff)
            pair_models.append(((i, j), model))
        return PairwiseRegressionSelector(ts.members, ts.feature_names, pair_models)

    # clustering
    lows, highs = ts.X.min(axis=0), ts.X.max(axis=0)
    normalized = minmax_normalize(ts.X, lows, highs)
    gmeans = factory(model_spec, derive_seed(seed, "gm"))
    gmeans.fit(as_matrix(normalized))
    ranks = np.vstack([midranks(row) for row in ts.costs])
    best_per_cluster = []
    for label in range(gmeans.n_clusters_):
        mean_rank = ranks[gmeans.labels_ == label].mean(axis=0)
        best_per_cluster.append(int(np.argmin(mean_rank)))
    return ClusteringSelector(
        ts.members, ts.feature_names, lows, highs, gmeans.cluster_centers_, best_per_cluster
    )


def select(selector: Selector, features, tie_seed: int | None = None) -> int:
    """Member index chosen by the selector for one feature vector."""
    return selector.select(features, tie_seed)
