"""Built-in learning models: random forests on CART trees, and g-means.

Estimator-style API (fit/predict/get_params) so custom models can be swapped
in anywhere a selector expects one.  Everything is deterministic given
`random_state`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .util import DataError

_TINY = 1e-12


def as_matrix(X) -> np.ndarray:
    """Validate a 2-D finite float matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError(f"expected a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("matrix contains non-finite entries")
    return X


def as_vector(y, length: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1 or len(y) != length:
        raise DataError(f"expected a vector of length {length}, got shape {y.shape}")
    return y


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    value: float = 0.0  # class index or mean target at leaves

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _best_split(X, target, idx, features, min_leaf, classification, n_classes):
    """Scan candidate features; return (feature, threshold) or None.

    The score maximized is sum over children of (sum target)^2 / size for
    regression and sum_k count_k^2 / size for classification; both orderings
    match variance reduction / Gini gain.  All candidate features are scored
    in one vectorized pass; ties keep the first feature in scan order.
    """
    m = len(idx)
    Xf = X[np.ix_(idx, features)]  # (m, q)
    order = np.argsort(Xf, axis=0, kind="stable")
    xo = np.take_along_axis(Xf, order, axis=0)
    sizes = np.arange(1, m, dtype=float)[:, None]  # left-child sizes
    valid = (xo[:-1] < xo[1:]) & (sizes >= min_leaf) & (m - sizes >= min_leaf)
    if not valid.any():
        return None
    t_sorted = target[idx][order]  # (m, q)
    if classification:
        onehot = t_sorted[:, :, None] == np.arange(n_classes)
        cum = np.cumsum(onehot, axis=0, dtype=float)
        left, total = cum[:-1], cum[-1]
        score = (left**2).sum(axis=2) / sizes + ((total - left) ** 2).sum(axis=2) / (m - sizes)
    else:
        cum = np.cumsum(t_sorted, axis=0)
        left, total = cum[:-1], cum[-1]
        score = left**2 / sizes + (total - left) ** 2 / (m - sizes)
    score[~valid] = -np.inf
    flat = int(np.argmax(score.T))  # feature-major: ties keep the earliest feature
    f_pos, cut = divmod(flat, m - 1)
    lo, hi = xo[cut, f_pos], xo[cut + 1, f_pos]
    thr = 0.5 * (lo + hi)
    if thr >= hi:  # midpoint rounded onto the right value
        thr = lo
    return int(features[f_pos]), float(thr)


def _build_tree(X, target, idx, rng, mtry, min_leaf, classification, n_classes):
    node = _Node()
    t = target[idx]
    pure = bool((t == t[0]).all())
    if pure or len(idx) < 2 * min_leaf:
        node.value = _leaf_value(t, classification, n_classes)
        return node
    features = rng.choice(X.shape[1], size=mtry, replace=False)
    best = _best_split(X, target, idx, features, min_leaf, classification, n_classes)
    if best is None:
        node.value = _leaf_value(t, classification, n_classes)
        return node
    node.feature, node.threshold = best
    mask = X[idx, node.feature] <= node.threshold
    node.left = _build_tree(X, target, idx[mask], rng, mtry, min_leaf, classification, n_classes)
    node.right = _build_tree(X, target, idx[~mask], rng, mtry, min_leaf, classification, n_classes)
    return node


def _leaf_value(t, classification, n_classes):
    if classification:
        counts = np.bincount(t, minlength=n_classes)
        return float(np.argmax(counts))  # ties: smallest class index
    return float(t.mean())


def _tree_predict(root: _Node, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, rows = stack.pop()
        if node.is_leaf:
            out[rows] = node.value
            continue
        mask = X[rows, node.feature] <= node.threshold
        stack.append((node.left, rows[mask]))
        stack.append((node.right, rows[~mask]))
    return out


class _BaseForest:
    classification = False

    def __init__(self, n_estimators=100, max_features="auto", min_samples_leaf=1, random_state=None):
        self.n_estimators = n_estimators
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def get_params(self):
        return {
            "n_estimators": self.n_estimators,
            "max_features": self.max_features,
            "min_samples_leaf": self.min_samples_leaf,
            "random_state": self.random_state,
        }

    def _mtry(self, p: int) -> int:
        if self.max_features == "auto":
            raw = math.sqrt(p) if self.classification else p / 3
        elif isinstance(self.max_features, (int, np.integer)):
            raw = self.max_features
        else:
            raise DataError(f"unsupported max_features {self.max_features!r}")
        return min(p, max(1, math.ceil(raw)))

    def _fit_forest(self, X, target, n_classes):
        m, p = X.shape
        mtry = self._mtry(p)
        self._trees = []
        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        for ss in seeds:
            rng = np.random.default_rng(ss)
            boot = rng.integers(0, m, size=m)
            self._trees.append(
                _build_tree(
                    X, target, boot, rng, mtry, self.min_samples_leaf,
                    self.classification, n_classes,
                )
            )


class RandomForestClassifier(_BaseForest):
    """Bootstrap-aggregated CART trees; majority vote across trees.

    max_features="auto" samples ceil(sqrt(p)) candidate features per split.
    """

    classification = True

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_vector(y, len(X))
        self.classes_, target = np.unique(y, return_inverse=True)
        self._fit_forest(X, target, n_classes=len(self.classes_))
        return self

    def predict(self, X):
        X = as_matrix(X)
        votes = np.zeros((len(X), len(self.classes_)))
        for tree in self._trees:
            pred = _tree_predict(tree, X).astype(int)
            votes[np.arange(len(X)), pred] += 1
        return self.classes_[np.argmax(votes, axis=1)]  # ties: smallest class


class RandomForestRegressor(_BaseForest):
    """Bootstrap-aggregated CART trees; prediction is the mean tree output.

    max_features="auto" samples ceil(p / 3) candidate features per split.
    """

    classification = False

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_vector(y, len(X)).astype(float)
        if not np.all(np.isfinite(y)):
            raise DataError("targets contain non-finite entries")
        self._fit_forest(X, y, n_classes=0)
        return self

    def predict(self, X):
        X = as_matrix(X)
        return np.mean([_tree_predict(tree, X) for tree in self._trees], axis=0)


def kmeans_pp_init(X: np.ndarray, k: int, rng) -> np.ndarray:
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(len(X))]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= _TINY:
            centers[i] = X[rng.integers(len(X))]
        else:
            centers[i] = X[rng.choice(len(X), p=d2 / total)]
        d2 = np.minimum(d2, np.sum((X - centers[i]) ** 2, axis=1))
    return centers


def kmeans(X: np.ndarray, k: int, rng, max_iter: int = 100):
    """Lloyd's algorithm with k-means++ initialization; returns (centers, labels)."""
    centers = kmeans_pp_init(X, k, rng)
    labels = None
    for _ in range(max_iter):
        d2 = np.sum((X[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(d2, axis=1)
        for j in range(k):  # re-seed empty clusters with the farthest point
            if not (new_labels == j).any():
                far = int(np.argmax(d2[np.arange(len(X)), new_labels]))
                new_labels[far] = j
        if labels is not None and (new_labels == labels).all():
            break
        labels = new_labels
        for j in range(k):
            centers[j] = X[labels == j].mean(axis=0)
    return centers, labels


def anderson_darling_pvalue(x: np.ndarray) -> float:
    """P-value of the Anderson-Darling normality test (mean/variance estimated).

    Uses the small-sample statistic correction and the p-value approximation
    of D'Agostino & Stephens (1986).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    sd = x.std(ddof=1)
    if sd <= _TINY:
        return 1.0
    z = np.sort((x - x.mean()) / sd)
    cdf = np.clip(0.5 * (1.0 + np.array([math.erf(v / math.sqrt(2)) for v in z])), 1e-300, 1 - 1e-16)
    i = np.arange(1, n + 1)
    a2 = -n - np.mean((2 * i - 1) * (np.log(cdf) + np.log(1 - cdf[::-1])))
    a2 *= 1 + 0.75 / n + 2.25 / n**2
    if a2 >= 0.6:
        p = math.exp(1.2937 - 5.709 * a2 + 0.0186 * a2**2)
    elif a2 >= 0.34:
        p = math.exp(0.9177 - 4.279 * a2 - 1.38 * a2**2)
    elif a2 >= 0.2:
        p = 1 - math.exp(-8.318 + 42.796 * a2 - 59.938 * a2**2)
    else:
        p = 1 - math.exp(-13.436 + 101.14 * a2 - 223.73 * a2**2)
    return min(max(p, 0.0), 1.0)


class GMeans:
    """Recursive 2-means splitting gated by an Anderson-Darling normality test.

    A cluster is split when the projection of its points onto the axis
    between the two child centroids rejects normality at `significance`.
    Clusters smaller than `min_split` points are never split.
    """

    def __init__(self, significance=1e-4, min_split=8, max_iter=100, random_state=None):
        self.significance = significance
        self.min_split = min_split
        self.max_iter = max_iter
        self.random_state = random_state

    def get_params(self):
        return {
            "significance": self.significance,
            "min_split": self.min_split,
            "max_iter": self.max_iter,
            "random_state": self.random_state,
        }

    def fit(self, X):
        X = as_matrix(X)
        if len(X) < 2:
            raise DataError("g-means needs at least 2 rows")
        rng = np.random.default_rng(self.random_state)
        leaves: list[np.ndarray] = []
        self._split(X, np.arange(len(X)), rng, leaves)
        self.cluster_centers_ = np.array([X[idx].mean(axis=0) for idx in leaves])
        self.labels_ = np.empty(len(X), dtype=int)
        for label, idx in enumerate(leaves):
            self.labels_[idx] = label
        self.n_clusters_ = len(leaves)
        return self

    def _split(self, X, idx, rng, leaves):
        if len(idx) >= self.min_split:
            centers, labels = kmeans(X[idx], 2, rng, self.max_iter)
            axis = centers[1] - centers[0]
            norm = np.linalg.norm(axis)
            if norm > _TINY and (labels == 0).any() and (labels == 1).any():
                proj = X[idx] @ axis / norm
                if anderson_darling_pvalue(proj) < self.significance:
                    self._split(X, idx[labels == 0], rng, leaves)
                    self._split(X, idx[labels == 1], rng, leaves)
                    return
        leaves.append(idx)

    def predict(self, X):
        X = as_matrix(X)
        d2 = np.sum((X[:, None, :] - self.cluster_centers_[None, :, :]) ** 2, axis=2)
        return np.argmin(d2, axis=1)
