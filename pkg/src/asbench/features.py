"""Landscape feature classes computed from a sampled point set.

Seven classes: basic, ela_distr, ela_meta, nbc, disp, ic, pca.  Every
feature is guaranteed finite; degenerate samples (constant values,
duplicated points) hit documented clamp rules instead of producing NaN/inf.
Feature names are prefixed with their class, e.g. "ela_distr.skewness".
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sampling import SampleSet
from .util import DataError

FEATURE_CLASSES = ("basic", "ela_distr", "ela_meta", "nbc", "disp", "ic", "pca")

_TINY = 1e-12
RATIO_MAX = 1e12  # sentinel for ratios with a vanishing denominator
EPS_S_SENTINEL = 1e6  # grid max * 10, when no grid epsilon flattens all symbols


@dataclass(frozen=True)
class FeatureVector:
    """Ordered mapping feature name -> finite value."""

    entries: dict

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.entries)

    def as_array(self, names=None) -> np.ndarray:
        names = self.names if names is None else names
        try:
            return np.array([self.entries[n] for n in names], dtype=float)
        except KeyError as exc:
            raise DataError(f"feature {exc.args[0]!r} missing from vector") from None


def _ratio(num: float, den: float) -> float:
    if abs(den) <= _TINY:
        return 1.0 if abs(num) <= _TINY else RATIO_MAX
    return num / den


def _r_squared(y: np.ndarray, residual_ss: float) -> float:
    total_ss = float(np.sum((y - y.mean()) ** 2))
    if total_ss <= _TINY:
        return 1.0 if residual_ss <= _TINY else 0.0
    r2 = 1.0 - residual_ss / total_ss
    if r2 > 1.0 - _TINY:
        return 1.0
    return min(max(r2, 0.0), 1.0)


def _abs_coef_stats(coefs: np.ndarray) -> tuple[float, float, float]:
    a = np.abs(coefs)
    lo, hi = float(a.min()), float(a.max())
    if hi <= _TINY:
        return lo, hi, 1.0
    if lo <= hi * _TINY:
        return lo, hi, RATIO_MAX
    return lo, hi, hi / lo


def f_basic(sample: SampleSet) -> dict:
    """Dimensions, box limits, and objective summary statistics."""
    if sample.size < 2:
        raise DataError("basic features need at least 2 points")
    y = sample.values
    return {
        "dim": float(sample.dimension),
        "sample_size": float(sample.size),
        "lower": float(sample.bounds[:, 0].min()),
        "upper": float(sample.bounds[:, 1].max()),
        "y_min": float(y.min()),
        "y_max": float(y.max()),
        "y_mean": float(y.mean()),
        "y_median": float(np.median(y)),
    }


def _kde_peaks(y: np.ndarray, grid_size: int = 512) -> int:
    # Gaussian KDE with Silverman's rule of thumb, evaluated on a uniform
    # grid over the value range; peaks = local maxima of the grid curve
    n = len(y)
    sd = float(y.std(ddof=1))
    iqr = float(np.subtract(*np.percentile(y, [75, 25])))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    h = 0.9 * spread * n ** (-0.2)
    if h <= _TINY:
        return 1
    grid = np.linspace(y.min(), y.max(), grid_size)
    z = (grid[:, None] - y[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (n * h * math.sqrt(2 * math.pi))
    interior = (dens[1:-1] > dens[:-2]) & (dens[1:-1] >= dens[2:])
    peaks = int(interior.sum())
    peaks += int(dens[0] > dens[1]) + int(dens[-1] > dens[-2])
    return max(peaks, 1)


def f_ela_distr(sample: SampleSet) -> dict:
    """Skewness, kurtosis, and KDE peak count of the objective values."""
    if sample.size < 4:
        raise DataError("ela_distr features need at least 4 points")
    y = sample.values
    n = len(y)
    m2 = float(np.mean((y - y.mean()) ** 2))
    if m2 <= _TINY:
        return {"skewness": 0.0, "kurtosis": 0.0, "n_peaks": 1.0}
    m3 = float(np.mean((y - y.mean()) ** 3))
    m4 = float(np.mean((y - y.mean()) ** 4))
    g1 = m3 / m2**1.5
    skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    g2 = m4 / m2**2 - 3.0
    kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    return {"skewness": skew, "kurtosis": kurt, "n_peaks": float(_kde_peaks(y))}


def f_ela_meta(sample: SampleSet) -> dict:
    """Linear and diagonal-quadratic model fits of y over the points."""
    n = sample.dimension
    if sample.size < 2 * n + 2:
        raise DataError(f"ela_meta features need at least {2 * n + 2} points for dimension {n}")
    X, y = sample.points, sample.values
    ones = np.ones((len(y), 1))

    lin_design = np.hstack([ones, X])
    lin_coef, _, lin_rank, _ = np.linalg.lstsq(lin_design, y, rcond=None)
    lin_res = float(np.sum((lin_design @ lin_coef - y) ** 2))
    lin_deficient = lin_rank < lin_design.shape[1]
    slope_lo, slope_hi, slope_ratio = _abs_coef_stats(lin_coef[1:])

    quad_design = np.hstack([ones, X, X**2])
    quad_coef, _, quad_rank, _ = np.linalg.lstsq(quad_design, y, rcond=None)
    quad_res = float(np.sum((quad_design @ quad_coef - y) ** 2))
    quad_deficient = quad_rank < quad_design.shape[1]
    _, _, quad_cond = _abs_coef_stats(quad_coef[1 + n :])

    return {
        "lin_r2": 0.0 if lin_deficient else _r_squared(y, lin_res),
        "lin_intercept": float(lin_coef[0]),
        "lin_coef_min": slope_lo,
        "lin_coef_max": slope_hi,
        "lin_coef_max_by_min": slope_ratio,
        "quad_r2": 0.0 if quad_deficient else _r_squared(y, quad_res),
        "quad_cond": RATIO_MAX if quad_deficient else quad_cond,
    }


def _pairwise_dist(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def f_nbc(sample: SampleSet) -> dict:
    """Nearest-neighbour vs nearest-better-neighbour distance statistics."""
    if sample.size < 3:
        raise DataError("nbc features need at least 3 points")
    y = sample.values
    dist = _pairwise_dist(sample.points)
    np.fill_diagonal(dist, np.inf)
    nn = dist.min(axis=1)
    better = y[None, :] < y[:, None]  # better[i, j]: j strictly better than i
    nb = np.where(better, dist, np.inf).min(axis=1)
    nb = np.where(np.isinf(nb), nn, nb)  # global best falls back to its NN distance

    mean_ratio = _ratio(float(nn.mean()), float(nb.mean()))
    sd_ratio = _ratio(float(nn.std(ddof=1)), float(nb.std(ddof=1)))
    if nb.std() <= _TINY or y.std() <= _TINY:
        cor = 0.0
    else:
        cor = float(np.corrcoef(nb, y)[0, 1])
        if not np.isfinite(cor):
            cor = 0.0
    return {"nn_nb_mean_ratio": mean_ratio, "nn_nb_sd_ratio": sd_ratio, "nb_fitness_cor": cor}


DISP_QUANTILES = (0.02, 0.05, 0.1, 0.25)


def f_disp(sample: SampleSet, quantiles=DISP_QUANTILES) -> dict:
    """Pairwise-distance dispersion of the best q-quantile points vs all points."""
    s = sample.size
    for q in quantiles:
        if math.ceil(q * s) < 2:
            raise DataError(f"disp quantile {q} needs ceil(q*s) >= 2, got s={s}")
    dist = _pairwise_dist(sample.points)
    iu = np.triu_indices(s, k=1)
    all_d = dist[iu]
    all_mean, all_median = float(all_d.mean()), float(np.median(all_d))
    order = np.argsort(sample.values, kind="stable")
    out = {}
    for q in quantiles:
        k = math.ceil(q * s)
        top = order[:k]
        sub = dist[np.ix_(top, top)][np.triu_indices(k, k=1)]
        sub_mean, sub_median = float(sub.mean()), float(np.median(sub))
        out[f"ratio_mean_{q:g}"] = 0.0 if all_mean <= _TINY else sub_mean / all_mean
        out[f"ratio_median_{q:g}"] = 0.0 if all_median <= _TINY else sub_median / all_median
    return out


def nearest_neighbor_tour(points: np.ndarray) -> np.ndarray:
    """Greedy nearest-neighbour visiting order starting from point 0."""
    s = len(points)
    dist = _pairwise_dist(points)
    np.fill_diagonal(dist, np.inf)
    tour = np.empty(s, dtype=int)
    tour[0] = 0
    remaining = np.ones(s, dtype=bool)
    remaining[0] = False
    for i in range(1, s):
        cand = np.where(remaining, dist[tour[i - 1]], np.inf)
        tour[i] = int(np.argmin(cand))  # ties break to the smallest index
        remaining[tour[i]] = False
    return tour


_IC_PAIRS = ((-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0))


def _symbol_entropies(symbol_rows: np.ndarray) -> np.ndarray:
    """Base-6 entropy of unequal adjacent symbol pairs, one value per row."""
    total = symbol_rows.shape[1] - 1
    if total < 1:
        return np.zeros(len(symbol_rows))
    a, b = symbol_rows[:, :-1], symbol_rows[:, 1:]
    h = np.zeros(len(symbol_rows))
    for sa, sb in _IC_PAIRS:
        p = ((a == sa) & (b == sb)).sum(axis=1) / total
        nz = p > 0
        h[nz] -= p[nz] * np.log(p[nz]) / math.log(6)
    return h


def f_ic(sample: SampleSet) -> dict:
    """Information-content features along a greedy nearest-neighbour tour."""
    if sample.size < 3:
        raise DataError("ic features need at least 3 points")
    tour = nearest_neighbor_tour(sample.points)
    pts, y = sample.points[tour], sample.values[tour]
    step = np.sqrt(np.sum(np.diff(pts, axis=0) ** 2, axis=1))
    dy = np.diff(y)
    slope = np.zeros(len(dy))
    nz = step > 0
    slope[nz] = dy[nz] / step[nz]
    slope[~nz] = np.sign(dy[~nz]) * 1e300  # coincident points with a value jump

    eps_grid = np.concatenate([[0.0], np.logspace(-5, 5, 100)])
    symbols = (slope[None, :] > eps_grid[:, None]).astype(np.int8)
    symbols -= (slope[None, :] < -eps_grid[:, None]).astype(np.int8)
    h_max = float(_symbol_entropies(symbols).max())
    flat = ~symbols.any(axis=1)
    eps_s = float(eps_grid[np.argmax(flat)]) if flat.any() else EPS_S_SENTINEL

    signs = np.sign(slope)
    signs = signs[signs != 0]
    if len(signs) < 2:
        m0 = 0.0
    else:
        m0 = float(np.sum(signs[:-1] != signs[1:])) / (len(signs) - 1)
    return {"h_max": h_max, "eps_s": eps_s, "m0": m0}


def _pca_shares(matrix: np.ndarray) -> tuple[float, float]:
    n_comp = matrix.shape[1]
    cov = np.cov(matrix, rowvar=False)
    cov = np.atleast_2d(cov)
    ev = np.linalg.eigvalsh(cov)[::-1]
    ev = np.where(ev < ev.max(initial=0.0) * _TINY, 0.0, ev)
    total = float(ev.sum())
    if total <= 0.0:
        return 1.0 / n_comp, 1.0 / n_comp
    first = float(ev[0]) / total
    cum = np.cumsum(ev)
    k = int(np.searchsorted(cum, 0.9 * total - _TINY * total)) + 1
    return k / n_comp, first


def f_pca(sample: SampleSet) -> dict:
    """Explained-variance shares of covariance PCA on X and on [X | y]."""
    if sample.size <= sample.dimension:
        raise DataError("pca features need more points than dimensions")
    frac_x, first_x = _pca_shares(sample.points)
    xy = np.hstack([sample.points, sample.values[:, None]])
    frac_xy, first_xy = _pca_shares(xy)
    return {
        "expl_var_x_0.9": frac_x,
        "expl_var_xy_0.9": frac_xy,
        "expl_var_first_x": first_x,
        "expl_var_first_xy": first_xy,
    }


_CLASS_FUNCS = {
    "basic": f_basic,
    "ela_distr": f_ela_distr,
    "ela_meta": f_ela_meta,
    "nbc": f_nbc,
    "disp": f_disp,
    "ic": f_ic,
    "pca": f_pca,
}


def compute_features(sample: SampleSet, classes=None) -> FeatureVector:
    """Concatenate the requested feature classes in the fixed class order."""
    if classes is None:
        classes = FEATURE_CLASSES
    unknown = set(classes) - set(FEATURE_CLASSES)
    if unknown:
        raise DataError(f"unknown feature classes: {sorted(unknown)}")
    entries: dict[str, float] = {}
    for cls in FEATURE_CLASSES:
        if cls not in classes:
            continue
        for name, value in _CLASS_FUNCS[cls](sample).items():
            entries[f"{cls}.{name}"] = float(value)
    return FeatureVector(entries=entries)
