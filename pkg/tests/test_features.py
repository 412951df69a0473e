import math

import numpy as np
import pytest

from asbench.features import (
    FEATURE_CLASSES,
    compute_features,
    f_basic,
    f_disp,
    f_ela_distr,
    f_ela_meta,
    f_ic,
    f_nbc,
    f_pca,
    nearest_neighbor_tour,
)
from asbench.sampling import SampleSet, evaluate_sample, lhs_sample
from asbench.util import DataError


def sample_from(points, values, bounds=(-5, 5)):
    return SampleSet(points=np.asarray(points, float), values=np.asarray(values, float), bounds=bounds)


def sphere_sample(n=2, s=100, seed=0):
    pts = lhs_sample(n, s, seed=seed)
    return evaluate_sample(pts, lambda x: float(np.sum(x**2)))


# --- basic -----------------------------------------------------------------

def test_basic_summary():
    sm = sample_from([[0, 0], [1, 0], [0, 1], [1, 1]], [1, 2, 3, 4])
    feats = f_basic(sm)
    assert feats["y_mean"] == 2.5 and feats["y_median"] == 2.5
    assert feats["dim"] == 2 and feats["lower"] == -5 and feats["upper"] == 5
    assert feats["y_min"] == 1 and feats["y_max"] == 4


def test_basic_matches_direct_statistics(rng):
    pts = rng.uniform(-5, 5, size=(50, 3))
    vals = rng.normal(size=50)
    feats = f_basic(sample_from(pts, vals))
    assert abs(feats["y_mean"] - vals.mean()) < 1e-12
    assert abs(feats["y_median"] - np.median(vals)) < 1e-12


# --- ela_distr ---------------------------------------------------------------

def test_distr_symmetric_skewness_zero():
    sm = sample_from([[0, 0], [1, 0], [2, 0], [3, 0]], [-2, -1, 1, 2])
    assert f_ela_distr(sm)["skewness"] == 0.0


def test_distr_bimodal_peaks(rng):
    vals = np.concatenate([rng.normal(-10, 1, 100), rng.normal(10, 1, 100)])
    pts = rng.uniform(-5, 5, size=(200, 2))
    feats = f_ela_distr(sample_from(pts, vals))
    assert feats["n_peaks"] == 2


def test_distr_constant_clamps():
    sm = sample_from(np.zeros((5, 2)), np.ones(5))
    feats = f_ela_distr(sm)
    assert feats == {"skewness": 0.0, "kurtosis": 0.0, "n_peaks": 1.0}


def test_distr_matches_adjusted_moment_formulas(rng):
    vals = rng.gamma(2.0, size=60)
    pts = rng.uniform(-5, 5, size=(60, 1))
    feats = f_ela_distr(sample_from(pts, vals))
    n = len(vals)
    d = vals - vals.mean()
    g1 = np.mean(d**3) / np.mean(d**2) ** 1.5
    g2 = np.mean(d**4) / np.mean(d**2) ** 2 - 3
    assert feats["skewness"] == pytest.approx(g1 * math.sqrt(n * (n - 1)) / (n - 2), rel=1e-12)
    assert feats["kurtosis"] == pytest.approx(
        ((n + 1) * g2 + 6) * (n - 1) / ((n - 2) * (n - 3)), rel=1e-12
    )


# --- ela_meta ----------------------------------------------------------------

def test_meta_exact_linear_fit(rng):
    pts = rng.uniform(-5, 5, size=(40, 2))
    vals = 3 * pts[:, 0] - pts[:, 1] + 1
    feats = f_ela_meta(sample_from(pts, vals))
    assert feats["lin_r2"] == 1.0
    assert feats["lin_intercept"] == pytest.approx(1.0, abs=1e-9)
    assert feats["lin_coef_min"] == pytest.approx(1.0, abs=1e-9)
    assert feats["lin_coef_max"] == pytest.approx(3.0, abs=1e-9)
    assert feats["lin_coef_max_by_min"] == pytest.approx(3.0, abs=1e-8)


def test_meta_sphere_quadratic(rng):
    sm = sphere_sample(seed=5)
    feats = f_ela_meta(sm)
    assert feats["quad_r2"] == 1.0
    assert feats["quad_cond"] == pytest.approx(1.0, rel=1e-9)


def test_meta_r2_matches_normal_equations(rng):
    pts = rng.uniform(-5, 5, size=(60, 3))
    vals = 2 * pts[:, 0] - pts[:, 2] + rng.normal(0, 0.5, 60)
    feats = f_ela_meta(sample_from(pts, vals))
    design = np.hstack([np.ones((60, 1)), pts])
    coef = np.linalg.solve(design.T @ design, design.T @ vals)
    ss_res = float(np.sum((design @ coef - vals) ** 2))
    ss_tot = float(np.sum((vals - vals.mean()) ** 2))
    assert feats["lin_r2"] == pytest.approx(1 - ss_res / ss_tot, abs=1e-8)


def test_meta_needs_enough_points():
    with pytest.raises(DataError):
        f_ela_meta(sample_from(np.zeros((3, 2)), np.zeros(3)))


# --- nbc ---------------------------------------------------------------------

def test_nbc_hand_oracle_three_points():
    # collinear points 0, 1, 3 with f decreasing toward the right end
    sm = sample_from([[0.0], [1.0], [3.0]], [3.0, 2.0, 1.0])
    feats = f_nbc(sm)
    # nn = (1, 1, 2); nb = (1, 2, 2) with the best point falling back to nn
    assert feats["nn_nb_mean_ratio"] == pytest.approx((4 / 3) / (5 / 3), rel=1e-12)
    assert feats["nn_nb_sd_ratio"] == pytest.approx(1.0, rel=1e-12)
    cov = np.cov([1, 2, 2], [3, 2, 1])[0, 1]
    expected_cor = cov / (np.std([1, 2, 2], ddof=1) * np.std([3, 2, 1], ddof=1))
    assert feats["nb_fitness_cor"] == pytest.approx(expected_cor, rel=1e-12)


def test_nbc_nb_equals_nn_gives_unit_ratio():
    pts = np.arange(6, dtype=float)[:, None] - 3.0
    vals = np.arange(6, dtype=float)  # increasing: nearest better == nearest neighbor
    feats = f_nbc(sample_from(pts, vals))
    assert feats["nn_nb_mean_ratio"] == 1.0


def test_nbc_matches_bruteforce(rng):
    pts = rng.uniform(-5, 5, size=(40, 2))
    vals = rng.normal(size=40)
    feats = f_nbc(sample_from(pts, vals))
    nn, nb = [], []
    for i in range(40):
        dists = [np.linalg.norm(pts[i] - pts[j]) for j in range(40) if j != i]
        nn.append(min(dists))
        better = [np.linalg.norm(pts[i] - pts[j]) for j in range(40) if vals[j] < vals[i]]
        nb.append(min(better) if better else nn[-1])
    nn, nb = np.array(nn), np.array(nb)
    assert feats["nn_nb_mean_ratio"] == pytest.approx(nn.mean() / nb.mean(), rel=1e-12)
    assert feats["nn_nb_sd_ratio"] == pytest.approx(nn.std(ddof=1) / nb.std(ddof=1), rel=1e-12)
    assert feats["nb_fitness_cor"] == pytest.approx(np.corrcoef(nb, vals)[0, 1], rel=1e-9)


def test_nbc_constant_values_clamp():
    sm = sample_from([[0.0], [1.0], [2.0]], [5.0, 5.0, 5.0])
    feats = f_nbc(sm)
    assert feats["nn_nb_mean_ratio"] == 1.0
    assert feats["nb_fitness_cor"] == 0.0


# --- disp --------------------------------------------------------------------

def test_disp_uniform_values_near_one(rng):
    for seed in range(20):
        local = np.random.default_rng(seed)
        pts = local.uniform(-5, 5, size=(100, 2))
        vals = local.uniform(size=100)
        feats = f_disp(sample_from(pts, vals))
        assert 0.5 <= feats["ratio_mean_0.25"] <= 1.5


def test_disp_sphere_best_points_cluster():
    feats = f_disp(sphere_sample(seed=3))
    assert feats["ratio_mean_0.05"] < 1.0


def test_disp_identical_points_zero():
    sm = sample_from(np.zeros((100, 2)), np.arange(100.0))
    feats = f_disp(sm)
    assert all(v == 0.0 for v in feats.values())


def test_disp_requires_enough_points():
    with pytest.raises(DataError):
        f_disp(sample_from(np.zeros((10, 1)), np.arange(10.0)))


# --- ic ----------------------------------------------------------------------

def test_ic_monotone_tour_m0_zero():
    pts = np.arange(5, dtype=float)[:, None] - 2
    vals = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    feats = f_ic(sample_from(pts, vals))
    assert feats["m0"] == 0.0


def test_ic_alternating_m0_one():
    pts = np.arange(6, dtype=float)[:, None] - 2
    vals = np.array([0.0, 1.0, 0.0, 1.0, 0.0, 1.0])
    feats = f_ic(sample_from(pts, vals))
    assert feats["m0"] == 1.0


def test_ic_flat_eps_s_zero():
    pts = np.arange(4, dtype=float)[:, None]
    feats = f_ic(sample_from(pts, np.zeros(4)))
    assert feats["eps_s"] == 0.0 and feats["h_max"] == 0.0


def test_ic_hmax_matches_straightline_reimplementation(rng):
    pts = rng.uniform(-5, 5, size=(60, 2))
    vals = rng.normal(size=60)
    feats = f_ic(sample_from(pts, vals))

    # independent reimplementation: plain loops, no shared code path
    order = [0]
    left = set(range(60)) - {0}
    while left:
        cur = order[-1]
        best = min(left, key=lambda j: (np.linalg.norm(pts[cur] - pts[j]), j))
        order.append(best)
        left.remove(best)
    slopes = []
    for a, b in zip(order, order[1:]):
        d = np.linalg.norm(pts[a] - pts[b])
        slopes.append((vals[b] - vals[a]) / d)
    h_best = 0.0
    for eps in [0.0] + list(np.logspace(-5, 5, 100)):
        sym = [1 if s > eps else (-1 if s < -eps else 0) for s in slopes]
        counts = {}
        for a, b in zip(sym, sym[1:]):
            if a != b:
                counts[(a, b)] = counts.get((a, b), 0) + 1
        total = len(sym) - 1
        h = -sum((c / total) * math.log(c / total, 6) for c in counts.values())
        h_best = max(h_best, h)
    assert feats["h_max"] == pytest.approx(h_best, abs=1e-10)


def test_ic_tour_deterministic_ties():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [2.0, 0.0]])
    tour = nearest_neighbor_tour(pts)
    assert tour[0] == 0 and tour[1] == 1  # tie between 1 and 2 breaks to index 1


# --- pca ---------------------------------------------------------------------

def test_pca_collinear_first_share_one():
    t = np.linspace(-4, 4, 30)
    pts = np.stack([t, 2 * t], axis=1) / 2  # stays in bounds
    feats = f_pca(sample_from(pts, t))
    assert feats["expl_var_first_x"] == 1.0
    assert feats["expl_var_x_0.9"] == 0.5


def test_pca_isotropic_cloud(rng):
    pts = np.clip(rng.normal(0, 1, size=(500, 2)), -5, 5)
    feats = f_pca(sample_from(pts, rng.normal(size=500)))
    assert 0.45 <= feats["expl_var_first_x"] <= 0.55


def test_pca_duplication_invariance(rng):
    pts = rng.uniform(-5, 5, size=(40, 3))
    vals = rng.normal(size=40)
    a = f_pca(sample_from(pts, vals))
    b = f_pca(sample_from(np.vstack([pts, pts]), np.concatenate([vals, vals])))
    for name in a:
        assert a[name] == pytest.approx(b[name], abs=1e-9)


def test_pca_degenerate_clamp():
    feats = f_pca(sample_from(np.zeros((10, 2)), np.zeros(10)))
    assert feats["expl_var_first_x"] == 0.5  # 1/n clamp
    assert np.isfinite(list(feats.values())).all()


# --- compute_features ---------------------------------------------------------

def test_compute_features_single_class():
    sm = sphere_sample(seed=1)
    fv = compute_features(sm, classes={"basic"})
    assert all(name.startswith("basic.") for name in fv.names)


def test_compute_features_all_classes_finite():
    sm = sphere_sample(seed=2)
    fv = compute_features(sm)
    assert len(fv.names) >= 28
    assert np.isfinite(fv.as_array()).all()


def test_compute_features_deterministic():
    sm = sphere_sample(seed=7)
    a = compute_features(sm)
    b = compute_features(sm)
    assert a.names == b.names and np.array_equal(a.as_array(), b.as_array())


def test_compute_features_unknown_class():
    with pytest.raises(DataError, match="unknown"):
        compute_features(sphere_sample(), classes={"basic", "nope"})


def test_translation_invariance_of_order_features(rng):
    pts = rng.uniform(-5, 5, size=(100, 2))
    vals = rng.normal(size=100)
    base = compute_features(sample_from(pts, vals), classes={"nbc", "disp", "pca"})
    shifted = compute_features(sample_from(pts, vals + 1000.0), classes={"nbc", "disp", "pca"})
    for name in base.names:
        if name.startswith("disp.") or name in ("nbc.nn_nb_mean_ratio", "nbc.nn_nb_sd_ratio"):
            assert base.entries[name] == shifted.entries[name]
        elif name in ("pca.expl_var_first_x", "pca.expl_var_x_0.9"):
            assert base.entries[name] == shifted.entries[name]
        elif name == "nbc.nb_fitness_cor":
            assert base.entries[name] == pytest.approx(shifted.entries[name], abs=1e-9)


def test_degenerate_samples_stay_finite(rng):
    cases = [
        sample_from(np.zeros((20, 2)), np.zeros(20)),  # everything constant
        sample_from(rng.uniform(-5, 5, (20, 2)), np.full(20, 3.0)),  # constant values
        sample_from(np.tile(rng.uniform(-5, 5, (10, 2)), (2, 1)), rng.normal(size=20)),
    ]
    for sm in cases:
        fv = compute_features(sm, classes={"basic", "ela_distr", "ela_meta", "nbc", "ic", "pca"})
        assert np.isfinite(fv.as_array()).all()
