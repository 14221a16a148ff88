import math
import warnings

import numpy as np
import pytest
from scipy.spatial.distance import pdist
from sklearn.decomposition import KernelPCA

from amlp.drt import (
    FastICAReducer,
    KernelPCAReducer,
    LPPReducer,
    ReducerConfig,
    SVDReducer,
    export_model,
    heat_graph,
    load_model_dump,
    lpp_matrices,
    median_sigma,
    rbf_kernel,
    reduce,
    reduce_ica,
    reduce_kpca,
    reduce_lpp,
    reduce_svd,
    write_embedding,
)
from amlp.exceptions import IcaConvergenceError, ReducerError
from amlp.profiling import standardize


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    # non-Gaussian sources so FastICA has structure to find
    x = rng.laplace(size=(60, 8)) @ rng.standard_normal((8, 8))
    return standardize(x)[0]


def align_signs(a, b):
    """Flip columns of ``a`` to best match ``b``."""
    signs = np.sign(np.sum(a * b, axis=0))
    signs[signs == 0] = 1
    return a * signs


# --- SVD ---------------------------------------------------------------

def test_svd_full_rank_is_isometry(data):
    emb = reduce_svd(data, data.shape[1]).values
    np.testing.assert_allclose(pdist(emb), pdist(data), atol=1e-8)


def test_svd_collinear_data_single_component_keeps_all_variance():
    t = np.linspace(-3, 3, 40)
    direction = np.array([1.0, -2.0, 0.5, 3.0])
    x = np.outer(t, direction)
    emb = reduce_svd(x, 1).values
    assert abs(np.sum(emb ** 2) - np.sum(x ** 2)) <= 1e-8 * np.sum(x ** 2)


def test_svd_reconstruction_error_matches_tail_of_numpy_spectrum():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((50, 10))
    red = SVDReducer(n_components=3).fit(x)
    recon = red.inverse_transform(red.transform(x))
    sigma = np.linalg.svd(x, compute_uv=False)
    expected = math.sqrt(np.sum(sigma[3:] ** 2))
    assert abs(np.linalg.norm(x - recon) - expected) <= 1e-7 * expected


def test_svd_embedding_matches_numpy_oracle(data):
    k = 4
    _, _, vt = np.linalg.svd(data, full_matrices=False)
    oracle = data @ vt[:k].T
    emb = reduce_svd(data, k).values
    np.testing.assert_allclose(align_signs(emb, oracle), oracle, atol=1e-8)


@pytest.mark.parametrize("k", [0, 9, 2.0])
def test_svd_rejects_bad_k(data, k):
    with pytest.raises(ReducerError):
        reduce_svd(data, k)


# --- RBF kernel / KPCA ---------------------------------------------------

def test_rbf_kernel_values():
    x = np.array([1.0, 2.0, 3.0])
    assert rbf_kernel(x, x, 0.7) == 1.0
    sigma = 1.3
    y = x + np.array([sigma * math.sqrt(2), 0.0, 0.0])
    assert rbf_kernel(x, y, sigma) == pytest.approx(math.exp(-1), abs=1e-12)
    assert rbf_kernel(x, y, sigma) == pytest.approx(0.367879, abs=1e-6)
    values = [rbf_kernel(np.zeros(2), np.array([d, 0.0]), 1.0) for d in np.linspace(0, 20, 50)]
    assert all(a > b for a, b in zip(values, values[1:]) if b > 0)
    assert 0 <= values[-1] < 1e-80
    assert rbf_kernel(x, y, sigma) == rbf_kernel(y, x, sigma)


def test_rbf_kernel_rejects_bad_sigma():
    with pytest.raises(ReducerError):
        rbf_kernel(np.zeros(2), np.ones(2), 0.0)


def test_kpca_duplicates_have_no_positive_eigenvalues():
    with pytest.raises(ReducerError, match="no positive eigenvalues"):
        reduce_kpca(np.ones((10, 3)), 1)


def test_kpca_reports_achievable_count():
    x = np.array([[0.0, 0.0], [0.0, 0.0], [5.0, 5.0], [5.0, 5.0]])
    with pytest.raises(ReducerError, match="only 1 positive"):
        reduce_kpca(x, 2, sigma=2.0)


def test_kpca_single_component_separates_far_blobs_by_sign():
    rng = np.random.default_rng(2)
    a = rng.normal(0, 0.3, (30, 3))
    b = rng.normal(6, 0.3, (30, 3))
    x = standardize(np.vstack([a, b]))[0]
    emb = reduce_kpca(x, 1).values[:, 0]
    assert (np.all(emb[:30] > 0) and np.all(emb[30:] < 0)) or (np.all(emb[:30] < 0) and np.all(emb[30:] > 0))


def test_kpca_matches_sklearn_oracle(data):
    sigma = 1.7
    ours = reduce_kpca(data, 3, sigma=sigma).values
    ref = KernelPCA(n_components=3, kernel="rbf", gamma=1 / (2 * sigma ** 2), eigen_solver="dense").fit_transform(data)
    np.testing.assert_allclose(align_signs(ours, ref), ref, atol=1e-8)


def test_kpca_components_uncorrelated_and_ordered(data):
    red = KernelPCAReducer(n_components=5).fit(data)
    cov = np.cov(red.embedding_.T)
    off = cov - np.diag(np.diag(cov))
    assert np.max(np.abs(off)) < 1e-6 * np.max(np.diag(cov))
    assert np.all(np.diff(red.eigenvalues_) <= 0) and np.all(red.eigenvalues_ > 0)
    np.testing.assert_allclose(red.transform(data), red.embedding_, atol=1e-8)


def test_median_sigma_rule():
    x = np.array([[0.0], [1.0], [3.0]])
    # squared distances 1, 9, 4 -> median 4 -> sigma^2 = 2
    assert median_sigma(x) == pytest.approx(math.sqrt(2))
    rng = np.random.default_rng(3)
    big = rng.standard_normal((1500, 2))
    assert median_sigma(big, seed=1) == median_sigma(big, seed=1)
    assert median_sigma(np.zeros((4, 2))) == 1.0


# --- ICA ------------------------------------------------------------------

def uniform_sources(n, k, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-math.sqrt(3), math.sqrt(3), (n, k))


def match_sources(est, true):
    """Greedy |corr| matching; returns the matched correlations."""
    k = true.shape[1]
    c = np.abs(np.corrcoef(est.T, true.T)[:k, k:])
    out = []
    for _ in range(k):
        i, j = np.unravel_index(np.argmax(c), c.shape)
        out.append(c[i, j])
        c[i, :] = -1
        c[:, j] = -1
    return out


def test_ica_on_already_independent_sources():
    s = uniform_sources(3000, 3, 4)
    s = standardize(s)[0]
    emb = reduce_ica(s, 3).values
    assert min(match_sources(emb, s)) >= 0.99


def test_ica_unmixes_rotated_uniform_sources():
    s = uniform_sources(2000, 2, 5)
    th = math.radians(30)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    emb = reduce_ica(standardize(s @ rot.T)[0], 2).values
    assert min(match_sources(emb, s)) >= 0.95


def test_ica_gaussian_sources_run_without_recovery_claim():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((500, 2))
    try:
        emb = reduce_ica(x, 2).values
    except IcaConvergenceError:
        return
    assert np.all(np.isfinite(emb))


def test_ica_model_structure(data):
    red = FastICAReducer(n_components=4, random_state=3).fit(data)
    model = red.model_
    centered = data - model.means
    white = centered @ model.whitening.T
    np.testing.assert_allclose(np.cov(white.T, bias=True), np.eye(4), atol=1e-6)
    np.testing.assert_allclose(white @ model.rotation.T, red.embedding_, atol=1e-8)
    np.testing.assert_allclose(centered @ model.demixing.T, red.embedding_, atol=1e-8)
    np.testing.assert_allclose(model.rotation @ model.rotation.T, np.eye(4), atol=1e-6)
    np.testing.assert_allclose(red.embedding_.var(axis=0), 1.0, atol=1e-6)
    np.testing.assert_allclose(model.demixing @ model.mixing, np.eye(4), atol=1e-8)
    kurt = np.abs((red.embedding_ ** 4).mean(axis=0) - 3)
    assert np.all(np.diff(kurt) <= 1e-12)


def test_ica_kurtosis_contrast():
    s = uniform_sources(2000, 2, 7)
    mix = s @ np.array([[1.0, 0.4], [0.2, 1.0]]).T
    emb = reduce_ica(standardize(mix)[0], 2, ReducerConfig(ica_contrast="kurtosis")).values
    assert min(match_sources(emb, s)) >= 0.95


def test_ica_non_convergence_carries_iterations(data):
    with pytest.raises(IcaConvergenceError) as info:
        reduce_ica(data, 4, ReducerConfig(ica_max_iter=1, ica_tol=1e-15))
    assert info.value.iterations_used == 1


def test_ica_rejects_more_components_than_variance_directions():
    rng = np.random.default_rng(8)
    x = np.c_[rng.standard_normal((50, 2)), np.zeros((50, 2))]
    with pytest.raises(ReducerError, match="non-zero variance"):
        reduce_ica(x, 3)


def test_ica_warns_when_underdetermined():
    rng = np.random.default_rng(9)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            reduce_ica(rng.standard_normal((5, 6)), 2)
        except ReducerError:
            pass
    assert any("poorly determined" in str(w.message) for w in caught)


# --- LPP ------------------------------------------------------------------

def test_lpp_duplicate_rows_embed_identically(data):
    x = np.vstack([data, data[:5]])
    emb = reduce_lpp(x, 3).values
    np.testing.assert_array_equal(emb[-5:], emb[:5])


def test_lpp_preserves_order_along_a_line():
    rng = np.random.default_rng(10)
    t = np.sort(rng.uniform(0, 10, 200))
    direction = rng.standard_normal(10)
    x = standardize(np.outer(t, direction) + rng.standard_normal(10))[0]
    emb = reduce_lpp(x, 1).values[:, 0]
    steps = np.diff(emb)
    assert np.all(steps > 0) or np.all(steps < 0)


def _b_orthonormal_random(rng, b, d, k):
    w = rng.standard_normal((d, k))
    g = w.T @ b @ w
    vals, vecs = np.linalg.eigh(g)
    return w @ vecs @ np.diag(vals ** -0.5) @ vecs.T


@pytest.mark.parametrize("seed", range(3))
def test_lpp_objective_beats_random_projections(seed):
    rng = np.random.default_rng(seed)
    x = standardize(rng.standard_normal((200, 10)) @ rng.standard_normal((10, 10)))[0]
    k = 3
    red = LPPReducer(n_components=k).fit(x)
    aff, deg, _ = heat_graph(x, 10)
    xlx, xdx = lpp_matrices(x, aff, deg)
    b = xdx + 1e-8 * np.trace(xdx) / 10 * np.eye(10)
    w = red.components_
    ours = np.trace(w.T @ xlx @ w)
    assert ours == pytest.approx(red.model_.laplacian_objective, rel=1e-9)
    for _ in range(100):
        r = _b_orthonormal_random(rng, b, 10, k)
        assert ours <= np.trace(r.T @ xlx @ r) + 1e-9


def test_lpp_generalized_residuals_and_b_orthonormality(data):
    red = LPPReducer(n_components=4).fit(data)
    aff, deg, _ = heat_graph(data, 10)
    xlx, xdx = lpp_matrices(data, aff, deg)
    b = xdx + 1e-8 * np.trace(xdx) / data.shape[1] * np.eye(data.shape[1])
    w = red.components_
    np.testing.assert_allclose(w.T @ xdx @ w, np.eye(4), atol=1e-6)
    for lam, col in zip(red.eigenvalues_, w.T):
        resid = np.linalg.norm(xlx @ col - lam * b @ col)
        assert resid < 1e-6 * (np.linalg.norm(xlx) + abs(lam) * np.linalg.norm(b))
    assert red.model_.laplacian_objective >= 0


def test_lpp_objective_nests_across_k(data):
    objs = [LPPReducer(n_components=k).fit(data).model_.laplacian_objective for k in range(1, 6)]
    assert all(a <= b + 1e-12 for a, b in zip(objs, objs[1:]))
    big = LPPReducer(n_components=5).fit(data)
    small = LPPReducer(n_components=3).fit(data)
    np.testing.assert_allclose(big.components_[:, :3], small.components_, atol=1e-8)


def test_lpp_needs_more_samples_than_neighbors():
    with pytest.raises(ReducerError, match="neighbors"):
        reduce_lpp(np.random.default_rng(0).standard_normal((5, 3)), 1)


def test_heat_graph_is_symmetric_with_auto_heat(data):
    aff, deg, t = heat_graph(data, 5)
    assert (abs(aff - aff.T)).max() == 0
    np.testing.assert_allclose(deg, np.asarray(aff.sum(axis=1)).ravel())
    assert t > 0 and aff.diagonal().sum() == 0


# --- dispatch ---------------------------------------------------------------

def test_reduce_none_is_identity(data):
    out = reduce(data, ReducerConfig(method="none"))
    assert np.array_equal(out.values, data) and out.values is not data
    assert out.method == "none" and out.model is None


def test_reduce_shape_contract_at_full_scale():
    rng = np.random.default_rng(11)
    x = standardize(rng.standard_normal((4099, 80)))[0]
    assert reduce(x, ReducerConfig(method="svd", k=2)).values.shape == (4099, 2)


@pytest.mark.parametrize("method", ["ica", "kpca", "svd", "lpp", "none"])
def test_reduce_is_deterministic_and_finite(data, method):
    # k=4 is where FastICA converges on this sample (sklearn agrees)
    cfg = ReducerConfig(method=method, k=4, seed=42)
    a, b = reduce(data, cfg), reduce(data, cfg)
    assert np.array_equal(a.values, b.values)
    assert np.all(np.isfinite(a.values))
    assert a.k == (4 if method != "none" else data.shape[1])


def test_config_validation():
    with pytest.raises(ReducerError):
        ReducerConfig(method="pca")
    with pytest.raises(ReducerError):
        ReducerConfig(ica_contrast="cube")


def test_embedding_and_model_export(tmp_path, data):
    emb = reduce(data, ReducerConfig(method="svd", k=2))
    write_embedding(tmp_path / "e.csv", [f"C{i}" for i in range(len(data))], emb.values)
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "customer_id,c1,c2" and len(lines) == len(data) + 1
    export_model(emb.model, tmp_path / "m.txt")
    dump = load_model_dump(tmp_path / "m.txt")
    assert dump["model"] == "SvdModel"
    np.testing.assert_array_equal(dump["components"], emb.model.components)
    np.testing.assert_array_equal(dump["singular_values"].ravel(), emb.model.singular_values)

    lpp = reduce(data, ReducerConfig(method="lpp", k=2))
    export_model(lpp.model, tmp_path / "lpp.txt")
    dump = load_model_dump(tmp_path / "lpp.txt")
    assert float(dump["laplacian_objective"]) == lpp.model.laplacian_objective
    assert int(dump["graph_neighbors"]) == 10
