"""Locality preserving projections on a heat-kernel k-NN graph."""

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_matrix, check_n_components
from ..exceptions import LinAlgError, ReducerError
from ..linalg import fix_signs, gen_sym_eigen, svd

REGULARIZATION = 1e-8
RANK_RTOL = 1e-9
_CHUNK = 512


@dataclass(frozen=True)
class LppModel:
    projection: np.ndarray
    eigenvalues: np.ndarray
    laplacian_objective: float
    graph_neighbors: int
    heat: float


def knn(X, n_neighbors):
    """Indices and squared distances of each row's nearest other rows.

    Ties are resolved by row index, which keeps the graph deterministic
    when the data contains duplicates.
    """
    n = X.shape[0]
    idx = np.empty((n, n_neighbors), dtype=np.int64)
    d2 = np.empty((n, n_neighbors))
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        block = cdist(X[start:stop], X, "sqeuclidean")
        block[np.arange(stop - start), np.arange(start, stop)] = np.inf
        nearest = np.argsort(block, axis=1, kind="stable")[:, :n_neighbors]
        idx[start:stop] = nearest
        d2[start:stop] = np.take_along_axis(block, nearest, axis=1)
    return idx, d2


def heat_graph(X, n_neighbors=10, heat="auto"):
    """Symmetric k-NN union graph with ``exp(-d^2 / t)`` weights.

    ``heat='auto'`` sets ``t`` to the mean squared k-NN distance.
    Returns ``(affinity, degrees, t)`` with ``affinity`` a sparse CSR matrix.
    """
    n = X.shape[0]
    if n <= n_neighbors:
        raise ReducerError(f"LPP needs more samples ({n}) than graph neighbors ({n_neighbors})")
    idx, d2 = knn(X, n_neighbors)
    if heat is None or heat == "auto":
        t = float(d2.mean())
        if t <= 0.0:
            t = 1.0
    else:
        t = float(heat)
        if not t > 0:
            raise ReducerError(f"heat must be positive, got {heat!r}")
    rows = np.repeat(np.arange(n), n_neighbors)
    aff = sparse.csr_matrix((np.exp(-d2.ravel() / t), (rows, idx.ravel())), shape=(n, n))
    aff = aff.maximum(aff.T).tocsr()
    degrees = np.asarray(aff.sum(axis=1)).ravel()
    return aff, degrees, t


def lpp_matrices(X, affinity, degrees):
    """``(X^T L X, X^T D X)`` for the graph Laplacian ``L = D - affinity``."""
    xdx = X.T @ (degrees[:, None] * X)
    xlx = xdx - X.T @ (affinity @ X)
    return 0.5 * (xlx + xlx.T), 0.5 * (xdx + xdx.T)


class LPPReducer(TransformerMixin, BaseEstimator):
    """Linear projection minimizing ``tr(W^T X^T L X W)`` s.t. ``W^T X^T D X W = I``.

    The problem is solved inside the row space of ``X`` so that
    zero-variance directions (constant profile columns, rank-deficient data)
    cannot produce a trivially zero objective.

    Parameters
    ----------
    n_components : int
    n_neighbors : int
        Neighbors per point in the k-NN graph before symmetrization.
    heat : float or 'auto'
        Heat-kernel parameter ``t``.
    """

    def __init__(self, n_components=2, n_neighbors=10, heat="auto", solver="auto"):
        self.n_components = n_components
        self.n_neighbors = n_neighbors
        self.heat = heat
        self.solver = solver

    def fit(self, X, y=None):
        X = check_matrix(X, name="X", min_rows=2, error=ReducerError)
        k = check_n_components(self.n_components, X.shape[1], error=ReducerError)
        aff, degrees, t = heat_graph(X, self.n_neighbors, self.heat)

        res = svd(X, solver=self.solver)
        rank = int(np.count_nonzero(res.sigma > RANK_RTOL * res.sigma[0])) if res.sigma[0] > 0 else 0
        if k > rank:
            raise ReducerError(f"{k} components requested but the data has rank {rank}")
        basis = res.v[:, :rank]
        Y = X @ basis
        a, b = lpp_matrices(Y, aff, degrees)
        b = b + REGULARIZATION * np.trace(b) / rank * np.eye(rank)
        try:
            eig = gen_sym_eigen(a, b, solver=self.solver)
        except LinAlgError as exc:
            raise ReducerError(
                f"X^T D X is singular after regularization ({exc}); project with PCA before LPP"
            ) from exc
        inner = eig.vectors[:, :k]
        projection, _ = fix_signs(basis @ inner)

        self.components_ = projection
        self.eigenvalues_ = eig.values[:k]
        self.objective_ = max(float(np.trace(inner.T @ a @ inner)), 0.0)
        self.heat_ = t
        self.n_features_in_ = X.shape[1]
        self.embedding_ = X @ projection
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_matrix(X, name="X", error=ReducerError)
        return X @ self.components_

    @property
    def model_(self):
        check_is_fitted(self, "components_")
        return LppModel(self.components_, self.eigenvalues_, self.objective_, self.n_neighbors, self.heat_)
