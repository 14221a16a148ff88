"""Kernel PCA with a Gaussian (RBF) kernel."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_matrix, check_n_components
from ..exceptions import ReducerError
from ..linalg import sym_eigen

SIGMA_SAMPLE = 1000


@dataclass(frozen=True)
class KpcaModel:
    training_points: np.ndarray
    sigma: float
    alphas: np.ndarray
    eigenvalues: np.ndarray
    kernel_row_means: np.ndarray
    kernel_total_mean: float


def rbf_kernel(x, y, sigma):
    """``exp(-||x - y||^2 / (2 sigma^2))`` for two vectors."""
    if not sigma > 0:
        raise ReducerError(f"sigma must be positive, got {sigma!r}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ReducerError(f"vectors differ in length: {x.shape} vs {y.shape}")
    d = x - y
    return math.exp(-float(d @ d) / (2.0 * sigma * sigma))


def rbf_kernel_matrix(X, Y, sigma):
    return np.exp(-cdist(X, Y, "sqeuclidean") / (2.0 * sigma * sigma))


def median_sigma(X, seed=0, max_rows=SIGMA_SAMPLE):
    """Width from the median heuristic: ``sigma^2 = median(||xi - xj||^2) / 2``.

    Rows are subsampled (seeded, without replacement) above ``max_rows``.
    Falls back to the mean positive distance, then to 1, when the median is 0.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] > max_rows:
        rng = np.random.default_rng(seed)
        X = X[np.sort(rng.choice(X.shape[0], size=max_rows, replace=False))]
    d2 = pdist(X, "sqeuclidean")
    med = float(np.median(d2)) if d2.size else 0.0
    if med <= 0.0:
        pos = d2[d2 > 0]
        med = float(pos.mean()) if pos.size else 2.0
    return math.sqrt(med / 2.0)


def center_kernel(K):
    row_means = K.mean(axis=0)
    total = float(row_means.mean())
    Kc = K - row_means[None, :] - row_means[:, None] + total
    return 0.5 * (Kc + Kc.T), row_means, total


class KernelPCAReducer(TransformerMixin, BaseEstimator):
    """RBF kernel PCA on the double-centered kernel matrix.

    Parameters
    ----------
    n_components : int
        Number of kernel principal components (at most ``n_samples``).
    sigma : float or 'auto'
        Kernel width; ``'auto'`` uses :func:`median_sigma`.
    random_state : int
        Seed for the row subsample of the median heuristic.
    """

    def __init__(self, n_components=2, sigma="auto", random_state=0, solver="auto"):
        self.n_components = n_components
        self.sigma = sigma
        self.random_state = random_state
        self.solver = solver

    def fit(self, X, y=None):
        X = check_matrix(X, name="X", min_rows=2, error=ReducerError)
        n = X.shape[0]
        k = check_n_components(self.n_components, n, what="n_samples", error=ReducerError)
        if self.sigma is None or self.sigma == "auto":
            sigma = median_sigma(X, seed=self.random_state)
        else:
            sigma = float(self.sigma)
            if not sigma > 0:
                raise ReducerError(f"sigma must be positive, got {self.sigma!r}")

        Kc, row_means, total = center_kernel(rbf_kernel_matrix(X, X, sigma))
        eig = sym_eigen(Kc, solver=self.solver)
        scale = float(np.max(np.abs(eig.values)))
        positive = eig.values > n * np.finfo(float).eps * scale
        available = int(np.count_nonzero(positive))
        if available == 0:
            raise ReducerError("no positive eigenvalues in the centered kernel matrix")
        if available < k:
            raise ReducerError(
                f"only {available} positive eigenvalue(s) after centering; cannot keep {k} components"
            )
        lam = eig.values[:k]
        vecs = eig.vectors[:, :k]
        self.sigma_ = sigma
        self.eigenvalues_ = lam
        self.alphas_ = vecs / np.sqrt(lam)
        self.X_fit_ = X
        self.kernel_row_means_ = row_means
        self.kernel_total_mean_ = total
        self.n_features_in_ = X.shape[1]
        self.embedding_ = vecs * np.sqrt(lam)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def transform(self, X):
        check_is_fitted(self, "alphas_")
        X = check_matrix(X, name="X", error=ReducerError)
        K = rbf_kernel_matrix(X, self.X_fit_, self.sigma_)
        Kc = K - K.mean(axis=1, keepdims=True) - self.kernel_row_means_[None, :] + self.kernel_total_mean_
        return Kc @ self.alphas_

    @property
    def model_(self):
        check_is_fitted(self, "alphas_")
        return KpcaModel(
            self.X_fit_, self.sigma_, self.alphas_, self.eigenvalues_,
            self.kernel_row_means_, self.kernel_total_mean_,
        )
