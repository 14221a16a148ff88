"""FastICA: PCA whitening followed by a symmetric fixed-point rotation."""

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_matrix, check_n_components
from ..exceptions import IcaConvergenceError, ReducerError
from ..linalg import fix_signs, sym_eigen

CONTRASTS = ("logcosh", "kurtosis")


@dataclass(frozen=True)
class IcaModel:
    mixing: np.ndarray
    demixing: np.ndarray
    whitening: np.ndarray
    rotation: np.ndarray
    means: np.ndarray
    iterations_used: int


def _logcosh(u):
    g = np.tanh(u)
    return g, 1.0 - g * g


def _cube(u):
    return u ** 3, 3.0 * u * u


def symmetric_decorrelation(W):
    """``(W W^T)^(-1/2) W``: the nearest matrix with orthonormal rows."""
    eig = sym_eigen(W @ W.T, solver="lapack")
    s = np.clip(eig.values, np.finfo(float).tiny, None)
    u = eig.vectors
    return (u / np.sqrt(s)) @ u.T @ W


def excess_kurtosis(S):
    S = S - S.mean(axis=0)
    var = S.var(axis=0)
    var[var == 0] = 1.0
    return (S ** 4).mean(axis=0) / var ** 2 - 3.0


class FastICAReducer(TransformerMixin, BaseEstimator):
    """Independent components by negentropy maximization.

    Components are ordered by descending absolute excess kurtosis, and each
    demixing row is signed so its largest-magnitude entry is positive.

    Parameters
    ----------
    n_components : int
        Whitened dimension and number of sources.
    contrast : {'logcosh', 'kurtosis'}
        Non-quadratic contrast of the fixed-point update.
    tol : float
        Stop once ``max |1 - |<w_new, w_old>||`` falls below this.
    max_iter : int
    random_state : int
        Seed of the initial rotation.
    """

    def __init__(self, n_components=2, contrast="logcosh", tol=1e-6, max_iter=500,
                 random_state=0, solver="auto"):
        self.n_components = n_components
        self.contrast = contrast
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state
        self.solver = solver

    def _whiten(self, X, k):
        n, d = X.shape
        means = X.mean(axis=0)
        Xc = X - means
        eig = sym_eigen(Xc.T @ Xc / n, solver=self.solver)
        top = eig.values[0]
        rank = int(np.count_nonzero(eig.values > max(top, 0.0) * 1e-12)) if top > 0 else 0
        if k > rank:
            raise ReducerError(
                f"{k} components requested but the data has only {rank} directions of non-zero variance"
            )
        vals, vecs = eig.values[:k], eig.vectors[:, :k]
        whitening = (vecs / np.sqrt(vals)).T
        dewhitening = vecs * np.sqrt(vals)
        return means, whitening, dewhitening, Xc @ whitening.T

    def fit(self, X, y=None):
        X = check_matrix(X, name="X", min_rows=2, error=ReducerError)
        n, d = X.shape
        k = check_n_components(self.n_components, d, error=ReducerError)
        if self.contrast not in CONTRASTS:
            raise ReducerError(f"contrast must be one of {CONTRASTS}, got {self.contrast!r}")
        if n <= d:
            warnings.warn(f"ICA with n_samples={n} <= n_features={d} is poorly determined", stacklevel=2)
        g = _logcosh if self.contrast == "logcosh" else _cube

        means, whitening, dewhitening, Z = self._whiten(X, k)
        rng = np.random.default_rng(self.random_state)
        W = symmetric_decorrelation(rng.standard_normal((k, k)))
        for it in range(1, self.max_iter + 1):
            gu, gpu = g(Z @ W.T)
            W_new = symmetric_decorrelation(gu.T @ Z / n - gpu.mean(axis=0)[:, None] * W)
            lim = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", W_new, W)) - 1.0)))
            W = W_new
            if lim < self.tol:
                break
        else:
            raise IcaConvergenceError(
                f"FastICA did not converge in {self.max_iter} iterations (last change {lim:.3e})",
                iterations_used=self.max_iter,
            )

        S = Z @ W.T
        order = np.argsort(-np.abs(excess_kurtosis(S)), kind="stable")
        W = W[order]
        demixing = W @ whitening
        _, signs = fix_signs(demixing.T)
        W = W * signs[:, None]

        self.rotation_ = W
        self.whitening_ = whitening
        self.components_ = W @ whitening
        self.mixing_ = dewhitening @ W.T
        self.mean_ = means
        self.n_iter_ = it
        self.n_features_in_ = d
        self.embedding_ = (X - means) @ self.components_.T
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_matrix(X, name="X", error=ReducerError)
        return (X - self.mean_) @ self.components_.T

    def inverse_transform(self, S):
        check_is_fitted(self, "components_")
        return np.asarray(S, dtype=np.float64) @ self.mixing_.T + self.mean_

    @property
    def model_(self):
        check_is_fitted(self, "components_")
        return IcaModel(self.mixing_, self.components_, self.whitening_, self.rotation_,
                        self.mean_, self.n_iter_)
