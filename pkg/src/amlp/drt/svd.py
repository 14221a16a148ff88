from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_matrix, check_n_components
from ..exceptions import ReducerError
from ..linalg import svd


@dataclass(frozen=True)
class SvdModel:
    components: np.ndarray
    singular_values: np.ndarray


class SVDReducer(TransformerMixin, BaseEstimator):
    """Projection onto the leading right singular vectors.

    The input is expected to be standardized already; no centering is
    applied, so the embedding is exactly ``X @ components_``.

    Parameters
    ----------
    n_components : int
        Number of singular directions kept.
    solver : {'auto', 'jacobi', 'lapack'}
        Eigensolver used on the Gram matrix.
    """

    def __init__(self, n_components=2, solver="auto"):
        self.n_components = n_components
        self.solver = solver

    def fit(self, X, y=None):
        X = check_matrix(X, name="X", error=ReducerError)
        k = check_n_components(self.n_components, X.shape[1], error=ReducerError)
        res = svd(X, solver=self.solver)
        self.components_ = res.v[:, :k]
        self.singular_values_ = res.sigma[:k]
        self.n_features_in_ = X.shape[1]
        self.embedding_ = X @ self.components_
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_matrix(X, name="X", error=ReducerError)
        return X @ self.components_

    def inverse_transform(self, E):
        check_is_fitted(self, "components_")
        return np.asarray(E, dtype=np.float64) @ self.components_.T

    @property
    def model_(self):
        check_is_fitted(self, "components_")
        return SvdModel(self.components_, self.singular_values_)
