"""Dimensionality reducers sharing the scikit-learn transformer interface."""

from .base import (
    DISPLAY_NAMES,
    METHODS,
    IdentityReducer,
    ReducedEmbedding,
    ReducerConfig,
    config_from_mapping,
    export_model,
    load_model_dump,
    make_reducer,
    reduce,
    reduce_ica,
    reduce_kpca,
    reduce_lpp,
    reduce_svd,
    write_embedding,
)
from .ica import FastICAReducer, IcaModel
from .kpca import KernelPCAReducer, KpcaModel, median_sigma, rbf_kernel, rbf_kernel_matrix
from .lpp import LPPReducer, LppModel, heat_graph, lpp_matrices
from .svd import SVDReducer, SvdModel
