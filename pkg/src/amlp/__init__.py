"""Customer-profile clustering with interchangeable dimensionality reducers."""

from .cluster import ClusterAssignment, Dendrogram, HierarchicalClustering, ahc_fit, cut
from .drt import (
    FastICAReducer,
    KernelPCAReducer,
    LPPReducer,
    ReducedEmbedding,
    ReducerConfig,
    SVDReducer,
    reduce,
)
from .exceptions import AmlpError
from .harness import GridCellResult, GridConfig, emit_report, run_grid, summarize
from .profiling import (
    ProfileMatrix,
    ProfileScaler,
    ProfileSchema,
    TransactionRecord,
    build_profiles,
    parse_transactions,
    standardize,
)
from .synth import SynthSpec, synth_dataset
from .validate import ValidationReport, calinski_harabasz, davies_bouldin, silhouette, validate_all

__version__ = "0.1.0"
