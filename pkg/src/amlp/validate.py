"""Silhouette, Calinski-Harabasz and Davies-Bouldin indices.

Labels are canonicalized (numbered by first occurrence) before any
arithmetic, so renaming clusters cannot change a score in the last bit.
Per-cluster details are reported in the caller's label order.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ._validation import check_labels, check_matrix
from .cluster import ClusterAssignment
from .exceptions import DuplicateCentroidsError, ValidationIndexError

DB_ZERO_SCATTER = "db_zero_scatter"
SINGLETON_PRESENT = "singleton_present"
DUPLICATE_CENTROIDS = "duplicate_centroids"

_CHUNK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class SilhouetteDetail:
    per_point: np.ndarray
    per_point_a: np.ndarray
    per_point_b: np.ndarray
    mean: float
    singleton_present: bool = False


@dataclass(frozen=True)
class ChDetail:
    score: float
    trace_b: float
    trace_w: float
    k: int
    n: int
    cluster_means: list
    overall_mean: np.ndarray
    cluster_sizes: list


@dataclass(frozen=True)
class DbDetail:
    score: float
    sigmas: np.ndarray
    centroids: list
    pairwise_ratios: np.ndarray
    zero_scatter: bool = False


@dataclass(frozen=True)
class ValidationReport:
    silhouette: float = None
    calinski_harabasz: float = None
    davies_bouldin: float = None
    flags: frozenset = frozenset()
    errors: dict = field(default_factory=dict)

    def to_record(self):
        """Full-precision, JSON-serializable form (infinity as the string ``"inf"``)."""
        def enc(v):
            if v is None:
                return None
            return "inf" if math.isinf(v) else float(v)

        return {
            "silhouette": enc(self.silhouette),
            "calinski_harabasz": enc(self.calinski_harabasz),
            "davies_bouldin": enc(self.davies_bouldin),
            "flags": sorted(self.flags),
            "errors": dict(sorted(self.errors.items())),
        }

    def to_json(self):
        return json.dumps(self.to_record(), sort_keys=True)


def _prepare(x, labels):
    X = check_matrix(x, name="x", error=ValidationIndexError)
    raw = labels.labels if isinstance(labels, ClusterAssignment) else labels
    lab, k = check_labels(raw, X.shape[0], error=ValidationIndexError)
    # canonical id c <-> caller id order[c]
    _, first = np.unique(lab, return_index=True)
    order = np.argsort(first, kind="stable")
    to_canon = np.empty(k, dtype=np.int64)
    to_canon[order] = np.arange(k)
    return X, to_canon[lab], k, order


def check_k(k, n, upper, name):
    """Raise unless ``2 <= k <= upper``; ``name`` says what needs the bound."""
    if k < 2:
        raise ValidationIndexError(f"K must be at least 2 for {name}, got {k}")
    if k > upper:
        raise ValidationIndexError(f"K must be at most {upper} for {name} with {n} samples, got {k}")


def silhouette(x, labels):
    """Per-point ``(b - a) / max(a, b)`` with mean; singleton members score 0."""
    X, lab, k, order = _prepare(x, labels)
    n = X.shape[0]
    check_k(k, n, n - 1, "the silhouette score")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), lab] = 1.0
    sizes = np.bincount(lab, minlength=k).astype(float)
    sums = np.empty((n, k))
    step = max(1, _CHUNK_ELEMENTS // max(n, 1))
    for start in range(0, n, step):
        stop = min(start + step, n)
        sums[start:stop] = cdist(X[start:stop], X) @ onehot
    own = sizes[lab]
    a = np.zeros(n)
    multi = own > 1
    a[multi] = sums[np.arange(n), lab][multi] / (own[multi] - 1)
    means = sums / sizes
    means[np.arange(n), lab] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.zeros(n)
    ok = multi & (denom > 0)
    s[ok] = (b[ok] - a[ok]) / denom[ok]
    return SilhouetteDetail(s, a, b, float(s.mean()), bool(np.any(~multi)))


def calinski_harabasz(x, labels):
    """Variance ratio ``tr(B)/tr(W) * (N-K)/(K-1)``; ``inf`` when ``tr(W) = 0``."""
    X, lab, k, order = _prepare(x, labels)
    n = X.shape[0]
    check_k(k, n, n - 1, "the Calinski-Harabasz score")
    mu = X.mean(axis=0)
    sizes = np.bincount(lab, minlength=k)
    centroids = np.array([X[lab == q].mean(axis=0) for q in range(k)])
    trace_w = float(np.sum((X - centroids[lab]) ** 2))
    trace_b = float(np.sum(sizes * np.sum((centroids - mu) ** 2, axis=1)))
    score = math.inf if trace_w == 0.0 else (trace_b / trace_w) * (n - k) / (k - 1)
    return ChDetail(
        score=score, trace_b=trace_b, trace_w=trace_w, k=k, n=n,
        cluster_means=[centroids[c] for c in np.argsort(order)],
        overall_mean=mu,
        cluster_sizes=[int(sizes[c]) for c in np.argsort(order)],
    )


def davies_bouldin(x, labels):
    """Mean over clusters of the worst ``(sigma_i + sigma_j) / d(c_i, c_j)``.

    Raises :class:`DuplicateCentroidsError` when two centroids coincide.
    """
    X, lab, k, order = _prepare(x, labels)
    n = X.shape[0]
    check_k(k, n, n, "the Davies-Bouldin score")
    centroids = np.array([X[lab == q].mean(axis=0) for q in range(k)])
    sigmas = np.array([np.linalg.norm(X[lab == q] - centroids[q], axis=1).mean() for q in range(k)])
    dist = cdist(centroids, centroids)
    off = ~np.eye(k, dtype=bool)
    if np.any(dist[off] == 0.0):
        i, j = np.argwhere((dist == 0.0) & off)[0]
        raise DuplicateCentroidsError(
            f"clusters {int(order[i])} and {int(order[j])} have identical centroids"
        )
    ratios = np.zeros((k, k))
    ratios[off] = ((sigmas[:, None] + sigmas[None, :])[off]) / dist[off]
    score = float(np.mean(np.max(np.where(off, ratios, -np.inf), axis=1)))
    back = np.argsort(order)
    return DbDetail(
        score=score,
        sigmas=sigmas[back],
        centroids=[centroids[c] for c in back],
        pairwise_ratios=ratios[np.ix_(back, back)],
        zero_scatter=bool(np.all(sigmas == 0.0)),
    )


def validate_all(x, labels):
    """All three indices; an index that cannot be computed is recorded, not raised."""
    X = check_matrix(x, name="x", error=ValidationIndexError)
    raw = labels.labels if isinstance(labels, ClusterAssignment) else labels
    lab, _ = check_labels(raw, X.shape[0], error=ValidationIndexError)
    flags = set()
    errors = {}
    if np.any(np.bincount(lab) == 1):
        flags.add(SINGLETON_PRESENT)

    sil = ch = db = None
    try:
        sil = silhouette(X, lab).mean
    except ValidationIndexError as exc:
        errors["silhouette"] = str(exc)
    try:
        ch = calinski_harabasz(X, lab).score
        if math.isinf(ch):
            # tr(W) = 0 is the same degeneracy DB reports as zero scatter
            flags.add(DB_ZERO_SCATTER)
    except ValidationIndexError as exc:
        errors["calinski_harabasz"] = str(exc)
    try:
        detail = davies_bouldin(X, lab)
        db = detail.score
        if detail.zero_scatter:
            flags.add(DB_ZERO_SCATTER)
    except DuplicateCentroidsError as exc:
        flags.add(DUPLICATE_CENTROIDS)
        errors["davies_bouldin"] = str(exc)
    except ValidationIndexError as exc:
        errors["davies_bouldin"] = str(exc)
    return ValidationReport(sil, ch, db, frozenset(flags), errors)
