"""Agglomerative hierarchical clustering with Lance-Williams updates.

Leaves are node ids ``0..n-1``; merge ``i`` creates node ``n + i``.  Each
merge is recorded as ``(left, right, height, size)`` where ``left`` is the
cluster occupying the lower slot of the working distance matrix; the
merged cluster takes over that slot.  Among equal distances the pair with
the lexicographically smallest sorted node ids is merged first.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix
from .exceptions import ClusterError

LINKAGES = ("single", "complete", "average", "ward")
METRICS = ("euclidean",)


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    n_leaves: int
    merges: tuple

    def to_array(self):
        """Merges as an ``(n-1, 4)`` float array of left, right, height, size."""
        return np.array([(m.left, m.right, m.height, m.size) for m in self.merges], dtype=float).reshape(-1, 4)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for m in self.merges:
                fh.write(f"{m.left},{m.right},{m.height!r},{m.size}\n")

    @classmethod
    def from_file(cls, path, n_leaves=None):
        merges = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    left, right, height, size = line.strip().split(",")
                    merges.append(Merge(int(left), int(right), float(height), int(size)))
        n = n_leaves if n_leaves is not None else len(merges) + 1
        return cls(n, tuple(merges))


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    k: int


def _lance_williams(linkage, d_ki, d_kj, d_ij, n_i, n_j, n_k):
    """Distance from clusters ``k`` to ``i U j``; Ward works on squared distances."""
    if linkage == "single":
        return np.minimum(d_ki, d_kj)
    if linkage == "complete":
        return np.maximum(d_ki, d_kj)
    if linkage == "average":
        return (n_i * d_ki + n_j * d_kj) / (n_i + n_j)
    total = n_i + n_j + n_k
    return ((n_i + n_k) * d_ki + (n_j + n_k) * d_kj - n_k * d_ij) / total


def ahc_fit(x, linkage="ward", metric="euclidean"):
    """Build the full merge tree of ``x``.

    Each step merges the globally closest pair.  Row minima are cached and
    refreshed only where a merge may have changed them, which keeps the
    result identical to a full rescan while avoiding O(n^3) work.
    Ward heights are Euclidean: ``sqrt(2 n_a n_b / (n_a + n_b)) * ||mu_a - mu_b||``.
    """
    if linkage not in LINKAGES:
        raise ClusterError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    if metric not in METRICS:
        raise ClusterError(f"unknown metric {metric!r}; only euclidean is supported")
    X = check_matrix(x, name="x", error=ClusterError)
    n = X.shape[0]
    if n == 1:
        return Dendrogram(1, ())

    D = cdist(X, X, "sqeuclidean" if linkage == "ward" else "euclidean")
    np.fill_diagonal(D, np.inf)
    node = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    row_min = np.empty(n)
    row_arg = np.empty(n, dtype=np.int64)

    def refresh(r):
        vals = D[r]
        m = vals.min()
        cand = np.flatnonzero(vals == m)
        row_min[r] = m
        row_arg[r] = cand[np.argmin(node[cand])] if cand.size > 1 else cand[0]

    for r in range(n):
        refresh(r)

    merges = []
    for step in range(n - 1):
        gmin = row_min[active].min()
        rows = np.flatnonzero(active & (row_min == gmin))
        r = rows[np.argmin(node[rows])]
        c = row_arg[r]
        i, j = (r, c) if r < c else (c, r)
        d_ij = D[i, j]
        height = float(np.sqrt(d_ij)) if linkage == "ward" else float(d_ij)
        merges.append(Merge(int(node[i]), int(node[j]), height, int(size[i] + size[j])))

        others = active.copy()
        others[[i, j]] = False
        new = _lance_williams(linkage, D[i, others], D[j, others], d_ij, size[i], size[j], size[others])
        D[i, others] = new
        D[others, i] = new
        D[j, :] = np.inf
        D[:, j] = np.inf
        active[j] = False
        row_min[j] = np.inf
        size[i] += size[j]
        node[i] = n + step

        refresh(i)
        stale = np.flatnonzero(others & ((row_arg == i) | (row_arg == j)))
        for r in stale:
            refresh(r)
        rest = np.flatnonzero(others & (row_arg != i) & (row_arg != j))
        better = rest[D[rest, i] < row_min[rest]]
        row_min[better] = D[better, i]
        row_arg[better] = i
    return Dendrogram(n, tuple(merges))


def _relabel_by_first_leaf(roots):
    _, first = np.unique(roots, return_index=True)
    order = np.argsort(first, kind="stable")
    ranks = np.empty(order.size, dtype=np.int64)
    ranks[order] = np.arange(order.size)
    _, inverse = np.unique(roots, return_inverse=True)
    return ranks[inverse]


def cut(d, k):
    """Partition into ``k`` clusters by undoing the last ``k - 1`` merges.

    Labels are numbered by the smallest leaf index of each cluster.
    """
    n = d.n_leaves
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 1 <= k <= n:
        raise ClusterError(f"k must be an integer in [1, {n}], got {k!r}")
    parent = np.arange(2 * n - 1)
    for step, m in enumerate(d.merges[: n - k]):
        parent[m.left] = n + step
        parent[m.right] = n + step
    roots = np.arange(n)
    while True:
        nxt = parent[roots]
        if np.array_equal(nxt, roots):
            break
        roots = nxt
    return ClusterAssignment(_relabel_by_first_leaf(roots), int(k))


def write_assignment(path, customer_ids, assignment):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["customer_id", "label"])
        for cid, lab in zip(customer_ids, assignment.labels):
            writer.writerow([cid, int(lab)])


def read_assignment(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["customer_id", "label"]:
            raise ClusterError(f"{path}: header must be customer_id,label")
        ids, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            try:
                ids.append(rec[0])
                labels.append(int(rec[1]))
            except (IndexError, ValueError):
                raise ClusterError(f"{path}: malformed row {lineno}") from None
    return ids, np.array(labels, dtype=np.int64)


class HierarchicalClustering(ClusterMixin, BaseEstimator):
    """Agglomerative clustering estimator; the fitted tree can be recut freely.

    Parameters
    ----------
    n_clusters : int
    linkage : {'single', 'complete', 'average', 'ward'}
    """

    def __init__(self, n_clusters=3, linkage="ward"):
        self.n_clusters = n_clusters
        self.linkage = linkage

    def fit(self, X, y=None):
        self.dendrogram_ = ahc_fit(X, linkage=self.linkage)
        self.labels_ = cut(self.dendrogram_, self.n_clusters).labels
        return self

    def recut(self, k):
        check_is_fitted(self, "dendrogram_")
        return cut(self.dendrogram_, k).labels
