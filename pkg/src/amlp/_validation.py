"""Input checking helpers used by the public operations."""

import numpy as np

from .exceptions import AmlpError


def check_matrix(x, *, name="x", min_rows=1, min_cols=1, error=AmlpError):
    """Return ``x`` as a finite 2-D float64 array or raise ``error``."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise error(f"{name} must be a 2-D matrix, got {a.ndim} dimension(s)")
    if a.shape[0] < min_rows or a.shape[1] < min_cols:
        raise error(
            f"{name} must have at least {min_rows} row(s) and {min_cols} column(s), "
            f"got shape {a.shape}"
        )
    if not np.all(np.isfinite(a)):
        raise error(f"{name} contains non-finite entries")
    return a


def check_square_symmetric(m, *, name="m", rtol=1e-10, error=AmlpError):
    a = check_matrix(m, name=name, error=error)
    n, p = a.shape
    if n != p:
        raise error(f"{name} must be square, got shape {a.shape}")
    scale = max(np.max(np.abs(a)), 1.0) if a.size else 1.0
    if np.max(np.abs(a - a.T)) > rtol * scale:
        raise error(f"{name} is not symmetric")
    return a


def check_n_components(k, upper, *, what="n_features", error=AmlpError):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise error(f"number of components must be an integer, got {k!r}")
    if not 1 <= k <= upper:
        raise error(f"number of components must be in [1, {upper}] ({what}), got {k}")
    return int(k)


def check_labels(labels, n_samples, *, error=AmlpError):
    """Validate a label vector: integers 0..K-1, each used at least once.

    Returns ``(labels, k)``.
    """
    lab = np.asarray(labels)
    if lab.ndim != 1 or lab.shape[0] != n_samples:
        raise error(f"labels must be a vector of length {n_samples}, got shape {lab.shape}")
    if lab.size and not np.issubdtype(lab.dtype, np.integer):
        if not np.all(np.equal(np.mod(lab, 1), 0)):
            raise error("labels must be integers")
    lab = lab.astype(np.int64)
    if lab.size == 0:
        raise error("labels are empty")
    if lab.min() < 0:
        raise error("labels must be non-negative")
    k = int(lab.max()) + 1
    counts = np.bincount(lab, minlength=k)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise error(f"labels must use every value in 0..{k - 1}; empty cluster(s) {missing}")
    return lab, k
