"""Dense real symmetric eigensolvers and SVD.

Two solvers sit behind one interface: a cyclic Jacobi rotation solver
written here, and LAPACK (``numpy.linalg.eigh``) for matrices too large for
Jacobi to be practical.  ``solver="auto"`` picks Jacobi up to
``JACOBI_MAX_N`` rows.  Both produce the same ordering and sign convention.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix, check_square_symmetric
from .exceptions import ConvergenceError, LinAlgError, NotPositiveDefiniteError

JACOBI_MAX_N = 128
DEFAULT_TOL = 1e-10
MAX_SWEEPS = 100

_SOLVERS = ("auto", "jacobi", "lapack")


@dataclass(frozen=True)
class EigenResult:
    """Eigenpairs; ``vectors[:, i]`` pairs with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``a = u @ diag(sigma) @ v.T`` with ``r = min(m, n)``."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def truncate(self, k):
        return SvdResult(self.u[:, :k], self.sigma[:k], self.v[:, :k])

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def fix_signs(vectors):
    """Flip columns so the largest-magnitude entry of each is positive.

    Returns the flipped copy and the ``+1/-1`` multipliers applied.
    """
    v = np.array(vectors, dtype=np.float64, copy=True)
    if v.size == 0:
        return v, np.ones(v.shape[1] if v.ndim == 2 else 0)
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs, signs


def _off_diagonal_norm(a):
    return np.linalg.norm(a - np.diag(np.diag(a)))


def _round_robin(n):
    """Pairings of a round-robin tournament: ``n - 1`` rounds (``n`` even) of
    disjoint ``(p, q)`` pairs covering every off-diagonal position once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        players = [players[0], players[-1], *players[1:-1]]
    return rounds


def _rotation_params(a, p, q):
    """Vectorized Jacobi rotation ``(c, s)`` zeroing ``a[p, q]`` for each pair."""
    apq = a[p, q]
    app, aqq = a[p, p], a[q, q]
    g = 100.0 * np.abs(apq)
    # below rounding of both diagonal entries: the entry is simply dropped
    negligible = (np.abs(app) + g == np.abs(app)) & (np.abs(aqq) + g == np.abs(aqq))
    h = aqq - app
    small = np.abs(h) + g == np.abs(h)
    t = np.zeros_like(apq)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_small = apq / h
        theta = 0.5 * h / apq
        t_big = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
    active = (apq != 0.0) & ~negligible
    t = np.where(active & small, t_small, t)
    t = np.where(active & ~small, t_big, t)
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


def jacobi_eigen(m, tol=DEFAULT_TOL, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns unsorted ``(values, vectors)``.  Each sweep visits every
    off-diagonal pair once in round-robin order, so the ``n // 2`` rotations
    of a round act on disjoint rows and columns and are applied together.
    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``tol * ||m||_F``.
    """
    a = np.array(m, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if n == 1 or norm == 0.0:
        return np.diag(a).copy(), v
    target = tol * norm
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = _off_diagonal_norm(a)
        if off < target:
            return np.diag(a).copy(), v
        for p, q in rounds:
            c, s = _rotation_params(a, p, q)
            col_p, col_q = a[:, p].copy(), a[:, q].copy()
            a[:, p] = c * col_p - s * col_q
            a[:, q] = s * col_p + c * col_q
            row_p, row_q = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * row_p - s[:, None] * row_q
            a[q, :] = s[:, None] * row_p + c[:, None] * row_q
            a[p, q] = a[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
    off = _off_diagonal_norm(a)
    if off < target:
        return np.diag(a).copy(), v
    raise ConvergenceError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {off:.3e}, target {target:.3e})",
        iterations_used=max_sweeps,
    )


def _pick_solver(solver, n):
    if solver not in _SOLVERS:
        raise LinAlgError(f"unknown solver {solver!r}; expected one of {_SOLVERS}")
    if solver == "auto":
        return "jacobi" if n <= JACOBI_MAX_N else "lapack"
    return solver


def _eigh(a, tol, solver):
    if _pick_solver(solver, a.shape[0]) == "jacobi":
        return jacobi_eigen(a, tol=tol)
    return np.linalg.eigh(a)


def sym_eigen(m, tol=DEFAULT_TOL, solver="auto"):
    """Full eigendecomposition of a symmetric matrix, values descending."""
    a = check_square_symmetric(m, name="m", error=LinAlgError)
    if tol <= 0:
        raise LinAlgError("tol must be positive")
    a = 0.5 * (a + a.T)
    values, vectors = _eigh(a, tol, solver)
    order = np.argsort(-values, kind="stable")
    vectors, _ = fix_signs(vectors[:, order])
    return EigenResult(values[order], vectors)


def _complete_basis(u, keep):
    """Replace columns of ``u`` not flagged in ``keep`` by an orthonormal completion."""
    m, r = u.shape
    basis = [u[:, j] for j in range(r) if keep[j]]
    out = u.copy()
    candidates = iter(np.eye(m))
    for j in range(r):
        if keep[j]:
            continue
        for e in candidates:
            w = e.copy()
            for _ in range(2):
                for b in basis:
                    w -= (b @ w) * b
            nrm = np.linalg.norm(w)
            if nrm > 1e-8:
                w /= nrm
                basis.append(w)
                out[:, j] = w
                break
    return out


def svd(a, tol=DEFAULT_TOL, solver="auto"):
    """Thin SVD through the eigendecomposition of the smaller Gram matrix.

    Singular values are recomputed as ``||a v_i||`` which keeps the
    reconstruction accurate even where the Gram matrix squares the
    condition number.  Columns of ``v`` follow the sign convention of
    :func:`sym_eigen`; ``u`` is flipped to match.
    """
    x = check_matrix(a, name="a", error=LinAlgError)
    m, n = x.shape
    transposed = m < n
    if transposed:
        x = x.T
        m, n = n, m
    eig = sym_eigen(x.T @ x, tol=tol, solver=solver)
    v = eig.vectors
    av = x @ v
    sigma = np.linalg.norm(av, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, v, av = sigma[order], v[:, order], av[:, order]
    cutoff = max(m, n) * np.finfo(float).eps * (sigma[0] if sigma.size else 0.0)
    keep = sigma > cutoff
    sigma = np.where(keep, sigma, 0.0)
    u = np.zeros((m, n))
    u[:, keep] = av[:, keep] / sigma[keep]
    if not np.all(keep):
        u = _complete_basis(u, keep)
    if transposed:
        u, v = v, u
    v, signs = fix_signs(v)
    return SvdResult(u * signs, sigma, v)


def gen_sym_eigen(a, b, tol=DEFAULT_TOL, solver="auto"):
    """Solve ``a w = lam b w`` for symmetric ``a`` and SPD ``b``.

    Eigenvalues are returned ascending and eigenvectors are
    ``b``-orthonormal.  Raises :class:`NotPositiveDefiniteError` when the
    smallest eigenvalue of ``b`` does not exceed ``tol``; the caller is
    expected to regularize.
    """
    a = check_square_symmetric(a, name="a", error=LinAlgError)
    b = check_square_symmetric(b, name="b", error=LinAlgError)
    if a.shape != b.shape:
        raise LinAlgError(f"a and b differ in shape: {a.shape} vs {b.shape}")
    b = 0.5 * (b + b.T)
    b_min = np.linalg.eigvalsh(b)[0]
    if not b_min > tol:
        raise NotPositiveDefiniteError(
            f"b is not positive definite (smallest eigenvalue {b_min:.3e}); regularize before solving"
        )
    try:
        chol = np.linalg.cholesky(b)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"Cholesky factorization of b failed: {exc}") from exc
    # c = L^-1 a L^-T
    linv_a = np.linalg.solve(chol, a)
    c = np.linalg.solve(chol, linv_a.T).T
    c = 0.5 * (c + c.T)
    values, y = _eigh(c, tol, solver)
    order = np.argsort(values, kind="stable")
    values, y = values[order], y[:, order]
    w = np.linalg.solve(chol.T, y)
    w, _ = fix_signs(w)
    return EigenResult(values, w)
