"""Dense and iterative Hermitian eigensolvers.

``solve_lowest`` is a block Lanczos method with full reorthogonalization and
thick restarts.  Each expansion step appends the (orthogonalized) residual
block of the current Ritz pairs, which spans the same Krylov directions as
the three-term block recurrence while keeping the projected matrix exact.
The block keeps degenerate multiplets up to the block size resolved.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sl

from ..core.operators import OperatorMatrix
from ..errors import ConvergenceError, DimensionError, InvalidArgumentError

DENSE_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray]
    residuals: np.ndarray
    method: str
    basis: object = None

    def __post_init__(self):
        for arr in (self.eigenvalues, self.eigenvectors, self.residuals):
            if arr is not None:
                arr.flags.writeable = False

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def gaps(self):
        """Excitation energies ``E_i - E_0``."""
        return self.eigenvalues - self.eigenvalues[0]

    def vector(self, i):
        if self.eigenvectors is None:
            raise InvalidArgumentError("spectrum was computed without eigenvectors")
        return self.eigenvectors[:, i]

    def projector(self, indices):
        """Projector onto the span of the selected eigenvectors."""
        v = self.eigenvectors[:, list(indices)]
        return v @ v.conj().T

    def multiplets(self, tol=1e-10):
        """Groups of indices whose eigenvalues agree within ``tol``."""
        groups, current = [], [0]
        for i in range(1, len(self.eigenvalues)):
            if self.eigenvalues[i] - self.eigenvalues[current[-1]] <= tol:
                current.append(i)
            else:
                groups.append(current)
                current = [i]
        groups.append(current)
        return groups


def _as_matrix(h):
    if isinstance(h, OperatorMatrix):
        return h, h.basis
    if isinstance(h, np.ndarray):
        return OperatorMatrix(h), None
    return OperatorMatrix(h), None


def dense_solve(h, dense_limit=DENSE_LIMIT, vectors=True):
    """Full spectrum by dense Hermitian eigendecomposition."""
    op, basis = _as_matrix(h)
    if op.dim > dense_limit:
        raise DimensionError(f"dimension {op.dim} above dense limit {dense_limit}", key="dense_limit")
    a = op.toarray()
    a = 0.5 * (a + a.conj().T)
    if vectors:
        w, v = sl.eigh(a)
        res = np.linalg.norm(a @ v - v * w, axis=0)
        return SpectrumResult(w, v, res, "dense", basis)
    w = sl.eigh(a, eigvals_only=True)
    return SpectrumResult(w, None, np.zeros_like(w), "dense", basis)


def _orthonormalize(block, basis_vectors, rng, drop_tol=1e-10):
    """Orthogonalize ``block`` against ``basis_vectors`` and itself (twice)."""
    out = block
    for _ in range(2):
        if basis_vectors is not None and basis_vectors.shape[1]:
            out = out - basis_vectors @ (basis_vectors.conj().T @ out)
    q, r = np.linalg.qr(out)
    keep = np.abs(np.diag(r)) > drop_tol * max(1.0, np.max(np.abs(np.diag(r)), initial=0.0))
    q = q[:, keep]
    if basis_vectors is not None and basis_vectors.shape[1] and q.shape[1]:
        q = q - basis_vectors @ (basis_vectors.conj().T @ q)
        q, _ = np.linalg.qr(q)
    return q


def solve_lowest(
    h,
    k,
    tol=1e-10,
    block_size=None,
    max_krylov=None,
    max_iter=20000,
    seed=0,
    start=None,
    check_every=10,
):
    """``k`` lowest eigenpairs with residuals ``||Hv - Ev|| <= tol``.

    Raises :class:`ConvergenceError` with the best Ritz values and residual
    norms when ``max_iter`` block expansions are exhausted.
    """
    op, basis = _as_matrix(h)
    n = op.dim
    if k < 1 or k >= n:
        raise InvalidArgumentError(f"need 1 <= k < dim, got k={k}, dim={n}")
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    p = block_size or max(2, min(k, 6))
    max_krylov = min(n, max_krylov or max(8 * (k + p), 160))
    if max_krylov < k + p:
        max_krylov = min(n, k + p)
    rng = np.random.default_rng(seed)
    dtype = np.complex128 if np.iscomplexobj(op.matrix.data) else np.float64
    scale = max(1.0, float(np.max(np.abs(op.matrix.data), initial=0.0)))

    def random_block(m):
        x = rng.standard_normal((n, m))
        if dtype == np.complex128:
            x = x + 1j * rng.standard_normal((n, m))
        return x

    x0 = random_block(p) if start is None else np.asarray(start, dtype=dtype).reshape(n, -1)
    v = _orthonormalize(x0.astype(dtype), None, rng)
    w = op.apply(v).astype(dtype, copy=False)
    t = v.conj().T @ w
    last = slice(0, v.shape[1])
    theta, res, x = None, None, None
    since_rr = check_every
    for it in range(max_iter):
        full = v.shape[1] >= n or v.shape[1] + p > max_krylov
        if since_rr >= check_every or full:
            since_rr = 0
            t = 0.5 * (t + t.conj().T)
            theta, s = sl.eigh(t)
            kk = min(k, len(theta))
            x = v @ s[:, :kk]
            res = np.linalg.norm(w @ s[:, :kk] - x * theta[:kk], axis=0)
            if kk == k and np.all(res <= tol):
                break
            if v.shape[1] >= n and np.all(res <= max(tol, 1e3 * np.finfo(float).eps * scale)):
                break
            if full:
                # thick restart on the lowest Ritz vectors; Lanczos continues
                # from their residual block
                keep = min(v.shape[1], max(k + p, max_krylov // 2))
                cand = w @ s[:, :keep] - (v @ s[:, :keep]) * theta[:keep]
                v = v @ s[:, :keep]
                w = w @ s[:, :keep]
                t = np.diag(theta[:keep]).astype(dtype)
                cres = np.linalg.norm(cand[:, : k + p], axis=0)
                order = np.argsort(-cres)
                new = cand[:, order[:p]]
            else:
                new = w[:, last]
        else:
            new = w[:, last]
        since_rr += 1
        q = _orthonormalize(new, v, rng)
        room = min(p, n - v.shape[1])
        if q.shape[1] < room:
            extra = _orthonormalize(random_block(room), np.hstack([v, q]) if q.shape[1] else v, rng)
            q = np.hstack([q, extra])[:, :room]
        if q.shape[1] == 0:
            since_rr = check_every
            continue
        wq = op.apply(q).astype(dtype, copy=False)
        t = np.block([[t, v.conj().T @ wq], [q.conj().T @ w, q.conj().T @ wq]])
        last = slice(v.shape[1], v.shape[1] + q.shape[1])
        v = np.hstack([v, q])
        w = np.hstack([w, wq])
    else:
        raise ConvergenceError(
            f"Lanczos did not converge {k} pairs to tol={tol} in {max_iter} iterations",
            eigenvalues=None if theta is None else theta[:k].copy(),
            residuals=None if res is None else res.copy(),
        )
    # explicit residuals of the returned pairs
    hx = op.apply(x)
    res = np.linalg.norm(hx - x * theta[:k], axis=0)
    return SpectrumResult(theta[:k].copy(), x, res, "iterative", basis)


def solve(h, k=None, tol=1e-10, dense_limit=DENSE_LIMIT, **kwargs):
    """Dense solve below ``dense_limit`` (truncated to ``k``), Lanczos above."""
    op, basis = _as_matrix(h)
    if op.dim <= dense_limit:
        full = dense_solve(op, dense_limit)
        if k is None:
            return full
        vecs = full.eigenvectors[:, :k].copy()
        return SpectrumResult(full.eigenvalues[:k].copy(), vecs, full.residuals[:k].copy(), "dense", basis)
    if k is None:
        raise DimensionError(f"full spectrum of dimension {op.dim} requested above dense limit", key="dense_limit")
    return solve_lowest(op, k, tol=tol, **kwargs)
