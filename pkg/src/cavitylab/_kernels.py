"""Hot numeric kernels with a numba path and a pure-numpy/scipy path.

The numba path is used when numba imports cleanly and the environment
variable ``CAVITYLAB_DISABLE_NUMBA`` is unset or ``0``.  Both paths are always
importable as ``*_numba`` / ``*_numpy`` so tests and the benchmark can compare
them directly; the unsuffixed names are the dispatched versions.

Determinant conventions: a spinless-fermion configuration of ``k`` particles
on ``n`` sites is a strictly increasing row of site indices.  Its rank is the
combinatorial-number-system (colex) index ``sum_j C(i_j, j+1)``.
"""

import os
import threading
from math import comb

import numpy as np

_flag = os.environ.get("CAVITYLAB_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    import numba
    from numba import njit, prange

    numba.config.THREADING_LAYER = "workqueue"
    # workqueue is not reentrant: parallel kernels run one at a time across Python threads
    _launch_lock = threading.Lock()

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def binomial_table(n, k):
    """``table[i, j] = C(i, j)`` for ``0 <= i <= n``, ``0 <= j <= k`` (int64)."""
    table = np.zeros((n + 1, k + 1), dtype=np.int64)
    for i in range(n + 1):
        for j in range(min(i, k) + 1):
            table[i, j] = comb(i, j)
    return table


def enumerate_determinants(n_sites, n_particles):
    """All sorted configurations, ordered by colex rank (row ``r`` has rank ``r``)."""
    if n_particles == 1:
        return np.arange(n_sites, dtype=np.int64)[:, None]
    from itertools import combinations

    dets = np.array(list(combinations(range(n_sites), n_particles)), dtype=np.int64)
    ranks = rank_determinants(dets, binomial_table(n_sites, n_particles))
    out = np.empty_like(dets)
    out[ranks] = dets
    return out


def rank_determinants(dets, binom):
    k = dets.shape[1]
    return binom[dets, np.arange(1, k + 1)].sum(axis=1)


# ---------------------------------------------------------------------------
# numpy reference paths
# ---------------------------------------------------------------------------


def one_body_coo_numpy(dets, op, binom, tol=0.0):
    """COO triplets of a one-body operator ``sum_pq op[q, p] c_q^+ c_p``.

    ``op`` is a dense ``n x n`` matrix (real or complex).  Returns
    ``(rows, cols, vals)`` with ``rows`` the image configuration rank.
    """
    n_det, k = dets.shape
    n = op.shape[0]
    cols_all = np.arange(n_det, dtype=np.int64)
    rows_out, cols_out, vals_out = [], [], []
    occupied = np.zeros((n_det, n), dtype=bool)
    occupied[cols_all[:, None], dets] = True
    for s in range(k):
        p = dets[:, s]
        others = np.delete(dets, s, axis=1)
        for q in range(n):
            vals = op[q, p]
            mask = np.abs(vals) > tol
            mask &= (~occupied[:, q]) | (p == q)
            if not mask.any():
                continue
            idx = np.nonzero(mask)[0]
            pp = p[idx]
            lo = np.minimum(pp, q)[:, None]
            hi = np.maximum(pp, q)[:, None]
            between = ((others[idx] > lo) & (others[idx] < hi)).sum(axis=1)
            sign = 1 - 2 * (between & 1)
            new = dets[idx].copy()
            new[:, s] = q
            new.sort(axis=1)
            rows_out.append(rank_determinants(new, binom))
            cols_out.append(idx)
            vals_out.append(vals[idx] * sign)
    if not rows_out:
        return (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, op.dtype))
    return (np.concatenate(rows_out), np.concatenate(cols_out), np.concatenate(vals_out))


def diagonal_energy_numpy(dets, site_potential, pair_potential):
    """``sum_i v[x_i] + sum_{i<j} w[x_i, x_j]`` per configuration."""
    out = site_potential[dets].sum(axis=1)
    k = dets.shape[1]
    for a in range(k):
        for b in range(a + 1, k):
            out = out + pair_potential[dets[:, a], dets[:, b]]
    return out


def csr_matmat_numpy(indptr, indices, data, x):
    """``A @ x`` for CSR ``A`` and a 2D block ``x`` (delegates to scipy)."""
    from scipy.sparse import csr_matrix

    n = indptr.shape[0] - 1
    a = csr_matrix((data, indices, indptr), shape=(n, x.shape[0]))
    return np.asarray(a @ x)


# ---------------------------------------------------------------------------
# numba paths
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _one_body_coo_kernel(dets, op, binom, tol, rows, cols, vals):
        n_det, k = dets.shape
        n = op.shape[0]
        occ = np.zeros(n, dtype=np.bool_)
        buf = np.empty(k, dtype=np.int64)
        count = 0
        for d in range(n_det):
            for s in range(k):
                occ[dets[d, s]] = True
            for s in range(k):
                p = dets[d, s]
                for q in range(n):
                    v = op[q, p]
                    if abs(v) <= tol:
                        continue
                    if q != p and occ[q]:
                        continue
                    lo = min(p, q)
                    hi = max(p, q)
                    between = 0
                    for t in range(k):
                        x = dets[d, t]
                        if t != s and x > lo and x < hi:
                            between += 1
                    # insert q into the remaining sorted configuration
                    m = 0
                    placed = False
                    for t in range(k):
                        if t == s:
                            continue
                        x = dets[d, t]
                        if not placed and q < x:
                            buf[m] = q
                            m += 1
                            placed = True
                        buf[m] = x
                        m += 1
                    if not placed:
                        buf[m] = q
                    r = 0
                    for t in range(k):
                        r += binom[buf[t], t + 1]
                    rows[count] = r
                    cols[count] = d
                    if between & 1:
                        vals[count] = -v
                    else:
                        vals[count] = v
                    count += 1
            for s in range(k):
                occ[dets[d, s]] = False
        return count

    def one_body_coo_numba(dets, op, binom, tol=0.0):
        n_det, k = dets.shape
        nnz_col = int(np.max(np.count_nonzero(np.abs(op) > tol, axis=0))) if op.size else 0
        cap = max(n_det * k * nnz_col, 1)
        rows = np.empty(cap, dtype=np.int64)
        cols = np.empty(cap, dtype=np.int64)
        vals = np.empty(cap, dtype=op.dtype)
        count = _one_body_coo_kernel(
            np.ascontiguousarray(dets), np.ascontiguousarray(op), binom, float(tol), rows, cols, vals
        )
        return rows[:count], cols[:count], vals[:count]

    @njit(cache=True, parallel=True)
    def _diagonal_energy_kernel(dets, site_potential, pair_potential):
        n_det, k = dets.shape
        out = np.empty(n_det, dtype=site_potential.dtype)
        for d in prange(n_det):
            acc = 0.0
            for a in range(k):
                acc += site_potential[dets[d, a]]
                for b in range(a + 1, k):
                    acc += pair_potential[dets[d, a], dets[d, b]]
            out[d] = acc
        return out

    @njit(cache=True, parallel=True)
    def _csr_matmat_kernel(indptr, indices, data, x, out):
        n = indptr.shape[0] - 1
        p = x.shape[1]
        for i in prange(n):
            for jj in range(indptr[i], indptr[i + 1]):
                v = data[jj]
                col = indices[jj]
                for c in range(p):
                    out[i, c] += v * x[col, c]

    def csr_matmat_numba(indptr, indices, data, x):
        n = indptr.shape[0] - 1
        dtype = np.result_type(data.dtype, x.dtype)
        out = np.zeros((n, x.shape[1]), dtype=dtype)
        data = data.astype(dtype, copy=False)
        x = np.ascontiguousarray(x, dtype=dtype)
        with _launch_lock:
            _csr_matmat_kernel(indptr, indices, data, x, out)
        return out

    def diagonal_energy_numba(dets, site_potential, pair_potential):
        with _launch_lock:
            return _diagonal_energy_kernel(dets, site_potential, pair_potential)

    def set_threads(n):
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))

else:  # pragma: no cover
    one_body_coo_numba = one_body_coo_numpy
    diagonal_energy_numba = diagonal_energy_numpy
    csr_matmat_numba = csr_matmat_numpy

    def set_threads(n):
        return None


if USE_NUMBA:
    one_body_coo = one_body_coo_numba
    diagonal_energy = diagonal_energy_numba
    csr_matmat = csr_matmat_numba
else:
    one_body_coo = one_body_coo_numpy
    diagonal_energy = diagonal_energy_numpy
    csr_matmat = csr_matmat_numpy


def backend():
    return "numba" if USE_NUMBA else "numpy"
