"""Hot numeric loops, each with a numba kernel and a vectorized numpy twin.

The public names at the bottom of the module are bound at import time to
whichever backend :mod:`holowidth._accel` selected. Both variants are always
importable (``*_nb`` / ``*_np``) so they can be compared head to head.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit

__all__ = [
    "stencil_triplets_1d",
    "stencil_triplets_2d",
    "strong_greedy",
    "min_sup_distance",
    "monomials",
]


# --------------------------------------------------------------------------
# finite-difference stencils: -div(a grad u) with edge-midpoint coefficients
# --------------------------------------------------------------------------

@njit(cache=True)
def _stencil_1d_nb(edge_a, N, inv_h2):
    nnz = 3 * N - 2
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=edge_a.dtype)
    k = 0
    for i in range(N):
        rows[k] = i
        cols[k] = i
        vals[k] = (edge_a[i] + edge_a[i + 1]) * inv_h2
        k += 1
        if i > 0:
            rows[k] = i
            cols[k] = i - 1
            vals[k] = -edge_a[i] * inv_h2
            k += 1
        if i < N - 1:
            rows[k] = i
            cols[k] = i + 1
            vals[k] = -edge_a[i + 1] * inv_h2
            k += 1
    return rows, cols, vals


def _stencil_1d_np(edge_a, N, inv_h2):
    idx = np.arange(N)
    diag = (edge_a[:-1] + edge_a[1:]) * inv_h2
    off = -edge_a[1:-1] * inv_h2
    rows = np.concatenate([idx, idx[1:], idx[:-1]])
    cols = np.concatenate([idx, idx[:-1], idx[1:]])
    vals = np.concatenate([diag, off, off])
    return rows, cols, vals


@njit(cache=True)
def _stencil_2d_nb(ax, ay, N, inv_h2):
    nnz = 5 * N * N - 4 * N
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=ax.dtype)
    k = 0
    for j in range(N):
        for i in range(N):
            p = j * N + i
            rows[k] = p
            cols[k] = p
            vals[k] = (ax[i, j] + ax[i + 1, j] + ay[i, j] + ay[i, j + 1]) * inv_h2
            k += 1
            if i > 0:
                rows[k] = p
                cols[k] = p - 1
                vals[k] = -ax[i, j] * inv_h2
                k += 1
            if i < N - 1:
                rows[k] = p
                cols[k] = p + 1
                vals[k] = -ax[i + 1, j] * inv_h2
                k += 1
            if j > 0:
                rows[k] = p
                cols[k] = p - N
                vals[k] = -ay[i, j] * inv_h2
                k += 1
            if j < N - 1:
                rows[k] = p
                cols[k] = p + N
                vals[k] = -ay[i, j + 1] * inv_h2
                k += 1
    return rows, cols, vals


def _stencil_2d_np(ax, ay, N, inv_h2):
    I, Jg = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    p = (Jg * N + I).ravel(order="F")
    i = I.ravel(order="F")
    j = Jg.ravel(order="F")
    diag = (ax[i, j] + ax[i + 1, j] + ay[i, j] + ay[i, j + 1]) * inv_h2
    parts_r, parts_c, parts_v = [p], [p], [diag]
    for mask, shift, coef in (
        (i > 0, -1, ax[i, j]),
        (i < N - 1, 1, ax[np.minimum(i + 1, N), j]),
        (j > 0, -N, ay[i, j]),
        (j < N - 1, N, ay[i, np.minimum(j + 1, N)]),
    ):
        parts_r.append(p[mask])
        parts_c.append(p[mask] + shift)
        parts_v.append(-coef[mask] * inv_h2)
    return np.concatenate(parts_r), np.concatenate(parts_c), np.concatenate(parts_v)


# --------------------------------------------------------------------------
# strong greedy on a snapshot matrix in orthonormal coordinates
# --------------------------------------------------------------------------

# residual norms this close to the maximum count as ties; the lowest index wins
TIE_RTOL = 1e-12

@njit(cache=True)
def _strong_greedy_nb(W, n_max):
    dim, m = W.shape
    R = np.ascontiguousarray(W.T)  # one contiguous row per snapshot
    errors = np.zeros(n_max + 1)
    order = np.full(n_max, -1, dtype=np.int64)
    norms = np.empty(m)
    q = np.empty(dim)
    for n in range(n_max + 1):
        best = -1.0
        for c in range(m):
            s = 0.0
            for r in range(dim):
                s += R[c, r] * R[c, r]
            norms[c] = np.sqrt(s)
            if norms[c] > best:
                best = norms[c]
        errors[n] = best
        if n == n_max or best == 0.0:
            break
        arg = 0
        while norms[arg] < best * (1.0 - TIE_RTOL):
            arg += 1
        order[n] = arg
        for r in range(dim):
            q[r] = R[arg, r] / norms[arg]
        # two Gram-Schmidt passes keep the residuals orthogonal to roundoff
        for _ in range(2):
            for c in range(m):
                s = 0.0
                for r in range(dim):
                    s += q[r] * R[c, r]
                for r in range(dim):
                    R[c, r] -= s * q[r]
    return order, errors


def _strong_greedy_np(W, n_max):
    R = np.array(W, dtype=float, copy=True)
    errors = np.zeros(n_max + 1)
    order = np.full(n_max, -1, dtype=np.int64)
    for n in range(n_max + 1):
        norms = np.sqrt(np.einsum("ij,ij->j", R, R))
        best = norms.max()
        errors[n] = best
        if n == n_max or best == 0.0:
            break
        arg = int(np.flatnonzero(norms >= best * (1.0 - TIE_RTOL))[0])
        order[n] = arg
        q = R[:, arg] / norms[arg]
        for _ in range(2):
            R -= np.outer(q, q @ R)
    return order, errors


# --------------------------------------------------------------------------
# sup-metric nearest neighbour between coordinate clouds
# --------------------------------------------------------------------------

@njit(cache=True)
def _min_sup_distance_nb(A, B):
    P, J = A.shape
    M = B.shape[0]
    dist = np.empty(P)
    arg = np.empty(P, dtype=np.int64)
    for p in range(P):
        best = np.inf
        bi = -1
        for i in range(M):
            d = 0.0
            for j in range(J):
                v = abs(A[p, j] - B[i, j])
                if v > d:
                    d = v
                    if d >= best:
                        break
            if d < best:
                best = d
                bi = i
        dist[p] = best
        arg[p] = bi
    return dist, arg


def _min_sup_distance_np(A, B, chunk=256):
    P = A.shape[0]
    dist = np.empty(P)
    arg = np.empty(P, dtype=np.int64)
    if B.shape[0] == 0:
        dist[:] = np.inf
        arg[:] = -1
        return dist, arg
    for start in range(0, P, chunk):
        block = A[start:start + chunk]
        d = np.abs(block[:, None, :] - B[None, :, :])
        d = d.max(axis=2) if d.shape[2] else np.zeros(d.shape[:2])
        arg[start:start + chunk] = np.argmin(d, axis=1)
        dist[start:start + chunk] = d[np.arange(len(block)), arg[start:start + chunk]]
    return dist, arg


# --------------------------------------------------------------------------
# monomials y^nu for a batch of dense exponent rows
# --------------------------------------------------------------------------

@njit(cache=True)
def _monomials_nb(exps, y):
    n, J = exps.shape
    out = np.ones(n, dtype=y.dtype)
    for k in range(n):
        acc = out[k]
        for j in range(J):
            e = exps[k, j]
            if e > 0:
                acc *= y[j] ** e
        out[k] = acc
    return out


def _monomials_np(exps, y):
    if exps.shape[1] == 0:
        return np.ones(exps.shape[0], dtype=y.dtype)
    return np.prod(y[None, :] ** exps, axis=1)


if NUMBA_ENABLED:
    _stencil_1d, _stencil_2d = _stencil_1d_nb, _stencil_2d_nb
    _greedy, _minsup, _mono = _strong_greedy_nb, _min_sup_distance_nb, _monomials_nb
else:
    _stencil_1d, _stencil_2d = _stencil_1d_np, _stencil_2d_np
    _greedy, _minsup, _mono = _strong_greedy_np, _min_sup_distance_np, _monomials_np


def stencil_triplets_1d(edge_a, N, h):
    """COO triplets of the 3-point operator with edge coefficients ``edge_a`` (length N+1)."""
    return _stencil_1d(np.ascontiguousarray(edge_a), int(N), 1.0 / (h * h))


def stencil_triplets_2d(ax, ay, N, h):
    """COO triplets of the 5-point operator; ``ax`` is (N+1, N), ``ay`` is (N, N+1)."""
    return _stencil_2d(np.ascontiguousarray(ax), np.ascontiguousarray(ay), int(N), 1.0 / (h * h))


def strong_greedy(W, n_max):
    """Strong greedy column selection on ``W`` (columns are snapshots).

    Returns ``(order, errors)`` where ``errors[n]`` is the largest residual
    norm after projecting on the first ``n`` selected columns. Ties go to the
    lowest column index. If the residual vanishes early, the remaining errors
    stay zero and the remaining order entries are -1.
    """
    W = np.ascontiguousarray(W, dtype=float)
    return _greedy(W, int(n_max))


def min_sup_distance(A, B):
    """For each row of ``A``, the smallest max-abs distance to a row of ``B`` and its index."""
    A = np.ascontiguousarray(A, dtype=complex)
    B = np.ascontiguousarray(B, dtype=complex)
    return _minsup(A, B)


def monomials(exps, y):
    exps = np.ascontiguousarray(exps, dtype=np.int64)
    y = np.ascontiguousarray(y)
    if not np.iscomplexobj(y):
        y = y.astype(float)
    return _mono(exps, y)
