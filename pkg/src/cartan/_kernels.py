"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` version and a pure-numpy version
with identical semantics. The active backend is chosen once at import time:
set ``CARTAN_DISABLE_NUMBA=1`` to force the numpy path (also used
automatically when numba is missing). Both implementations stay importable as
``numba_impl`` / ``numpy_impl`` so tests and the benchmark can compare them.
"""
from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_FLAG = os.environ.get("CARTAN_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _esym_batch_np(x):
    x = np.asarray(x)
    n, r = x.shape
    out = np.zeros((n, r + 1), dtype=x.dtype)
    out[:, 0] = 1.0
    for i in range(r):
        # descending so each column is updated from the previous pass
        out[:, 1:i + 2] = out[:, 1:i + 2] + x[:, i:i + 1] * out[:, 0:i + 1]
    return out


def _eval_monomials_np(z, alpha):
    z = np.asarray(z, dtype=np.complex128)
    alpha = np.asarray(alpha, dtype=np.int64)
    n, d = z.shape
    m = alpha.shape[0]
    out = np.ones((n, m), dtype=np.complex128)
    if m == 0 or d == 0:
        return out
    kmax = int(alpha.max()) if alpha.size else 0
    for k in range(d):
        powers = np.ones((n, kmax + 1), dtype=np.complex128)
        for e in range(1, kmax + 1):
            powers[:, e] = powers[:, e - 1] * z[:, k]
        out *= powers[:, alpha[:, k]]
    return out


def _graded_cholesky_np(gram, rel_tol, neg_tol):
    g = np.asarray(gram, dtype=np.complex128)
    m = g.shape[0]
    low = np.zeros((m, m), dtype=np.complex128)
    keep = np.zeros(m, dtype=np.bool_)
    pivots = np.zeros(m)
    status = 0
    for k in range(m):
        row = low[k, :k]
        piv = g[k, k].real - float(np.vdot(row, row).real)
        pivots[k] = piv
        scale = max(g[k, k].real, 0.0)
        if piv < -neg_tol * max(scale, 1.0):
            status = 1
        if piv <= rel_tol * scale or scale == 0.0:
            continue
        keep[k] = True
        diag = np.sqrt(piv)
        low[k, k] = diag
        if k + 1 < m:
            low[k + 1:, k] = (g[k + 1:, k] - low[k + 1:, :k] @ np.conj(row)) / diag
    return low, keep, pivots, status


numpy_impl = SimpleNamespace(
    esym_batch=_esym_batch_np,
    eval_monomials=_eval_monomials_np,
    graded_cholesky=_graded_cholesky_np,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if numba is not None:
    from numba import njit

    @njit(cache=True)
    def _esym_batch_nb(x):
        n, r = x.shape
        out = np.zeros((n, r + 1), dtype=x.dtype)
        for s in range(n):
            out[s, 0] = 1.0
            for i in range(r):
                xi = x[s, i]
                for k in range(i + 1, 0, -1):
                    out[s, k] += xi * out[s, k - 1]
        return out

    @njit(cache=True)
    def _eval_monomials_nb(z, alpha):
        n, d = z.shape
        m = alpha.shape[0]
        out = np.ones((n, m), dtype=np.complex128)
        kmax = 0
        for i in range(m):
            for k in range(d):
                if alpha[i, k] > kmax:
                    kmax = alpha[i, k]
        powers = np.ones((d, kmax + 1), dtype=np.complex128)
        for s in range(n):
            for k in range(d):
                for e in range(1, kmax + 1):
                    powers[k, e] = powers[k, e - 1] * z[s, k]
            for i in range(m):
                acc = 1.0 + 0.0j
                for k in range(d):
                    acc *= powers[k, alpha[i, k]]
                out[s, i] = acc
        return out

    @njit(cache=True)
    def _graded_cholesky_nb(g, rel_tol, neg_tol):
        m = g.shape[0]
        low = np.zeros((m, m), dtype=np.complex128)
        keep = np.zeros(m, dtype=np.bool_)
        pivots = np.zeros(m)
        status = 0
        for k in range(m):
            acc = 0.0
            for j in range(k):
                v = low[k, j]
                acc += v.real * v.real + v.imag * v.imag
            piv = g[k, k].real - acc
            pivots[k] = piv
            scale = max(g[k, k].real, 0.0)
            if piv < -neg_tol * max(scale, 1.0):
                status = 1
            if piv <= rel_tol * scale or scale == 0.0:
                continue
            keep[k] = True
            diag = np.sqrt(piv)
            low[k, k] = diag
            for i in range(k + 1, m):
                s = g[i, k]
                for j in range(k):
                    s -= low[i, j] * np.conj(low[k, j])
                low[i, k] = s / diag
        return low, keep, pivots, status

    numba_impl = SimpleNamespace(
        esym_batch=_esym_batch_nb,
        eval_monomials=_eval_monomials_nb,
        graded_cholesky=_graded_cholesky_nb,
    )
else:  # pragma: no cover
    numba_impl = None


_active = numba_impl if USE_NUMBA else numpy_impl


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def esym_batch(x):
    """Elementary symmetric polynomials of each row: ``(n, r) -> (n, r+1)``."""
    x = np.ascontiguousarray(x)
    if x.dtype.kind not in "fc":
        x = x.astype(np.float64)
    return _active.esym_batch(x)


def eval_monomials(z, alpha):
    """``out[s, i] = prod_k z[s, k] ** alpha[i, k]``."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    alpha = np.ascontiguousarray(alpha, dtype=np.int64)
    if alpha.shape[0] == 0:
        return np.ones((z.shape[0], 0), dtype=np.complex128)
    return _active.eval_monomials(z, alpha)


def graded_cholesky(gram, rel_tol=1e-10, neg_tol=1e-8):
    """Order-preserving Cholesky ``G = L L^H`` that skips near-dependent columns.

    Pivots are taken in the given order (no reordering), so the retained
    columns keep the basis grading. Column ``k`` is dropped when its residual
    squared norm is at most ``rel_tol * G[k, k]``. ``status`` is 1 when some
    residual is below ``-neg_tol`` relative to its scale (indefinite input).
    """
    g = np.ascontiguousarray(gram, dtype=np.complex128)
    return _active.graded_cholesky(g, float(rel_tol), float(neg_tol))


def warmup() -> None:
    """Trigger JIT compilation on tiny inputs."""
    esym_batch(np.ones((2, 2)))
    esym_batch(np.ones((2, 2), dtype=np.complex128))
    eval_monomials(np.ones((2, 2), dtype=np.complex128), np.ones((2, 2), dtype=np.int64))
    graded_cholesky(np.eye(2, dtype=np.complex128))
