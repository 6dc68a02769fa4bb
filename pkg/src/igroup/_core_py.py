"""Pure-numpy implementations of the hot kernels.

Mirrors the semantics of the compiled module ``igroup._core`` exactly;
selected automatically by :mod:`igroup._backend` when the extension is
unavailable. Kernel family codes: 0 gaussian, 1 epanechnikov, 2 boxcar.
"""

import numpy as np

_GAUSS_NORM = 1.0 / np.sqrt(2.0 * np.pi)
_INF = np.inf


def _kernel_matrix(dist, b, family):
    t = dist / b
    if family == 0:
        return _GAUSS_NORM * np.exp(-0.5 * t * t)
    if family == 1:
        return np.where(np.abs(t) <= 1.0, 0.75 * (1.0 - t * t), 0.0)
    return np.where(np.abs(t) <= 1.0, 0.5, 0.0)


def _take(arr, off, idx):
    """Diagonal lookup with +inf outside the stored range."""
    out = np.full(idx.shape, _INF)
    if arr is None:
        return out
    p = idx - off
    ok = (idx >= 0) & (p >= 0) & (p < arr.size)
    out[ok] = arr[p[ok]]
    return out


def dtw_cost_len(a, b, window=-1):
    """Boundary-anchored DTW on 2-D point sequences.

    Returns (total cost of an optimal warping path, minimal number of
    aligned pairs among all cost-optimal paths). The dynamic program runs
    over anti-diagonals so each step is a vector operation.
    """
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    n, m = a.shape[0], b.shape[0]
    cost_prev = cost_prev2 = None
    len_prev = len_prev2 = None
    lo_prev = lo_prev2 = 0
    for d in range(n + m - 1):
        lo = max(0, d - m + 1)
        hi = min(n - 1, d)
        ii = np.arange(lo, hi + 1)
        jj = d - ii
        delta = a[ii] - b[jj]
        c = np.sqrt(np.einsum("ij,ij->i", delta, delta))
        if d == 0:
            cost = c.copy()
            length = np.ones(1)
        else:
            up = _take(cost_prev, lo_prev, ii - 1)
            left = _take(cost_prev, lo_prev, ii)
            diag = _take(cost_prev2, lo_prev2, ii - 1)
            best = np.minimum(diag, np.minimum(up, left))
            lup = _take(len_prev, lo_prev, ii - 1)
            lleft = _take(len_prev, lo_prev, ii)
            ldiag = _take(len_prev2, lo_prev2, ii - 1)
            cand = np.where(diag == best, ldiag, _INF)
            cand = np.minimum(cand, np.where(up == best, lup, _INF))
            cand = np.minimum(cand, np.where(left == best, lleft, _INF))
            cost = c + best
            length = cand + 1.0
        if window >= 0:
            blocked = np.abs(ii - jj) > window
            if blocked.any():
                cost = np.where(blocked, _INF, cost)
                length = np.where(blocked, _INF, length)
        cost_prev2, len_prev2, lo_prev2 = cost_prev, len_prev, lo_prev
        cost_prev, len_prev, lo_prev = cost, length, lo
    return float(cost_prev[-1]), float(len_prev[-1])


def loo_cv_error(dist, values, b, family, base=None, mask=None):
    """Mean squared leave-one-out error of the kernel-weighted mean.

    ``dist`` is the (P, P) pairwise distance matrix, ``values`` the
    per-individual estimates being smoothed, ``base`` an optional fixed
    weight multiplier and ``mask`` the averaging set. Returns +inf when
    any averaged target has an empty off-diagonal neighborhood.
    """
    W = _kernel_matrix(dist, b, family)
    if base is not None:
        W = W * base
    diag = np.diagonal(W)
    den = W.sum(axis=1) - diag
    num = W @ values - diag * values
    if mask is None:
        sel = np.ones(values.shape[0], dtype=bool)
    else:
        sel = np.asarray(mask, dtype=bool)
    if not sel.any():
        return _INF
    d = den[sel]
    if np.any(d <= 1e-12):
        return _INF
    resid = num[sel] / d - values[sel]
    return float(np.mean(resid * resid))


def nw_estimates(dist, values, b, family, base=None):
    """Kernel-weighted means (self included) for every target row.

    Rows whose total weight falls below 1e-12 yield nan; callers decide
    whether that is an error.
    """
    W = _kernel_matrix(dist, b, family)
    if base is not None:
        W = W * base
    den = W.sum(axis=1)
    num = W @ values
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 1e-12, num / np.where(den > 0, den, 1.0), np.nan)
    return out
