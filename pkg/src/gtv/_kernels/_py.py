"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable or when
``GTV_PURE_PYTHON=1`` is set. Same contracts as ``_core``.
"""

import numpy as np


def enet_cd(X, y, l1, l2, beta, max_sweeps, tol):
    """Cyclic coordinate descent for (1/n)||y - X b||^2 + l1 ||b||_1 + l2 ||b||_2^2.

    Updates ``beta`` in place. Returns (sweeps_used, last_max_delta);
    convergence means last_max_delta <= tol.
    """
    n, p = X.shape
    col_sq = np.einsum("ij,ij->j", X, X)
    resid = y - X @ beta
    scale = 2.0 / n
    denom = scale * col_sq + 2.0 * l2
    max_delta = np.inf
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            b_old = beta[j]
            c = scale * (X[:, j] @ resid) + scale * col_sq[j] * b_old
            if denom[j] <= 0.0:
                continue
            b_new = np.sign(c) * max(abs(c) - l1, 0.0) / denom[j]
            delta = b_new - b_old
            if delta != 0.0:
                resid -= delta * X[:, j]
                beta[j] = b_new
                max_delta = max(max_delta, abs(delta))
        if max_delta <= tol:
            break
    return sweeps, max_delta


def pav_nonincreasing(v):
    """Euclidean projection of ``v`` onto the nonincreasing cone.

    Pool-adjacent-violators: pooled blocks are replaced by their mean
    whenever a later block mean exceeds an earlier one.
    """
    n = v.shape[0]
    sums = np.empty(n)
    counts = np.empty(n, dtype=np.intp)
    means = np.empty(n)
    top = -1
    for i in range(n):
        top += 1
        sums[top] = v[i]
        counts[top] = 1
        means[top] = v[i]
        while top > 0 and means[top] > means[top - 1]:
            sums[top - 1] += sums[top]
            counts[top - 1] += counts[top]
            means[top - 1] = sums[top - 1] / counts[top - 1]
            top -= 1
    out = np.empty(n)
    pos = 0
    for b in range(top + 1):
        out[pos : pos + counts[b]] = means[b]
        pos += counts[b]
    return out
