"""Kernel backend selection.

The compiled extension is preferred; the numpy fallback is used when the
extension is missing or ``GTV_PURE_PYTHON=1`` is set. Both backends share
signatures, so callers import :func:`enet_cd` / :func:`pav_nonincreasing`
from here and never care which one is active (``BACKEND`` says which).
"""

import os

import numpy as np

from . import _py

if os.environ.get("GTV_PURE_PYTHON"):
    _impl = _py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _py
        BACKEND = "python"


def enet_cd(X, y, l1, l2, beta=None, max_sweeps=100000, tol=1e-12):
    """Coordinate descent for (1/n)||y - X b||^2 + l1 ||b||_1 + l2 ||b||_2^2.

    Returns (beta, sweeps, converged). ``beta`` is a fresh array unless a
    warm start is passed, in which case it is updated in place.
    """
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if beta is None:
        beta = np.zeros(X.shape[1])
    else:
        beta = np.ascontiguousarray(beta, dtype=np.float64)
    sweeps, max_delta = _impl.enet_cd(X, y, float(l1), float(l2), beta,
                                      int(max_sweeps), float(tol))
    return beta, sweeps, bool(max_delta <= tol)


def pav_nonincreasing(v):
    """Least-squares projection of ``v`` onto the nonincreasing cone."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.size == 0:
        return v.copy()
    return np.asarray(_impl.pav_nonincreasing(v))
