"""Reference numpy implementation of the time-march kernels.

The compiled backend must reproduce these results bit for bit, so every
update is written as a single expression with a fixed association order:

    ((s1*u + s2*v) + ks2*f) + eta

The compiled kernel performs the same IEEE operations in the same order
(it is built with floating-point contraction disabled).
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def aee_march(u, v, s1, s2, s3, s4, ks2, ks4, eta, etahat, f_fn):
    """March the exponential scheme in place over eta.shape[0] steps.

    f_fn maps the current u-coefficients to F-coefficients; None means
    F = 0 (realized as an exact-zero array so there is one code path).
    """
    n_steps = eta.shape[0]
    zeros = np.zeros(u.shape[0])
    for m in range(n_steps):
        f = f_fn(u) if f_fn is not None else zeros
        un = ((s1 * u + s2 * v) + ks2 * f) + eta[m]
        vn = ((s3 * u + s4 * v) + ks4 * f) + etahat[m]
        u[:] = un
        v[:] = vn


def lie_march(u, v, c11, c12, c21, c22, k, dw, f_fn):
    """March the linear-implicit Euler scheme in place over dw.shape[0] steps.

    c11..c22 are the entries of (I + k*A_j)^{-1} per mode; the step solves
    (I + k*A_j) X' = X + k*(0, F)' + (0, dW)'.
    """
    n_steps = dw.shape[0]
    zeros = np.zeros(u.shape[0])
    for m in range(n_steps):
        f = f_fn(u) if f_fn is not None else zeros
        rv = (v + k * f) + dw[m]
        un = c11 * u + c12 * rv
        vn = c21 * u + c22 * rv
        u[:] = un
        v[:] = vn
