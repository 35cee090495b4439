# Compiled time-march kernels.
#
# Bit-compatibility contract with backends/pure.py: identical operation
# order per element, no FMA contraction (built with -ffp-contract=off),
# so results are exactly equal to the numpy reference for every input.

import numpy as np


def aee_march(u, v, s1, s2, s3, s4, ks2, ks4, eta, etahat, f_fn):
    """In-place exponential-scheme march; mirrors pure.aee_march."""
    cdef double[::1] u_ = u
    cdef double[::1] v_ = v
    cdef double[::1] s1_ = s1
    cdef double[::1] s2_ = s2
    cdef double[::1] s3_ = s3
    cdef double[::1] s4_ = s4
    cdef double[::1] ks2_ = ks2
    cdef double[::1] ks4_ = ks4
    cdef double[:, ::1] eta_ = eta
    cdef double[:, ::1] etahat_ = etahat
    cdef Py_ssize_t n_steps = eta_.shape[0]
    cdef Py_ssize_t n = u_.shape[0]
    cdef Py_ssize_t m, j
    cdef double uj, vj, un, vn
    cdef double[::1] f_
    zeros = np.zeros(n)
    for m in range(n_steps):
        f_obj = f_fn(u) if f_fn is not None else zeros
        f_ = f_obj
        for j in range(n):
            uj = u_[j]
            vj = v_[j]
            un = ((s1_[j] * uj + s2_[j] * vj) + ks2_[j] * f_[j]) + eta_[m, j]
            vn = ((s3_[j] * uj + s4_[j] * vj) + ks4_[j] * f_[j]) + etahat_[m, j]
            u_[j] = un
            v_[j] = vn


def lie_march(u, v, c11, c12, c21, c22, double k, dw, f_fn):
    """In-place linear-implicit-Euler march; mirrors pure.lie_march."""
    cdef double[::1] u_ = u
    cdef double[::1] v_ = v
    cdef double[::1] c11_ = c11
    cdef double[::1] c12_ = c12
    cdef double[::1] c21_ = c21
    cdef double[::1] c22_ = c22
    cdef double[:, ::1] dw_ = dw
    cdef Py_ssize_t n_steps = dw_.shape[0]
    cdef Py_ssize_t n = u_.shape[0]
    cdef Py_ssize_t m, j
    cdef double uj, rv, un, vn
    cdef double[::1] f_
    zeros = np.zeros(n)
    for m in range(n_steps):
        f_obj = f_fn(u) if f_fn is not None else zeros
        f_ = f_obj
        for j in range(n):
            uj = u_[j]
            rv = (v_[j] + k * f_[j]) + dw_[m, j]
            un = c11_[j] * uj + c12_[j] * rv
            vn = c21_[j] * uj + c22_[j] * rv
            u_[j] = un
            v_[j] = vn
