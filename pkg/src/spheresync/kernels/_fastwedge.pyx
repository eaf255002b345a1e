# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the signature-coupled drive.

Identical prefix/suffix elementary-wedge recursion as the pure backend; the
caller hands in the flat tables from ``wedge_basis`` so the two stay in
lockstep by construction.
"""

import numpy as np


def signature_sum(double[:, ::1] x,
                  int length,
                  int[::1] pre_in, int[::1] pre_axis, int[::1] pre_out,
                  double[::1] pre_sign,
                  int[::1] suf_in, int[::1] suf_axis, int[::1] suf_out,
                  double[::1] suf_sign,
                  int[::1] comb_p, int[::1] comb_q, int[::1] comb_component,
                  double[::1] comb_coef,
                  double scale):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t n_pre = pre_in.shape[0]
    cdef Py_ssize_t n_suf = suf_in.shape[0]
    cdef Py_ssize_t n_comb = comb_p.shape[0]
    cdef Py_ssize_t i, e

    prefix_arr = np.zeros((n + 1, length))
    suffix_arr = np.zeros((n + 1, length))
    out_arr = np.zeros((n, d))
    cdef double[:, ::1] prefix = prefix_arr
    cdef double[:, ::1] suffix = suffix_arr
    cdef double[:, ::1] out = out_arr

    prefix[0, 0] = 1.0
    for i in range(n):
        for e in range(length):
            prefix[i + 1, e] = prefix[i, e]
        for e in range(n_pre):
            prefix[i + 1, pre_out[e]] += pre_sign[e] * prefix[i, pre_in[e]] * x[i, pre_axis[e]]

    suffix[n, 0] = 1.0
    for i in range(n - 1, -1, -1):
        for e in range(length):
            suffix[i, e] = suffix[i + 1, e]
        for e in range(n_suf):
            suffix[i, suf_out[e]] += suf_sign[e] * suffix[i + 1, suf_in[e]] * x[i, suf_axis[e]]

    for i in range(n):
        for e in range(n_comb):
            out[i, comb_component[e]] += comb_coef[e] * prefix[i, comb_p[e]] * suffix[i + 1, comb_q[e]]
        for e in range(d):
            out[i, e] *= scale

    return out_arr
