# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled resolvent marching kernel.

Same algorithm as ``march_py.march_resolvent`` (exponential-integrator
trapezoidal step, implicit newest memory node); the triple loop over
(step, mode, memory node) runs in C.
"""

import numpy as np

cimport numpy as cnp


def march_resolvent(double[:, ::1] ustep, double[:, ::1] cvals,
                    double[::1] nsq, double h, int s_index,
                    double[:, ::1] out):
    cdef int n_modes = out.shape[0]
    cdef int n_steps = out.shape[1] - 1
    cdef int j, n, i, m
    cdef double half = 0.5 * h
    cdef double acc, gee, denom, cij
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mem_arr = np.zeros(n_modes)
    cdef double[::1] mem = mem_arr

    for n in range(n_modes):
        out[n, s_index] = 1.0
    for j in range(s_index, n_steps):
        for n in range(n_modes):
            # trapezoid over nodes s..j of C(t_{j+1}, t_i) r(t_i, t_s)
            acc = 0.5 * cvals[j + 1, s_index] * out[n, s_index]
            for i in range(s_index + 1, j + 1):
                acc += cvals[j + 1, i] * out[n, i]
            acc = -nsq[n] * acc * h
            gee = -nsq[n] * cvals[j + 1, j + 1]
            denom = 1.0 - half * half * gee
            out[n, j + 1] = (ustep[n, j] * (out[n, j] + half * mem[n])
                             + half * acc) / denom
            mem[n] = acc + half * gee * out[n, j + 1]
