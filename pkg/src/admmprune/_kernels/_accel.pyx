# cython: language_level=3
# cython: boundscheck=False
# cython: wraparound=False
# cython: cdivision=True
# distutils: language = c++
"""Compiled lane for the solver's hot kernels.

Mirrors ``_numpy`` element for element; outputs are bitwise identical.
Selection kernels use std::nth_element instead of a full sort, with the
same two-pass tie handling (prune strictly-below threshold, then fill the
remaining budget from threshold ties in flat row-major order).
"""

import numpy as np

from libc.math cimport fabs

cdef extern from "<algorithm>" namespace "std" nogil:
    void nth_element[Iter](Iter first, Iter nth, Iter last)

NAME = "cython"


def combined_scores(double[:, ::1] w, double[:, ::1] u, double[:, ::1] out):
    cdef Py_ssize_t i, j, rows = w.shape[0], cols = w.shape[1]
    with nogil:
        for i in range(rows):
            for j in range(cols):
                out[i, j] = fabs(w[i, j] + u[i, j])


def row_scaled_scores(double[:, ::1] w, double[:, ::1] u,
                      double[::1] row_scale, double[:, ::1] out):
    cdef Py_ssize_t i, j, rows = w.shape[0], cols = w.shape[1]
    with nogil:
        for i in range(rows):
            for j in range(cols):
                out[i, j] = fabs(w[i, j] + u[i, j]) * row_scale[i]


def apply_mask_pair(double[:, ::1] w, double[:, ::1] u,
                    unsigned char[:, ::1] mask, double[:, ::1] out):
    cdef Py_ssize_t i, j, rows = w.shape[0], cols = w.shape[1]
    cdef double s
    with nogil:
        for i in range(rows):
            for j in range(cols):
                s = w[i, j] + u[i, j]
                out[i, j] = s if mask[i, j] else 0.0


def iteration_update(double[:, ::1] w, double[:, ::1] u,
                     unsigned char[:, ::1] mask, double[:, ::1] gram_w,
                     double rho, double[:, ::1] z_out, double[:, ::1] rhs_out):
    # s = w + u; z = masked s; u <- s - z; rhs = gram_w + rho * (z - u)
    cdef Py_ssize_t i, j, rows = w.shape[0], cols = w.shape[1]
    cdef double s, z, un
    with nogil:
        for i in range(rows):
            for j in range(cols):
                s = w[i, j] + u[i, j]
                z = s if mask[i, j] else 0.0
                un = s - z
                u[i, j] = un
                z_out[i, j] = z
                rhs_out[i, j] = gram_w[i, j] + rho * (z - un)


def finalize(double[:, ::1] w, double[:, ::1] u, unsigned char[:, ::1] mask,
             double[::1] inv_norms, double[:, ::1] out):
    cdef Py_ssize_t i, j, rows = w.shape[0], cols = w.shape[1]
    cdef double s
    with nogil:
        for i in range(rows):
            for j in range(cols):
                s = w[i, j] + u[i, j]
                out[i, j] = (s if mask[i, j] else 0.0) * inv_norms[i]


def topk_prune(double[:, ::1] scores, Py_ssize_t count,
               unsigned char[:, ::1] mask_out):
    cdef Py_ssize_t i, j, rows = scores.shape[0], cols = scores.shape[1]
    cdef Py_ssize_t total = rows * cols
    cdef Py_ssize_t below = 0, ties
    cdef double theta
    _fill_ones(mask_out)
    if count <= 0:
        return
    if count >= total:
        with nogil:
            for i in range(rows):
                for j in range(cols):
                    mask_out[i, j] = 0
        return
    buf_arr = np.empty(total, dtype=np.float64)
    cdef double[::1] buf = buf_arr
    cdef double* bp = &buf[0]
    with nogil:
        for i in range(rows):
            for j in range(cols):
                buf[i * cols + j] = scores[i, j]
        nth_element(bp, bp + (count - 1), bp + total)
        theta = buf[count - 1]
        for i in range(rows):
            for j in range(cols):
                if scores[i, j] < theta:
                    mask_out[i, j] = 0
                    below += 1
        ties = count - below
        for i in range(rows):
            if ties == 0:
                break
            for j in range(cols):
                if ties == 0:
                    break
                if scores[i, j] == theta:
                    mask_out[i, j] = 0
                    ties -= 1


def structured_prune(double[:, ::1] scores, Py_ssize_t count, int n_keep,
                     int m_group, unsigned char[:, ::1] mask_out):
    cdef Py_ssize_t i, j, rows = scores.shape[0], cols = scores.shape[1]
    cdef Py_ssize_t g, r, row, best, picks, pos
    cdef Py_ssize_t groups = rows // m_group
    cdef Py_ssize_t union_total = rows * cols - groups * n_keep * cols
    cdef Py_ssize_t below = 0, ties
    cdef double theta
    prot_arr = np.zeros((rows, cols), dtype=np.uint8)
    cdef unsigned char[:, ::1] prot = prot_arr
    with nogil:
        for j in range(cols):
            for g in range(groups):
                for picks in range(n_keep):
                    best = -1
                    for r in range(m_group):
                        row = g * m_group + r
                        if prot[row, j]:
                            continue
                        # >= sends protection ties to the higher flat index
                        if best < 0 or scores[row, j] >= scores[best, j]:
                            best = row
                    prot[best, j] = 1
    _fill_ones(mask_out)
    if count <= 0 or union_total == 0:
        return
    if count > union_total:
        count = union_total
    buf_arr = np.empty(union_total, dtype=np.float64)
    cdef double[::1] buf = buf_arr
    cdef double* bp = &buf[0]
    with nogil:
        pos = 0
        for i in range(rows):
            for j in range(cols):
                if not prot[i, j]:
                    buf[pos] = scores[i, j]
                    pos += 1
        nth_element(bp, bp + (count - 1), bp + union_total)
        theta = buf[count - 1]
        for i in range(rows):
            for j in range(cols):
                if not prot[i, j] and scores[i, j] < theta:
                    mask_out[i, j] = 0
                    below += 1
        ties = count - below
        for i in range(rows):
            if ties == 0:
                break
            for j in range(cols):
                if ties == 0:
                    break
                if not prot[i, j] and scores[i, j] == theta:
                    mask_out[i, j] = 0
                    ties -= 1


cdef void _fill_ones(unsigned char[:, ::1] mask) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(mask.shape[0]):
        for j in range(mask.shape[1]):
            mask[i, j] = 1
