# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled streaming sparse attention kernel.

Mirrors ``_core_py.sparse_flash_rows``: per query-block row, an online
softmax over tiles then over column chips, float32 in/out with float64
accumulation. The tile score and value products go through BLAS dgemm;
the online-softmax bookkeeping runs in flat C loops with no per-tile
allocations.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, INFINITY
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND_NAME = "cython"


cdef inline void _gemm_scores(double* qp, double* kp, double* out,
                              int h, int width, int d, double scale) noexcept nogil:
    # row-major out[h, width] = scale * q[h, d] @ k[width, d]^T
    cdef char ta = b'T'
    cdef char tb = b'N'
    cdef double beta = 0.0
    dgemm(&ta, &tb, &width, &h, &d, &scale, kp, &d, qp, &d, &beta, out, &width)


cdef inline void _gemm_acc(double* pp, double* vp, double* acc,
                           int h, int width, int d) noexcept nogil:
    # row-major acc[h, d] += p[h, width] @ v[width, d]
    cdef char ta = b'N'
    cdef char tb = b'N'
    cdef double one = 1.0
    dgemm(&ta, &tb, &d, &h, &width, &one, vp, &d, pp, &width, &one, acc, &d)


cdef void _online_update(double* sc, double* m, double* l, double* alpha,
                         Py_ssize_t h, Py_ssize_t width,
                         Py_ssize_t* allowed) noexcept nogil:
    # Turn scores into softmax numerators in place, masking entries past
    # each row's allowed prefix, and fold them into the running state.
    cdef Py_ssize_t ii, jj, na
    cdef double rmax, m_new, a, l_new, p
    for ii in range(h):
        na = allowed[ii]
        if na <= 0:
            alpha[ii] = 1.0
            for jj in range(width):
                sc[ii * width + jj] = 0.0
            continue
        rmax = -INFINITY
        for jj in range(na):
            if sc[ii * width + jj] > rmax:
                rmax = sc[ii * width + jj]
        m_new = m[ii] if m[ii] > rmax else rmax
        a = exp(m[ii] - m_new)
        l_new = 0.0
        for jj in range(na):
            p = exp(sc[ii * width + jj] - m_new)
            l_new += p
            sc[ii * width + jj] = p
        for jj in range(na, width):
            sc[ii * width + jj] = 0.0
        l[ii] = a * l[ii] + l_new
        m[ii] = m_new
        alpha[ii] = a


def sparse_flash_rows(
    cnp.float32_t[:, ::1] q,
    cnp.float32_t[:, ::1] k,
    cnp.float32_t[:, ::1] v,
    double scale,
    int block_size,
    cnp.int64_t[::1] tile_starts,
    cnp.int64_t[::1] tile_offsets,
    cnp.int64_t[::1] col_indices,
    cnp.int64_t[::1] col_offsets,
):
    cdef Py_ssize_t s_len = q.shape[0]
    cdef Py_ssize_t d = q.shape[1]
    cdef int b = block_size
    cdef Py_ssize_t n_rows = (s_len + b - 1) // b

    q64_arr = np.asarray(q).astype(np.float64)
    k64_arr = np.asarray(k).astype(np.float64)
    v64_arr = np.asarray(v).astype(np.float64)
    cdef double[:, ::1] q64 = q64_arr
    cdef double[:, ::1] k64 = k64_arr
    cdef double[:, ::1] v64 = v64_arr

    out_arr = np.zeros((s_len, d), dtype=np.float32)
    cdef cnp.float32_t[:, ::1] out = out_arr

    sc_arr = np.empty(b * b, dtype=np.float64)
    m_arr = np.empty(b, dtype=np.float64)
    l_arr = np.empty(b, dtype=np.float64)
    alpha_arr = np.empty(b, dtype=np.float64)
    acc_arr = np.empty((b, d), dtype=np.float64)
    kbuf_arr = np.empty((b, d), dtype=np.float64)
    vbuf_arr = np.empty((b, d), dtype=np.float64)
    allowed_arr = np.empty(b, dtype=np.intp)
    cdef double[::1] sc = sc_arr
    cdef double[::1] m = m_arr
    cdef double[::1] l = l_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[:, ::1] acc = acc_arr
    cdef double[:, ::1] kbuf = kbuf_arr
    cdef double[:, ::1] vbuf = vbuf_arr
    cdef Py_ssize_t[::1] allowed = allowed_arr

    cdef Py_ssize_t r, q_start, q_end, h, ii, jj, t, qa, x
    cdef Py_ssize_t ks, ke, c0, c1, nc, cw, col
    cdef int width
    cdef long long s

    for r in range(n_rows):
        q_start = r * b
        q_end = q_start + b
        if q_end > s_len:
            q_end = s_len
        h = q_end - q_start

        for ii in range(h):
            m[ii] = -INFINITY
            l[ii] = 0.0
            for x in range(d):
                acc[ii, x] = 0.0

        # block part: tiles
        for t in range(tile_offsets[r], tile_offsets[r + 1]):
            s = tile_starts[t]
            ks = s if s > 0 else 0
            ke = s + b
            if ke > s_len:
                ke = s_len
            if ke <= ks:
                continue
            width = <int> (ke - ks)
            _gemm_scores(&q64[q_start, 0], &k64[ks, 0], &sc[0],
                         <int> h, width, <int> d, scale)
            for ii in range(h):
                qa = q_start + ii
                c1 = ke
                if c1 > qa + 1:
                    c1 = qa + 1
                allowed[ii] = c1 - ks
            _online_update(&sc[0], &m[0], &l[0], &alpha[0], h, width, &allowed[0])
            for ii in range(h):
                if alpha[ii] != 1.0:
                    for x in range(d):
                        acc[ii, x] *= alpha[ii]
            _gemm_acc(&sc[0], &v64[ks, 0], &acc[0, 0], <int> h, width, <int> d)

        # PIT part: column chips
        nc = col_offsets[r + 1] - col_offsets[r]
        for c0 in range(0, nc, b):
            cw = c0 + b
            if cw > nc:
                cw = nc
            cw -= c0
            for jj in range(cw):
                col = col_indices[col_offsets[r] + c0 + jj]
                for x in range(d):
                    kbuf[jj, x] = k64[col, x]
                    vbuf[jj, x] = v64[col, x]
            width = <int> cw
            _gemm_scores(&q64[q_start, 0], &kbuf[0, 0], &sc[0],
                         <int> h, width, <int> d, scale)
            for ii in range(h):
                qa = q_start + ii
                c1 = 0
                for jj in range(cw):  # columns ascending: prefix is allowed
                    if col_indices[col_offsets[r] + c0 + jj] > qa:
                        break
                    c1 += 1
                allowed[ii] = c1
            _online_update(&sc[0], &m[0], &l[0], &alpha[0], h, width, &allowed[0])
            for ii in range(h):
                if alpha[ii] != 1.0:
                    for x in range(d):
                        acc[ii, x] *= alpha[ii]
            _gemm_acc(&sc[0], &vbuf[0, 0], &acc[0, 0], <int> h, width, <int> d)

        for ii in range(h):
            if l[ii] > 0.0:
                for x in range(d):
                    out[q_start + ii, x] = <cnp.float32_t> (acc[ii, x] / l[ii])
    return out_arr
