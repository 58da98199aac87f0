# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled frame-loop kernels.

Scalar mirror of ``qlos.kernels.reference``: identical bin conventions,
identical accumulation order, complex products expanded into the same
naive real arithmetic numpy uses (the extension is built with
-ffp-contract=off so no fused multiply-add changes the rounding).
"""

import numpy as np

from libc.math cimport frexp, log, sqrt
from scipy.special.cython_special cimport ndtr

KERNEL_IMPL = "fast"

cdef double _FLOOR = 1e-300


cdef inline Py_ssize_t _bin_right(const double* thr, Py_ssize_t m, double v) noexcept nogil:
    # lower-inclusive cells: k = #{thr_j <= v}
    cdef Py_ssize_t k = 0
    while k < m and v >= thr[k]:
        k += 1
    return k


cdef inline Py_ssize_t _bin_left(const double* thr, Py_ssize_t m, double v) noexcept nogil:
    # slicing ties go to the lower level: k = #{thr_j < v}
    cdef Py_ssize_t k = 0
    while k < m and v > thr[k]:
        k += 1
    return k


def ber_zf(sym_idx, crot, noise, double sigma2, mean_table, w0, qthr, qcode,
           sthr, bitdist):
    """Quantize, reconstruct with centroids, ZF filter, slice per stream."""
    cdef long[:, ::1] sym = np.ascontiguousarray(sym_idx, dtype=np.int64)
    cdef double complex[::1] rot = np.ascontiguousarray(crot, dtype=np.complex128)
    cdef double complex[:, ::1] nz = np.ascontiguousarray(noise, dtype=np.complex128)
    cdef double complex[:, ::1] mtab = np.ascontiguousarray(mean_table, dtype=np.complex128)
    cdef double complex[:, ::1] w = np.ascontiguousarray(w0, dtype=np.complex128)
    cdef double[::1] qt = np.ascontiguousarray(qthr, dtype=np.float64)
    cdef double complex[::1] code = np.ascontiguousarray(qcode, dtype=np.complex128)
    cdef double[::1] st = np.ascontiguousarray(sthr, dtype=np.float64)
    cdef long[:, ::1] bd = np.ascontiguousarray(bitdist, dtype=np.int64)

    cdef Py_ssize_t f_total = sym.shape[0]
    cdef Py_ssize_t n = sym.shape[1]
    cdef Py_ssize_t p = bd.shape[0]
    cdef Py_ssize_t s = qt.shape[0] + 1
    cdef Py_ssize_t q = st.shape[0] + 1
    cdef double sigma = sqrt(sigma2)

    cdef long[::1] bins = np.zeros(n, dtype=np.int64)
    cdef long total = 0
    cdef Py_ssize_t f, i, k
    cdef long packed, det
    cdef double cr, ci, mre, mim, tre, tim, yre, yim
    cdef double are, aim, pre, pim, xre, xim
    cdef double complex mv, cv, wv

    with nogil:
        for f in range(f_total):
            packed = sym[f, 0]
            for i in range(1, n):
                packed = packed * p + sym[f, i]
            cr = rot[f].real
            ci = rot[f].imag
            for i in range(n):
                mv = mtab[packed, i]
                mre = mv.real
                mim = mv.imag
                tre = cr * mre - ci * mim
                tim = cr * mim + ci * mre
                yre = tre + sigma * nz[f, i].real
                yim = tim + sigma * nz[f, i].imag
                bins[i] = _bin_right(&qt[0], s - 1, yre) * s \
                    + _bin_right(&qt[0], s - 1, yim)
            for i in range(n):
                are = 0.0
                aim = 0.0
                for k in range(n):
                    wv = w[i, k]
                    cv = code[bins[k]]
                    pre = wv.real * cv.real - wv.imag * cv.imag
                    pim = wv.real * cv.imag + wv.imag * cv.real
                    are = are + pre
                    aim = aim + pim
                # conj(rot) * acc
                xre = cr * are + ci * aim
                xim = cr * aim - ci * are
                det = _bin_left(&st[0], q - 1, xre) * q \
                    + _bin_left(&st[0], q - 1, xim)
                total += bd[sym[f, i], det]
    return int(total)


def ber_ml(sym_idx, crot, noise, double sigma2, mean_table, qthr, bitdist):
    """Exact ML over all candidate vectors, first-max ties to the lowest index.

    Likelihood products are tracked as (mantissa, exponent) pairs via frexp,
    mirroring the reference backend bit for bit.
    """
    cdef long[:, ::1] sym = np.ascontiguousarray(sym_idx, dtype=np.int64)
    cdef double complex[::1] rot = np.ascontiguousarray(crot, dtype=np.complex128)
    cdef double complex[:, ::1] nz = np.ascontiguousarray(noise, dtype=np.complex128)
    cdef double complex[:, ::1] mtab = np.ascontiguousarray(mean_table, dtype=np.complex128)
    cdef double[::1] qt = np.ascontiguousarray(qthr, dtype=np.float64)
    cdef long[:, ::1] bd = np.ascontiguousarray(bitdist, dtype=np.int64)
    edges_arr = np.concatenate(([-np.inf], np.asarray(qthr, dtype=np.float64),
                                [np.inf]))
    cdef double[::1] edges = edges_arr

    cdef Py_ssize_t f_total = sym.shape[0]
    cdef Py_ssize_t n = sym.shape[1]
    cdef Py_ssize_t x_count = mtab.shape[0]
    cdef Py_ssize_t p = bd.shape[0]
    cdef Py_ssize_t s = qt.shape[0] + 1
    cdef double sigma = sqrt(sigma2)
    cdef double sd = sqrt(sigma2 / 2.0)

    cdef long[::1] kre = np.zeros(n, dtype=np.int64)
    cdef long[::1] kim = np.zeros(n, dtype=np.int64)
    cdef long total = 0
    cdef Py_ssize_t f, i, x
    cdef long packed, best_x, rem, det
    cdef long expo, best_e
    cdef int de
    cdef double cr, ci, mre, mim, tre, tim, yre, yim
    cdef double p_re, p_im, pp, mant, best_m
    cdef double complex mv

    with nogil:
        for f in range(f_total):
            packed = sym[f, 0]
            for i in range(1, n):
                packed = packed * p + sym[f, i]
            cr = rot[f].real
            ci = rot[f].imag
            for i in range(n):
                mv = mtab[packed, i]
                mre = mv.real
                mim = mv.imag
                tre = cr * mre - ci * mim
                tim = cr * mim + ci * mre
                yre = tre + sigma * nz[f, i].real
                yim = tim + sigma * nz[f, i].imag
                kre[i] = _bin_right(&qt[0], s - 1, yre)
                kim[i] = _bin_right(&qt[0], s - 1, yim)
            best_m = 0.0
            best_e = 0
            best_x = 0
            for x in range(x_count):
                mant = 1.0
                expo = 0
                for i in range(n):
                    mv = mtab[x, i]
                    mre = mv.real
                    mim = mv.imag
                    tre = cr * mre - ci * mim
                    tim = cr * mim + ci * mre
                    p_re = ndtr((edges[kre[i] + 1] - tre) / sd) \
                        - ndtr((edges[kre[i]] - tre) / sd)
                    p_im = ndtr((edges[kim[i] + 1] - tim) / sd) \
                        - ndtr((edges[kim[i]] - tim) / sd)
                    pp = p_re * p_im
                    if pp < _FLOOR:
                        pp = _FLOOR
                    mant = mant * pp
                    mant = frexp(mant, &de)
                    expo = expo + de
                if x == 0 or expo > best_e or (expo == best_e and mant > best_m):
                    best_m = mant
                    best_e = expo
                    best_x = x
            rem = best_x
            for i in range(n - 1, -1, -1):
                det = rem % p
                rem = rem // p
                total += bd[sym[f, i], det]
    return int(total)


def ber_vq(sym_idx, crot, noise, double sigma2, mean_table, w0, qthr, vthr,
           vcode, sthr, bitdist):
    """Virtual-quantization detection over the 4^n refinement candidates."""
    cdef long[:, ::1] sym = np.ascontiguousarray(sym_idx, dtype=np.int64)
    cdef double complex[::1] rot = np.ascontiguousarray(crot, dtype=np.complex128)
    cdef double complex[:, ::1] nz = np.ascontiguousarray(noise, dtype=np.complex128)
    cdef double complex[:, ::1] mtab = np.ascontiguousarray(mean_table, dtype=np.complex128)
    cdef double complex[:, ::1] w = np.ascontiguousarray(w0, dtype=np.complex128)
    cdef double[::1] qt = np.ascontiguousarray(qthr, dtype=np.float64)
    cdef double[::1] vt = np.ascontiguousarray(vthr, dtype=np.float64)
    cdef double complex[::1] vc = np.ascontiguousarray(vcode, dtype=np.complex128)
    cdef double[::1] st = np.ascontiguousarray(sthr, dtype=np.float64)
    cdef long[:, ::1] bd = np.ascontiguousarray(bitdist, dtype=np.int64)

    cdef Py_ssize_t f_total = sym.shape[0]
    cdef Py_ssize_t n = sym.shape[1]
    cdef Py_ssize_t p = bd.shape[0]
    cdef Py_ssize_t s = qt.shape[0] + 1
    cdef Py_ssize_t sv = vt.shape[0] + 1
    cdef Py_ssize_t q = st.shape[0] + 1
    if sv != 2 * s:
        raise ValueError("virtual grid must refine each axis cell in two")
    cdef double sigma = sqrt(sigma2)
    cdef Py_ssize_t t4 = 1 << (2 * n)

    cdef long[::1] kre = np.zeros(n, dtype=np.int64)
    cdef long[::1] kim = np.zeros(n, dtype=np.int64)
    cdef double[::1] yv_re = np.zeros(n, dtype=np.float64)
    cdef double[::1] yv_im = np.zeros(n, dtype=np.float64)
    cdef long[::1] det = np.zeros(n, dtype=np.int64)
    cdef long[::1] best_det = np.zeros(n, dtype=np.int64)
    cdef long total = 0
    cdef Py_ssize_t f, i, k, t
    cdef long packed, c, vb
    cdef double cr, ci, mre, mim, tre, tim
    cdef double are, aim, pre, pim, xre, xim
    cdef double score, best_score, inner, dre_d, dim_d
    cdef double complex mv, cv, wv, rcv

    with nogil:
        for f in range(f_total):
            packed = sym[f, 0]
            for i in range(1, n):
                packed = packed * p + sym[f, i]
            cr = rot[f].real
            ci = rot[f].imag
            for i in range(n):
                mv = mtab[packed, i]
                mre = mv.real
                mim = mv.imag
                tre = cr * mre - ci * mim
                tim = cr * mim + ci * mre
                xre = tre + sigma * nz[f, i].real
                xim = tim + sigma * nz[f, i].imag
                kre[i] = _bin_right(&qt[0], s - 1, xre)
                kim[i] = _bin_right(&qt[0], s - 1, xim)
            best_score = 0.0
            for t in range(t4):
                # candidate virtual cells, antenna 0 most significant
                for i in range(n):
                    c = (t >> (2 * (n - 1 - i))) & 3
                    vb = (2 * kre[i] + (c >> 1)) * sv + 2 * kim[i] + (c & 1)
                    cv = vc[vb]
                    yv_re[i] = cv.real
                    yv_im[i] = cv.imag
                for i in range(n):
                    are = 0.0
                    aim = 0.0
                    for k in range(n):
                        wv = w[i, k]
                        pre = wv.real * yv_re[k] - wv.imag * yv_im[k]
                        pim = wv.real * yv_im[k] + wv.imag * yv_re[k]
                        are = are + pre
                        aim = aim + pim
                    xre = cr * are + ci * aim
                    xim = cr * aim - ci * are
                    det[i] = _bin_left(&st[0], q - 1, xre) * q \
                        + _bin_left(&st[0], q - 1, xim)
                packed = det[0]
                for i in range(1, n):
                    packed = packed * p + det[i]
                score = 0.0
                for i in range(n):
                    mv = mtab[packed, i]
                    mre = mv.real
                    mim = mv.imag
                    tre = cr * mre - ci * mim
                    tim = cr * mim + ci * mre
                    vb = _bin_right(&vt[0], sv - 1, tre) * sv \
                        + _bin_right(&vt[0], sv - 1, tim)
                    rcv = vc[vb]
                    dre_d = yv_re[i] - rcv.real
                    dim_d = yv_im[i] - rcv.imag
                    inner = dre_d * dre_d + dim_d * dim_d
                    score = score + inner
                if t == 0 or score < best_score:
                    best_score = score
                    for i in range(n):
                        best_det[i] = det[i]
            for i in range(n):
                total += bd[sym[f, i], best_det[i]]
    return int(total)
