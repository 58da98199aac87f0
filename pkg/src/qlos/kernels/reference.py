"""Vectorized NumPy kernels for the frame-level BER loops.

The compiled backend mirrors these semantics exactly. To keep the two
bit-identical, every accumulation that a scalar loop would do in frame
or antenna order is written here as an explicit ordered loop over numpy
arrays (pairwise reduction would round differently), complex products
are expanded into real arithmetic (numpy's own complex multiply fuses
multiply-adds on some builds; the extension is compiled with
-ffp-contract=off to match the expanded form), and bin lookups use the
same comparison conventions:

* quantizer bins: lower-inclusive, k = #{thr_j <= v}  (searchsorted right)
* symbol slicing: ties to the lower level, k = #{thr_j < v}  (left)

Maximum-likelihood products are tracked as (mantissa, base-2 exponent)
pairs via frexp instead of log sums: frexp is exact, so candidate ranking
does not depend on whose log implementation rounds last.

All kernels consume pre-generated per-frame arrays (symbol indices, the
common-phase rotator e^{-j phi}, unit-variance noise) plus precomputed
channel products, and return the total bit error count as an int.
"""

import numpy as np
from scipy.special import ndtr

KERNEL_IMPL = "reference"

_FLOOR = 1e-300
_CHUNK_ELEMS = 1 << 22


def _pack(sym_idx, base):
    """Mixed-radix packing, antenna 0 most significant."""
    packed = sym_idx[..., 0].astype(np.int64)
    for i in range(1, sym_idx.shape[-1]):
        packed = packed * base + sym_idx[..., i]
    return packed


def _matvec_ri(m, vre, vim):
    """out[..., i] = sum_k m[i, k] v[..., k] on split re/im arrays with a
    fixed k accumulation order and unfused complex products."""
    n = m.shape[0]
    out_re = np.empty(vre.shape)
    out_im = np.empty(vim.shape)
    for i in range(n):
        acc_re = np.zeros(vre.shape[:-1])
        acc_im = np.zeros(vim.shape[:-1])
        for k in range(n):
            wre = m[i, k].real
            wim = m[i, k].imag
            acc_re = acc_re + (wre * vre[..., k] - wim * vim[..., k])
            acc_im = acc_im + (wre * vim[..., k] + wim * vre[..., k])
        out_re[..., i] = acc_re
        out_im[..., i] = acc_im
    return out_re, out_im


def _bit_errors(bitdist, sym_idx, det_idx):
    total = 0
    for i in range(sym_idx.shape[-1]):
        total += int(bitdist[sym_idx[..., i], det_idx[..., i]].sum())
    return total


def _received(sym, rot_re, rot_im, noise, sigma, mean_table, p):
    mt = mean_table[_pack(sym, p)]
    yre = (rot_re * mt.real - rot_im * mt.imag) + sigma * noise.real
    yim = (rot_re * mt.imag + rot_im * mt.real) + sigma * noise.imag
    return yre, yim


def ber_zf(sym_idx, crot, noise, sigma2, mean_table, w0, qthr, qcode, sthr,
           bitdist):
    """Quantize, reconstruct with centroids, ZF filter, slice per stream."""
    s = qthr.size + 1
    q = sthr.size + 1
    p = bitdist.shape[0]
    sigma = np.sqrt(sigma2)
    rot_re = crot.real[:, None]
    rot_im = crot.imag[:, None]
    yre, yim = _received(sym_idx, rot_re, rot_im, noise, sigma, mean_table, p)
    bins = (np.searchsorted(qthr, yre, side="right") * s
            + np.searchsorted(qthr, yim, side="right"))
    cent = qcode[bins]
    are, aim = _matvec_ri(w0, cent.real, cent.imag)
    # conj(rot) * acc
    xre = rot_re * are + rot_im * aim
    xim = rot_re * aim - rot_im * are
    det = (np.searchsorted(sthr, xre, side="left") * q
           + np.searchsorted(sthr, xim, side="left"))
    return _bit_errors(bitdist, sym_idx, det)


def ber_ml(sym_idx, crot, noise, sigma2, mean_table, qthr, bitdist):
    """Exact ML over all candidate vectors, first-max ties to the lowest index."""
    f_total, n = sym_idx.shape
    x_count = mean_table.shape[0]
    p = bitdist.shape[0]
    sd = np.sqrt(sigma2 / 2.0)
    sigma = np.sqrt(sigma2)
    edges = np.concatenate(([-np.inf], qthr, [np.inf]))
    chunk = max(1, _CHUNK_ELEMS // (x_count * n))
    total = 0
    for start in range(0, f_total, chunk):
        sym = sym_idx[start:start + chunk]
        rot_re = crot.real[start:start + chunk, None]
        rot_im = crot.imag[start:start + chunk, None]
        yre, yim = _received(sym, rot_re, rot_im, noise[start:start + chunk],
                             sigma, mean_table, p)
        kre = np.searchsorted(qthr, yre, side="right")
        kim = np.searchsorted(qthr, yim, side="right")
        mant = np.ones((sym.shape[0], x_count))
        expo = np.zeros((sym.shape[0], x_count), dtype=np.int64)
        for i in range(n):
            mre = mean_table[None, :, i].real
            mim = mean_table[None, :, i].imag
            tre = rot_re * mre - rot_im * mim
            tim = rot_re * mim + rot_im * mre
            p_re = ndtr((edges[kre[:, i] + 1, None] - tre) / sd) \
                - ndtr((edges[kre[:, i], None] - tre) / sd)
            p_im = ndtr((edges[kim[:, i] + 1, None] - tim) / sd) \
                - ndtr((edges[kim[:, i], None] - tim) / sd)
            mant = mant * np.maximum(p_re * p_im, _FLOOR)
            mant, de = np.frexp(mant)
            expo = expo + de
        best_m = mant[:, 0].copy()
        best_e = expo[:, 0].copy()
        best = np.zeros(sym.shape[0], dtype=np.int64)
        for x in range(1, x_count):
            upd = (expo[:, x] > best_e) \
                | ((expo[:, x] == best_e) & (mant[:, x] > best_m))
            best_m = np.where(upd, mant[:, x], best_m)
            best_e = np.where(upd, expo[:, x], best_e)
            best = np.where(upd, x, best)
        det = np.empty_like(sym)
        rem = best
        for i in range(n - 1, -1, -1):
            det[:, i] = rem % p
            rem = rem // p
        total += _bit_errors(bitdist, sym, det)
    return total


def ber_vq(sym_idx, crot, noise, sigma2, mean_table, w0, qthr, vthr, vcode,
           sthr, bitdist):
    """Virtual-quantization detection over the 4^n refinement candidates."""
    f_total, n = sym_idx.shape
    s = qthr.size + 1
    sv = vthr.size + 1
    q = sthr.size + 1
    p = bitdist.shape[0]
    if sv != 2 * s:
        raise ValueError("virtual grid must refine each axis cell in two")
    sigma = np.sqrt(sigma2)
    t4 = 4 ** n
    cells = np.arange(t4, dtype=np.int64)
    digits = np.empty((t4, n), dtype=np.int64)
    for i in range(n):
        digits[:, i] = (cells >> (2 * (n - 1 - i))) & 3
    dre = digits >> 1
    dim = digits & 1
    chunk = max(1, _CHUNK_ELEMS // (t4 * n))
    total = 0
    for start in range(0, f_total, chunk):
        sym = sym_idx[start:start + chunk]
        rot_re = crot.real[start:start + chunk, None]
        rot_im = crot.imag[start:start + chunk, None]
        yre, yim = _received(sym, rot_re, rot_im, noise[start:start + chunk],
                             sigma, mean_table, p)
        kre = np.searchsorted(qthr, yre, side="right")
        kim = np.searchsorted(qthr, yim, side="right")
        vbin = ((2 * kre[:, None, :] + dre[None, :, :]) * sv
                + 2 * kim[:, None, :] + dim[None, :, :])
        yv = vcode[vbin]
        are, aim = _matvec_ri(w0, yv.real, yv.imag)
        rre = rot_re[:, :, None]
        rim = rot_im[:, :, None]
        xre = rre * are + rim * aim
        xim = rre * aim - rim * are
        det = (np.searchsorted(sthr, xre, side="left") * q
               + np.searchsorted(sthr, xim, side="left"))
        mt = mean_table[_pack(det, p)]
        zre = rre * mt.real - rim * mt.imag
        zim = rre * mt.imag + rim * mt.real
        recon = vcode[np.searchsorted(vthr, zre, side="right") * sv
                      + np.searchsorted(vthr, zim, side="right")]
        score = np.zeros(yv.shape[:2])
        for i in range(n):
            d_re = yv[:, :, i].real - recon[:, :, i].real
            d_im = yv[:, :, i].imag - recon[:, :, i].imag
            score = score + (d_re * d_re + d_im * d_im)
        best = np.argmin(score, axis=1)
        picked = np.take_along_axis(det, best[:, None, None], axis=1)[:, 0, :]
        total += _bit_errors(bitdist, sym, picked)
    return total
