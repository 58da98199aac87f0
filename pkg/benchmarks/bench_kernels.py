"""Timing comparison of the compiled and reference simulation kernels.

Runs each detector kernel on identical frame blocks under both backends
and reports per-frame cost plus the speedup ratio. Bit-error totals are
printed so agreement between the backends is visible at a glance.
"""

import argparse
import dataclasses
import math
import time

import numpy as np

import qlos.channel as ch
import qlos.quantizer as qz
import qlos.rng as qrng
from qlos.constellation import make_constellation, vector_indices
from qlos.kernels import get_backend


def build_args(n, theta, sigma2, s, c):
    H0 = ch.los_channel(n, theta, 0.0)
    q = qz.with_codebook(qz.design_equal_prob_iq(s, sigma2), sigma2)
    vqz = qz.refine(q)
    vqz = dataclasses.replace(vqz,
                              virtual=qz.with_codebook(vqz.virtual, sigma2))
    cand = vector_indices(c.size, n)
    lab = c.labels.astype(np.int64)
    bitdist = np.array([[bin(a ^ b).count("1") for b in lab] for a in lab],
                       dtype=np.int64)
    lv = c.axis_levels
    return dict(
        mean_table=c.points[cand] @ H0.entries.T,
        w0=np.linalg.solve(H0.entries.conj().T @ H0.entries,
                           H0.entries.conj().T),
        qthr=q.iq_thresholds, qcode=q.codebook,
        vthr=vqz.virtual.iq_thresholds, vcode=vqz.virtual.codebook,
        sthr=(lv[:-1] + lv[1:]) / 2.0, bitdist=bitdist, sigma2=sigma2)


def time_kernel(backend, name, a, fb, repeats):
    if name == "zf":
        call = lambda: backend.ber_zf(fb.sym_idx, fb.crot, fb.noise,
                                      a["sigma2"], a["mean_table"], a["w0"],
                                      a["qthr"], a["qcode"], a["sthr"],
                                      a["bitdist"])
    elif name == "ml":
        call = lambda: backend.ber_ml(fb.sym_idx, fb.crot, fb.noise,
                                      a["sigma2"], a["mean_table"],
                                      a["qthr"], a["bitdist"])
    else:
        call = lambda: backend.ber_vq(fb.sym_idx, fb.crot, fb.noise,
                                      a["sigma2"], a["mean_table"], a["w0"],
                                      a["qthr"], a["vthr"], a["vcode"],
                                      a["sthr"], a["bitdist"])
    errs = call()  # warm up and capture the count
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        call()
        best = min(best, time.perf_counter() - t0)
    return errs, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=20000)
    ap.add_argument("--n", type=int, default=4, choices=(2, 4))
    ap.add_argument("--snr-db", type=float, default=10.0)
    ap.add_argument("--sectors", type=int, default=4,
                    help="per-axis ADC resolution S")
    ap.add_argument("--seed", type=int, default=12345)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    c = make_constellation("qpsk")
    sigma2 = 10 ** (-args.snr_db / 10.0)
    a = build_args(args.n, math.pi / 2, sigma2, args.sectors, c)
    fb = qrng.frame_inputs(args.seed, 0, args.frames, args.n, c.size)

    print(f"frames={args.frames} n={args.n} snr={args.snr_db:g} dB "
          f"S={args.sectors}")
    print(f"{'kernel':<6} {'backend':<10} {'bit errs':>9} "
          f"{'total s':>9} {'us/frame':>9}")
    for name in ("zf", "ml", "vq"):
        rows = {}
        for bname in ("reference", "fast"):
            errs, dt_s = time_kernel(get_backend(bname), name, a, fb,
                                     args.repeats)
            rows[bname] = (errs, dt_s)
            print(f"{name:<6} {bname:<10} {errs:>9d} {dt_s:>9.3f} "
                  f"{1e6 * dt_s / args.frames:>9.2f}")
        ratio = rows["reference"][1] / rows["fast"][1]
        match = "agree" if rows["reference"][0] == rows["fast"][0] \
            else "MISMATCH"
        print(f"{name:<6} speedup x{ratio:.1f}, counts {match}")


if __name__ == "__main__":
    main()
