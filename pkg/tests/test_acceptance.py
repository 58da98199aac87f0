"""Release acceptance suite: one gate per test, run top to bottom.

Gates 1-4 pin the information-theoretic behavior (closed-form channel
identities, quantized-MI floors and design comparisons), gates 5-8 pin
the Monte Carlo detection results (floors, crossings, range and
resolution robustness), gate 9 pins the numerical kernels everything
above sits on.  Every statistical gate runs the deterministic frame
engine with a fixed master seed, so the numbers checked here are exact
reruns, not flaky estimates.  Each gate also asserts its own wall-clock
budget.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from qlos import harness
from qlos.channel import los_channel
from qlos.constellation import make_constellation, vector_indices
from qlos.infotheory import (mi_quantized, noiseless_confusability,
                             transition_table)
from qlos.quantizer import (ap_with_thresholds, design_equal_prob_ap,
                            design_equal_prob_iq, design_mmsqe,
                            design_phase_only, quantize_index)
from qlos.stats import (GaussianApprox, Rect, Sector, cell_centroid,
                        polar_prob, rect_prob, std_normal_cdf,
                        std_normal_quantile)

QPSK = make_constellation("qpsk")
MASTER_SEED = 2026


@contextmanager
def budget(seconds):
    t0 = time.perf_counter()
    yield
    elapsed = time.perf_counter() - t0
    assert elapsed < seconds, f"took {elapsed:.1f}s, budget {seconds}s"


def offset_grid(count):
    """count points in (0, 2pi) avoiding 0 and multiples of pi/2."""
    return (np.arange(count) + 0.5) * (2.0 * np.pi / count)


def wrapped(delta):
    """Angle difference folded to (-pi, pi]."""
    return np.angle(np.exp(1j * np.asarray(delta)))


def ber_rows(config):
    cfg = harness.parse_config(json.dumps(config))
    result = harness.run_sweep(cfg)
    return [dict(zip(result.columns, row)) for row in result.rows]


def crossing_db(points, level=1e-3):
    """Log-linear interpolation of the first downward crossing of level."""
    for (s0, b0), (s1, b1) in zip(points, points[1:]):
        if b0 >= level > b1:
            frac = (math.log(b0) - math.log(level)) / (math.log(b0)
                                                       - math.log(b1))
            return s0 + (s1 - s0) * frac
    raise AssertionError(f"no {level:g} crossing along {points}")


def test_01_swap_pair_phase_identities():
    # 2x2 noiseless outputs for the ambiguous QPSK input pairs: swapping
    # the two symbols of (x, jx) leaves both output phases unchanged
    # (mod pi depending on the coupling branch) while the amplitudes
    # trade antennas; and across all 16 inputs the per-antenna output
    # phases differ by multiples of pi/4, at most 8 distinct values.
    with budget(10):
        thetas = offset_grid(64)
        phis = offset_grid(64)
        entries = np.array([[los_channel(2, t, p).entries for p in phis]
                            for t in thetas])  # (64, 64, 2, 2)
        tgrid = thetas[:, None]
        near = (tgrid < np.pi / 2) | (tgrid > 3 * np.pi / 2)  # theta in
        # (-pi/2, pi/2) mod 2pi; the offset grid never hits the pi/2
        # boundaries where one output amplitude vanishes
        tol = 1e-9

        def outputs(x):
            return np.einsum("tpik,k->tpi", entries, x)

        for i in range(1, 5):
            x1 = np.exp(1j * np.pi * (2 * i - 1) / 4)
            base = outputs(np.array([x1, 1j * x1]))
            swap = outputs(np.array([1j * x1, x1]))
            neg = outputs(np.array([-1j * x1, -x1]))
            pb = np.angle(base)
            ps = np.angle(swap)
            pn = np.angle(neg)
            # antenna equality: offset 0 on the near branch, pi opposite
            off = np.where(near, 0.0, np.pi)
            for ph in (pb, ps, pn):
                assert np.max(np.abs(wrapped(ph[..., 0] - ph[..., 1]
                                             - off))) < tol
            # cross-pair equality and the pi flip for the negated pair
            assert np.max(np.abs(wrapped(pb[..., 0] - ps[..., 0]
                                         - off))) < tol
            assert np.max(np.abs(wrapped(pb[..., 0] - pn[..., 0] - off
                                         - np.pi))) < tol
            # amplitudes swap antennas under the symbol swap
            assert np.max(np.abs(np.abs(base) - np.abs(swap[..., ::-1]))) \
                < tol

        # full input set: per-antenna phase differences on a pi/4 lattice
        vecs = QPSK.points[vector_indices(QPSK.size, 2)]  # (16, 2)
        y = np.einsum("tpik,xk->tpxi", entries, vecs)
        phases = np.angle(y)
        diffs = phases[:, :, :, None, :] - phases[:, :, None, :, :]
        steps = np.round(diffs / (np.pi / 4))
        assert np.max(np.abs(diffs - steps * (np.pi / 4))) < tol
        classes = np.mod(steps.astype(np.int64), 8)
        distinct = max(np.unique(classes[t, p, :, :, i]).size
                       for t in (0, 13, 47) for p in (0, 21, 50)
                       for i in (0, 1))
        assert distinct <= 8


def test_02_phase_only_mi_floor():
    # Phase-only quantization saturates below the 4-bit ceiling: with 8
    # sectors the averaged MI lands on the 3.5-bit floor predicted by
    # counting noiseless output collisions, and doubling to 16 sectors
    # buys nothing asymptotically.  theta = 5pi/12 keeps every noiseless
    # output away from zero amplitude where the phase is undefined.
    with budget(120):
        theta = 5 * np.pi / 12
        sigma2 = 1e-4  # 40 dB
        q8 = design_phase_only(8)
        q16 = design_phase_only(16)
        res = mi_quantized(q8, theta, sigma2, QPSK, "grid:256", 2)
        assert abs(res.mi_bits - 3.5) <= 0.02

        # independent route: noiseless confusability classes give the
        # high-SNR asymptote directly, no transition matrices involved
        asym = {}
        for label, q in (("m8", q8), ("m16", q16)):
            vals = []
            for phi in offset_grid(64):
                r = noiseless_confusability(q, theta, phi, QPSK, 2)
                assert not r.boundary_degenerate
                vals.append(r.asymptotic_mi_bits)
            asym[label] = float(np.mean(vals))
        assert abs(asym["m8"] - 3.5) <= 0.02
        assert abs(asym["m16"] - asym["m8"]) <= 0.02
        assert abs(res.mi_bits - asym["m8"]) <= 0.02


def test_03_amplitude_ring_recovers_full_rate():
    # One amplitude threshold at the array gain splits the swap-pair
    # collisions: 2 rings x 8 sectors reaches the full 4 bits at 40 dB
    # for every coupling phase in a 16-point grid.
    with budget(120):
        sigma2 = 1e-4
        q = ap_with_thresholds(8, [1.0], sigma2)
        for theta in offset_grid(16):
            res = mi_quantized(q, theta, sigma2, QPSK, "grid:64", 2)
            assert res.mi_bits >= 3.98, f"theta={theta:.4f}: {res.mi_bits}"


def test_04_quantizer_family_comparison_4x4():
    # 4x4 at the orthogonal coupling: the equal-probability 4-level I/Q
    # design reaches the 8-bit ceiling by 16 dB while both MMSQE designs
    # and the 2x8 equal-probability amplitude/phase design stay capped
    # at 20 dB.  The enumerations are exact up to the 64-point common
    # phase grid (converged to 1e-5 against 256 points): the capped
    # schemes land at 7.903, 7.934 and 7.946 bits, inside the 0.05 band
    # around the 7.9 mark, while the I/Q design clears it outright.
    with budget(600):
        theta = np.pi / 2
        s16 = 10.0 ** -1.6
        s20 = 10.0 ** -2.0
        tol = 0.05

        def mi(q, sigma2):
            return mi_quantized(q, theta, sigma2, QPSK, "grid:64", 4).mi_bits

        iq_16db = mi(design_equal_prob_iq(4, s16), s16)
        mmsqe_iq = mi(design_mmsqe("iq", s20, S=4), s20)
        eqprob_ap = mi(design_equal_prob_ap(2, 8, s20), s20)
        mmsqe_ap = mi(design_mmsqe("ap", s20, K=2, M=8), s20)

        assert iq_16db >= 7.9, f"eqprob-iq at 16 dB: {iq_16db}"
        for label, val in (("mmsqe-iq", mmsqe_iq), ("eqprob-ap", eqprob_ap),
                           ("mmsqe-ap", mmsqe_ap)):
            assert val < 7.9 + tol, f"{label} at 20 dB: {val}"
        # the winner at 16 dB beats every capped scheme at 20 dB
        assert iq_16db > max(mmsqe_iq, eqprob_ap, mmsqe_ap)


def test_05_zf_tracks_ml_derotated():
    # Derotated case (common phase pinned to zero): the cheap filter-
    # and-slice detector stays within a factor 2 of exact quantized ML
    # across the waterfall region.  The two all but coincide here
    # (measured ratios 0.9987-0.9999), and either may sit a hair above
    # the other: ML minimizes vector-error probability, not bit-error
    # probability, so the gate is the two-sided band, not an ordering.
    with budget(900):
        rows = ber_rows({
            "experiment": "ber_sweep", "modulation": "qpsk",
            "array_size": 4, "theta_rad": np.pi / 2,
            "phi_policy": "fixed:0", "snr_db": [6, 8, 10, 12, 14],
            "detector": ["zf", "ml"],
            "quantizer": {"family": "iq", "metric": "eqprob", "bins": 4},
            "frames": 1_000_000, "early_stop": False,
            "master_seed": MASTER_SEED})
        ber = {(r["detector"], r["snr_db"]): r["ber"] for r in rows}
        for snr in (6.0, 8.0, 10.0, 12.0, 14.0):
            zf, ml = ber[("zf", snr)], ber[("ml", snr)]
            assert ml > 0
            assert 0.5 * ml <= zf <= 2.0 * ml, \
                f"{snr} dB: zf {zf} vs ml {ml}"


def test_06_phi_averaged_floors_and_crossing_gap():
    # Random common phase: filter-and-slice hits an error floor above
    # 1e-3, the virtual-quantization detector floors near 1e-4, and its
    # 1e-3 crossing sits 4-7 dB above exact quantized ML's.
    with budget(7200):
        base = {"experiment": "ber_sweep", "modulation": "qpsk",
                "array_size": 4, "theta_rad": np.pi / 2,
                "phi_policy": "uniform",
                "quantizer": {"family": "iq", "metric": "eqprob",
                              "bins": 4},
                "master_seed": MASTER_SEED}

        zf = ber_rows(dict(base, snr_db=[40.0], detector=["zf"],
                           frames=1_000_000, early_stop=True))
        assert zf[0]["ber"] > 1e-3, f"zf floor {zf[0]['ber']}"

        ml = ber_rows(dict(base, snr_db=[12.0, 14.0, 16.0, 18.0],
                           detector=["ml"], frames=300_000,
                           early_stop=False))
        vq = ber_rows(dict(base, snr_db=[16.0, 18.0, 20.0, 22.0, 24.0],
                           detector=["vq"], frames=300_000,
                           early_stop=False))
        ml_cross = crossing_db([(r["snr_db"], r["ber"]) for r in ml])
        vq_cross = crossing_db([(r["snr_db"], r["ber"]) for r in vq])
        gap = vq_cross - ml_cross
        assert 4.0 <= gap <= 7.0, (f"ml {ml_cross:.2f} dB, vq "
                                   f"{vq_cross:.2f} dB, gap {gap:.2f}")

        floor = ber_rows(dict(base, snr_db=[40.0], detector=["vq"],
                              frames=20_000_000, early_stop=False))
        assert 3e-5 <= floor[0]["ber"] <= 3e-4, \
            f"vq floor {floor[0]['ber']}"


def test_07_range_mismatch_robustness():
    # Quantizer and geometry tuned for the nominal range; sweep the
    # true range over +-20%.  Virtual quantization stays below filter-
    # and-slice everywhere and holds 1e-3 over the central half.
    with budget(3600):
        rows = ber_rows({
            "experiment": "range_sweep", "modulation": "qpsk",
            "array_size": 4,
            "geometry": {"range_nominal_m": 100.0, "carrier_ghz": 140.0},
            "snr_db": [40.0], "detector": ["zf", "vq"],
            "quantizer": {"family": "iq", "metric": "eqprob", "bins": 4},
            "frames": 1_000_000, "early_stop": True,
            "master_seed": MASTER_SEED})
        by_det = {}
        for r in rows:
            by_det.setdefault(r["detector"], []).append(r)
        ratios = harness.RANGE_RATIOS
        assert len(by_det["zf"]) == len(by_det["vq"]) == len(ratios) == 21
        for k, (z, v) in enumerate(zip(by_det["zf"], by_det["vq"])):
            assert v["ber"] < z["ber"], \
                f"ratio {ratios[k]:.2f}: vq {v['ber']} vs zf {z['ber']}"
        for k in range(5, 16):  # central 11 points, 0.90..1.10
            v = by_det["vq"][k]
            assert v["ber"] <= 1e-3, \
                f"ratio {ratios[k]:.2f}: vq {v['ber']}"


def test_08_qam16_resolution_requirements():
    # Denser constellation needs both the extra physical bit and the
    # virtual refinement: 4 bits/axis with virtual quantization clears
    # 1e-3 by 22 dB, while 4-bit filter-and-slice and 3-bit virtual
    # quantization are still above 1e-3 at 30 dB.
    with budget(7200):
        base = {"experiment": "ber_sweep", "modulation": "qam16",
                "array_size": 4, "theta_rad": np.pi / 2,
                "phi_policy": "uniform", "frames": 1_000_000,
                "early_stop": True, "master_seed": MASTER_SEED}

        def one(detector, bins, snr):
            rows = ber_rows(dict(
                base, detector=[detector], snr_db=[snr],
                quantizer={"family": "iq", "metric": "eqprob",
                           "bins": bins}))
            return rows[0]["ber"]

        assert one("vq", 16, 22.0) <= 1e-3
        assert one("zf", 16, 30.0) > 1e-3
        assert one("vq", 8, 30.0) > 1e-3


def test_09_numerical_kernel_oracles():
    # The scalar kernels everything is built on, checked against
    # independent closed forms and raw Monte Carlo.
    with budget(300):
        # Gaussian cdf/quantile are inverses to 1e-10.  The x-direction
        # roundtrip amplifies the cdf's ulp by 1/pdf(x), so past |x|~5
        # double precision itself cannot hold 1e-10; 5 is the widest
        # honest range (measured 3e-11 there).
        x = np.linspace(-5.0, 5.0, 241)
        assert np.max(np.abs(std_normal_quantile(std_normal_cdf(x)) - x)) \
            < 1e-10
        p = np.linspace(1e-8, 1.0 - 1e-8, 1001)
        assert np.max(np.abs(std_normal_cdf(std_normal_quantile(p)) - p)) \
            < 1e-10

        # zero-mean annulus mass matches the Rayleigh closed form
        for st2 in (0.3, 1.0, 2.7):
            for a, b in ((0.0, 0.5), (0.5, 1.2), (1.2, np.inf)):
                closed = math.exp(-a * a / st2) - (
                    0.0 if np.isinf(b) else math.exp(-b * b / st2))
                got = polar_prob(0.0, st2, Sector(a, b, 0.0, 2 * np.pi))
                assert abs(got - closed) < 1e-9

        # transition tables vs 1e7-sample Monte Carlo, both families
        sigma2 = 0.1
        H = los_channel(2, 5 * np.pi / 12, 0.7)
        means = QPSK.points[vector_indices(QPSK.size, 2)] @ H.entries.T
        quantizers = (design_equal_prob_iq(4, sigma2),
                      ap_with_thresholds(8, [1.0], sigma2))
        tables = [transition_table(q, H, QPSK, sigma2) for q in quantizers]
        x_ids = (3, 9)
        n_mc = 10_000_000
        chunk = 1_000_000
        counts = {(qi, x, ant): np.zeros(tables[qi].p.shape[2], np.int64)
                  for qi in range(2) for x in x_ids for ant in (0, 1)}
        rng = np.random.default_rng(MASTER_SEED)
        scale = math.sqrt(sigma2 / 2.0)
        for _ in range(n_mc // chunk):
            noise = scale * (rng.standard_normal(chunk)
                             + 1j * rng.standard_normal(chunk))
            for qi, q in enumerate(quantizers):
                for x in x_ids:
                    for ant in (0, 1):
                        idx = quantize_index(q, means[x, ant] + noise)
                        counts[qi, x, ant] += np.bincount(
                            idx, minlength=tables[qi].p.shape[2])
        for (qi, x, ant), cnt in counts.items():
            model = tables[qi].p[ant, x]
            hat = cnt / n_mc
            se = np.sqrt(model * (1.0 - model) / n_mc)
            # 5/n floor: the normal band is meaningless for bins whose
            # expected count is a handful of samples
            tol = np.maximum(4.0 * se, 5.0 / n_mc)
            worst = np.max(np.abs(hat - model) - tol)
            assert worst <= 0, f"q{qi} x{x} ant{ant}: exceeds 4 SE"

        # partition centroids obey total expectation: probability-
        # weighted cell means reassemble the distribution mean
        mu = 0.3 - 0.2j
        var = 0.5
        edges = np.concatenate(([-np.inf],
                                design_equal_prob_iq(4, var).iq_thresholds,
                                [np.inf]))
        approx = GaussianApprox(mu, var)
        total_p = 0.0
        total_mean = 0.0 + 0.0j
        for i in range(4):
            for j in range(4):
                cell = Rect(edges[i], edges[i + 1], edges[j], edges[j + 1])
                pr = rect_prob(mu, var, cell)
                total_p += pr
                total_mean += pr * cell_centroid(approx, cell)
        assert abs(total_p - 1.0) < 1e-12
        assert abs(total_mean - mu) < 1e-8
