import dataclasses
import math

import numpy as np
import pytest

import qlos.channel as ch
import qlos.detection as dt
import qlos.infotheory as it
import qlos.quantizer as qz
from qlos.constellation import make_constellation, vector_indices

QPSK = make_constellation("qpsk")
QAM16 = make_constellation("qam16")


def iq_context(n, theta, phi, sigma2, s=4, ml_table=False):
    H = ch.los_channel(n, theta, phi)
    q = qz.with_codebook(qz.design_equal_prob_iq(s, sigma2), sigma2)
    return dt.make_context(H, QPSK, q, sigma2, ml_table=ml_table)


def refined(q_physical, sigma2):
    vq = qz.refine(q_physical)
    return dataclasses.replace(vq, virtual=qz.with_codebook(vq.virtual, sigma2))


class TestContext:
    def test_zf_filter_inverts_channel(self):
        # quarter-offset grid keeps theta off the singular set (0 mod pi)
        for n in (2, 4):
            for theta in (np.arange(7) + 0.25) * 2.0 * np.pi / 7:
                ctx = iq_context(n, theta, 1.1, 0.01)
                assert np.allclose(ctx.zf_filter @ ctx.H.entries,
                                   np.eye(n), atol=1e-10)

    def test_unitary_case_reduces_to_hermitian(self):
        ctx = iq_context(4, math.pi / 2, 0.35, 0.01)
        assert np.allclose(ctx.zf_filter, ctx.H.entries.conj().T, atol=1e-12)

    def test_candidate_enumeration(self):
        ctx = iq_context(4, math.pi / 2, 0.0, 0.01, ml_table=True)
        assert ctx.candidates.shape == (256, 4)
        assert ctx.log_p.shape == (4, 256, 16)
        # antenna 0 most significant: second stream cycles fastest
        assert ctx.candidates[1].tolist() == [0, 0, 0, 1]

    def test_large_ml_table_is_gated(self):
        H = ch.los_channel(4, math.pi / 2, 0.0)
        q = qz.design_equal_prob_iq(16, 0.01)
        with pytest.raises(ValueError):
            dt.make_context(H, QAM16, q, 0.01, ml_table=True)
        ctx = dt.make_context(H, QAM16, q, 0.01)  # fine without the table
        assert ctx.log_p is None

    def test_bad_sigma2(self):
        H = ch.los_channel(2, 0.9, 0.0)
        q = qz.design_equal_prob_iq(4, 0.01)
        with pytest.raises(ValueError):
            dt.make_context(H, QPSK, q, 0.0)


class TestMlDetect:
    def test_noiseless_recovery(self):
        # all 16 inputs fall in distinct bin patterns at this (theta, phi)
        sigma2 = 1e-4
        ctx = iq_context(2, 5 * math.pi / 12, 0.7, sigma2, ml_table=True)
        r = it.noiseless_confusability(ctx.q, 5 * math.pi / 12, 0.7, QPSK, 2)
        assert all(len(g) == 1 for g in r.classes)
        for x, mean in enumerate(ctx.means):
            yq = qz.quantize_index(ctx.q, mean)
            assert dt.ml_detect(yq, ctx).tolist() == ctx.candidates[x].tolist()

    def test_swap_pair_tie_breaks_low(self):
        # swapping the pair (e^{j pi/4}, e^{j 3pi/4}) leaves both output
        # phases unchanged for theta in (0, pi/2), so a phase-only receiver
        # cannot separate vectors 7=(1,3) and 13=(3,1)
        sigma2 = 1e-4
        H = ch.los_channel(2, 0.4, 0.9)
        q = qz.design_phase_only(8)
        ctx = dt.make_context(H, QPSK, q, sigma2, ml_table=True)
        yq = qz.quantize_index(q, H.entries @ QPSK.points[[1, 3]])
        ll = ctx.log_p[np.arange(2), :, yq].sum(axis=0)
        assert abs(ll[7] - ll[13]) < 1e-9
        assert ll[7] > np.max(np.delete(ll, [7, 13])) + 1.0
        assert dt.ml_detect(yq, ctx).tolist() == [1, 3]

    def test_direct_path_matches_table(self):
        # H is symmetric and persymmetric, so a palindromic yq ties x with
        # reversed(x) exactly; sub-ulp rounding then differs between the two
        # computation paths. Those ties are legitimate either way; skip them.
        sigma2 = 10 ** (-0.8)
        ctx_t = iq_context(4, math.pi / 2, 1.3, sigma2, ml_table=True)
        ctx_d = dataclasses.replace(ctx_t, log_p=None)
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 50:
            y = ctx_t.means[rng.integers(256)] + np.sqrt(sigma2 / 2) * (
                rng.standard_normal(4) + 1j * rng.standard_normal(4))
            yq = qz.quantize_index(ctx_t.q, y)
            if np.array_equal(yq, yq[::-1]):
                continue
            assert dt.ml_detect(yq, ctx_t).tolist() == \
                dt.ml_detect(yq, ctx_d).tolist()
            checked += 1

    def test_direct_path_needs_iq(self):
        H = ch.los_channel(2, 0.4, 0.9)
        q = qz.design_phase_only(8)
        ctx = dt.make_context(H, QPSK, q, 0.01)
        with pytest.raises(ValueError):
            dt.ml_detect(np.array([0, 0]), ctx)

    def test_log_shift_invariance(self):
        # random table: no exact ties, so the argmax must survive a shift
        sigma2 = 0.05
        ctx = iq_context(2, 1.1, 0.4, sigma2, ml_table=True)
        rng = np.random.default_rng(11)
        table = rng.standard_normal(ctx.log_p.shape)
        base = dataclasses.replace(ctx, log_p=table)
        shifted = dataclasses.replace(ctx, log_p=table + 7.5)
        for _ in range(25):
            yq = rng.integers(0, 16, size=2)
            assert dt.ml_detect(yq, base).tolist() == \
                dt.ml_detect(yq, shifted).tolist()


class TestZfDetect:
    def test_noiseless_recovery_unitary(self):
        # fine quantizer: centroid error stays well inside the slicing margin
        sigma2 = 1e-4
        ctx = iq_context(2, math.pi / 2, 0.0, sigma2, s=8)
        for x, mean in enumerate(ctx.means):
            yq = qz.quantize_index(ctx.q, mean)
            assert dt.zf_detect(yq, ctx).tolist() == ctx.candidates[x].tolist()

    def test_requires_codebook(self):
        H = ch.los_channel(2, math.pi / 2, 0.0)
        q = qz.design_equal_prob_iq(4, 0.01)  # no codebook attached
        ctx = dt.make_context(H, QPSK, q, 0.01)
        with pytest.raises(ValueError):
            dt.zf_detect(np.array([0, 0]), ctx)

    def test_matches_manual_pipeline(self):
        sigma2 = 0.02
        ctx = iq_context(4, 1.2, 0.6, sigma2)
        rng = np.random.default_rng(3)
        for _ in range(40):
            yq = rng.integers(0, 16, size=4)
            xt = ctx.zf_filter @ ctx.codebook[yq]
            manual = [int(np.argmin(np.abs(QPSK.points - z) ** 2)) for z in xt]
            assert dt.zf_detect(yq, ctx).tolist() == manual


class TestCandidateSet:
    def test_refinement_counts(self):
        sigma2 = 0.01
        q = qz.design_equal_prob_iq(4, sigma2)
        vq = qz.refine(q)
        cs = dt.build_candidate_set(np.array([0, 5, 10, 15]), vq)
        assert all(len(p) == 4 for p in cs.per_antenna)
        assert cs.tuples.shape == (256, 4)

    def test_all_members_coarsen_back(self):
        sigma2 = 0.01
        vq = qz.refine(qz.design_equal_prob_iq(4, sigma2))
        rng = np.random.default_rng(7)
        for _ in range(10):
            yq = rng.integers(0, 16, size=4)
            cs = dt.build_candidate_set(yq, vq)
            assert np.all(vq.coarsen_map[cs.tuples] == yq[None, :])

    def test_size_is_constellation_independent(self):
        # 16QAM with an 8-level physical grid refines to the same 4^n
        sigma2 = 0.01
        vq = qz.refine(qz.design_equal_prob_iq(8, sigma2))
        cs = dt.build_candidate_set(np.array([0, 21, 42, 63]), vq)
        assert cs.tuples.shape == (256, 4)

    def test_ordering_antenna0_major(self):
        sigma2 = 0.01
        vq = qz.refine(qz.design_equal_prob_iq(4, sigma2))
        cs = dt.build_candidate_set(np.array([3, 9]), vq)
        assert cs.tuples.shape == (16, 2)
        # last antenna cycles fastest
        assert np.array_equal(cs.tuples[:4, 0], np.repeat(cs.per_antenna[0][0], 4))
        assert np.array_equal(cs.tuples[:4, 1], cs.per_antenna[1])


class TestVqDetect:
    def test_noiseless_consistency(self):
        # at theta=pi/2, phi=0 every bin pattern is unique, so the true
        # candidate scores zero and nothing else can
        sigma2 = 1e-6
        ctx = iq_context(4, math.pi / 2, 0.0, sigma2)
        vq = refined(ctx.q, sigma2)
        for x in range(0, 256, 7):
            yq = qz.quantize_index(ctx.q, ctx.means[x])
            assert dt.vq_detect(yq, ctx, vq).tolist() == \
                ctx.candidates[x].tolist()

    def test_slice_call_budget(self):
        sigma2 = 0.01
        ctx = iq_context(4, math.pi / 2, 0.9, sigma2)
        vq = refined(ctx.q, sigma2)
        dt.reset_slice_calls()
        dt.vq_detect(np.array([1, 2, 3, 4]), ctx, vq)
        assert dt.slice_call_count() == 256 * 4

    def test_deterministic(self):
        sigma2 = 0.05
        ctx = iq_context(4, 1.3, 2.2, sigma2)
        vq = refined(ctx.q, sigma2)
        rng = np.random.default_rng(19)
        for _ in range(5):
            yq = rng.integers(0, 16, size=4)
            a = dt.vq_detect(yq, ctx, vq)
            b = dt.vq_detect(yq, ctx, vq)
            assert a.tolist() == b.tolist()

    def test_requires_virtual_codebook(self):
        sigma2 = 0.01
        ctx = iq_context(2, 1.0, 0.0, sigma2)
        vq = qz.refine(ctx.q)  # codebook never attached
        with pytest.raises(ValueError):
            dt.vq_detect(np.array([0, 0]), ctx, vq)

    def test_rejects_mismatched_physical(self):
        sigma2 = 0.01
        ctx = iq_context(2, 1.0, 0.0, sigma2, s=4)
        vq = refined(qz.with_codebook(qz.design_equal_prob_iq(8, sigma2),
                                      sigma2), sigma2)
        with pytest.raises(ValueError):
            dt.vq_detect(np.array([0, 0]), ctx, vq)

    def test_16qam_vq_noiseless(self):
        sigma2 = 1e-6
        H = ch.los_channel(2, math.pi / 2, 0.0)
        q = qz.with_codebook(qz.design_equal_prob_iq(16, sigma2), sigma2)
        ctx = dt.make_context(H, QAM16, q, sigma2)
        vq = refined(ctx.q, sigma2)
        cand = vector_indices(16, 2)
        rng = np.random.default_rng(23)
        hits = 0
        for x in rng.choice(256, size=40, replace=False):
            mean = H.entries @ QAM16.points[cand[x]]
            yq = qz.quantize_index(q, mean)
            if dt.vq_detect(yq, ctx, vq).tolist() == cand[x].tolist():
                hits += 1
        assert hits == 40
