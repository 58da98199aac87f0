"""Frame-indexed random streams: worker-layout independence and moments."""

import math

import numpy as np
import pytest

from qlos import rng


def test_chunking_is_bit_identical():
    whole = rng.frame_inputs(7, 0, 100, 4, 4)
    a = rng.frame_inputs(7, 0, 37, 4, 4)
    b = rng.frame_inputs(7, 37, 63, 4, 4)
    assert np.array_equal(whole.sym_idx, np.vstack([a.sym_idx, b.sym_idx]))
    assert np.array_equal(whole.phi, np.concatenate([a.phi, b.phi]))
    assert np.array_equal(whole.crot, np.concatenate([a.crot, b.crot]))
    assert np.array_equal(whole.noise, np.vstack([a.noise, b.noise]))


def test_advance_matches_sequential_generation():
    # independent route: draw 16*(k+1) words sequentially, take the last 16
    k = 5
    seq = np.random.Generator(np.random.Philox(key=123)).random((k + 1, 16))
    direct = rng.frame_uniforms(123, k, 1)
    assert np.array_equal(direct[0], seq[k])


def test_seed_and_frame_sensitivity():
    a = rng.frame_uniforms(1, 0, 4)
    b = rng.frame_uniforms(2, 0, 4)
    c = rng.frame_uniforms(1, 1, 4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a[1:], c[:3])


def test_symbol_indices_uniform():
    blk = rng.frame_inputs(11, 0, 10**5, 4, 4)
    counts = np.bincount(blk.sym_idx.reshape(-1), minlength=4)
    n = blk.sym_idx.size
    sigma = math.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(counts - n / 4) < 5 * sigma)
    blk16 = rng.frame_inputs(11, 0, 10**4, 4, 16)
    assert blk16.sym_idx.min() >= 0 and blk16.sym_idx.max() <= 15


def test_phase_and_rotation():
    blk = rng.frame_inputs(3, 0, 10**4, 2, 4)
    assert np.all((0 <= blk.phi) & (blk.phi < 2 * math.pi))
    assert np.array_equal(blk.crot, np.cos(blk.phi) - 1j * np.sin(blk.phi))
    assert np.allclose(np.abs(blk.crot), 1.0, atol=1e-15)


def test_noise_moments():
    blk = rng.frame_inputs(5, 0, 2 * 10**5, 4, 4)
    z = blk.noise.reshape(-1)
    # E z = 0, E|z|^2 = 1, |z|^2 ~ Exp(1) so std(|z|^2) = 1
    assert abs(z.mean()) < 5 / math.sqrt(2 * z.size)
    assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 5 / math.sqrt(z.size)
    # real/imag parts each variance 1/2
    assert abs(np.var(z.real) - 0.5) < 0.01
    assert abs(np.var(z.imag) - 0.5) < 0.01


def test_layout_is_stream_count_stable():
    four = rng.frame_inputs(9, 2, 50, 4, 4)
    two = rng.frame_inputs(9, 2, 50, 2, 4)
    assert np.array_equal(four.sym_idx[:, :2], two.sym_idx)
    assert np.array_equal(four.noise[:, :2], two.noise)
    assert np.array_equal(four.phi, two.phi)


def test_rejects_bad_arguments():
    with pytest.raises(ValueError):
        rng.frame_inputs(0, 0, 10, 5, 4)
    with pytest.raises(ValueError):
        rng.frame_inputs(0, 0, 10, 2, 12)
    with pytest.raises(ValueError):
        rng.frame_uniforms(0, -1, 10)
