import numpy as np
import pytest
from scipy import stats

from hitting_times.rng import RngStream, fill_uniforms, philox4x32, split_seed

U = np.uint64


# Known-answer vectors of the Philox4x32-10 reference implementation.
@pytest.mark.parametrize(
    "ctr,key,expected",
    [
        ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
        ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
        (
            (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
            (0xA4093822, 0x299F31D0),
            (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
        ),
    ],
)
def test_philox_known_answers(ctr, key, expected):
    out = philox4x32(*(U(c) for c in ctr), *(U(k) for k in key))
    assert tuple(int(x) for x in out) == expected


def test_stream_is_pure_function_of_seed_and_path():
    a = RngStream(123, 7).uniforms(1000)
    b = RngStream(123, 7).uniforms(1000)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, RngStream(123, 8).uniforms(1000))
    assert not np.array_equal(a, RngStream(124, 7).uniforms(1000))
    assert not np.array_equal(a, RngStream(123, 7, substream=1).uniforms(1000))


def test_chunked_reads_match_bulk_read():
    bulk = RngStream(5, 3).uniforms(300)
    s = RngStream(5, 3)
    parts = [s.uniform() for _ in range(3)] + list(s.uniforms(97)) + list(s.uniforms(200))
    np.testing.assert_array_equal(bulk, parts)
    assert s.position == 300


def test_values_in_open_unit_interval_and_uniform():
    x = RngStream(2024, 0).uniforms(200_000)
    assert x.min() > 0.0 and x.max() < 1.0
    assert stats.kstest(x, "uniform").pvalue > 1e-3


def test_streams_of_neighbouring_paths_uncorrelated():
    a = RngStream(99, 0).uniforms(100_000)
    b = RngStream(99, 1).uniforms(100_000)
    # sd of the sample correlation is 1/sqrt(n) ~ 0.0032
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.015


def test_block_layout_uses_64_bit_seed():
    k0, k1 = split_seed(2**40 + 5)
    assert int(k0) == 5 and int(k1) == 2**8
    with pytest.raises(ValueError):
        split_seed(-1)


def test_fill_matches_cipher_output():
    out = np.empty(2)
    k0, k1 = split_seed(17)
    fill_uniforms(out, k0, k1, 3, 0, 0)
    x = philox4x32(U(0), U(0), U(3), U(0), k0, k1)
    top = ((int(x[0]) << 32) | int(x[1])) >> 11
    assert out[0] == top * 2.0**-53
