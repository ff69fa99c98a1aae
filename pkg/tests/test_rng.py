import numpy as np
import pytest

from pcid import specs
from pcid.engine import _StreamFiller, derive_stream, run_ensemble


def test_same_address_same_draws():
    a = derive_stream(42, 0, 0).generator().random(100)
    b = derive_stream(42, 0, 0).generator().random(100)
    assert np.array_equal(a, b)


def test_distinct_paths_differ():
    a = derive_stream(42, 0, 0).generator().random(100)
    b = derive_stream(42, 1, 0).generator().random(100)
    assert not np.array_equal(a, b)


def test_distinct_substreams_differ():
    a = derive_stream(42, 7, 0).generator().random(100)
    b = derive_stream(42, 7, 1).generator().random(100)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("addr_a,addr_b", [
    ((42, 0, 0), (42, 1, 0)),
    ((42, 0, 0), (42, 0, 1)),
    ((42, 5, 2), (42, 6, 2)),
    ((7, 0, 0), (7, 123456, 3)),
])
def test_streams_uncorrelated(addr_a, addr_b):
    n = 100_000
    a = derive_stream(*addr_a).generator().random(n)
    b = derive_stream(*addr_b).generator().random(n)
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) < 4.0 / np.sqrt(n)


@pytest.mark.parametrize("bad", [(-1, 0, 0), (2 ** 64, 0, 0), (0, -1, 0),
                                 (0, 2 ** 48, 0), (0, 0, -1), (0, 0, 2 ** 16)])
def test_address_validation(bad):
    with pytest.raises(ValueError):
        derive_stream(*bad)


def test_rekey_filler_matches_derive_stream():
    filler = _StreamFiller(97)
    for path, sub in [(0, 0), (11, 1), (4096, 2), (2 ** 40 + 3, 0)]:
        got = filler.rekey(path, sub).random(9)
        want = derive_stream(97, path, sub).generator().random(9)
        assert np.array_equal(got, want)


def test_thread_count_does_not_change_ensemble():
    spec = specs.UniformCoupledSpec()
    base = run_ensemble(spec, 64, 20, 42, threads=1)
    for threads in (2, 8):
        other = run_ensemble(spec, 64, 20, 42, threads=threads, chunk_paths=9)
        for key in base.arrays:
            assert np.array_equal(base.arrays[key], other.arrays[key]), key


def test_chunking_does_not_change_ensemble(rru_two_point_spec):
    base = run_ensemble(rru_two_point_spec, 50, 30, 5, chunk_paths=50)
    for chunk in (1, 7, 49):
        other = run_ensemble(rru_two_point_spec, 50, 30, 5, chunk_paths=chunk)
        for key in base.arrays:
            assert np.array_equal(base.arrays[key], other.arrays[key]), (key, chunk)
