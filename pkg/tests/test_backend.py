import numpy as np
import pytest

from ranklab.backend import (
    generator, get_threads, keyed_gumbel, keyed_uniform, parallel_map, set_threads, stream_key,
)
from ranklab.src.tree_util import block_slices, flatten_blocks, unflatten_blocks


@pytest.fixture(autouse=True)
def _restore_threads():
    yield
    set_threads(None)


def test_set_threads_roundtrip():
    set_threads(3)
    assert get_threads() == 3
    set_threads(None)
    assert get_threads() >= 1


def test_set_threads_rejects_zero():
    with pytest.raises(ValueError):
        set_threads(0)


def test_env_fallback(monkeypatch):
    set_threads(None)
    monkeypatch.setenv("RANKLAB_THREADS", "2")
    assert get_threads() == 2


@pytest.mark.parametrize("threads", [1, 4])
def test_parallel_map_keeps_order(threads):
    set_threads(threads)
    assert parallel_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


def test_stream_key_is_stable():
    assert stream_key(5) == 5
    assert stream_key("s000001-0001") == stream_key("s000001-0001")
    assert stream_key("a") != stream_key("b")


def test_generator_depends_on_keys_only():
    a = generator(7, "searches", 3).uniform(size=5)
    b = generator(7, "searches", 3).uniform(size=5)
    c = generator(7, "searches", 4).uniform(size=5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_keyed_draws_are_order_free():
    keys = np.arange(1000, dtype=np.uint64)
    full = keyed_uniform(3, "click", keys)
    part = keyed_uniform(3, "click", keys[::-1])[::-1]
    np.testing.assert_array_equal(full, part)
    assert np.all((full > 0) & (full < 1))


def test_keyed_gumbel_moments():
    g = keyed_gumbel(11, "test", np.arange(200_000, dtype=np.uint64))
    assert g.mean() == pytest.approx(np.euler_gamma, abs=0.01)
    assert g.var() == pytest.approx(np.pi ** 2 / 6, abs=0.03)


def test_blocks_roundtrip():
    tree = {"beta1": np.array([1.0, 2.0]), "beta2": np.array([3.0]), "beta_xz": np.array([4.0, 5.0])}
    vec, treedef = flatten_blocks(tree)
    np.testing.assert_array_equal(vec, [1, 2, 3, 4, 5])
    assert block_slices(treedef)["beta_xz"] == slice(3, 5)
    back = unflatten_blocks(vec * 2, treedef)
    np.testing.assert_array_equal(back["beta2"], [6.0])


def test_unflatten_size_mismatch():
    _, treedef = flatten_blocks({"a": np.zeros(3)})
    with pytest.raises(ValueError):
        unflatten_blocks(np.zeros(2), treedef)
