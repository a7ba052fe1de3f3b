import numpy as np
import pytest

from hsssi.parallel import blocks, map_blocks, worker_count
from hsssi.sampling import RngSpec


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("HSSSI_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("HSSSI_THREADS", "x")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.delenv("HSSSI_THREADS")
    assert worker_count() >= 1


def test_blocks_cover_range():
    for n, w in ((10, 3), (2, 8), (0, 4), (7, 1)):
        bl = blocks(n, w)
        assert sum(c for _, c in bl) == n
        assert all(a == sum(c for _, c in bl[:i]) for i, (a, _) in enumerate(bl))


def _draw(start, count):
    rng = RngSpec(9)
    return np.array([rng.child(k).generator().standard_normal(3) for k in range(start, start + count)])


def test_map_blocks_bitwise_independent_of_workers():
    ref = map_blocks(_draw, 17, workers=1)
    for w in (2, 5, 40):
        assert map_blocks(_draw, 17, workers=w).tobytes() == ref.tobytes()


def test_map_blocks_dict():
    out = map_blocks(lambda s, c: {"a": np.arange(s, s + c), "b": -np.arange(s, s + c)}, 9, workers=4)
    assert np.array_equal(out["a"], np.arange(9)) and np.array_equal(out["b"], -np.arange(9))
