import numpy as np

from hjjumps.utils import ordered_map, row_norms, thread_count


def test_thread_count_default(monkeypatch):
    monkeypatch.delenv("HJJ_THREADS", raising=False)
    assert thread_count() == 1


def test_thread_count_from_env(monkeypatch):
    monkeypatch.setenv("HJJ_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("HJJ_THREADS", "not-a-number")
    assert thread_count() == 1
    monkeypatch.setenv("HJJ_THREADS", "0")
    assert thread_count() == 1


def test_ordered_map_preserves_order(monkeypatch):
    items = list(range(20))
    monkeypatch.setenv("HJJ_THREADS", "4")
    assert ordered_map(lambda v: v * v, items) == [v * v for v in items]
    monkeypatch.setenv("HJJ_THREADS", "1")
    assert ordered_map(lambda v: v * v, items) == [v * v for v in items]


def test_row_norms_shapes():
    arr = np.array([[3.0, 4.0], [0.0, 0.0]])
    np.testing.assert_allclose(row_norms(arr), [5.0, 0.0])
    assert row_norms(np.array([3.0, 4.0])) == 5.0
