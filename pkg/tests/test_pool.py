import threading
import time

from rotopat.pool import default_threads, map_concurrent, set_default_threads


def test_order_preserved_under_concurrency():
    def slow(x):
        time.sleep(0.01 * (5 - x))
        return x * x

    assert map_concurrent(slow, range(5), threads=4) == [0, 1, 4, 9, 16]


def test_single_thread_runs_inline():
    seen = []
    assert map_concurrent(lambda x: seen.append(threading.get_ident()) or x, [1, 2, 3], threads=1) == [1, 2, 3]
    assert set(seen) == {threading.get_ident()}


def test_default_threads_override():
    assert default_threads() >= 1
    set_default_threads(3)
    try:
        assert default_threads() == 3
    finally:
        set_default_threads(None)
    assert map_concurrent(str, []) == []
