import asyncio

import pytest

from cache.lru_cache import LRUCache
from cache.snapshot import restore_cache, snapshot_cache
from errors import CorruptSnapshot
from translators.clock import VirtualClock


async def test_get_set():
    cache = LRUCache(capacity=2)
    assert await cache.get("dítě rýma") is None
    await cache.set("dítě rýma", "runny nose")
    assert await cache.get("dítě rýma") == "runny nose"
    stats = cache.get_stats()
    assert (stats["hits"], stats["misses"], stats["size"]) == (1, 1, 1)


async def test_evicts_least_recently_used():
    cache = LRUCache(capacity=2, track_evictions=True)
    await cache.set("a", "1")
    await cache.set("b", "2")
    await cache.get("a")
    await cache.set("c", "3")
    assert "b" not in cache
    assert list(cache.items()) == [("a", "1"), ("c", "3")]
    assert cache.get_stats()["evictions"] == 1
    assert cache.evicted == {"b": 1}


async def test_evictions_not_tracked_by_default():
    cache = LRUCache(capacity=1)
    for i in range(100):
        await cache.set(f"q{i}", "t")
    assert cache.evicted is None
    assert cache.get_stats()["evictions"] == 99


async def test_overwrite_does_not_evict():
    cache = LRUCache(capacity=2)
    await cache.set("a", "1")
    await cache.set("b", "2")
    await cache.set("a", "x")
    assert len(cache) == 2 and cache.peek("a") == "x"
    assert cache.get_stats()["evictions"] == 0


async def test_inserted_at_from_clock():
    clock = VirtualClock(42)
    cache = LRUCache(capacity=1, clock=clock)
    await cache.set("a", "1")
    assert cache.cache["a"].inserted_at == 42


async def test_concurrent_writers_last_write_wins():
    cache = LRUCache(capacity=10)
    await asyncio.gather(*(cache.set("k", str(i)) for i in range(20)))
    assert cache.peek("k") == "19"
    assert len(cache) == 1


def test_invalid_capacity():
    with pytest.raises(ValueError):
        LRUCache(capacity=0)


class TestSnapshot:
    async def test_empty_round_trip(self, tmp_path):
        path = tmp_path / "cache.tsv"
        assert snapshot_cache(LRUCache(), path) == 0
        assert path.read_bytes() == b""
        assert len(restore_cache(path)) == 0

    async def test_round_trip_keeps_mapping_and_order(self, tmp_path):
        cache = LRUCache(capacity=5)
        for q, t in [("dítě rýma", "runny nose"), ("horečka", "fever"), ("kašel", "cough")]:
            await cache.set(q, t)
        await cache.get("dítě rýma")
        path = tmp_path / "cache.tsv"
        snapshot_cache(cache, path)
        restored = restore_cache(path, capacity=5, clock=VirtualClock(9))
        assert list(restored.items()) == list(cache.items())
        assert all(item.inserted_at == 9 for item in restored.cache.values())

    def test_truncated(self, tmp_path):
        path = tmp_path / "cache.tsv"
        path.write_text("a\t1\nb\t2", encoding="utf-8")
        with pytest.raises(CorruptSnapshot):
            restore_cache(path)

    @pytest.mark.parametrize("content", [b"a\n", b"a\t1\t2\n", b"\t1\n", b"a\t\n", b"a\t\xff\n"])
    def test_malformed(self, tmp_path, content):
        path = tmp_path / "cache.tsv"
        path.write_bytes(content)
        with pytest.raises(CorruptSnapshot):
            restore_cache(path)

    def test_missing(self, tmp_path):
        with pytest.raises(CorruptSnapshot):
            restore_cache(tmp_path / "missing.tsv")
