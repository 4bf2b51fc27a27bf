# 翻译缓存: 只存放慢速后端的译文, 容量满时淘汰最近最少使用的条目
import asyncio
import logging
from collections import Counter, OrderedDict
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

from logger.logger import get_logger
from translators.clock import Clock, VirtualClock


@dataclass
class CacheItem:
    """缓存项: 译文和写入时刻(虚拟时间或墙钟毫秒)"""
    value: str
    inserted_at: float


class LRUCache:
    """
    LRU(最近最少使用)缓存

    读写都在同一把异步锁内完成, 所以同一个键的写入是原子的, 后写入者生效
    """

    def __init__(self,
                 capacity: int = 100_000,  # 缓存容量
                 clock: Optional[Clock] = None,  # 用于记录写入时刻
                 logger: Optional[logging.Logger] = None,
                 track_evictions: bool = False):  # 按键记录淘汰次数, 内存随淘汰过的不同键增长
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.cache: "OrderedDict[str, CacheItem]" = OrderedDict()
        self.capacity = capacity
        self.clock = clock or VirtualClock()
        self._lock = asyncio.Lock()
        self.logger = logger or get_logger(__name__)
        self._stats = {
            'hits': 0,
            'misses': 0,
            'evictions': 0,
            'writes': 0,
        }
        self.evicted: Optional[Counter] = Counter() if track_evictions else None

    def __len__(self) -> int:
        return len(self.cache)

    def __contains__(self, key: str) -> bool:
        return key in self.cache

    async def get(self, key: str) -> Optional[str]:
        """
        获取缓存值
        :param key: 规范化后的查询
        :return: 译文, 不存在时返回None
        """
        async with self._lock:
            item = self.cache.get(key)
            if item is None:
                self._stats['misses'] += 1
                self.logger.debug(f"Cache miss for key: {key}")
                return None

            self._stats['hits'] += 1
            self.logger.debug(f"Cache hit for key: {key}")
            # 将访问的项移到末尾(最近使用)
            self.cache.move_to_end(key)
            return item.value

    async def set(self, key: str, value: str):
        """
        写入缓存; 键已存在时覆盖并移到末尾,
        否则在容量已满时先淘汰最旧的项
        """
        async with self._lock:
            self._put(key, value)

    def _put(self, key: str, value: str):
        if key in self.cache:
            self.cache.move_to_end(key)
        else:
            while len(self.cache) >= self.capacity:
                old_key, _ = self.cache.popitem(last=False)
                self._stats['evictions'] += 1
                if self.evicted is not None:
                    self.evicted[old_key] += 1
                self.logger.debug(f"Cache evicted key: {old_key}")
        self.cache[key] = CacheItem(value, self.clock.now())
        self._stats['writes'] += 1

    def peek(self, key: str) -> Optional[str]:
        """只读查看, 不影响LRU顺序和统计"""
        item = self.cache.get(key)
        return item.value if item else None

    def items(self) -> Iterator[Tuple[str, str]]:
        """按LRU顺序(最旧的在前)遍历 (query, translation)"""
        for key, item in self.cache.items():
            yield key, item.value

    def get_stats(self) -> dict:
        """获取缓存统计信息"""
        total = self._stats['hits'] + self._stats['misses']
        return {
            'size': len(self.cache),
            'capacity': self.capacity,
            **self._stats,
            'hit_rate': self._stats['hits'] / total if total else 0.0,
        }
