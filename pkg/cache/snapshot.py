"""
缓存快照: UTF-8 TSV, 每行 query \\t translation, 按LRU顺序(最旧的在前)写出

恢复时按文件顺序插入, 所以LRU顺序也一并恢复; 写入时刻重置为当前时钟
"""
import os
from pathlib import Path
from typing import Optional, Union

from cache.lru_cache import LRUCache
from errors import CorruptSnapshot
from logger.logger import get_logger
from translators.clock import Clock

logger = get_logger(__name__)


def snapshot_cache(cache: LRUCache, path: Union[str, Path]) -> int:
    """写出快照, 先写临时文件再原子替换"""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    with open(tmp, "w", encoding="utf-8", newline="\n") as f:
        for query, translation in cache.items():
            f.write(f"{query}\t{translation}\n")
            count += 1
    os.replace(tmp, path)
    logger.info(f"Cache snapshot written to {path}", extra={"entries": count})
    return count


def restore_cache(path: Union[str, Path],
                  capacity: int = 100_000,
                  clock: Optional[Clock] = None) -> LRUCache:
    """
    从快照恢复缓存

    每一行都必须以换行结尾且恰好有两个非空字段, 否则视为损坏(通常是写到一半被截断)
    """
    cache = LRUCache(capacity=capacity, clock=clock)
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise CorruptSnapshot(f"cannot read snapshot {path}: {e}") from e
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise CorruptSnapshot(f"snapshot {path} is not valid UTF-8: {e}") from e

    if text and not text.endswith("\n"):
        raise CorruptSnapshot(f"snapshot {path} is truncated")
    for lineno, line in enumerate(text.split("\n")[:-1], 1):
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise CorruptSnapshot(f"{path}:{lineno}: malformed snapshot line")
        cache._put(fields[0], fields[1])
    logger.info(f"Cache restored from {path}", extra={"entries": len(cache)})
    return cache
