"""点击日志聚合与查询翻译对过滤

每个 <query, translation> 键统计:
    luv: 发出该查询对的去重用户数 (list unique view)
    duv: 其中至少点击过一次的去重用户数 (detail unique view)
    ctr: duv / luv, 用精确分数表示
"""
import zlib
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Literal, Mapping, Tuple, Union

from clickstream.records import ClickRecord
from errors import InvalidInput
from logger.logger import get_logger

logger = get_logger(__name__)

PairKey = Tuple[str, str]
Counting = Literal["distinct", "occurrence"]


@dataclass(frozen=True)
class PairStats:
    """单个查询翻译对的聚合统计"""
    query: str
    translation: str
    luv: int
    duv: int

    def __post_init__(self):
        if self.luv < 1:
            raise InvalidInput(f"luv must be positive, got {self.luv}")
        if not 0 <= self.duv <= self.luv:
            raise InvalidInput(f"duv must lie in [0, luv], got duv={self.duv} luv={self.luv}")

    @property
    def key(self) -> PairKey:
        return (self.query, self.translation)

    @property
    def ctr(self) -> Fraction:
        """转化率, 总是由 duv/luv 现算"""
        return Fraction(self.duv, self.luv)


@dataclass(frozen=True)
class MiningThresholds:
    """挖掘阈值: eta 为CTR界, chi 为Luv下界, 两个比较都包含边界"""
    eta: Fraction
    chi: int
    mode: Literal["top", "bottom"] = "top"

    def __post_init__(self):
        if not 0 <= self.eta <= 1:
            raise InvalidInput(f"eta must lie in [0, 1], got {self.eta}")
        if self.chi < 1:
            raise InvalidInput(f"chi must be >= 1, got {self.chi}")
        if self.mode not in ("top", "bottom"):
            raise InvalidInput(f"mode must be top or bottom, got {self.mode!r}")

    @classmethod
    def parse(cls, eta: Union[str, float, Fraction], chi: int, mode: str = "top") -> "MiningThresholds":
        """eta 按十进制字面值转为分数, 0.7 就是 7/10"""
        try:
            exact = eta if isinstance(eta, Fraction) else Fraction(str(eta))
        except ValueError as e:
            raise InvalidInput(f"eta is not a number: {eta!r}") from e
        return cls(eta=exact, chi=int(chi), mode=mode)

    def admits(self, stats: PairStats) -> bool:
        if stats.luv < self.chi:
            return False
        if self.mode == "top":
            return stats.ctr >= self.eta
        return stats.ctr <= self.eta


@dataclass(frozen=True)
class MinedPair:
    """通过过滤、进入领域内语料的查询翻译对"""
    query: str
    translation: str
    stats: PairStats


def aggregate(records: Iterable[ClickRecord], counting: Counting = "distinct") -> Dict[PairKey, PairStats]:
    """
    把点击记录聚合为每个查询翻译对的统计

    Args:
        records: 已规范化的点击记录
        counting: distinct 按去重用户计数(默认); occurrence 按记录条数计数

    Returns:
        按键排序的 {(query, translation): PairStats}, 与输入顺序无关
    """
    if counting == "distinct":
        viewers: Dict[PairKey, set] = defaultdict(set)
        clickers: Dict[PairKey, set] = defaultdict(set)
        for record in records:
            viewers[record.key].add(record.user_id)
            if record.clicks >= 1:
                clickers[record.key].add(record.user_id)
        counts = {key: (len(users), len(clickers.get(key, ()))) for key, users in viewers.items()}
    elif counting == "occurrence":
        views: Dict[PairKey, int] = defaultdict(int)
        clicks: Dict[PairKey, int] = defaultdict(int)
        for record in records:
            views[record.key] += 1
            clicks[record.key] += int(record.clicks >= 1)
        counts = {key: (n, clicks[key]) for key, n in views.items()}
    else:
        raise InvalidInput(f"unknown counting mode: {counting!r}")

    return {
        key: PairStats(key[0], key[1], luv, duv)
        for key, (luv, duv) in sorted(counts.items())
    }


def merge(*shards: Mapping[PairKey, PairStats]) -> Dict[PairKey, PairStats]:
    """
    合并多个分片的统计: 同一键的 luv/duv 相加
    仅当分片之间没有共同用户时, 结果与整体聚合相同
    """
    totals: Dict[PairKey, List[int]] = defaultdict(lambda: [0, 0])
    for shard in shards:
        for key, stats in shard.items():
            totals[key][0] += stats.luv
            totals[key][1] += stats.duv
    return {key: PairStats(key[0], key[1], luv, duv) for key, (luv, duv) in sorted(totals.items())}


def _shard_of(key: PairKey, shards: int) -> int:
    # crc32 在进程之间稳定, 不受 PYTHONHASHSEED 影响
    return zlib.crc32(f"{key[0]}\t{key[1]}".encode("utf-8")) % shards


def _aggregate_shard(args: Tuple[List[ClickRecord], Counting]) -> Dict[PairKey, PairStats]:
    records, counting = args
    return aggregate(records, counting)


def aggregate_sharded(records: Iterable[ClickRecord],
                      shards: int = 4,
                      workers: int = 1,
                      counting: Counting = "distinct") -> Dict[PairKey, PairStats]:
    """
    按键哈希分片并行聚合; 分片之间键不相交, 合并即为并集
    workers > 1 时使用进程池
    """
    if shards < 1 or workers < 1:
        raise InvalidInput("shards and workers must be positive")
    buckets: List[List[ClickRecord]] = [[] for _ in range(shards)]
    for record in records:
        buckets[_shard_of(record.key, shards)].append(record)

    jobs = [(bucket, counting) for bucket in buckets]
    if workers == 1:
        parts = [_aggregate_shard(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_aggregate_shard, jobs))

    combined: Dict[PairKey, PairStats] = {}
    for part in parts:
        combined.update(part)
    logger.debug(f"Aggregated {len(combined)} pairs across {shards} shards")
    return dict(sorted(combined.items()))


def filter_pairs(stats: Iterable[Union[PairStats, MinedPair]],
                 thresholds: MiningThresholds) -> List[MinedPair]:
    """
    按阈值过滤查询翻译对

    top 模式保留 ctr >= eta 且 luv >= chi; bottom 模式保留 ctr <= eta 且 luv >= chi
    结果按 luv 降序、查询字典序排列; 对自身输出再过滤一次结果不变
    """
    if isinstance(stats, Mapping):
        stats = stats.values()
    kept = []
    for item in stats:
        pair_stats = item.stats if isinstance(item, MinedPair) else item
        if thresholds.admits(pair_stats):
            kept.append(MinedPair(pair_stats.query, pair_stats.translation, pair_stats))
    kept.sort(key=lambda p: (-p.stats.luv, p.query, p.translation))
    return kept
