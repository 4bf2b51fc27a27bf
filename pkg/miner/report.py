import csv
import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List, Literal, Mapping, Optional, Sequence, Union

from errors import EmptyInput, InvalidInput
from miner.stats import PairStats

Edge = Union[int, float, Fraction]


@dataclass(frozen=True)
class HistogramBucket:
    """直方图的一个区间 [low, high), 最后一个有限区间为闭区间"""
    low: Edge
    high: Edge
    count: int
    ratio: Fraction  # 落在该区间(累计模式下为 <= high)的查询对比例


def parse_edges(text: str) -> List[Edge]:
    """解析逗号分隔的区间边界, 支持 inf"""
    edges: List[Edge] = []
    for part in text.split(","):
        part = part.strip()
        if part.lower() in ("inf", "+inf", "∞"):
            edges.append(math.inf)
        else:
            try:
                edges.append(Fraction(part))
            except ValueError as e:
                raise InvalidInput(f"bucket edge is not a number: {part!r}") from e
    return edges


def _value(stats: PairStats, axis: str):
    if axis == "luv":
        return stats.luv
    if axis == "ctr":
        return stats.ctr
    raise InvalidInput(f"axis must be luv or ctr, got {axis!r}")


def distribution_report(stats: Union[Iterable[PairStats], Mapping[object, PairStats]],
                        axis: Literal["luv", "ctr"],
                        edges: Sequence[Edge],
                        cumulative: bool = False,
                        min_luv: Optional[int] = None) -> List[HistogramBucket]:
    """
    统计查询对在 luv 或 ctr 维度上的分布

    Args:
        stats: 聚合统计
        axis: luv 或 ctr
        edges: 严格递增的区间边界, n 个边界产生 n-1 个区间
        cumulative: 为True时输出累计比例(不超过该区间上界的查询对占比)
        min_luv: 只统计 luv >= min_luv 的查询对(例如只看可信的查询)

    Returns:
        每个区间的计数与比例, 非累计模式下比例之和为1
    """
    if isinstance(stats, Mapping):
        stats = stats.values()
    if len(edges) < 2:
        raise InvalidInput("at least two bucket edges are required")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise InvalidInput(f"bucket edges must be strictly increasing: {list(edges)}")

    selected = [s for s in stats if min_luv is None or s.luv >= min_luv]
    if not selected:
        raise EmptyInput("no pair statistics to report")

    n_buckets = len(edges) - 1
    counts = [0] * n_buckets
    for s in selected:
        v = _value(s, axis)
        idx = bisect_right(edges, v) - 1
        if idx == n_buckets and v == edges[-1]:
            idx -= 1  # 最后一个区间包含上界
        if not 0 <= idx < n_buckets:
            raise InvalidInput(f"{axis}={v} falls outside the bucket edges {list(edges)}")
        counts[idx] += 1

    total = len(selected)
    buckets = []
    running = 0
    for i, count in enumerate(counts):
        running += count
        numerator = running if cumulative else count
        buckets.append(HistogramBucket(edges[i], edges[i + 1], count, Fraction(numerator, total)))
    return buckets


def _fmt_edge(edge: Edge) -> str:
    if isinstance(edge, float) and math.isinf(edge):
        return "inf"
    if isinstance(edge, Fraction) and edge.denominator == 1:
        return str(edge.numerator)
    if isinstance(edge, Fraction):
        return repr(float(edge))
    return str(edge)


def write_histogram(buckets: Sequence[HistogramBucket], path: Union[str, Path]):
    """写出 CSV: bucket_low,bucket_high,ratio"""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["bucket_low", "bucket_high", "ratio"])
        for b in buckets:
            writer.writerow([_fmt_edge(b.low), _fmt_edge(b.high), f"{float(b.ratio):.6f}"])
