"""
查询负载生成

popularity:
    zipf: 有界 Zipf 分布, 第 k 个查询的概率正比于 k^-s
    uniform: 每一轮把全部查询随机排列一次, 轮内不重复
    trace: 从文件读取, 每行一个原始查询
给定 target_repetition_rate 时, 用二分法求 Zipf 指数 s, 使实际重复率落在目标 ±1 个百分点内
"""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Union

import numpy as np

from clickstream.records import ClickRecord
from errors import InfeasibleTarget, InvalidInput, UnreadableSource
from logger.logger import get_logger

logger = get_logger(__name__)

Popularity = Literal["zipf", "uniform", "trace"]

S_LOW = 1e-3
S_HIGH = 20.0
TOLERANCE = 0.01


@dataclass
class WorkloadSpec:
    total_requests: int
    distinct_queries: int
    popularity: Popularity = "zipf"
    zipf_s: float = 1.0
    trace_path: Optional[Union[str, Path]] = None
    seed: int = 0
    target_repetition_rate: Optional[float] = None

    def __post_init__(self):
        if self.popularity not in ("zipf", "uniform", "trace"):
            raise InvalidInput(f"unknown popularity model: {self.popularity!r}")
        if self.target_repetition_rate is not None and self.popularity != "zipf":
            raise InvalidInput(f"target_repetition_rate needs zipf popularity, got {self.popularity!r}")
        if self.popularity == "trace":
            if not self.trace_path:
                raise InvalidInput("trace popularity requires trace_path")
            return
        if self.total_requests < 1 or self.distinct_queries < 1:
            raise InvalidInput("total_requests and distinct_queries must be positive")
        if self.distinct_queries > self.total_requests:
            raise InvalidInput("distinct_queries must not exceed total_requests")
        if self.zipf_s <= 0:
            raise InvalidInput(f"zipf exponent must be > 0, got {self.zipf_s}")
        if self.target_repetition_rate is not None and not 0 <= self.target_repetition_rate <= 1:
            raise InvalidInput("target_repetition_rate must lie in [0, 1]")


def repetition_rate(queries: Sequence[str]) -> float:
    """1 - 不同查询数 / 请求总数"""
    if not queries:
        return 0.0
    return 1.0 - len(set(queries)) / len(queries)


def query_text(rank: int) -> str:
    return f"query {rank}"


def zipf_cdf(n: int, s: float) -> np.ndarray:
    weights = np.arange(1, n + 1, dtype=np.float64) ** -s
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def _zipf_ranks(uniforms: np.ndarray, n: int, s: float) -> np.ndarray:
    """逆CDF采样; 对同一组均匀数, s 越大排名越靠前"""
    ranks = np.searchsorted(zipf_cdf(n, s), uniforms, side="left")
    return np.minimum(ranks, n - 1)


def _rate_of(ranks: np.ndarray) -> float:
    return 1.0 - len(np.unique(ranks)) / len(ranks)


def solve_zipf_exponent(spec: WorkloadSpec) -> float:
    """二分求 s, 使该种子下的实际重复率接近目标"""
    target = spec.target_repetition_rate
    uniforms = np.random.default_rng(spec.seed).random(spec.total_requests)
    n = spec.distinct_queries

    low_rate = _rate_of(_zipf_ranks(uniforms, n, S_LOW))
    high_rate = _rate_of(_zipf_ranks(uniforms, n, S_HIGH))
    if target < low_rate - TOLERANCE or target > high_rate + TOLERANCE:
        raise InfeasibleTarget(
            f"repetition rate {target} unreachable with {n} distinct queries "
            f"over {spec.total_requests} requests (range {low_rate:.4f}..{high_rate:.4f})"
        )

    lo, hi = S_LOW, S_HIGH
    best_s, best_gap = lo, abs(low_rate - target)
    for _ in range(60):
        mid = (lo + hi) / 2
        rate = _rate_of(_zipf_ranks(uniforms, n, mid))
        gap = abs(rate - target)
        if gap < best_gap:
            best_s, best_gap = mid, gap
        if gap <= TOLERANCE / 4:
            break
        if rate < target:
            lo = mid
        else:
            hi = mid
    if best_gap > TOLERANCE:
        raise InfeasibleTarget(f"could not reach repetition rate {target} (closest gap {best_gap:.4f})")
    logger.info(f"Solved zipf exponent s={best_s:.4f} for repetition rate {target}")
    return best_s


def read_trace(path: Union[str, Path]) -> List[str]:
    try:
        with open(path, encoding="utf-8") as f:
            return [line.rstrip("\r\n") for line in f if line.strip()]
    except (OSError, UnicodeDecodeError) as e:
        raise UnreadableSource(f"cannot read trace {path}: {e}") from e


def generate(spec: WorkloadSpec) -> List[str]:
    """按负载描述生成原始查询序列; 固定种子时结果确定"""
    if spec.popularity == "trace":
        queries = read_trace(spec.trace_path)
        return queries[:spec.total_requests] if spec.total_requests else queries

    rng = np.random.default_rng(spec.seed)
    n = spec.distinct_queries
    if spec.popularity == "uniform":
        cycles = -(-spec.total_requests // n)
        ranks = np.concatenate([rng.permutation(n) for _ in range(cycles)])[:spec.total_requests]
    else:
        s = solve_zipf_exponent(spec) if spec.target_repetition_rate is not None else spec.zipf_s
        ranks = _zipf_ranks(rng.random(spec.total_requests), n, s)
    return [query_text(int(k)) for k in ranks]


def synthetic_click_log(total_records: int,
                        distinct_pairs: int,
                        users: int,
                        zipf_s: float = 1.1,
                        seed: int = 0) -> List[ClickRecord]:
    """
    合成点击日志: 查询翻译对按 Zipf 分布出现, 用户均匀分布;
    每个翻译对有各自的点击概率(Beta(2, 2)), 每条记录的点击数服从二项分布
    """
    rng = np.random.default_rng(seed)
    pair_ranks = _zipf_ranks(rng.random(total_records), distinct_pairs, zipf_s)
    user_ids = rng.integers(0, users, size=total_records)
    click_prob = rng.beta(2.0, 2.0, size=distinct_pairs)
    clicks = rng.binomial(3, click_prob[pair_ranks])
    return [
        ClickRecord(f"u{int(u)}", f"dotaz {int(k)}", f"query {int(k)}", int(c))
        for k, u, c in zip(pair_ranks, user_ids, clicks)
    ]
