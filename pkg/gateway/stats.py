from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import List, Optional

# 延迟直方图的区间边界(毫秒), 最后一个区间没有上界
LATENCY_EDGES: List[float] = [0, 1, 5, 10, 20, 50, 100, 200, 500, 1000, float("inf")]


def _empty_histogram() -> List[int]:
    return [0] * (len(LATENCY_EDGES) - 1)


@dataclass
class GatewayStats:
    """
    网关运行统计

    requests 只统计成功返回的请求, 因此 requests == cache_hits + fast_served 恒成立;
    快速后端失败的请求记在 fast_errors 里
    """
    requests: int = 0
    cache_hits: int = 0
    fast_served: int = 0
    fast_errors: int = 0
    slow_completions: int = 0
    slow_failures: int = 0  # 慢速后端单次调用失败(含重试)
    slow_drops: int = 0  # 重试耗尽后丢弃的任务
    queue_drops: int = 0  # 队列满被拒绝的任务
    slow_invocations: int = 0  # 慢速后端调用次数(含重试)
    slow_invocations_by_query: Optional[Counter] = None  # 开启 track_queries 时按查询计数
    latency_histogram: List[int] = field(default_factory=_empty_histogram)

    def record_slow_invocation(self, query: str):
        self.slow_invocations += 1
        if self.slow_invocations_by_query is not None:
            self.slow_invocations_by_query[query] += 1

    def record_served(self, source: str, latency_ms: float):
        self.requests += 1
        if source == "cache":
            self.cache_hits += 1
        else:
            self.fast_served += 1
        idx = min(bisect_right(LATENCY_EDGES, latency_ms) - 1, len(self.latency_histogram) - 1)
        self.latency_histogram[max(idx, 0)] += 1

    def reset(self):
        """清零所有计数(预热结束后开始正式测量时使用)"""
        tracked = self.slow_invocations_by_query is not None
        fresh = GatewayStats(slow_invocations_by_query=Counter() if tracked else None)
        self.__dict__.update(fresh.__dict__)

    def histogram_rows(self):
        return [
            (LATENCY_EDGES[i], LATENCY_EDGES[i + 1], count)
            for i, count in enumerate(self.latency_histogram)
        ]

    def to_dict(self) -> dict:
        return {
            "requests": self.requests,
            "cache_hits": self.cache_hits,
            "fast_served": self.fast_served,
            "fast_errors": self.fast_errors,
            "slow_completions": self.slow_completions,
            "slow_failures": self.slow_failures,
            "slow_drops": self.slow_drops,
            "queue_drops": self.queue_drops,
            "slow_invocations": self.slow_invocations,
            "latency_histogram": [
                {"low": low, "high": "inf" if high == float("inf") else high, "count": count}
                for low, high, count in self.histogram_rows()
            ],
        }
