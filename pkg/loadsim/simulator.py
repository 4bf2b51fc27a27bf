"""
离散事件仿真: 在虚拟时钟上回放查询负载

事件按 (时间, 优先级, 序号) 排序, 同一时刻慢速完成先于请求处理,
所以在时刻 t 完成的慢速翻译对 t 时刻到达的请求可见.
慢速工作者也是时间线上的事件: 任务在入队(或有工作者空闲)时开始, 在 开始时刻 + 慢速延迟 完成
"""
import asyncio
import heapq
import itertools
import json
from bisect import bisect_right
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Sequence, Tuple, Union

import numpy as np

from clickstream.records import normalize
from errors import BackendUnavailable, InvalidInput
from gateway.gateway import TranslationGateway
from gateway.stats import LATENCY_EDGES
from loadsim.workload import repetition_rate
from logger.logger import get_logger
from translators.backend import TranslationResult
from translators.clock import VirtualClock

logger = get_logger(__name__)

Mode = Literal["cold", "warmed"]
Policy = Literal["dual", "fast_only", "slow_only"]
Arrival = Literal["closed", "poisson"]

SLOW_DONE = 0
REQUEST = 1


@dataclass
class RunReport:
    mode: str
    policy: str
    requests: int
    errors: int
    average_latency_ms: float
    p50_latency_ms: float
    p95_latency_ms: float
    p99_latency_ms: float
    proportion_fast: float
    proportion_cache: float
    proportion_slow: float
    repetition_rate: float
    latency_histogram: List[Tuple[float, float, int]] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["latency_histogram"] = [
            {"low": low, "high": "inf" if high == float("inf") else high, "count": count}
            for low, high, count in self.latency_histogram
        ]
        return data

    def write_json(self, path: Union[str, Path]):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")

    def write_histogram_csv(self, path: Union[str, Path]):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write("bucket_low,bucket_high,count\n")
            for low, high, count in self.latency_histogram:
                f.write(f"{low:g},{'inf' if high == float('inf') else f'{high:g}'},{count}\n")


def latency_histogram(latencies: Sequence[float]) -> List[Tuple[float, float, int]]:
    counts = [0] * (len(LATENCY_EDGES) - 1)
    for latency in latencies:
        idx = min(max(bisect_right(LATENCY_EDGES, latency) - 1, 0), len(counts) - 1)
        counts[idx] += 1
    return [(LATENCY_EDGES[i], LATENCY_EDGES[i + 1], c) for i, c in enumerate(counts)]


class Simulator:
    """单线程事件循环, 驱动一个使用虚拟时钟的网关"""

    def __init__(self,
                 gateway: TranslationGateway,
                 policy: Policy = "dual",
                 arrival: Arrival = "closed",
                 arrival_rate_per_ms: float = 1.0,
                 seed: int = 0):
        if not isinstance(gateway.clock, VirtualClock):
            raise InvalidInput("simulation requires a gateway on a virtual clock")
        if policy not in ("dual", "fast_only", "slow_only"):
            raise InvalidInput(f"unknown policy: {policy!r}")
        if arrival not in ("closed", "poisson"):
            raise InvalidInput(f"unknown arrival process: {arrival!r}")
        if arrival == "poisson" and arrival_rate_per_ms <= 0:
            raise InvalidInput("poisson arrival rate must be positive")
        self.gateway = gateway
        self.clock: VirtualClock = gateway.clock
        self.policy = policy
        self.arrival = arrival
        self.arrival_rate_per_ms = arrival_rate_per_ms
        self.rng = np.random.default_rng(seed)
        self.now = self.clock.now()
        self.idle_workers = gateway.config.worker_count
        self._events: list = []
        self._seq = itertools.count()

    def _push(self, at: float, priority: int, kind: str, payload):
        heapq.heappush(self._events, (at, priority, next(self._seq), kind, payload))

    async def _serve(self, raw: str) -> TranslationResult:
        if self.policy == "dual":
            return await self.gateway.handle(raw)
        backend = self.gateway.fast if self.policy == "fast_only" else self.gateway.slow
        return await backend.translate(normalize(raw))

    async def _dispatch(self, at: float):
        """把排队的慢速任务交给空闲的工作者"""
        while self.idle_workers > 0:
            job = self.gateway.take_job()
            if job is None:
                return
            self.clock.set(at)
            result, duration = await self.gateway.run_slow_job(job)
            self.idle_workers -= 1
            self._push(at + duration, SLOW_DONE, "slow_done", (job, result))

    async def replay(self, queries: Sequence[str]) -> Tuple[List[float], Counter, int]:
        """
        回放一遍负载, 并处理完所有未完成的慢速任务

        Returns:
            (每个成功请求的延迟, 各来源计数, 失败请求数)
        """
        latencies: List[float] = []
        sources: Counter = Counter()
        errors = 0
        start = self.now
        if self.arrival == "closed":
            if queries:
                self._push(start, REQUEST, "request", 0)
        else:
            gaps = self.rng.exponential(1.0 / self.arrival_rate_per_ms, size=len(queries))
            for i, at in enumerate(start + np.cumsum(gaps)):
                self._push(float(at), REQUEST, "request", i)

        while self._events:
            at, _, _, kind, payload = heapq.heappop(self._events)
            self.now = at
            self.clock.set(at)
            if kind == "slow_done":
                job, result = payload
                await self.gateway.complete_job(job, result)
                self.idle_workers += 1
                await self._dispatch(at)
                continue

            i = payload
            latency = 0.0
            try:
                result = await self._serve(queries[i])
                latency = result.latency_ms
                latencies.append(latency)
                sources[result.source] += 1
            except BackendUnavailable:
                errors += 1
            if self.policy == "dual":
                await self._dispatch(at)
            if self.arrival == "closed" and i + 1 < len(queries):
                self._push(at + latency, REQUEST, "request", i + 1)
        return latencies, sources, errors


async def run(queries: Sequence[str],
              gateway: TranslationGateway,
              mode: Mode = "cold",
              policy: Policy = "dual",
              arrival: Arrival = "closed",
              arrival_rate_per_ms: float = 1.0,
              seed: int = 0) -> RunReport:
    """
    在网关上回放负载并汇总延迟和各来源比例

    warmed 模式先完整回放一遍, 等慢速队列处理完后清零统计, 再回放一遍测量
    """
    if mode not in ("cold", "warmed"):
        raise InvalidInput(f"unknown mode: {mode!r}")
    simulator = Simulator(gateway, policy, arrival, arrival_rate_per_ms, seed)
    if mode == "warmed":
        await simulator.replay(queries)
        gateway.stats.reset()
    latencies, sources, errors = await simulator.replay(queries)

    served = len(latencies)
    if served:
        p50, p95, p99 = (float(v) for v in np.percentile(latencies, [50, 95, 99]))
        average = float(np.mean(latencies))
    else:
        p50 = p95 = p99 = average = 0.0
    report = RunReport(
        mode=mode,
        policy=policy,
        requests=served,
        errors=errors,
        average_latency_ms=average,
        p50_latency_ms=p50,
        p95_latency_ms=p95,
        p99_latency_ms=p99,
        proportion_fast=sources["fast"] / served if served else 0.0,
        proportion_cache=sources["cache"] / served if served else 0.0,
        proportion_slow=sources["slow"] / served if served else 0.0,
        repetition_rate=repetition_rate(queries),
        latency_histogram=latency_histogram(latencies),
        stats=gateway.stats.to_dict(),
    )
    logger.info(
        f"Run finished: {served} requests, average {average:.3f} ms",
        extra={"mode": mode, "policy": policy, "proportion_cache": report.proportion_cache},
    )
    return report


def run_sync(*args, **kwargs) -> RunReport:
    return asyncio.run(run(*args, **kwargs))
