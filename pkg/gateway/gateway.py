"""
翻译网关

请求先查缓存; 未命中时同步调用快速后端并直接返回(结果不写入缓存),
同时把查询放入慢速队列, 由慢速工作者异步翻译后写入缓存,
之后同一查询就能以缓存延迟拿到高质量译文
"""
import asyncio
from collections import Counter
from typing import List, Optional, Tuple

from cache.lru_cache import LRUCache
from clickstream.records import normalize
from config.gateway_config import GatewayConfig
from errors import BackendUnavailable, FastBackendUnavailable
from gateway.slow_queue import Offer, SlowJob, SlowQueue, SlowWorker
from gateway.stats import GatewayStats
from logger.logger import get_logger
from translators.backend import TranslationResult, Translator
from translators.clock import Clock, VirtualClock
from translators.spec import TranslatorSpec

logger = get_logger(__name__)


class TranslationGateway:
    def __init__(self,
                 fast: Translator,
                 slow: Translator,
                 config: Optional[GatewayConfig] = None,
                 clock: Optional[Clock] = None,
                 cache: Optional[LRUCache] = None):
        self.fast = fast
        self.slow = slow
        self.config = config or GatewayConfig()
        self.clock = clock or fast.clock
        self.cache = cache or LRUCache(capacity=self.config.cache_capacity, clock=self.clock,
                                       track_evictions=self.config.track_queries)
        self.queue = SlowQueue(self.config.queue_capacity)
        self.stats = GatewayStats(slow_invocations_by_query=Counter() if self.config.track_queries else None)
        self.workers: List[SlowWorker] = []
        self._tasks: List[asyncio.Task] = []

    async def handle(self, raw: str) -> TranslationResult:
        """
        处理一个翻译请求

        缓存命中时不调用任何后端; 未命中时返回快速后端的结果, 从不等待慢速后端
        """
        query = normalize(raw).text
        lookup_ms = self.config.cache_lookup_ms

        cached = await self.cache.get(query)
        if cached is not None:
            result = TranslationResult(cached, "cache", lookup_ms)
            self.stats.record_served(result.source, result.latency_ms)
            return result

        self._enqueue(query)
        try:
            fast = await self.fast.translate(query)
        except BackendUnavailable as e:
            self.stats.fast_errors += 1
            raise FastBackendUnavailable(str(e)) from e

        result = TranslationResult(fast.text, "fast", lookup_ms + fast.latency_ms)
        self.stats.record_served(result.source, result.latency_ms)
        logger.debug("Served from fast path", extra={"query": query, "latency_ms": result.latency_ms})
        return result

    def _enqueue(self, query: str):
        if self.queue.offer(query, self.clock.now()) is Offer.DROPPED:
            self.stats.queue_drops += 1

    def take_job(self) -> Optional[SlowJob]:
        return self.queue.take_nowait()

    async def run_slow_job(self, job: SlowJob) -> Tuple[Optional[TranslationResult], float]:
        """
        调用慢速后端, 失败时最多重试 slow_retry_limit 次

        Returns:
            (结果, 总耗时毫秒); 重试耗尽时结果为 None
        """
        elapsed = 0.0
        attempts = 1 + self.config.slow_retry_limit
        for attempt in range(1, attempts + 1):
            self.stats.record_slow_invocation(job.query)
            try:
                result = await self.slow.translate(job.query)
                return result, elapsed + result.latency_ms
            except BackendUnavailable:
                self.stats.slow_failures += 1
                logger.warning(
                    f"Slow backend failed (attempt {attempt}/{attempts})",
                    extra={"query": job.query},
                )
                if attempt < attempts and self.config.slow_retry_delay_ms > 0:
                    await self.clock.sleep(self.config.slow_retry_delay_ms)
                    elapsed += self.config.slow_retry_delay_ms
        return None, elapsed

    async def complete_job(self, job: SlowJob, result: Optional[TranslationResult]):
        """把慢速结果写入缓存(同键后写入者生效)并清除 in-flight 标记"""
        try:
            if result is None:
                self.stats.slow_drops += 1
                logger.error("Slow job dropped after retries", extra={"query": job.query})
                return
            await self.cache.set(job.query, result.text)
            self.stats.slow_completions += 1
        finally:
            self.queue.done(job.query)

    async def slow_worker_step(self) -> bool:
        """处理队列中的一个任务; 队列为空时返回 False"""
        job = self.take_job()
        if job is None:
            return False
        result, _ = await self.run_slow_job(job)
        await self.complete_job(job, result)
        return True

    async def drain(self) -> int:
        """同步处理完队列中所有任务"""
        processed = 0
        while await self.slow_worker_step():
            processed += 1
        return processed

    async def start(self):
        """启动 worker_count 个后台慢速工作者"""
        for i in range(self.config.worker_count):
            worker = SlowWorker(f"slow-worker-{i}", self)
            self.workers.append(worker)
            self._tasks.append(asyncio.create_task(worker.start()))
        logger.info(f"Started {len(self.workers)} slow workers")

    async def stop(self):
        for worker in self.workers:
            worker.stop()
        for task in self._tasks:
            task.cancel()
        await asyncio.gather(*self._tasks, return_exceptions=True)
        self.workers.clear()
        self._tasks.clear()

    def snapshot_stats(self) -> dict:
        data = self.stats.to_dict()
        data["cache"] = self.cache.get_stats()
        data["queue"] = {"pending": len(self.queue), "in_flight": len(self.queue.in_flight)}
        return data


def build_gateway(fast_spec: TranslatorSpec,
                  slow_spec: TranslatorSpec,
                  config: Optional[GatewayConfig] = None,
                  clock: Optional[Clock] = None) -> TranslationGateway:
    """按两个后端描述组装网关, 默认使用虚拟时钟"""
    clock = clock or VirtualClock()
    track = bool(config and config.track_queries)
    return TranslationGateway(
        Translator(fast_spec, clock, source="fast", track_calls=track),
        Translator(slow_spec, clock, source="slow", track_calls=track),
        config,
        clock,
    )
