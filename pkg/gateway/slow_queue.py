import asyncio
import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Set

from logger.logger import get_logger

if TYPE_CHECKING:
    from gateway.gateway import TranslationGateway

logger = get_logger(__name__)


class Offer(enum.Enum):
    ENQUEUED = "enqueued"
    IN_FLIGHT = "in_flight"  # 已在队列中或正在翻译, 不重复入队
    DROPPED = "dropped"  # 队列已满


@dataclass
class SlowJob:
    """一个等待慢速翻译的查询"""
    query: str
    enqueued_at: float


class SlowQueue:
    """
    有界的慢速翻译队列, 多生产者多消费者

    in_flight 集合覆盖排队中和翻译中的查询, 直到 done() 才清除;
    队列满时拒绝最新的任务(由网关计入 queue_drops), 被拒绝的查询不标记为 in_flight, 下次未命中时会重新入队
    """

    def __init__(self, capacity: int = 10_000):
        self.capacity = capacity
        self.queue: "asyncio.Queue[SlowJob]" = asyncio.Queue(maxsize=capacity)
        self.in_flight: Set[str] = set()

    def __len__(self) -> int:
        return self.queue.qsize()

    def offer(self, query: str, now: float) -> Offer:
        """非阻塞入队"""
        if query in self.in_flight:
            return Offer.IN_FLIGHT
        try:
            self.queue.put_nowait(SlowJob(query, now))
        except asyncio.QueueFull:
            logger.warning("Slow queue full, job dropped", extra={"query": query})
            return Offer.DROPPED
        self.in_flight.add(query)
        return Offer.ENQUEUED

    def take_nowait(self) -> Optional[SlowJob]:
        try:
            return self.queue.get_nowait()
        except asyncio.QueueEmpty:
            return None

    async def take(self) -> SlowJob:
        return await self.queue.get()

    def done(self, query: str):
        self.in_flight.discard(query)


class SlowWorker:
    """慢速翻译消费者, 循环取任务交给网关处理"""

    def __init__(self, name: str, gateway: "TranslationGateway"):
        self.name = name
        self.gateway = gateway
        self.is_running = False

    async def start(self):
        """启动消费者"""
        self.is_running = True
        while self.is_running:
            job = await self.gateway.queue.take()
            try:
                result, _ = await self.gateway.run_slow_job(job)
                await self.gateway.complete_job(job, result)
            except asyncio.CancelledError:
                self.gateway.queue.done(job.query)
                raise
            except Exception as e:
                logger.error(f"Worker {self.name} error: {e}", exc_info=True)
                self.gateway.queue.done(job.query)

    def stop(self):
        """停止消费者"""
        self.is_running = False
