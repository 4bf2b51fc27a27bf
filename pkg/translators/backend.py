"""
模拟翻译后端

快速后端代表低延迟、质量较差的统计翻译, 慢速后端代表高延迟、质量更好的神经翻译;
质量差异由两张不同的翻译表体现, 延迟由延迟模型在给定时钟上产生
"""
import math
from collections import Counter
from dataclasses import dataclass
from typing import Literal, Optional, Union

import numpy as np

from clickstream.records import NormalizedQuery, normalize
from errors import BackendUnavailable
from logger.logger import get_logger
from translators.clock import Clock, VirtualClock
from translators.spec import ECHO, FixedLatency, TranslatorSpec

logger = get_logger(__name__)

Source = Literal["fast", "slow", "cache"]


@dataclass(frozen=True)
class TranslationResult:
    text: str
    source: Source
    latency_ms: float

    def __post_init__(self):
        if not self.text:
            raise ValueError("translation text must be non-empty")
        if self.latency_ms < 0:
            raise ValueError(f"latency must be >= 0, got {self.latency_ms}")

    def to_dict(self) -> dict:
        return {"t": self.text, "source": self.source, "latency_ms": self.latency_ms}


class Translator:
    """
    按 TranslatorSpec 工作的翻译后端, 可以并发调用

    文本只取决于 (spec, query); 延迟来自以 spec.seed 为种子的独立随机流,
    故障注入使用另一条随机流, 两者互不影响
    """

    def __init__(self,
                 spec: TranslatorSpec,
                 clock: Optional[Clock] = None,
                 source: Source = "fast",
                 track_calls: bool = False):
        self.spec = spec
        self.clock = clock or VirtualClock()
        self.source = source
        self.available = True
        self.call_count = 0
        self.calls: Optional[Counter] = Counter() if track_calls else None  # 每个查询的调用次数
        self._fail_next = 0
        self._latency_rng = np.random.default_rng([spec.seed, 0])
        self._fault_rng = np.random.default_rng([spec.seed, 1])

    @property
    def name(self) -> str:
        return self.spec.name

    def fail_next(self, n: int = 1):
        """让接下来的 n 次调用抛出 BackendUnavailable"""
        self._fail_next += n

    def render(self, query: str) -> str:
        """查表, 未命中时回退"""
        hit = self.spec.table.get(query)
        if hit is not None:
            return hit
        if self.spec.fallback == ECHO:
            return query
        return " ".join(self.spec.dictionary.get(token, token) for token in query.split(" "))

    def draw_latency(self) -> float:
        model = self.spec.latency
        if isinstance(model, FixedLatency):
            return float(model.ms)
        return float(model.median_ms * math.exp(model.sigma * self._latency_rng.standard_normal()))

    def _should_fail(self) -> bool:
        if not self.available:
            return True
        if self._fail_next > 0:
            self._fail_next -= 1
            return True
        return self.spec.failure_rate > 0 and self._fault_rng.random() < self.spec.failure_rate

    async def translate(self, query: Union[str, NormalizedQuery]) -> TranslationResult:
        """
        翻译一个查询

        延迟在时钟上消耗掉(虚拟时钟直接推进, 墙钟真实等待), 并记在结果里
        """
        text = query.text if isinstance(query, NormalizedQuery) else normalize(query).text
        self.call_count += 1
        if self.calls is not None:
            self.calls[text] += 1
        if self._should_fail():
            logger.warning(f"Backend {self.name} unavailable", extra={"query": text, "source": self.source})
            raise BackendUnavailable(f"translator {self.name} is unavailable")
        latency = self.draw_latency()
        await self.clock.sleep(latency)
        return TranslationResult(self.render(text), self.source, latency)


async def translate(spec: TranslatorSpec,
                    query: Union[str, NormalizedQuery],
                    clock: Optional[Clock] = None,
                    source: Source = "fast") -> TranslationResult:
    """一次性调用; 需要连续的延迟随机流时应复用 Translator 实例"""
    return await Translator(spec, clock, source).translate(query)
