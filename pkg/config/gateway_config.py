# 导入所需的Python标准库
from dataclasses import dataclass

from errors import ConfigError


@dataclass
class GatewayConfig:
    """翻译网关的配置

    定义了缓存容量、慢速队列容量、重试次数和慢速工作者数量
    """
    cache_capacity: int = 100_000  # 缓存容量,默认10万条(LRU淘汰)
    queue_capacity: int = 10_000  # 慢速翻译队列容量,满了之后拒绝新任务
    slow_retry_limit: int = 1  # 慢速后端失败后的重试次数
    worker_count: int = 4  # 慢速工作者数量
    cache_lookup_ms: float = 0.0  # 缓存查找开销(毫秒),用于延迟统计
    slow_retry_delay_ms: float = 0.0  # 两次重试之间的等待(毫秒)
    track_queries: bool = False  # 按查询记录淘汰和后端调用次数, 只用于测试和诊断

    def __post_init__(self):
        for name in ("cache_capacity", "queue_capacity", "worker_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"gateway.{name} must be positive, got {getattr(self, name)}")
        if self.slow_retry_limit < 0:
            raise ConfigError("gateway.slow_retry_limit must be non-negative")
        if self.cache_lookup_ms < 0 or self.slow_retry_delay_ms < 0:
            raise ConfigError("gateway latencies must be non-negative")
