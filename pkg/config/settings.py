# 导入所需的Python标准库
import os  # 用于获取环境变量
from pathlib import Path
from typing import Any, ClassVar, Dict, Literal, Optional, Tuple

import yaml  # 用于解析YAML/JSON配置文件
from pydantic import BaseModel, Field, ValidationError, field_validator

from config.gateway_config import GatewayConfig
from errors import ConfigError


class ThresholdsSection(BaseModel):
    """挖掘阈值配置"""
    eta: str = "0.7"  # 以字符串保存,转换为精确分数后比较
    chi: int = Field(default=15, ge=1)
    mode: Literal["top", "bottom"] = "top"
    counting: Literal["distinct", "occurrence"] = "distinct"

    @field_validator("eta", mode="before")
    @classmethod
    def _eta_as_text(cls, value: Any) -> str:
        return str(value)


class GatewaySection(BaseModel):
    """网关配置,字段与 GatewayConfig 一一对应"""
    cache_capacity: int = 100_000
    queue_capacity: int = 10_000
    slow_retry_limit: int = 1
    worker_count: int = 4
    cache_lookup_ms: float = 0.0
    slow_retry_delay_ms: float = 0.0


class TranslatorsSection(BaseModel):
    """快速/慢速后端的规格文件路径"""
    fast: Optional[str] = None
    slow: Optional[str] = None


class WorkloadSection(BaseModel):
    """负载生成与回放配置"""
    total_requests: int = Field(default=100_000, ge=1)
    distinct_queries: int = Field(default=50_000, ge=1)
    popularity: Literal["zipf", "uniform", "trace"] = "zipf"
    zipf_s: float = Field(default=1.0, gt=0)
    trace_path: Optional[str] = None
    target_repetition_rate: Optional[float] = Field(default=None, ge=0, le=1)
    mode: Literal["cold", "warmed"] = "cold"
    policy: Literal["dual", "fast_only", "slow_only"] = "dual"
    arrival: Literal["closed", "poisson"] = "closed"
    arrival_rate_per_s: float = Field(default=1000.0, gt=0)


class ServerSection(BaseModel):
    """服务监听配置"""
    host: str = "127.0.0.1"
    port: int = 8000
    snapshot_path: Optional[str] = None  # 启动时恢复、关闭时保存的缓存快照


class LoggingSection(BaseModel):
    """日志配置"""
    level: str = "INFO"
    json_format: bool = Field(default=True, alias="json")
    dir: Optional[str] = None

    model_config = {"populate_by_name": True}


class Settings(BaseModel):
    """
    应用程序配置管理类
    负责加载配置文件、环境变量覆盖和校验
    """
    seed: int = 0
    thresholds: ThresholdsSection = Field(default_factory=ThresholdsSection)
    gateway: GatewaySection = Field(default_factory=GatewaySection)
    translators: TranslatorsSection = Field(default_factory=TranslatorsSection)
    workload: WorkloadSection = Field(default_factory=WorkloadSection)
    server: ServerSection = Field(default_factory=ServerSection)
    logging: LoggingSection = Field(default_factory=LoggingSection)

    # 环境变量 -> (配置节, 字段, 类型)
    ENV_OVERRIDES: ClassVar[Dict[str, Tuple[str, str, type]]] = {
        "QB_CACHE_CAPACITY": ("gateway", "cache_capacity", int),
        "QB_QUEUE_CAPACITY": ("gateway", "queue_capacity", int),
        "QB_WORKERS": ("gateway", "worker_count", int),
        "QB_LOG_LEVEL": ("logging", "level", str),
    }

    @classmethod
    def from_file(cls, path: Optional[str]) -> "Settings":
        """
        从YAML或JSON文件加载配置(YAML解析器同时接受JSON)

        Args:
            path (str): 配置文件路径,为None时使用默认配置

        Returns:
            Settings: 配置对象实例
        """
        raw: Dict[str, Any] = {}
        base_dir = Path.cwd()
        if path is not None:
            config_path = Path(path)
            try:
                with open(config_path, encoding="utf-8") as f:
                    raw = yaml.safe_load(f) or {}
            except OSError as e:
                raise ConfigError(f"cannot read config {path}: {e}") from e
            except yaml.YAMLError as e:
                raise ConfigError(f"invalid config {path}: {e}") from e
            if not isinstance(raw, dict):
                raise ConfigError(f"config {path} must be a mapping")
            base_dir = config_path.resolve().parent

        try:
            settings = cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"invalid config: {e}") from e
        settings._apply_env()
        settings._resolve_paths(base_dir)
        settings.validate_files()
        return settings

    def _apply_env(self):
        """用环境变量覆盖配置项"""
        for env_name, (section, field, caster) in self.ENV_OVERRIDES.items():
            value = os.getenv(env_name)
            if value is None:
                continue
            try:
                setattr(getattr(self, section), field, caster(value))
            except ValueError as e:
                raise ConfigError(f"{env_name}={value!r} is not a valid {caster.__name__}") from e

    def _resolve_paths(self, base_dir: Path):
        """相对路径以配置文件所在目录为基准"""
        def resolve(p: Optional[str]) -> Optional[str]:
            if p is None or Path(p).is_absolute():
                return p
            return str(base_dir / p)

        self.translators.fast = resolve(self.translators.fast)
        self.translators.slow = resolve(self.translators.slow)
        self.workload.trace_path = resolve(self.workload.trace_path)

    def validate_files(self):
        """所有引用的输入文件必须在启动时存在"""
        for label, p in (("translators.fast", self.translators.fast),
                         ("translators.slow", self.translators.slow),
                         ("workload.trace_path", self.workload.trace_path)):
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{label} refers to a missing file: {p}")
        if self.workload.popularity == "trace" and self.workload.trace_path is None:
            raise ConfigError("workload.popularity=trace requires workload.trace_path")

    def gateway_config(self) -> GatewayConfig:
        """生成网关配置数据类"""
        return GatewayConfig(**self.gateway.model_dump())

    def mining_thresholds(self):
        """生成挖掘阈值"""
        from miner.stats import MiningThresholds
        try:
            return MiningThresholds.parse(self.thresholds.eta, self.thresholds.chi, self.thresholds.mode)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def workload_spec(self):
        """生成负载规格"""
        from loadsim.workload import WorkloadSpec
        w = self.workload
        return WorkloadSpec(
            total_requests=w.total_requests,
            distinct_queries=w.distinct_queries,
            popularity=w.popularity,
            zipf_s=w.zipf_s,
            trace_path=w.trace_path,
            seed=self.seed,
            target_repetition_rate=w.target_repetition_rate,
        )
