"""翻译后端描述: 延迟模型、翻译表和回退策略"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

from clickstream.records import normalize
from errors import ConfigError, EmptyAfterNormalization, FormatError, UnreadableSource


@dataclass(frozen=True)
class FixedLatency:
    ms: float

    def __post_init__(self):
        if self.ms < 0:
            raise ConfigError(f"fixed latency must be >= 0, got {self.ms}")

    @property
    def median_ms(self) -> float:
        return self.ms


@dataclass(frozen=True)
class LognormalLatency:
    """对数正态延迟: L = median * exp(sigma * Z), Z ~ N(0, 1)"""
    median_ms: float
    sigma: float

    def __post_init__(self):
        if self.median_ms <= 0:
            raise ConfigError(f"lognormal median must be > 0, got {self.median_ms}")
        if self.sigma < 0:
            raise ConfigError(f"lognormal sigma must be >= 0, got {self.sigma}")


LatencyModel = Union[FixedLatency, LognormalLatency]

ECHO = "echo"
TOKEN_MAP = "token-map"


@dataclass
class TranslatorSpec:
    """
    一个(模拟)翻译后端的完整描述

    table 的键是规范化后的查询; 查表未命中时按 fallback 处理:
    echo 原样返回查询, token-map 逐词查双语词典, 词典里没有的词保持原样
    """
    name: str
    latency: LatencyModel = field(default_factory=lambda: FixedLatency(10.0))
    table: Dict[str, str] = field(default_factory=dict)
    fallback: str = ECHO
    dictionary: Dict[str, str] = field(default_factory=dict)
    seed: int = 0
    failure_rate: float = 0.0  # 每次调用随机失败的概率, 用于故障注入

    def __post_init__(self):
        if not self.name:
            raise ConfigError("translator name must be non-empty")
        if self.fallback not in (ECHO, TOKEN_MAP):
            raise ConfigError(f"fallback must be {ECHO} or {TOKEN_MAP}, got {self.fallback!r}")
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ConfigError(f"failure_rate must lie in [0, 1], got {self.failure_rate}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        self.table = {normalize(k).text: v for k, v in self.table.items()}

    @classmethod
    def fixed(cls, name: str, ms: float, table: Optional[Dict[str, str]] = None, **kwargs) -> "TranslatorSpec":
        return cls(name=name, latency=FixedLatency(ms), table=dict(table or {}), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Optional[Path] = None) -> "TranslatorSpec":
        """从 JSON 对象构建; 相对路径相对于 base_dir 解析"""
        base_dir = base_dir or Path(".")
        try:
            latency = _parse_latency(data.get("latency", {"kind": "fixed", "ms": 10}))
            table = dict(data.get("table", {}))
            if data.get("table_path"):
                table.update(read_table(base_dir / data["table_path"]))

            fallback = data.get("fallback", ECHO)
            dictionary: Dict[str, str] = {}
            if isinstance(fallback, dict):
                kind = fallback.get("kind")
                if kind == TOKEN_MAP:
                    dictionary = read_table(base_dir / fallback["dictionary_path"])
                fallback = kind

            return cls(
                name=data["name"],
                latency=latency,
                table=table,
                fallback=fallback,
                dictionary=dictionary,
                seed=int(data.get("seed", 0)),
                failure_rate=float(data.get("failure_rate", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid translator spec: {e}") from e

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "TranslatorSpec":
        path = Path(path)
        try:
            with open(path, encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read translator spec {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"translator spec {path} is not valid JSON: {e}") from e
        return cls.from_dict(data, base_dir=path.parent)


def _parse_latency(data: dict) -> LatencyModel:
    kind = data.get("kind", "fixed")
    if kind == "fixed":
        return FixedLatency(float(data["ms"]))
    if kind == "lognormal":
        return LognormalLatency(float(data["median_ms"]), float(data["sigma"]))
    raise ConfigError(f"unknown latency model: {kind!r}")


def read_table(path: Union[str, Path]) -> Dict[str, str]:
    """读取翻译表/词典, 每行 query \\t translation, 键做规范化"""
    table: Dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 2 or not fields[1].strip():
                    raise FormatError(f"{path}:{lineno}: expected 'query\\ttranslation'")
                try:
                    table[normalize(fields[0]).text] = fields[1].strip()
                except EmptyAfterNormalization as e:
                    raise FormatError(f"{path}:{lineno}: empty query") from e
    except (OSError, UnicodeDecodeError) as e:
        raise UnreadableSource(f"cannot read translation table {path}: {e}") from e
    return table
