import json
import re
from pathlib import Path
from typing import BinaryIO, Callable, Dict, Iterator, Optional, Union

from clickstream.records import ClickRecord
from errors import FormatError, InvalidInput, ToolkitError, UnreadableSource
from logger.logger import get_logger

logger = get_logger(__name__)

TSV_V1 = "tsv-v1"
JSONL_V1 = "jsonl-v1"
SUPPORTED_FORMATS = (TSV_V1, JSONL_V1)

_CLICKS = re.compile(r"[0-9]+")
_MAX_WARNINGS = 20  # 最多逐行记录的坏行数量,之后只在汇总里体现


class MalformedLine(ValueError):
    """单行无法解析,摄入时计数并跳过"""


def _parse_tsv(line: str) -> ClickRecord:
    fields = line.split("\t")
    if len(fields) != 4:
        raise MalformedLine(f"expected 4 tab-separated fields, got {len(fields)}")
    user_id, query, translation, clicks = fields
    if not _CLICKS.fullmatch(clicks.strip()):
        raise MalformedLine(f"clicks must be a non-negative integer, got {clicks!r}")
    return ClickRecord.create(user_id, query, translation, int(clicks))


def _parse_jsonl(line: str) -> ClickRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedLine(f"invalid JSON: {e}") from e
    if not isinstance(obj, dict) or not {"u", "q", "t", "c"} <= obj.keys():
        raise MalformedLine("expected an object with keys u, q, t, c")
    u, q, t, c = obj["u"], obj["q"], obj["t"], obj["c"]
    if not all(isinstance(v, str) for v in (u, q, t)):
        raise MalformedLine("u, q, t must be strings")
    if isinstance(c, bool) or not isinstance(c, int) or c < 0:
        raise MalformedLine(f"c must be a non-negative integer, got {c!r}")
    return ClickRecord.create(u, q, t, c)


_PARSERS: Dict[str, Callable[[str], ClickRecord]] = {
    TSV_V1: _parse_tsv,
    JSONL_V1: _parse_jsonl,
}


def format_record(record: ClickRecord, fmt: str = TSV_V1) -> str:
    """把记录序列化为一行日志(含换行符), 与摄入互为逆操作"""
    if fmt == TSV_V1:
        fields = (record.user_id, record.query, record.translation)
        if any("\t" in f or "\n" in f for f in fields):
            raise InvalidInput("tab and newline are forbidden inside tsv-v1 fields")
        return f"{record.user_id}\t{record.query}\t{record.translation}\t{record.clicks}\n"
    if fmt == JSONL_V1:
        obj = {"u": record.user_id, "q": record.query, "t": record.translation, "c": record.clicks}
        return json.dumps(obj, ensure_ascii=False) + "\n"
    raise FormatError(f"unknown log format: {fmt}")


class ClickLogReader:
    """
    点击日志读取器
    逐行解析字节流,产出规范化后的 ClickRecord; 坏行计数后跳过,不会中断摄入
    """

    def __init__(self,
                 source: Optional[BinaryIO] = None,  # 已打开的二进制流
                 fmt: str = TSV_V1,  # 日志格式标签
                 path: Optional[Union[str, Path]] = None):  # 或者给出文件路径,迭代时再打开
        if fmt not in _PARSERS:
            raise FormatError(f"unknown log format: {fmt}, supported: {', '.join(SUPPORTED_FORMATS)}")
        if (source is None) == (path is None):
            raise InvalidInput("exactly one of source or path is required")
        self.source = source
        self.path = Path(path) if path is not None else None
        self.fmt = fmt
        self._parse = _PARSERS[fmt]
        self.lines_seen = 0  # 非空行数
        self.emitted = 0  # 产出的记录数
        self.malformed = 0  # 跳过的坏行数

    @property
    def name(self) -> str:
        return str(self.path) if self.path is not None else getattr(self.source, "name", "<stream>")

    def __iter__(self) -> Iterator[ClickRecord]:
        if self.path is not None:
            try:
                stream = open(self.path, "rb")
            except OSError as e:
                raise UnreadableSource(f"cannot open click log {self.path}: {e}") from e
            with stream:
                yield from self._read(stream)
        else:
            yield from self._read(self.source)

    def _read(self, stream: BinaryIO) -> Iterator[ClickRecord]:
        lineno = 0
        try:
            for lineno, raw in enumerate(stream, 1):
                line = raw.rstrip(b"\r\n")
                if not line.strip():
                    continue
                self.lines_seen += 1
                try:
                    record = self._parse(line.decode("utf-8"))
                except (UnicodeDecodeError, MalformedLine, ToolkitError) as e:
                    self._skip(lineno, e)
                    continue
                self.emitted += 1
                yield record
        except OSError as e:
            raise UnreadableSource(f"I/O error reading {self.name} at line {lineno}: {e}") from e

        logger.info(
            f"Ingested {self.emitted} records from {self.name}, skipped {self.malformed} malformed lines",
            extra={"source": self.name, "emitted": self.emitted, "malformed": self.malformed},
        )

    def _skip(self, lineno: int, error: Exception):
        self.malformed += 1
        if self.malformed <= _MAX_WARNINGS:
            logger.warning(f"Skipping malformed line {lineno} of {self.name}: {error}")


def ingest(source: BinaryIO, fmt: str = TSV_V1) -> ClickLogReader:
    """从字节流摄入点击日志"""
    return ClickLogReader(source=source, fmt=fmt)


def ingest_path(path: Union[str, Path], fmt: str = TSV_V1) -> ClickLogReader:
    """从文件摄入点击日志"""
    return ClickLogReader(path=path, fmt=fmt)
