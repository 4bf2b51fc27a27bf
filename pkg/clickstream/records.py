import unicodedata
from dataclasses import dataclass
from typing import List

from errors import EmptyAfterNormalization, InvalidInput


@dataclass(frozen=True)
class NormalizedQuery:
    """规范化后的查询串,作为聚合键使用

    不变式: 无首尾空白, 内部空白折叠为一个空格, NFC组合形式, 大小写折叠
    """
    text: str

    def __str__(self) -> str:
        return self.text


def normalize(raw: str) -> NormalizedQuery:
    """把原始查询规范化

    顺序: NFC -> casefold -> NFC -> 空白折叠; 结果是幂等的
    """
    text = unicodedata.normalize("NFC", raw)
    text = unicodedata.normalize("NFC", text.casefold())
    text = " ".join(text.split())
    if not text:
        raise EmptyAfterNormalization(f"query is empty after normalization: {raw!r}")
    return NormalizedQuery(text)


def tokenize(text: str) -> List[str]:
    """规范化之后按空白切词; 空串返回空列表"""
    try:
        return normalize(text).text.split(" ")
    except EmptyAfterNormalization:
        return []


@dataclass(frozen=True)
class ClickRecord:
    """一条点击日志记录 <user, query, translation, clicks>

    query 和 translation 在摄入时已经规范化, 以字符串形式保存
    """
    user_id: str
    query: str
    translation: str
    clicks: int  # 结果页上点击的商品数量

    def __post_init__(self):
        if not self.user_id:
            raise InvalidInput("user_id must be non-empty")
        if not self.query or not self.translation:
            raise InvalidInput("query and translation must be non-empty")
        if isinstance(self.clicks, bool) or not isinstance(self.clicks, int) or self.clicks < 0:
            raise InvalidInput(f"clicks must be a non-negative integer, got {self.clicks!r}")

    @classmethod
    def create(cls, user_id: str, query: str, translation: str, clicks: int) -> "ClickRecord":
        """从原始字段创建记录, 会对查询和译文做规范化"""
        return cls(
            user_id=user_id.strip(),
            query=normalize(query).text,
            translation=normalize(translation).text,
            clicks=clicks,
        )

    @property
    def key(self):
        """聚合键 (query, translation)"""
        return (self.query, self.translation)
