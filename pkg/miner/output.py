from pathlib import Path
from typing import Iterable, List, Union

from errors import FormatError, InvalidInput, UnreadableSource
from miner.stats import MinedPair, PairStats


def write_mined(pairs: Iterable[MinedPair], path: Union[str, Path]) -> int:
    """
    写出挖掘语料: query \\t translation \\t luv \\t duv \\t ctr
    按 luv 降序、查询字典序排列, 保证输出确定
    """
    ordered = sorted(pairs, key=lambda p: (-p.stats.luv, p.query, p.translation))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for p in ordered:
            f.write(f"{p.query}\t{p.translation}\t{p.stats.luv}\t{p.stats.duv}\t{float(p.stats.ctr):.6f}\n")
    return len(ordered)


def read_mined(path: Union[str, Path]) -> List[MinedPair]:
    """读取挖掘语料; ctr 列只用于展示, 由 luv/duv 重新计算"""
    pairs = []
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 5:
                    raise FormatError(f"{path}:{lineno}: expected 5 fields, got {len(fields)}")
                query, translation, luv, duv, _ = fields
                try:
                    stats = PairStats(query, translation, int(luv), int(duv))
                except (ValueError, InvalidInput) as e:
                    raise FormatError(f"{path}:{lineno}: {e}") from e
                pairs.append(MinedPair(query, translation, stats))
    except OSError as e:
        raise UnreadableSource(f"cannot read mined corpus {path}: {e}") from e
    return pairs
