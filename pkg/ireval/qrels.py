"""
相关性判断(qrels)与检索结果(run)文件读写

qrels: 每行 `query_id 0 doc_id relevance`, relevance > 0 视为相关
run:   每行 `query_id doc_id rank score`, 也接受经典的六列格式
       `query_id Q0 doc_id rank score tag`
"""
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Set, Tuple, Union

from errors import FormatError, UnreadableSource
from logger.logger import get_logger

logger = get_logger(__name__)

Qrels = Dict[str, Set[str]]
RankedRun = Dict[str, List[str]]
ScoredRun = Mapping[str, Sequence[Tuple[str, float]]]


def _lines(path: Union[str, Path]):
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                if line.strip():
                    yield lineno, line.split()
    except (OSError, UnicodeDecodeError) as e:
        raise UnreadableSource(f"cannot read {path}: {e}") from e


def read_qrels(path: Union[str, Path]) -> Qrels:
    """
    读取判断文件

    只出现过不相关判断的查询也会保留(相关集合为空), 评测时据此统计被排除的查询数
    """
    qrels: Qrels = defaultdict(set)
    for lineno, parts in _lines(path):
        if len(parts) != 4:
            raise FormatError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
        qid, _, doc, rel = parts
        try:
            relevance = int(rel)
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: relevance must be an integer: {rel!r}") from e
        judged = qrels[qid]
        if relevance > 0:
            judged.add(doc)
    return dict(qrels)


def read_run(path: Union[str, Path]) -> RankedRun:
    """读取检索结果, 每个查询按 rank 升序排列, 重复文档只保留第一次出现"""
    rows: Dict[str, List[Tuple[int, str]]] = defaultdict(list)
    for lineno, parts in _lines(path):
        if len(parts) == 4:
            qid, doc, rank, _ = parts
        elif len(parts) == 6:
            qid, _, doc, rank, _, _ = parts
        else:
            raise FormatError(f"{path}:{lineno}: expected 4 or 6 columns, got {len(parts)}")
        try:
            rows[qid].append((int(rank), doc))
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: rank must be an integer: {rank!r}") from e

    run: RankedRun = {}
    for qid, ranked in rows.items():
        seen: Set[str] = set()
        docs = []
        for _, doc in sorted(ranked, key=lambda x: x[0]):
            if doc in seen:
                logger.warning("Duplicate document in run dropped", extra={"query_id": qid, "doc_id": doc})
                continue
            seen.add(doc)
            docs.append(doc)
        run[qid] = docs
    return run


def write_run(run: ScoredRun, path: Union[str, Path], tag: str = "querybridge") -> int:
    """按六列格式写出带分数的检索结果, 返回写出的行数"""
    written = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for qid in sorted(run):
            for rank, (doc, score) in enumerate(run[qid], 1):
                f.write(f"{qid} Q0 {doc} {rank} {score:.6f} {tag}\n")
                written += 1
    return written
