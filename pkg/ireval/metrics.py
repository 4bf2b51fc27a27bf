"""
检索评测指标: P@k, AP/MAP, NDCG@k, 11点插值 P-R 曲线

二元相关性. 只评测至少有一个相关文档的查询;
run 中缺失的查询默认各指标记 0, skip_missing=True 时跳过
"""
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from errors import InvalidInput, NoJudgedQueries, NoRelevantDocs
from ireval.qrels import Qrels, RankedRun
from logger.logger import get_logger

logger = get_logger(__name__)

DEFAULT_K = 10
DEFAULT_DEPTH = 1000
ELEVEN_POINTS: Tuple[float, ...] = tuple(i / 10 for i in range(11))


# ---- 单个查询 ----
def precision_at(ranked: Sequence[str], relevant: Set[str], k: int) -> float:
    """不足 k 个结果时按不相关补齐"""
    return sum(1 for doc in ranked[:k] if doc in relevant) / k


def _require_relevant(relevant: Set[str]):
    if not relevant:
        raise NoRelevantDocs("query has no relevant documents")


def average_precision_of(ranked: Sequence[str], relevant: Set[str], depth: int = DEFAULT_DEPTH) -> float:
    _require_relevant(relevant)
    hits = 0
    total = 0.0
    for rank, doc in enumerate(ranked[:depth], 1):
        if doc in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def ndcg_of(ranked: Sequence[str], relevant: Set[str], k: int) -> float:
    _require_relevant(relevant)
    dcg = sum(1 / math.log2(i + 1) for i, doc in enumerate(ranked[:k], 1) if doc in relevant)
    idcg = sum(1 / math.log2(i + 1) for i in range(1, min(k, len(relevant)) + 1))
    return dcg / idcg


def interpolated_precision(ranked: Sequence[str],
                           relevant: Set[str],
                           levels: Sequence[float] = ELEVEN_POINTS) -> List[float]:
    """每个召回水平上的插值精度: 召回率不低于该水平的所有位置中的最大精度"""
    _require_relevant(relevant)
    points: List[Tuple[float, float]] = []
    hits = 0
    for rank, doc in enumerate(ranked, 1):
        if doc in relevant:
            hits += 1
        points.append((hits / len(relevant), hits / rank))
    return [max((p for r, p in points if r >= level), default=0.0) for level in levels]


# ---- 查询集合 ----
@dataclass
class MetricResult:
    per_query: Dict[str, float]
    mean: float
    excluded: int = 0  # 没有相关文档而被排除的查询数


def _check_levels(levels: Sequence[float]):
    if not levels:
        raise InvalidInput("recall levels must not be empty")
    if any(not 0 <= level <= 1 for level in levels):
        raise InvalidInput(f"recall levels must lie in [0, 1]: {list(levels)}")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidInput(f"recall levels must be increasing: {list(levels)}")


def judged_queries(run: RankedRun, qrels: Qrels, skip_missing: bool = False) -> Tuple[List[str], int]:
    """
    返回参与评测的查询 id(排序后)和被排除的查询数

    Raises:
        NoJudgedQueries: 没有任何查询可以评测
    """
    excluded = sum(1 for docs in qrels.values() if not docs)
    if excluded:
        logger.warning(f"{excluded} queries without relevant documents excluded")
    queries = sorted(qid for qid, docs in qrels.items() if docs)
    if skip_missing:
        queries = [qid for qid in queries if qid in run]
    if not queries:
        raise NoJudgedQueries("no query has a relevant document to evaluate against")
    return queries, excluded


def _per_query(run: RankedRun, qrels: Qrels, skip_missing: bool, score) -> MetricResult:
    queries, excluded = judged_queries(run, qrels, skip_missing)
    per_query = {qid: score(run.get(qid, []), qrels[qid]) for qid in queries}
    return MetricResult(per_query, sum(per_query.values()) / len(per_query), excluded)


def precision_at_k(run: RankedRun, qrels: Qrels, k: int = DEFAULT_K, skip_missing: bool = False) -> MetricResult:
    if k < 1:
        raise InvalidInput(f"k must be >= 1, got {k}")
    return _per_query(run, qrels, skip_missing, lambda ranked, rel: precision_at(ranked, rel, k))


def average_precision(run: RankedRun,
                      qrels: Qrels,
                      depth: int = DEFAULT_DEPTH,
                      skip_missing: bool = False) -> MetricResult:
    """每个查询的 AP, mean 即 MAP; 只看前 depth 个结果"""
    if depth < 1:
        raise InvalidInput(f"depth must be >= 1, got {depth}")
    return _per_query(run, qrels, skip_missing, lambda ranked, rel: average_precision_of(ranked, rel, depth))


def ndcg_at_k(run: RankedRun, qrels: Qrels, k: int = DEFAULT_K, skip_missing: bool = False) -> MetricResult:
    if k < 1:
        raise InvalidInput(f"k must be >= 1, got {k}")
    return _per_query(run, qrels, skip_missing, lambda ranked, rel: ndcg_of(ranked, rel, k))


def pr_curve(run: RankedRun,
             qrels: Qrels,
             levels: Sequence[float] = ELEVEN_POINTS,
             depth: int = DEFAULT_DEPTH,
             skip_missing: bool = False) -> List[Tuple[float, float]]:
    """各查询插值精度在每个召回水平上的平均"""
    _check_levels(levels)
    queries, _ = judged_queries(run, qrels, skip_missing)
    sums = [0.0] * len(levels)
    for qid in queries:
        for i, p in enumerate(interpolated_precision(run.get(qid, [])[:depth], qrels[qid], levels)):
            sums[i] += p
    return [(level, total / len(queries)) for level, total in zip(levels, sums)]


# ---- 报告 ----
@dataclass
class EvalReport:
    system: str
    k: int
    depth: int
    per_query: Dict[str, Dict[str, float]]
    means: Dict[str, float]
    curve: List[Tuple[float, float]] = field(default_factory=list)
    excluded: int = 0
    missing: int = 0  # 有相关文档但不在 run 中的查询数

    def metric_names(self) -> List[str]:
        return [f"P@{self.k}", "MAP", f"NDCG@{self.k}"]

    def scores(self, metric: str) -> Dict[str, float]:
        """按查询取某个指标; MAP 对应每个查询的 AP"""
        key = "AP" if metric == "MAP" else metric
        if key not in (f"P@{self.k}", "AP", f"NDCG@{self.k}"):
            raise InvalidInput(f"unknown metric: {metric!r}")
        return {qid: values[key] for qid, values in self.per_query.items()}

    def to_dict(self) -> dict:
        data = asdict(self)
        data["curve"] = [{"recall": r, "precision": p} for r, p in self.curve]
        return data

    def write_json(self, path: Union[str, Path]):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")


def evaluate(run: RankedRun,
             qrels: Qrels,
             k: int = DEFAULT_K,
             depth: int = DEFAULT_DEPTH,
             skip_missing: bool = False,
             levels: Sequence[float] = ELEVEN_POINTS,
             system: str = "run") -> EvalReport:
    """一次算出 P@k, AP/MAP, NDCG@k 和 P-R 曲线"""
    cut = {qid: docs[:depth] for qid, docs in run.items()}
    p = precision_at_k(cut, qrels, k, skip_missing)
    ap = average_precision(cut, qrels, depth, skip_missing)
    ndcg = ndcg_at_k(cut, qrels, k, skip_missing)
    curve = pr_curve(cut, qrels, levels, depth, skip_missing)

    per_query = {
        qid: {f"P@{k}": p.per_query[qid], "AP": ap.per_query[qid], f"NDCG@{k}": ndcg.per_query[qid]}
        for qid in p.per_query
    }
    missing = sum(1 for qid in per_query if qid not in run)
    if missing:
        logger.warning(f"{missing} judged queries missing from run {system!r} scored 0")
    report = EvalReport(
        system=system,
        k=k,
        depth=depth,
        per_query=per_query,
        means={f"P@{k}": p.mean, "MAP": ap.mean, f"NDCG@{k}": ndcg.mean},
        curve=curve,
        excluded=p.excluded,
        missing=missing,
    )
    logger.info(
        f"Evaluated {system}: MAP {ap.mean:.4f}",
        extra={"queries": len(per_query), "excluded": p.excluded},
    )
    return report


def write_table_csv(reports: Iterable[EvalReport],
                    path: Union[str, Path],
                    significance: Optional[Mapping[str, object]] = None):
    """
    每个系统一行: system,P@k,MAP,NDCG@k

    给出 significance(系统名 -> WilcoxonResult)时追加 p 值和显著性两列, 基线系统这两列留空
    """
    reports = list(reports)
    if not reports:
        raise InvalidInput("no reports to write")
    header = ["system", *reports[0].metric_names()]
    if significance is not None:
        header += ["wilcoxon_p", "significant"]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for report in reports:
            row = [report.system] + [f"{report.means[m]:.4f}" for m in report.metric_names()]
            if significance is not None:
                result = significance.get(report.system)
                row += ["", ""] if result is None else [f"{result.p_value:.6f}", str(result.significant).lower()]
            f.write(",".join(row) + "\n")
