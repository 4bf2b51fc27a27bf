"""
Wilcoxon 符号秩检验(配对, 双侧)

去掉零差值; 绝对差值相同时取平均秩.
n < 20 时枚举全部符号分配得到精确 p 值(平均秩乘 2 后是整数, 按和做动态规划);
n >= 20 时用带连续性校正和结差方差修正的正态近似
"""
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Dict, List, Literal, Mapping, Sequence, Union

import numpy as np
from scipy.stats import norm, rankdata

from errors import InvalidInput, TooFewPairs
from ireval.metrics import EvalReport
from logger.logger import get_logger

logger = get_logger(__name__)

Method = Literal["auto", "exact", "approx"]

MIN_PAIRS = 5
EXACT_BELOW = 20
DIFF_DECIMALS = 12


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min(W+, W-)
    w_plus: float
    w_minus: float
    n: int
    p_value: float  # 双侧
    p_value_greater: float  # 单侧, 备择假设 a > b
    significant: bool
    method: str

    def to_dict(self) -> dict:
        return asdict(self)


def _sum_distribution(doubled: Sequence[int]) -> List[int]:
    """counts[s] = 正号秩(乘 2 后)之和为 s 的符号分配个数"""
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for d in doubled:
        for s in range(total, d - 1, -1):
            counts[s] += counts[s - d]
    return counts


def _exact(doubled: Sequence[int], w_plus2: int, w_minus2: int):
    counts = _sum_distribution(doubled)
    space = 2 ** len(doubled)

    def cdf(x: int) -> Fraction:
        return Fraction(sum(counts[:x + 1]), space)

    two_sided = min(Fraction(1), 2 * cdf(min(w_plus2, w_minus2)))
    # 分布关于 total/2 对称: P(W+ >= w+) = P(W+ <= w-)
    greater = cdf(w_minus2)
    return float(two_sided), float(greater)


def _approx(abs_diffs: np.ndarray, w_plus: float, statistic: float):
    n = len(abs_diffs)
    mu = n * (n + 1) / 4
    _, ties = np.unique(abs_diffs, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - float(np.sum(ties ** 3 - ties)) / 48
    sigma = np.sqrt(var)

    z = (statistic - mu - 0.5 * np.sign(statistic - mu)) / sigma
    two_sided = min(1.0, float(2 * norm.sf(abs(z))))
    z_plus = (w_plus - mu - 0.5 * np.sign(w_plus - mu)) / sigma
    return two_sided, float(norm.sf(z_plus))


def wilcoxon_signed_rank(a: Sequence[float],
                         b: Sequence[float],
                         alpha: Union[float, str, Fraction] = "0.05",
                         method: Method = "auto") -> WilcoxonResult:
    """
    配对样本 a, b 的 Wilcoxon 符号秩检验

    Args:
        alpha: 显著性水平, 以精确分数与 p 值比较(p <= alpha 为显著)
        method: auto 在 n < 20 时精确计算, 否则用正态近似

    Raises:
        InvalidInput: 两组长度不同或 method 未知
        TooFewPairs: 去掉零差值后不足 5 对
    """
    if len(a) != len(b):
        raise InvalidInput(f"paired samples differ in length: {len(a)} vs {len(b)}")
    if method not in ("auto", "exact", "approx"):
        raise InvalidInput(f"unknown method: {method!r}")
    level = Fraction(str(alpha))

    # 舍入到 12 位小数, 数学上相等的指标差值(如 0.3-0.1 与 0.5-0.3)才能算作结
    diffs = np.round(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64), DIFF_DECIMALS)
    diffs = diffs[diffs != 0]
    n = len(diffs)
    if n < MIN_PAIRS:
        raise TooFewPairs(f"{n} non-zero paired differences, need at least {MIN_PAIRS}")

    abs_diffs = np.abs(diffs)
    ranks = rankdata(abs_diffs)  # 默认 average
    w_plus = float(ranks[diffs > 0].sum())
    w_minus = float(ranks[diffs < 0].sum())
    statistic = min(w_plus, w_minus)

    use_exact = method == "exact" or (method == "auto" and n < EXACT_BELOW)
    if use_exact:
        doubled = [int(round(2 * r)) for r in ranks]
        p_value, p_greater = _exact(doubled, int(round(2 * w_plus)), int(round(2 * w_minus)))
    else:
        p_value, p_greater = _approx(abs_diffs, w_plus, statistic)

    return WilcoxonResult(
        statistic=statistic,
        w_plus=w_plus,
        w_minus=w_minus,
        n=n,
        p_value=p_value,
        p_value_greater=p_greater,
        significant=Fraction(p_value) <= level,
        method="exact" if use_exact else "approx",
    )


def compare_systems(reports: Mapping[str, EvalReport],
                    baseline: str,
                    metric: str = "MAP",
                    alpha: Union[float, str, Fraction] = "0.05") -> Dict[str, WilcoxonResult]:
    """
    基线系统与其余每个系统在共同查询上做逐查询的 Wilcoxon 检验

    差值太少(TooFewPairs)的系统不出现在结果中, 只记一条警告
    """
    if baseline not in reports:
        raise InvalidInput(f"baseline {baseline!r} is not among the evaluated systems")
    base_scores = reports[baseline].scores(metric)
    results: Dict[str, WilcoxonResult] = {}
    for name, report in reports.items():
        if name == baseline:
            continue
        scores = report.scores(metric)
        common = sorted(set(base_scores) & set(scores))
        try:
            results[name] = wilcoxon_signed_rank(
                [scores[q] for q in common], [base_scores[q] for q in common], alpha)
        except TooFewPairs as e:
            logger.warning(f"No significance test for {name}: {e.message}")
    return results
