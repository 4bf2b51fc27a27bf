"""
BLEU-4, 基于 sacrebleu

输入先按查询规范化切词再用空格拼接, sacrebleu 使用 tokenize="none" 不再二次切词.
语料级 BLEU 不做平滑: 任一阶 n-gram 没有匹配时得分为 0;
得分由 sacrebleu 给出的截断匹配数和长度在 [0,1] 尺度上组合, 相同语料恰为 1.0.
句子级 sentence_bleu 用 sacrebleu 的 add-k(k=1) 平滑, 只用于诊断.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence

from sacrebleu.metrics import BLEU

from clickstream.records import tokenize
from errors import EmptyCorpus, InvalidInput

MAX_ORDER = 4

_corpus_bleu = BLEU(tokenize="none", smooth_method="none", effective_order=False, max_ngram_order=MAX_ORDER)
_sentence_bleu = BLEU(tokenize="none", smooth_method="add-k", smooth_value=1, effective_order=False,
                      max_ngram_order=MAX_ORDER)


def _prepare(text: str) -> str:
    return " ".join(tokenize(text))


@dataclass
class BleuScore:
    score: float
    precisions: List[float] = field(default_factory=list)
    brevity_penalty: float = 1.0
    hyp_length: int = 0
    ref_length: int = 0


def modified_precision(hypothesis: str, reference: str, n: int) -> Fraction:
    """单句的截断 n-gram 精度"""
    if not 1 <= n <= MAX_ORDER:
        raise InvalidInput(f"n-gram order must be in [1, {MAX_ORDER}], got {n}")
    stats = _corpus_bleu.corpus_score([_prepare(hypothesis)], [[_prepare(reference)]])
    total = stats.totals[n - 1]
    return Fraction(stats.counts[n - 1], total) if total else Fraction(0)


def corpus_bleu(hypotheses: Sequence[str], references: Sequence[str]) -> BleuScore:
    """
    语料级 BLEU-4: 各阶匹配数和总数在整个语料上累加后再求精度

    Raises:
        InvalidInput: 两个列表长度不同
        EmptyCorpus: 语料为空或切词后没有任何词
    """
    if len(hypotheses) != len(references):
        raise InvalidInput(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    hyps = [_prepare(h) for h in hypotheses]
    refs = [_prepare(r) for r in references]
    if not any(hyps) and not any(refs):
        raise EmptyCorpus("BLEU needs at least one non-empty sentence")

    stats = _corpus_bleu.corpus_score(hyps, [refs])
    precisions = [Fraction(c, t) if t else Fraction(0) for c, t in zip(stats.counts, stats.totals)]
    if min(precisions) == 0:
        score = 0.0
    else:
        score = stats.bp * math.exp(sum(math.log(p) for p in precisions) / MAX_ORDER)
    return BleuScore(score, [float(p) for p in precisions], stats.bp, stats.sys_len, stats.ref_len)


def bleu4(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    return corpus_bleu(hypotheses, references).score


def sentence_bleu(hypothesis: str, reference: str) -> float:
    hyp = _prepare(hypothesis)
    if not hyp:
        return 0.0
    return _sentence_bleu.sentence_score(hyp, [_prepare(reference)]).score / 100
