from fractions import Fraction
from pathlib import Path
from typing import Iterable, Set, Union

from clickstream.records import tokenize
from errors import EmptyCorpus, UnreadableSource


def source_vocabulary(lines: Iterable[str]) -> Set[str]:
    """平行语料源语言一侧的词型集合"""
    vocab: Set[str] = set()
    for line in lines:
        source = line.rstrip("\r\n").split("\t", 1)[0]
        vocab.update(tokenize(source))
    return vocab


def _vocabulary_of(path: Union[str, Path]) -> Set[str]:
    try:
        with open(path, encoding="utf-8") as f:
            vocab = source_vocabulary(f)
    except (OSError, UnicodeDecodeError) as e:
        raise UnreadableSource(f"cannot read corpus {path}: {e}") from e
    if not vocab:
        raise EmptyCorpus(f"corpus has no words: {path}")
    return vocab


def word_coverage(train: Union[str, Path], test: Union[str, Path]) -> Fraction:
    """测试集源语言词型中出现在训练集里的比例"""
    train_vocab = _vocabulary_of(train)
    test_vocab = _vocabulary_of(test)
    return Fraction(len(test_vocab & train_vocab), len(test_vocab))
