"""训练语料清单

两种领域适配策略:
    JT (joint training): 挖掘语料混入通用语料, 从头训练, 只有一个阶段
    FT (fine-tuning): 先在通用语料上训练到收敛, 再只用挖掘语料继续训练
清单只描述各阶段用哪个文件、训练到什么程度, 由外部训练器消费
"""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, List, Literal, Union

from errors import BaseCorpusUnreadable, EmptyMinedSet, FormatError, InvalidInput
from logger.logger import get_logger
from miner.stats import MinedPair

logger = get_logger(__name__)

Strategy = Literal["JT", "FT"]

# 训练阶段策略标签
TRAIN_FROM_SCRATCH = "train-from-scratch"
TRAIN_UNTIL_CONVERGENCE = "train-until-convergence"
FINE_TUNE_UNTIL_CONVERGENCE = "fine-tune-until-convergence"

JT_FILENAME = "jt_train.tsv"
MINED_FILENAME = "mined.tsv"


@dataclass(frozen=True)
class CorpusStage:
    path: str
    policy: str
    count: int


@dataclass
class CorpusManifest:
    strategy: Strategy
    stages: List[CorpusStage] = field(default_factory=list)
    repeat_factor: int = 1

    @property
    def total_count(self) -> int:
        return sum(stage.count for stage in self.stages)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "stages": [asdict(stage) for stage in self.stages],
            "repeat_factor": self.repeat_factor,
        }

    def write(self, path: Union[str, Path]):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "CorpusManifest":
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        return cls(
            strategy=data["strategy"],
            stages=[CorpusStage(**stage) for stage in data["stages"]],
            repeat_factor=data.get("repeat_factor", 1),
        )


def _read_base(path: Path) -> List[str]:
    """读取并校验平行语料, 每行 source \\t target"""
    lines = []
    try:
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
                    raise FormatError(f"{path}:{lineno}: expected 'source\\ttarget'")
                lines.append(line)
    except (OSError, UnicodeDecodeError) as e:
        raise BaseCorpusUnreadable(f"cannot read base corpus {path}: {e}") from e
    return lines


def build_manifest(base: Union[str, Path],
                   mined: Iterable[MinedPair],
                   strategy: Strategy,
                   out_dir: Union[str, Path],
                   repeat_factor: int = 1) -> CorpusManifest:
    """
    构建训练语料清单

    Args:
        base: 通用平行语料文件
        mined: 挖掘出的查询翻译对, 按给定顺序写出
        strategy: JT 或 FT
        out_dir: 生成的语料文件所在目录
        repeat_factor: JT 模式下挖掘语料的重复次数(过采样), 默认不重复

    Returns:
        CorpusManifest; JT 的行数等于 base + mined * repeat_factor
    """
    if strategy not in ("JT", "FT"):
        raise InvalidInput(f"strategy must be JT or FT, got {strategy!r}")
    if repeat_factor < 1:
        raise InvalidInput(f"repeat_factor must be >= 1, got {repeat_factor}")
    mined = list(mined)
    if not mined:
        raise EmptyMinedSet("mined set is empty, nothing to adapt with")

    base = Path(base)
    base_lines = _read_base(base)
    mined_lines = [f"{p.query}\t{p.translation}" for p in mined]
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if strategy == "JT":
        path = out_dir / JT_FILENAME
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in base_lines:
                f.write(line + "\n")
            for _ in range(repeat_factor):
                for line in mined_lines:
                    f.write(line + "\n")
        stages = [CorpusStage(str(path), TRAIN_FROM_SCRATCH, len(base_lines) + len(mined_lines) * repeat_factor)]
    else:
        path = out_dir / MINED_FILENAME
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in mined_lines:
                f.write(line + "\n")
        stages = [
            CorpusStage(str(base), TRAIN_UNTIL_CONVERGENCE, len(base_lines)),
            CorpusStage(str(path), FINE_TUNE_UNTIL_CONVERGENCE, len(mined_lines)),
        ]
        if repeat_factor != 1:
            logger.warning("repeat_factor only applies to JT, ignored for FT")
            repeat_factor = 1

    manifest = CorpusManifest(strategy=strategy, stages=stages, repeat_factor=repeat_factor)
    logger.info(
        f"Built {strategy} manifest",
        extra={"stages": len(stages), "lines": manifest.total_count},
    )
    return manifest
