"""
querybridge 命令行

子命令: mine, report, corpus, coverage, serve, simulate, translate, evaluate, bleu
所有子命令都接受 --seed, --config 和日志参数; 退出码 0 成功, 1 用法错误, 2 数据错误
结果写到文件或标准输出, 日志写到标准错误
"""
import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from errors import EXIT_OK, ConfigError, ErrorHandler, InvalidInput
from config.settings import Settings
from logger.logger import LoggerManager, get_logger

logger = get_logger(__name__)

DEFAULT_LUV_EDGES = "1,5,15,50,inf"
DEFAULT_CTR_EDGES = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"


class ArgumentParser(argparse.ArgumentParser):
    """参数错误抛出 InvalidInput, 由 main 统一映射为退出码 1"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise InvalidInput(message)


def _emit(data: Any):
    print(json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True))


def _settings(args: argparse.Namespace) -> Settings:
    settings = Settings.from_file(args.config)
    if args.seed is not None:
        settings.seed = args.seed
    return settings


def _configure_logging(args: argparse.Namespace):
    """命令行参数优先, 其次是配置文件中的 logging 节"""
    section = None
    if args.config is not None:
        try:
            section = Settings.from_file(args.config).logging
        except ConfigError:
            section = None  # 配置错误在命令执行时再报告
    level = args.log_level or (section.level if section else "INFO")
    json_format = args.log_json if args.log_json is not None else (section.json_format if section else True)
    log_dir = args.log_dir or (section.dir if section else None)
    try:
        LoggerManager(level=level, format_json=json_format, log_dir=log_dir)
    except AttributeError as e:
        raise InvalidInput(f"unknown log level: {level!r}") from e


# ---- mine / report ----
def _aggregate_log(args: argparse.Namespace, settings: Settings):
    from clickstream.reader import ingest_path
    from miner.stats import aggregate_sharded

    counting = args.counting or settings.thresholds.counting
    reader = ingest_path(args.log, args.format)
    stats = aggregate_sharded(reader, shards=args.shards, workers=args.workers, counting=counting)
    return reader, stats


def cmd_mine(args: argparse.Namespace) -> int:
    from miner.output import write_mined
    from miner.report import distribution_report, parse_edges
    from miner.stats import MiningThresholds, filter_pairs

    settings = _settings(args)
    t = settings.thresholds
    thresholds = MiningThresholds.parse(
        args.eta if args.eta is not None else t.eta,
        args.chi if args.chi is not None else t.chi,
        args.mode or t.mode,
    )
    reader, stats = _aggregate_log(args, settings)
    mined = filter_pairs(stats, thresholds)
    write_mined(mined, args.out)

    summary: Dict[str, Any] = {
        "records": reader.emitted,
        "malformed": reader.malformed,
        "pairs_in": len(stats),
        "pairs_out": len(mined),
        "thresholds": {"eta": str(thresholds.eta), "chi": thresholds.chi, "mode": thresholds.mode},
        "ctr_histogram": [],
    }
    if mined:
        buckets = distribution_report([p.stats for p in mined], "ctr", parse_edges(DEFAULT_CTR_EDGES))
        summary["ctr_histogram"] = [
            {"low": float(b.low), "high": float(b.high), "count": b.count} for b in buckets
        ]
    logger.info(f"Mined {len(mined)} of {len(stats)} pairs", extra={"out": str(args.out)})
    _emit(summary)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    from miner.report import distribution_report, parse_edges, write_histogram

    settings = _settings(args)
    _, stats = _aggregate_log(args, settings)
    edges = parse_edges(args.edges or (DEFAULT_LUV_EDGES if args.axis == "luv" else DEFAULT_CTR_EDGES))
    buckets = distribution_report(stats, args.axis, edges, cumulative=args.cumulative, min_luv=args.min_luv)
    write_histogram(buckets, args.out)
    _emit({
        "axis": args.axis,
        "pairs": len(stats),
        "buckets": [{"count": b.count, "ratio": float(b.ratio)} for b in buckets],
    })
    return EXIT_OK


# ---- corpus / coverage ----
def cmd_corpus(args: argparse.Namespace) -> int:
    from corpus.manifest import build_manifest
    from miner.output import read_mined

    manifest = build_manifest(args.base, read_mined(args.mined), args.strategy, args.out_dir, args.repeat_factor)
    path = Path(args.out_dir) / "manifest.json"
    manifest.write(path)
    _emit(manifest.to_dict())
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace) -> int:
    from corpus.coverage import word_coverage

    coverage = word_coverage(args.train, args.test)
    _emit({"coverage": float(coverage), "fraction": str(coverage)})
    return EXIT_OK


# ---- gateway ----
def _translator_specs(settings: Settings):
    from translators.spec import TranslatorSpec

    fast = settings.translators.fast
    slow = settings.translators.slow
    if fast is None or slow is None:
        logger.warning("translators not configured, using echo backends (fast 10 ms, slow 150 ms)")
    return (
        TranslatorSpec.from_file(fast) if fast else TranslatorSpec.fixed("fast", 10),
        TranslatorSpec.from_file(slow) if slow else TranslatorSpec.fixed("slow", 150),
    )


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from gateway.gateway import build_gateway
    from gateway.server import TranslationService
    from translators.clock import WallClock

    settings = _settings(args)
    fast, slow = _translator_specs(settings)
    gateway = build_gateway(fast, slow, settings.gateway_config(), clock=WallClock())
    server = settings.server
    service = TranslationService(gateway, snapshot_path=args.snapshot or server.snapshot_path)
    uvicorn.run(
        service,
        host=args.host or server.host,
        port=args.port or server.port,
        log_level=settings.logging.level.lower(),
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    from gateway.gateway import build_gateway
    from loadsim.simulator import run_sync
    from loadsim.workload import generate

    settings = _settings(args)
    w = settings.workload
    for name in ("total_requests", "distinct_queries", "target_repetition_rate", "mode", "policy", "arrival"):
        value = getattr(args, name)
        if value is not None:
            setattr(w, name, value)

    fast, slow = _translator_specs(settings)
    queries = generate(settings.workload_spec())
    report = run_sync(
        queries,
        build_gateway(fast, slow, settings.gateway_config()),
        mode=w.mode,
        policy=w.policy,
        arrival=w.arrival,
        arrival_rate_per_ms=w.arrival_rate_per_s / 1000,
        seed=settings.seed,
    )
    if args.out:
        report.write_json(args.out)
    if args.histogram:
        report.write_histogram_csv(args.histogram)
    _emit(report.to_dict())
    return EXIT_OK


async def _translate_all(gateway, queries: Sequence[str], drain: bool) -> List[Tuple[str, str, str, float]]:
    from errors import EmptyAfterNormalization

    rows = []
    for raw in queries:
        try:
            result = await gateway.handle(raw)
        except EmptyAfterNormalization:
            logger.warning(f"Skipping empty query {raw!r}")
            continue
        rows.append((raw, result.text, result.source, result.latency_ms))
        if drain:
            await gateway.drain()
    return rows


def cmd_translate(args: argparse.Namespace) -> int:
    from gateway.gateway import build_gateway
    from loadsim.workload import read_trace

    settings = _settings(args)
    fast, slow = _translator_specs(settings)
    gateway = build_gateway(fast, slow, settings.gateway_config())
    rows = asyncio.run(_translate_all(gateway, read_trace(args.queries), drain=not args.no_drain))

    out = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    try:
        for raw, text, source, latency in rows:
            out.write(f"{raw}\t{text}\t{source}\t{latency:g}\n")
    finally:
        if args.out:
            out.close()
    return EXIT_OK


# ---- ireval ----
def _named_runs(specs: Sequence[str]) -> List[Tuple[str, Path]]:
    runs = []
    for spec in specs:
        name, sep, path = spec.partition("=")
        runs.append((name, Path(path)) if sep else (Path(spec).stem, Path(spec)))
    names = [name for name, _ in runs]
    if len(set(names)) != len(names):
        raise InvalidInput(f"system names must be unique: {names}")
    return runs


def cmd_evaluate(args: argparse.Namespace) -> int:
    from ireval.metrics import evaluate, write_table_csv
    from ireval.qrels import read_qrels, read_run
    from ireval.significance import compare_systems

    qrels = read_qrels(args.qrels)
    reports = {
        name: evaluate(read_run(path), qrels, k=args.k, depth=args.depth,
                       skip_missing=args.skip_missing, system=name)
        for name, path in _named_runs(args.run)
    }
    significance = None
    if len(reports) > 1:
        baseline = args.baseline or next(iter(reports))
        significance = compare_systems(reports, baseline, metric=args.metric, alpha=args.alpha)

    if args.out_csv:
        write_table_csv(reports.values(), args.out_csv, significance)
    summary = {
        "systems": {name: report.to_dict() for name, report in reports.items()},
        "significance": {name: r.to_dict() for name, r in (significance or {}).items()},
    }
    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8") as f:
            json.dump(summary, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
    _emit({name: report.means for name, report in reports.items()})
    return EXIT_OK


def cmd_bleu(args: argparse.Namespace) -> int:
    from errors import FormatError, UnreadableSource
    from ireval.bleu import corpus_bleu

    def lines(path: Path) -> List[str]:
        try:
            with open(path, encoding="utf-8") as f:
                return [line.rstrip("\r\n") for line in f]
        except (OSError, UnicodeDecodeError) as e:
            raise UnreadableSource(f"cannot read {path}: {e}") from e

    hypotheses, references = lines(args.hyp), lines(args.ref)
    if len(hypotheses) != len(references):
        raise FormatError(f"{args.hyp} has {len(hypotheses)} lines but {args.ref} has {len(references)}")
    score = corpus_bleu(hypotheses, references)
    _emit({
        "bleu": score.score,
        "precisions": score.precisions,
        "brevity_penalty": score.brevity_penalty,
        "hyp_length": score.hyp_length,
        "ref_length": score.ref_length,
    })
    return EXIT_OK


# ---- 解析器 ----
def _common() -> argparse.ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="随机种子, 覆盖配置文件")
    common.add_argument("--config", default=None, help="YAML/JSON 配置文件")
    common.add_argument("--log-level", default=None, help="DEBUG/INFO/WARNING/ERROR")
    common.add_argument("--log-json", action=argparse.BooleanOptionalAction, default=None,
                        help="日志输出为JSON")
    common.add_argument("--log-dir", default=None, help="日志文件目录")
    return common


def _add_log_args(parser: argparse.ArgumentParser):
    parser.add_argument("--log", type=Path, required=True, help="点击日志文件")
    parser.add_argument("--format", default="tsv-v1", help="tsv-v1 或 jsonl-v1")
    parser.add_argument("--counting", choices=["distinct", "occurrence"], default=None)
    parser.add_argument("--shards", type=int, default=4)
    parser.add_argument("--workers", type=int, default=1)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="querybridge", description="点击日志挖掘、双路径翻译网关与检索评测")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()

    p = sub.add_parser("mine", parents=[common], help="从点击日志挖掘查询翻译对")
    _add_log_args(p)
    p.add_argument("--eta", default=None, help="CTR 阈值, 例如 0.7")
    p.add_argument("--chi", type=int, default=None, help="Luv 下界")
    p.add_argument("--mode", choices=["top", "bottom"], default=None)
    p.add_argument("--out", type=Path, required=True, help="挖掘语料输出(TSV)")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("report", parents=[common], help="Luv/CTR 分布直方图")
    _add_log_args(p)
    p.add_argument("--axis", choices=["luv", "ctr"], default="luv")
    p.add_argument("--edges", default=None, help="逗号分隔的区间边界, 支持 inf")
    p.add_argument("--cumulative", action="store_true")
    p.add_argument("--min-luv", type=int, default=None)
    p.add_argument("--out", type=Path, required=True, help="直方图 CSV")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("corpus", parents=[common], help="构建 JT/FT 训练语料清单")
    p.add_argument("--base", type=Path, required=True)
    p.add_argument("--mined", type=Path, required=True)
    p.add_argument("--strategy", choices=["JT", "FT"], required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--repeat-factor", type=int, default=1)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("coverage", parents=[common], help="测试集词型覆盖率")
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("serve", parents=[common], help="启动翻译网关服务")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--snapshot", default=None, help="缓存快照文件")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", parents=[common], help="在虚拟时钟上回放负载")
    p.add_argument("--total-requests", dest="total_requests", type=int, default=None)
    p.add_argument("--distinct-queries", dest="distinct_queries", type=int, default=None)
    p.add_argument("--target-repetition-rate", dest="target_repetition_rate", type=float, default=None)
    p.add_argument("--mode", choices=["cold", "warmed"], default=None)
    p.add_argument("--policy", choices=["dual", "fast_only", "slow_only"], default=None)
    p.add_argument("--arrival", choices=["closed", "poisson"], default=None)
    p.add_argument("--out", type=Path, default=None, help="RunReport JSON")
    p.add_argument("--histogram", type=Path, default=None, help="延迟直方图 CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("translate", parents=[common], help="通过网关翻译查询文件")
    p.add_argument("--queries", type=Path, required=True, help="每行一个查询")
    p.add_argument("--no-drain", action="store_true", help="请求之间不处理慢速队列")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("evaluate", parents=[common], help="P@k, MAP, NDCG@k 与 Wilcoxon 检验")
    p.add_argument("--qrels", type=Path, required=True)
    p.add_argument("--run", action="append", required=True, help="run 文件, 可写成 name=path, 可重复")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--skip-missing", action="store_true")
    p.add_argument("--baseline", default=None, help="显著性检验的基线系统, 默认第一个")
    p.add_argument("--metric", default="MAP")
    p.add_argument("--alpha", default="0.05")
    p.add_argument("--out-json", type=Path, default=None)
    p.add_argument("--out-csv", type=Path, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bleu", parents=[common], help="语料级 BLEU-4")
    p.add_argument("--hyp", type=Path, required=True)
    p.add_argument("--ref", type=Path, required=True)
    p.set_defaults(func=cmd_bleu)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    handler = ErrorHandler(logger)
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args)
        return args.func(args)
    except Exception as e:
        return handler.exit_code(e)


if __name__ == "__main__":
    raise SystemExit(main())
