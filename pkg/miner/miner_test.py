import math
import random
from fractions import Fraction

import pytest

from clickstream.records import ClickRecord
from errors import EmptyInput, InvalidInput
from loadsim.workload import synthetic_click_log
from miner.output import read_mined, write_mined
from miner.report import distribution_report, parse_edges, write_histogram
from miner.stats import (
    MinedPair,
    MiningThresholds,
    PairStats,
    aggregate,
    aggregate_sharded,
    filter_pairs,
    merge,
)


def rec(user, clicks, q="dítě rýma", t="runny nose"):
    return ClickRecord(user, q, t, clicks)


def random_log(rng: random.Random, n_records: int, n_users: int, n_keys: int):
    keys = [(f"q{i % 97}", f"t{i}") for i in range(n_keys)]
    return [
        ClickRecord(f"u{rng.randrange(n_users)}", *rng.choice(keys), rng.choice((0, 0, 1, 2, 5)))
        for _ in range(n_records)
    ]


def oracle(records):
    """逐键遍历全部记录、逐用户判断的暴力实现"""
    keys = sorted({(r.query, r.translation) for r in records})
    result = {}
    for key in keys:
        mine = [r for r in records if r.query == key[0] and r.translation == key[1]]
        users = []
        for r in mine:
            if r.user_id not in users:
                users.append(r.user_id)
        clickers = 0
        for u in users:
            if any(r.user_id == u and r.clicks >= 1 for r in mine):
                clickers += 1
        result[key] = (len(users), clickers)
    return result


def oracle_filter(counts, eta: Fraction, chi: int, mode: str):
    kept = set()
    for key, (luv, duv) in counts.items():
        ctr_ok = duv * eta.denominator >= eta.numerator * luv if mode == "top" \
            else duv * eta.denominator <= eta.numerator * luv
        if luv >= chi and ctr_ok:
            kept.add(key)
    return kept


class TestAggregate:
    def test_distinct_users_with_click_indicator(self):
        stats = aggregate([rec("a", 1), rec("b", 0), rec("a", 0)])
        (s,) = stats.values()
        assert (s.luv, s.duv, s.ctr) == (2, 1, Fraction(1, 2))

    def test_direct_ratio(self):
        records = [rec(f"u{i}", 1 if i < 14 else 0) for i in range(20)]
        (s,) = aggregate(records).values()
        assert (s.luv, s.duv) == (20, 14)
        assert s.ctr == Fraction(7, 10)

    def test_user_counts_once_toward_duv(self):
        (s,) = aggregate([rec("a", 3), rec("a", 1), rec("a", 2)]).values()
        assert (s.luv, s.duv) == (1, 1)

    def test_occurrence_counting(self):
        (s,) = aggregate([rec("a", 1), rec("b", 0), rec("a", 0)], counting="occurrence").values()
        assert (s.luv, s.duv) == (3, 1)

    def test_empty(self):
        assert aggregate([]) == {}

    def test_keys_on_pair_not_query(self):
        stats = aggregate([rec("a", 1, t="fever"), rec("a", 1, t="runny nose")])
        assert len(stats) == 2

    def test_unknown_counting(self):
        with pytest.raises(InvalidInput):
            aggregate([], counting="sessions")

    def test_permutation_invariant(self):
        rng = random.Random(5)
        records = random_log(rng, 2000, 60, 80)
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert aggregate(records) == aggregate(shuffled)

    def test_shard_mergeable_for_user_disjoint_shards(self):
        rng = random.Random(6)
        records = random_log(rng, 3000, 100, 50)
        left = [r for r in records if int(r.user_id[1:]) % 2 == 0]
        right = [r for r in records if int(r.user_id[1:]) % 2 == 1]
        assert merge(aggregate(left), aggregate(right)) == aggregate(records)

    @pytest.mark.parametrize("workers", [1, 2])
    def test_sharded_equals_plain(self, workers):
        records = random_log(random.Random(8), 4000, 150, 300)
        assert aggregate_sharded(records, shards=5, workers=workers) == aggregate(records)

    def test_invariants_hold(self):
        for s in aggregate(random_log(random.Random(9), 5000, 200, 400)).values():
            assert 0 <= s.duv <= s.luv and 0 <= s.ctr <= 1

    def test_pair_stats_validation(self):
        with pytest.raises(InvalidInput):
            PairStats("q", "t", 0, 0)
        with pytest.raises(InvalidInput):
            PairStats("q", "t", 2, 3)


class TestOracleEquivalence:
    def test_randomized_logs(self):
        """1000个随机日志, 聚合+过滤结果与暴力实现完全一致"""
        rng = random.Random(2024)
        settings = [MiningThresholds.parse("0.7", 15, "top"), MiningThresholds.parse("0.3", 15, "bottom"),
                    MiningThresholds.parse("0.5", 2, "top")]
        for i in range(1000):
            if i < 3:
                n_records, n_users, n_keys = 10_000, 200, 500
            else:
                n_records, n_users, n_keys = rng.randint(0, 300), rng.randint(1, 200), rng.randint(1, 40)
            records = random_log(rng, n_records, n_users, n_keys)
            expected = oracle(records)
            stats = aggregate(records)
            assert {k: (s.luv, s.duv) for k, s in stats.items()} == expected
            for th in settings:
                mined = {(p.query, p.translation) for p in filter_pairs(stats, th)}
                assert mined == oracle_filter(expected, th.eta, th.chi, th.mode)


class TestFilter:
    def test_boundary_kept_in_top_mode(self):
        s = PairStats("q", "t", 20, 14)
        boundary = PairStats("q2", "t", 15, 0)
        th = MiningThresholds.parse("0.7", 15, "top")
        assert filter_pairs([s], th)[0].stats == s
        assert filter_pairs([boundary], th) == []
        exact = PairStats("q3", "t", 30, 21)  # ctr 恰为 0.7
        at_chi = PairStats("q4", "t", 15, 15)  # luv 恰为 15
        assert {p.query for p in filter_pairs([exact, at_chi], th)} == {"q3", "q4"}

    def test_rare_query_rejected(self):
        th = MiningThresholds.parse(0.7, 15, "top")
        assert filter_pairs([PairStats("q", "t", 14, 14)], th) == []

    def test_bottom_mode(self):
        th = MiningThresholds.parse("0.3", 15, "bottom")
        low = PairStats("q", "t", 100, 25)
        boundary = PairStats("q2", "t", 20, 6)  # ctr 恰为 0.3
        high = PairStats("q3", "t", 100, 31)
        assert {p.query for p in filter_pairs([low, boundary, high], th)} == {"q", "q2"}

    def test_idempotent_and_subset(self):
        stats = aggregate(random_log(random.Random(12), 6000, 80, 60))
        th = MiningThresholds.parse("0.5", 10)
        once = filter_pairs(stats, th)
        assert filter_pairs(once, th) == once
        assert {(p.query, p.translation) for p in once} <= set(stats)

    def test_top_and_bottom_disjoint(self):
        stats = aggregate(random_log(random.Random(13), 6000, 80, 60))
        top = filter_pairs(stats, MiningThresholds.parse("0.7", 5, "top"))
        bottom = filter_pairs(stats, MiningThresholds.parse("0.3", 5, "bottom"))
        assert not {p.query + p.translation for p in top} & {p.query + p.translation for p in bottom}

    def test_output_order(self):
        pairs = filter_pairs([PairStats("b", "t", 20, 20), PairStats("a", "t", 20, 20),
                              PairStats("c", "t", 30, 30)], MiningThresholds.parse("0", 1))
        assert [p.query for p in pairs] == ["c", "a", "b"]

    @pytest.mark.parametrize("eta,chi,mode", [("1.5", 1, "top"), ("0.5", 0, "top"), ("0.5", 1, "middle")])
    def test_invalid_thresholds(self, eta, chi, mode):
        with pytest.raises(InvalidInput):
            MiningThresholds.parse(eta, chi, mode)


class TestDistributionReport:
    def test_luv_buckets(self):
        stats = [PairStats(f"q{i}", "t", luv, 0) for i, luv in enumerate([1, 2, 20, 40])]
        buckets = distribution_report(stats, "luv", [0, 5, 15, math.inf])
        assert [b.ratio for b in buckets] == [Fraction(1, 2), 0, Fraction(1, 2)]
        assert sum(b.ratio for b in buckets) == 1

    def test_single_bucket(self):
        stats = [PairStats(f"q{i}", "t", 3, 1) for i in range(7)]
        buckets = distribution_report(stats, "luv", [0, 5, 15])
        assert buckets[0].ratio == 1

    def test_ctr_closed_last_bucket(self):
        stats = [PairStats("a", "t", 4, 4), PairStats("b", "t", 4, 0)]
        buckets = distribution_report(stats, "ctr", parse_edges("0,0.5,1"))
        assert [b.count for b in buckets] == [1, 1]

    def test_cumulative_and_min_luv(self):
        stats = [PairStats("a", "t", 20, 1), PairStats("b", "t", 20, 19), PairStats("c", "t", 2, 0)]
        buckets = distribution_report(stats, "ctr", parse_edges("0,0.1,0.5,1"), cumulative=True, min_luv=15)
        assert [b.ratio for b in buckets] == [Fraction(1, 2), Fraction(1, 2), 1]

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            distribution_report([], "luv", [0, 5])

    def test_edges_must_increase(self):
        with pytest.raises(InvalidInput):
            distribution_report([PairStats("a", "t", 1, 0)], "luv", [0, 5, 5])

    def test_value_outside_edges(self):
        with pytest.raises(InvalidInput):
            distribution_report([PairStats("a", "t", 50, 0)], "luv", [0, 5, 15])

    def test_zipf_log_mostly_rare_pairs(self):
        records = synthetic_click_log(total_records=50_000, distinct_pairs=100_000, users=20_000,
                                      zipf_s=1.1, seed=17)
        stats = aggregate(records)
        buckets = distribution_report(stats, "luv", [0, 5, math.inf])
        # 暴力计数作为对照
        brute = sum(1 for s in stats.values() if s.luv < 5) / len(stats)
        assert float(buckets[0].ratio) == pytest.approx(brute)
        assert brute > 0.75

    def test_histogram_csv(self, tmp_path):
        stats = [PairStats(f"q{i}", "t", luv, 0) for i, luv in enumerate([1, 2, 20, 40])]
        path = tmp_path / "hist.csv"
        write_histogram(distribution_report(stats, "luv", [0, 5, 15, math.inf]), path)
        assert path.read_text().splitlines() == [
            "bucket_low,bucket_high,ratio",
            "0,5,0.500000",
            "5,15,0.000000",
            "15,inf,0.500000",
        ]


def test_mined_corpus_round_trip(tmp_path):
    pairs = [MinedPair("b", "t", PairStats("b", "t", 20, 15)), MinedPair("a", "t", PairStats("a", "t", 40, 30))]
    path = tmp_path / "mined.tsv"
    assert write_mined(pairs, path) == 2
    assert path.read_text(encoding="utf-8").splitlines()[0] == "a\tt\t40\t30\t0.750000"
    assert [p.query for p in read_mined(path)] == ["a", "b"]
