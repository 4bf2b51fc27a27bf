import json

import numpy as np
import pytest

from errors import BackendUnavailable, ConfigError
from translators.backend import TranslationResult, Translator, translate
from translators.clock import VirtualClock
from translators.spec import LognormalLatency, TranslatorSpec, read_table


@pytest.fixture
def clock():
    return VirtualClock()


@pytest.fixture
def fast_spec():
    return TranslatorSpec.fixed("smt", 10, {"dítě rýma": "fever"})


@pytest.fixture
def slow_spec():
    return TranslatorSpec.fixed("nmt", 150, {"dítě rýma": "runny nose"})


async def test_fast_table_hit(fast_spec, clock):
    result = await translate(fast_spec, "dítě rýma", clock)
    assert result == TranslationResult("fever", "fast", 10.0)
    assert clock.now() == 10.0


async def test_slow_table_hit(slow_spec, clock):
    result = await Translator(slow_spec, clock, source="slow").translate("Dítě  Rýma")
    assert result.to_dict() == {"t": "runny nose", "source": "slow", "latency_ms": 150.0}


async def test_echo_fallback(fast_spec, clock):
    assert await translate(fast_spec, "xyz", clock) == TranslationResult("xyz", "fast", 10.0)


async def test_token_map_fallback(clock):
    spec = TranslatorSpec.fixed("smt", 5, fallback="token-map", dictionary={"dítě": "child", "rýma": "cold"})
    result = await translate(spec, "dítě má rýma", clock)
    assert result.text == "child má cold"


async def test_deterministic_text(clock):
    spec = TranslatorSpec(name="nmt", latency=LognormalLatency(100, 0.8), table={"a": "b"}, seed=3)
    first = Translator(spec, clock)
    second = Translator(spec, VirtualClock())
    texts = [(await first.translate(q)).text for q in ["a", "c", "a"]]
    assert texts == [(await second.translate(q)).text for q in ["a", "c", "a"]]


async def test_fixed_latency_law(fast_spec, clock):
    translator = Translator(fast_spec, clock)
    for i in range(50):
        assert (await translator.translate(f"q{i}")).latency_ms == 10.0


def test_lognormal_median():
    spec = TranslatorSpec(name="nmt", latency=LognormalLatency(150, 0.5), seed=11)
    translator = Translator(spec)
    draws = [translator.draw_latency() for _ in range(10_000)]
    assert np.median(draws) == pytest.approx(150, rel=0.05)
    assert min(draws) > 0


def test_lognormal_seeded_draws_repeat():
    spec = TranslatorSpec(name="nmt", latency=LognormalLatency(150, 0.5), seed=11)
    a, b = Translator(spec), Translator(spec)
    assert [a.draw_latency() for _ in range(5)] == [b.draw_latency() for _ in range(5)]


async def test_fault_injection(fast_spec, clock):
    translator = Translator(fast_spec, clock, track_calls=True)
    translator.fail_next(2)
    for _ in range(2):
        with pytest.raises(BackendUnavailable):
            await translator.translate("dítě rýma")
    assert (await translator.translate("dítě rýma")).text == "fever"
    assert translator.calls["dítě rýma"] == 3
    assert translator.call_count == 3

    translator.available = False
    with pytest.raises(BackendUnavailable):
        await translator.translate("x")


async def test_failure_rate_one(clock):
    translator = Translator(TranslatorSpec.fixed("smt", 1, failure_rate=1.0), clock)
    with pytest.raises(BackendUnavailable):
        await translator.translate("x")
    assert clock.now() == 0


def test_spec_from_file(tmp_path):
    (tmp_path / "table.tsv").write_text("Dítě  Rýma\trunny nose\n", encoding="utf-8")
    (tmp_path / "dict.tsv").write_text("dítě\tchild\n", encoding="utf-8")
    path = tmp_path / "slow.json"
    path.write_text(json.dumps({
        "name": "nmt",
        "latency": {"kind": "lognormal", "median_ms": 150, "sigma": 0.3},
        "table_path": "table.tsv",
        "fallback": {"kind": "token-map", "dictionary_path": "dict.tsv"},
        "seed": 7,
    }), encoding="utf-8")
    spec = TranslatorSpec.from_file(path)
    assert spec.table == {"dítě rýma": "runny nose"}
    assert spec.dictionary == {"dítě": "child"}
    assert spec.latency == LognormalLatency(150.0, 0.3)
    assert spec.seed == 7


@pytest.mark.parametrize("data", [
    {"name": "x", "latency": {"kind": "fixed", "ms": -1}},
    {"name": "x", "latency": {"kind": "lognormal", "median_ms": 10, "sigma": -0.1}},
    {"name": "x", "latency": {"kind": "uniform"}},
    {"name": "x", "fallback": "shrug"},
    {"latency": {"kind": "fixed", "ms": 1}},
])
def test_invalid_spec(data):
    with pytest.raises(ConfigError):
        TranslatorSpec.from_dict(data)


def test_read_table_normalizes_keys(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("  A  B \tx\n\nc\ty\n", encoding="utf-8")
    assert read_table(path) == {"a b": "x", "c": "y"}


def test_virtual_clock_monotone_advance():
    clock = VirtualClock(5)
    clock.advance_to(7)
    with pytest.raises(ValueError):
        clock.advance_to(6)
    clock.set(1)
    assert clock.now() == 1
