import json
import logging

from logger.logger import ROOT_LOGGER, JSONFormatter, LoggerManager, RequestLogger, get_logger


def make_record(**extra):
    record = logging.LogRecord("querybridge.gateway", logging.INFO, __file__, 10, "Served %s", ("fast",), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_json_formatter_includes_extra_fields():
    data = json.loads(JSONFormatter(service="gateway").format(make_record(query="dítě rýma", latency_ms=10.0)))
    assert data["message"] == "Served fast"
    assert data["query"] == "dítě rýma"
    assert data["latency_ms"] == 10.0
    assert data["service"] == "gateway"
    assert "args" not in data and "msg" not in data


def test_module_loggers_hang_under_root():
    assert get_logger("miner.stats").name == f"{ROOT_LOGGER}.miner.stats"
    assert get_logger(ROOT_LOGGER).name == ROOT_LOGGER


def test_manager_writes_log_files(tmp_path):
    manager = LoggerManager(name="querybridge-test", log_dir=str(tmp_path), level="DEBUG")
    log = manager.get_logger()
    log.error("Slow job dropped", extra={"query": "kašel"})
    for handler in log.handlers:
        handler.flush()
    line = (tmp_path / "querybridge-test.log").read_text(encoding="utf-8").strip()
    assert json.loads(line)["query"] == "kašel"
    assert (tmp_path / "querybridge-test_error.log").exists()

    LoggerManager(name="querybridge-test", level="INFO")
    assert len(logging.getLogger("querybridge-test").handlers) == 1


def test_request_logger_levels():
    records = []

    class Collect(logging.Handler):
        def emit(self, record):
            records.append(record)

    log = logging.getLogger("querybridge-request-test")
    log.setLevel(logging.INFO)
    log.addHandler(Collect())
    requests = RequestLogger(log)
    scope = {"method": "GET", "path": "/translate", "query_string": b"q=x"}
    requests.log_request(scope, 200, 1.23456)
    requests.log_request(scope, 503, 2.0, error=RuntimeError("down"))
    assert [r.levelno for r in records] == [logging.INFO, logging.ERROR]
    assert records[0].latency_ms == 1.235
    assert records[1].error_type == "RuntimeError"
