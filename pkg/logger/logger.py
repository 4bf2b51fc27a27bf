import logging
import json
import traceback
from typing import Any, Dict, Optional
from pathlib import Path
from logging.handlers import RotatingFileHandler, TimedRotatingFileHandler
from datetime import datetime

# 项目根日志器名称,所有模块的日志器都挂在它下面
ROOT_LOGGER = "querybridge"

# LogRecord自带的属性,不作为额外字段输出
_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", (), None)).keys()) | {"message", "asctime"}


class JSONFormatter(logging.Formatter):
    """JSON格式的日志格式化器"""

    def __init__(self, **kwargs):
        self.kwargs = kwargs
        super().__init__()

    def format(self, record) -> str:
        log_data = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "line": record.lineno
        }

        # 添加异常信息
        if record.exc_info:
            log_data["exception"] = {
                "type": record.exc_info[0].__name__,
                "message": str(record.exc_info[1]),
                "stacktrace": traceback.format_exception(*record.exc_info)
            }

        # 添加通过 extra= 传入的结构化字段(query, source, latency_ms ...)
        for key, value in record.__dict__.items():
            if key not in _RESERVED and not key.startswith("_"):
                log_data[key] = value

        # 添加自定义字段
        log_data.update(self.kwargs)

        return json.dumps(log_data, ensure_ascii=False, default=str)


class LoggerManager:
    """日志管理器"""

    def __init__(self,
                 name: str = ROOT_LOGGER,
                 log_dir: Optional[str] = None,
                 level: str = "INFO",
                 max_size: int = 10*1024*1024,  # 10MB
                 backup_count: int = 10,
                 format_json: bool = True):
        self.name = name
        self.log_dir = Path(log_dir) if log_dir else None  # 为None时只输出到控制台
        self.level = getattr(logging, level.upper())
        self.max_size = max_size
        self.backup_count = backup_count
        self.format_json = format_json

        # 创建日志目录
        if self.log_dir is not None:
            self.log_dir.mkdir(parents=True, exist_ok=True)

        # 初始化日志器
        self.logger = self._setup_logger()

    def _setup_logger(self) -> logging.Logger:
        """设置日志器"""
        logger = logging.getLogger(self.name)
        logger.setLevel(self.level)
        # 重复配置时(例如同一进程多次调用CLI)先移除旧的处理器
        for handler in list(logger.handlers):
            logger.removeHandler(handler)
            handler.close()
        logger.propagate = False

        # 设置格式化器
        if self.format_json:
            formatter = JSONFormatter()
        else:
            formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
            )

        # 添加控制台处理器
        console_handler = logging.StreamHandler()
        console_handler.setLevel(self.level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if self.log_dir is not None:
            # 添加文件处理器
            file_handler = RotatingFileHandler(
                self.log_dir / f"{self.name}.log",
                maxBytes=self.max_size,
                backupCount=self.backup_count,
                encoding="utf-8"
            )
            file_handler.setLevel(self.level)
            file_handler.setFormatter(formatter)

            # 添加错误日志处理器
            error_handler = TimedRotatingFileHandler(
                self.log_dir / f"{self.name}_error.log",
                when="midnight",
                interval=1,
                backupCount=30,
                encoding="utf-8"
            )
            error_handler.setLevel(logging.ERROR)
            error_handler.setFormatter(formatter)

            logger.addHandler(file_handler)
            logger.addHandler(error_handler)

        return logger

    def get_logger(self) -> logging.Logger:
        """获取日志器"""
        return self.logger


def get_logger(module_name: str) -> logging.Logger:
    """获取挂在项目根日志器下的模块日志器"""
    if module_name.startswith(ROOT_LOGGER):
        return logging.getLogger(module_name)
    return logging.getLogger(f"{ROOT_LOGGER}.{module_name}")


class RequestLogger:
    """请求日志记录器"""

    def __init__(self, logger: logging.Logger):
        self.logger = logger

    def log_request(self, scope: Dict[str, Any], status: int,
                    latency_ms: float, error: Optional[Exception] = None):
        """记录一次HTTP请求"""
        log_data = {
            "method": scope.get("method"),
            "path": scope.get("path"),
            "query_string": scope.get("query_string", b"").decode("latin-1"),
            "status": status,
            "latency_ms": round(latency_ms, 3),
        }

        if error:
            log_data["error_type"] = type(error).__name__
            log_data["error_message"] = str(error)
            self.logger.error("Request failed", extra=log_data)
        else:
            self.logger.info("Request completed", extra=log_data)
