# errors.py - 错误处理模块

import time
import uuid
from typing import Optional, Dict, Any
import traceback
import logging

from logger.logger import get_logger
from response import error_response

# CLI退出码
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class ToolkitError(Exception):
    """
    工具包错误基类,用于规范化服务的错误响应和命令行的退出码
    继承自Exception基类
    """
    code: int = 400  # HTTP状态码,默认400表示客户端错误
    exit_code: int = EXIT_DATA  # 命令行退出码,默认为数据错误

    def __init__(self,
                 message: str,  # 错误消息
                 code: Optional[int] = None,  # HTTP状态码,为None时使用类默认值
                 detail: Optional[Dict[str, Any]] = None):  # 错误详情,可选
        self.message = message
        if code is not None:
            self.code = code
        self.detail = detail
        super().__init__(message)


# ---- clickstream ----
class EmptyAfterNormalization(ToolkitError):
    """规范化之后查询为空"""


class UnreadableSource(ToolkitError):
    """日志源无法读取(I/O错误)"""


class FormatError(ToolkitError):
    """日志格式标签或模式非法"""


# ---- miner / corpus ----
class EmptyInput(ToolkitError):
    """统计输入为空"""


class EmptyMinedSet(ToolkitError):
    """挖掘结果为空,无法构建语料清单"""


class BaseCorpusUnreadable(ToolkitError):
    """基础语料无法读取"""


class EmptyCorpus(ToolkitError):
    """语料为空"""


# ---- translators / gateway ----
class BackendUnavailable(ToolkitError):
    """翻译后端不可用"""
    code = 503


class FastBackendUnavailable(BackendUnavailable):
    """同步快速后端不可用,作为错误响应返回给调用方"""
    code = 503


class CorruptSnapshot(ToolkitError):
    """缓存快照文件损坏或被截断"""


# ---- loadsim ----
class InfeasibleTarget(ToolkitError):
    """给定的去重查询数无法达到目标重复率"""


# ---- ireval ----
class NoJudgedQueries(ToolkitError):
    """没有任何带相关文档的查询可供评测"""


class NoRelevantDocs(ToolkitError):
    """某个查询没有相关文档"""


class TooFewPairs(ToolkitError):
    """去掉零差值后样本对数太少"""


# ---- 通用 ----
class InvalidInput(ToolkitError):
    """参数不满足前置条件"""
    exit_code = EXIT_USAGE


class ConfigError(ToolkitError):
    """配置文件或命令行参数非法"""
    exit_code = EXIT_USAGE


class ErrorHandler:
    """
    错误处理器类
    统一处理工具包错误和系统错误,提供错误日志记录功能
    """
    def __init__(self, logger: Optional[logging.Logger] = None):
        """
        初始化错误处理器
        Args:
            logger: 日志记录器实例,如果为None则创建默认logger
        """
        self.logger = logger or get_logger(__name__)

    def handle(self, error: Exception) -> Dict[str, Any]:
        """处理错误并返回标准化的错误响应"""
        if isinstance(error, ToolkitError):
            return error_response(
                code=error.code,
                message=error.message,
                data=error.detail
            ).model_dump()

        # 处理系统错误
        error_id = self._log_error(error)
        return error_response(
            code=500,
            message="Internal Server Error",
            data={"error_id": error_id}
        ).model_dump()

    def exit_code(self, error: Exception) -> int:
        """命令行使用: 把异常映射为退出码"""
        if isinstance(error, ToolkitError):
            self.logger.error(f"{type(error).__name__}: {error.message}")
            return error.exit_code
        self._log_error(error)
        return EXIT_DATA

    def _log_error(self, error: Exception) -> str:
        """
        记录错误日志
        Args:
            error: 异常对象
        Returns:
            str: 生成的错误ID
        """
        error_id = uuid.uuid4().hex[:12]
        self.logger.error(  # 记录详细的错误信息
            f"Error ID: {error_id}\n"
            f"Type: {type(error).__name__}\n"  # 错误类型
            f"Message: {str(error)}\n"  # 错误消息
            f"Traceback:\n{traceback.format_exc()}",  # 完整的堆栈跟踪
            extra={"error_id": error_id, "at": time.time()}
        )
        return error_id
