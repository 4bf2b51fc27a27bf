"""时钟: 虚拟时钟用于仿真和测试, 墙钟用于在线服务

所有时间单位均为毫秒
"""
import asyncio
import time
from typing import Protocol


class Clock(Protocol):
    def now(self) -> float: ...

    async def sleep(self, ms: float) -> None: ...


class VirtualClock:
    """
    虚拟时间, 只在显式推进或 sleep 时前进

    sleep 不会真的等待, 只是把时间推到 now + ms; 在离散事件仿真里,
    调度器会在每次与网关交互之前用 set() 把时间设回事件发生时刻
    """

    def __init__(self, start_ms: float = 0.0):
        self._now = float(start_ms)

    def now(self) -> float:
        return self._now

    def set(self, ms: float):
        """把时间设到指定时刻, 可以回拨(事件调度器使用)"""
        self._now = float(ms)

    def advance_to(self, ms: float):
        if ms < self._now:
            raise ValueError(f"Cannot go back in time: {ms} < {self._now}")
        self._now = float(ms)

    def advance(self, ms: float):
        if ms < 0:
            raise ValueError(f"Cannot advance by a negative amount: {ms}")
        self._now += ms

    async def sleep(self, ms: float) -> None:
        self.advance(ms)
        await asyncio.sleep(0)


class WallClock:
    """单调墙钟"""

    def now(self) -> float:
        return time.monotonic() * 1000.0

    async def sleep(self, ms: float) -> None:
        await asyncio.sleep(ms / 1000.0)
