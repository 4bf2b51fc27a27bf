"""翻译网关的 ASGI 服务"""
import time
from pathlib import Path
from typing import Awaitable, Callable, Dict, Optional, Union

from starlette.requests import Request
from starlette.responses import JSONResponse, Response

from cache.snapshot import restore_cache, snapshot_cache
from errors import ErrorHandler, InvalidInput
from gateway.gateway import TranslationGateway
from logger.logger import RequestLogger, get_logger
from response import TranslateResponse, not_found_response, success_response

Handler = Callable[[Request], Awaitable[Response]]


class TranslationService:
    """
    ASGI 应用

    生命周期: 启动时(可选)从快照恢复缓存并启动慢速工作者, 关闭时停止工作者并写快照
    路由: GET /translate?q=, GET /stats, GET /_health
    """

    def __init__(self,
                 gateway: TranslationGateway,
                 snapshot_path: Optional[Union[str, Path]] = None):
        self.gateway = gateway
        self.snapshot_path = Path(snapshot_path) if snapshot_path else None
        self.logger = get_logger(__name__)
        self.request_logger = RequestLogger(self.logger)
        self.error_handler = ErrorHandler(self.logger)
        self._start_time = time.time()
        self._routes: Dict[str, Handler] = {
            "/translate": self.translate,
            "/stats": self.stats,
            "/_health": self.health,
        }

    async def startup(self):
        if self.snapshot_path and self.snapshot_path.exists():
            self.gateway.cache = restore_cache(
                self.snapshot_path,
                capacity=self.gateway.config.cache_capacity,
                clock=self.gateway.clock,
            )
        await self.gateway.start()

    async def shutdown(self):
        await self.gateway.stop()
        if self.snapshot_path:
            snapshot_cache(self.gateway.cache, self.snapshot_path)

    async def __call__(self, scope, receive, send):
        if scope["type"] == "lifespan":
            while True:
                message = await receive()
                if message["type"] == "lifespan.startup":
                    try:
                        await self.startup()
                    except Exception as e:
                        self.logger.error(f"Startup failed: {e}", exc_info=True)
                        await send({"type": "lifespan.startup.failed", "message": str(e)})
                        return
                    await send({"type": "lifespan.startup.complete"})
                elif message["type"] == "lifespan.shutdown":
                    await self.shutdown()
                    await send({"type": "lifespan.shutdown.complete"})
                    return
        else:
            assert scope["type"] == "http"
            await self.handle_request(scope, receive, send)

    async def handle_request(self, scope, receive, send):
        started = time.perf_counter()
        error = None
        handler = self._routes.get(scope["path"])
        if handler is None:
            response = JSONResponse(not_found_response().model_dump(), status_code=404)
        elif scope["method"] not in ("GET", "HEAD"):
            response = JSONResponse({"code": 405, "message": "Method Not Allowed"}, status_code=405)
        else:
            try:
                response = await handler(Request(scope, receive))
            except Exception as e:
                error = e
                body = self.error_handler.handle(e)
                response = JSONResponse(body, status_code=body["code"])
        await response(scope, receive, send)
        self.request_logger.log_request(scope, response.status_code,
                                        (time.perf_counter() - started) * 1000, error)

    async def translate(self, request: Request) -> Response:
        raw = request.query_params.get("q")
        if raw is None:
            raise InvalidInput("missing query parameter 'q'")
        result = await self.gateway.handle(raw)
        body = TranslateResponse(t=result.text, source=result.source, latency_ms=result.latency_ms)
        return JSONResponse(body.model_dump())

    async def stats(self, request: Request) -> Response:
        return JSONResponse(self.gateway.snapshot_stats())

    async def health(self, request: Request) -> Response:
        return JSONResponse(success_response({
            "status": "ok",
            "uptime_s": round(time.time() - self._start_time, 3),
        }).model_dump())
