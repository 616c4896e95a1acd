"""HTTP inpainting backend speaking the texpaint wire protocol.

A single worker thread drains a FIFO queue so concurrent requests never
interleave GPU work; each response reports how many jobs were ahead of
it at enqueue time as a "queue_depth" field, which texpaint clients
ignore.
"""

import argparse
import json
import queue
import sys
import threading
from concurrent.futures import Future
from typing import Optional

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from texpaint import WireProtocolError, deserialize_request, serialize_response

from .config import AdapterConfig, resolve_config
from .engine import create_engine


class JobQueue:
    """FIFO queue processed by one daemon worker thread."""

    def __init__(self):
        self._queue: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._pending = 0
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, fn):
        """Enqueue fn; returns (future, jobs ahead at enqueue time)."""
        future: Future = Future()
        with self._lock:
            depth = self._pending
            self._pending += 1
        self._queue.put((fn, future))
        return future, depth

    @property
    def depth(self) -> int:
        with self._lock:
            return self._pending

    def _run(self):
        while True:
            item = self._queue.get()
            if item is None:
                return
            fn, future = item
            try:
                if future.set_running_or_notify_cancel():
                    try:
                        future.set_result(fn())
                    except BaseException as exc:
                        future.set_exception(exc)
            finally:
                with self._lock:
                    self._pending -= 1

    def close(self):
        self._queue.put(None)


def create_app(config: Optional[AdapterConfig] = None, engine=None) -> FastAPI:
    """Build the adapter app; engine overrides lazy model loading."""
    cfg = config if config is not None else resolve_config()
    app = FastAPI(title="texpaint diffusion adapter")
    app.state.config = cfg
    app.state.engine = engine
    app.state.jobs = JobQueue()
    engine_lock = threading.Lock()

    def get_engine():
        # Loaded on first use so startup stays cheap and load failures
        # surface as request errors instead of killing the process.
        with engine_lock:
            if app.state.engine is None:
                app.state.engine = create_engine(cfg)
            return app.state.engine

    def process(data: bytes):
        request = deserialize_request(data)
        eng = get_engine()
        future, depth = app.state.jobs.submit(lambda: eng.run(request))
        return future.result(), depth

    @app.post("/inpaint")
    async def inpaint(request: Request):
        data = await request.body()
        try:
            response, depth = await run_in_threadpool(process, data)
        except WireProtocolError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        except Exception as exc:
            return JSONResponse({"error": str(exc)}, status_code=500)
        payload = json.loads(serialize_response(response))
        payload["queue_depth"] = depth
        body = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return Response(content=body, media_type="application/json")

    @app.get("/health")
    def health():
        eng = app.state.engine
        return {
            "ok": True,
            "backend": eng.backend_id if eng is not None else None,
            "queue_depth": app.state.jobs.depth,
        }

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="texpaint-adapter",
        description="Serve an inpainting backend for texpaint over HTTP.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8100)
    parser.add_argument("--config", default=None,
                        help="path to a JSON config file (overrides ADAPTER_CONFIG)")
    args = parser.parse_args(argv)
    config = resolve_config(args.config)

    import uvicorn
    uvicorn.run(create_app(config), host=args.host, port=args.port,
                log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
