"""WebSocket control plane for live exploration.

JSON messages over a local WebSocket (default port 8080), schema
versioned with a "v" field. Requests carry an "id" echoed in the reply:

    {"v": 1, "id": 7, "cmd": "set_collaborator", "pos": [1.0, 0.5, 0.4]}
    {"v": 1, "id": 7, "ok": true, "data": {"position": [1.0, 0.5, 0.4]}}

Errors reply {"ok": false, "error": {"field": ..., "reason": ...}} and
the connection stays open. subscribe_meters starts a stream of state
snapshots, {"v": 1, "stream": "state", "data": {...}}, emitted by the
engine tick loop at the subscribed rate.

Commands are forwarded into the control loop's queue and applied there,
so concurrent clients observe one total order of state changes.
"""

from __future__ import annotations

import asyncio
import json
import threading
from collections import deque

import websockets

from .engine import Engine, ValidationFailed

PROTOCOL_VERSION = 1
COMMANDS = {
    "get_state",
    "set_collaborator",
    "set_route",
    "delete_route",
    "set_param",
    "set_mix",
    "subscribe_meters",
}


class PortInUse(Exception):
    pass


def _error_reply(msg_id, field: str, reason: str) -> str:
    return json.dumps({
        "v": PROTOCOL_VERSION, "id": msg_id, "ok": False,
        "error": {"field": field, "reason": reason},
    })


class ControlServer:
    """Serves one engine on a WebSocket port from its own asyncio thread."""

    def __init__(self, engine: Engine, host: str = "127.0.0.1", port: int = 8080):
        self.engine = engine
        self.host = host
        self.port = port
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._started = threading.Event()
        self._startup_error: Exception | None = None
        self._stop_event: asyncio.Event | None = None

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, daemon=True, name="control-api")
        self._thread.start()
        self._started.wait(timeout=5.0)
        if self._startup_error is not None:
            raise self._startup_error

    def _run(self) -> None:
        self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self._loop)
        try:
            self._loop.run_until_complete(self._serve())
        finally:
            self._loop.close()

    async def _serve(self) -> None:
        self._stop_event = asyncio.Event()
        try:
            server = await websockets.serve(self._handler, self.host, self.port)
        except OSError as e:
            self._startup_error = PortInUse(f"{self.host}:{self.port}: {e}")
            self._started.set()
            return
        self._started.set()
        await self._stop_event.wait()
        server.close()
        await server.wait_closed()

    def stop(self) -> None:
        if self._loop is not None and self._stop_event is not None:
            self._loop.call_soon_threadsafe(self._stop_event.set)
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    # -- per connection ----------------------------------------------------

    async def _handler(self, websocket) -> None:
        outbox: deque = deque(maxlen=64)
        streamer = asyncio.create_task(self._stream(websocket, outbox))
        try:
            async for raw in websocket:
                reply = await self._handle_message(raw, outbox)
                await websocket.send(reply)
        except websockets.ConnectionClosed:
            pass
        finally:
            streamer.cancel()
            self.engine.remove_subscriptions(outbox)

    async def _stream(self, websocket, outbox: deque) -> None:
        while True:
            try:
                snapshot = outbox.popleft()
            except IndexError:
                await asyncio.sleep(0.005)
                continue
            await websocket.send(json.dumps({
                "v": PROTOCOL_VERSION, "stream": "state", "data": snapshot.to_dict(),
            }))

    async def _handle_message(self, raw, outbox: deque) -> str:
        try:
            msg = json.loads(raw)
        except (json.JSONDecodeError, TypeError, UnicodeDecodeError):
            return _error_reply(None, "message", "not valid JSON")
        if not isinstance(msg, dict):
            return _error_reply(None, "message", "expected a JSON object")
        msg_id = msg.get("id")
        cmd = msg.get("cmd")
        if msg.get("v") != PROTOCOL_VERSION:
            return _error_reply(msg_id, "v", f"unsupported protocol version {msg.get('v')!r}")
        if cmd not in COMMANDS:
            return _error_reply(msg_id, "cmd", f"unknown command {cmd!r}")

        payload = dict(msg)
        if cmd == "subscribe_meters":
            payload["_outbox"] = outbox
        pending = self.engine.submit(payload)
        try:
            data = await asyncio.get_running_loop().run_in_executor(
                None, pending.wait, 2.0
            )
        except ValidationFailed as e:
            return _error_reply(msg_id, e.field, e.reason)
        except TimeoutError as e:
            return _error_reply(msg_id, "engine", str(e))
        return json.dumps({"v": PROTOCOL_VERSION, "id": msg_id, "ok": True, "data": data})
