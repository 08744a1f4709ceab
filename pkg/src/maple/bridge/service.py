"""Websocket service: one session, many consoles.

The session is owned by a single asyncio task fed from one event queue;
websocket handlers only decode frames and enqueue events, which keeps the
engine deterministic with respect to the order actions were received.
Each client gets its own outbound queue so a stalled console cannot block
the others.
"""

from __future__ import annotations

import asyncio
import contextlib
import time

from starlette.applications import Starlette
from starlette.responses import JSONResponse
from starlette.routing import Route, WebSocketRoute
from starlette.websockets import WebSocketDisconnect

from ..assets import AssetIndex
from ..face import PresetTable
from ..motion import MotionLibrary
from ..scenario import Scenario
from ..session import (AnswerSelected, EmitSummary, PauseToggled, Session,
                       Shutdown, Tick, init_session)
from .protocol import (ACTION_TYPES, ROLES, ProtocolError, WireMessage,
                       decode_message, effect_payload, encode_message)

OUTBOX_LIMIT = 4096  # frames queued per client before it is dropped


def _scene_of(snap: dict | None) -> dict | None:
    """Snapshot minus the clock: what a console actually renders."""
    if snap is None:
        return None
    return {k: v for k, v in snap.items() if k != "clock_ms"}


class _Client:
    def __init__(self, client_id: int, websocket) -> None:
        self.id = client_id
        self.websocket = websocket
        self.role = "tutor"
        self.subscribed = False
        self.last_seq_in: int | None = None
        self.next_seq_out = 1
        self.outbox: asyncio.Queue[str] = asyncio.Queue(maxsize=OUTBOX_LIMIT)

    def send(self, op: str, payload: dict) -> bool:
        frame = encode_message(WireMessage(op, self.next_seq_out, payload))
        try:
            self.outbox.put_nowait(frame.decode("utf-8"))
        except asyncio.QueueFull:
            return False
        self.next_seq_out += 1
        return True


class EngineService:
    """Runs one scenario session behind a `/ws` endpoint."""

    def __init__(self, scenario: Scenario,
                 motions: MotionLibrary | None = None,
                 presets: PresetTable | None = None,
                 assets: AssetIndex | None = None,
                 tick_ms: int = 50,
                 heartbeat_ms: int = 5000) -> None:
        self.scenario = scenario
        self.motions = motions or MotionLibrary.bundled()
        self.presets = presets or PresetTable.bundled()
        self.assets = assets or scenario.manifest_index()
        self.tick_ms = tick_ms
        self.heartbeat_ms = heartbeat_ms

        self.session: Session | None = None
        self.emitted_effects: list = []  # every effect, in emission order
        self._events: asyncio.Queue = asyncio.Queue()
        self._clients: dict[int, _Client] = {}
        self._next_client_id = 1
        self._pause_holder: int | None = None
        self._last_snapshot: dict | None = None
        self._last_summary: dict | None = None
        self._started = time.monotonic()
        self._tasks: list[asyncio.Task] = []

    # -- app wiring ----------------------------------------------------------

    def build_app(self) -> Starlette:
        service = self

        @contextlib.asynccontextmanager
        async def lifespan(app):
            await service._startup()
            try:
                yield
            finally:
                await service._shutdown()

        return Starlette(routes=[
            Route("/", service._info),
            WebSocketRoute("/ws", service._ws_endpoint),
        ], lifespan=lifespan)

    async def _startup(self) -> None:
        self._started = time.monotonic()
        self.session, effects = init_session(self.scenario, self.motions,
                                             self.presets, self.assets)
        self._dispatch_effects(effects)
        self._last_snapshot = self.session.snapshot()
        loop = asyncio.get_running_loop()
        self._tasks = [loop.create_task(self._run_events()),
                       loop.create_task(self._run_ticker()),
                       loop.create_task(self._run_heartbeat())]

    async def _shutdown(self) -> None:
        for task in self._tasks:
            task.cancel()
        await asyncio.gather(*self._tasks, return_exceptions=True)
        self._tasks = []

    async def _info(self, request) -> JSONResponse:
        return JSONResponse({
            "scenario": self.scenario.id,
            "title": self.scenario.title,
            "clients": len(self._clients),
            "phase": self.session.phase if self.session else None,
        })

    # -- engine loop -----------------------------------------------------------

    def _now_wall_ms(self) -> int:
        return int((time.monotonic() - self._started) * 1000)

    async def _run_events(self) -> None:
        while True:
            event = await self._events.get()
            effects = self.session.step(event)
            self._dispatch_effects(effects)
            self._broadcast_state_if_changed()

    async def _run_ticker(self) -> None:
        last = 0
        while True:
            await asyncio.sleep(self.tick_ms / 1000)
            now = self._now_wall_ms()
            if now > last:
                self._events.put_nowait(Tick(now - last))
                last = now

    async def _run_heartbeat(self) -> None:
        while True:
            await asyncio.sleep(self.heartbeat_ms / 1000)
            self._broadcast("status", self._status_payload())

    def _status_payload(self) -> dict:
        session = self.session
        return {"phase": session.phase, "paused": session.phase == "paused",
                "clock_ms": session.clock_ms, "wall_ms": session.wall_ms,
                "clients": len(self._clients)}

    def _dispatch_effects(self, effects) -> None:
        for effect in effects:
            self.emitted_effects.append(effect)
            if isinstance(effect, EmitSummary):
                self._last_summary = effect_payload(effect)
                self._broadcast("summary", self._last_summary)
            else:
                self._broadcast("effect", effect_payload(effect))

    def _broadcast_state_if_changed(self) -> None:
        snap = self.session.snapshot()
        if _scene_of(snap) != _scene_of(self._last_snapshot):
            self._last_snapshot = snap
            self._broadcast("state", snap)

    def _broadcast(self, op: str, payload: dict) -> None:
        for client in list(self._clients.values()):
            if not client.subscribed:
                continue
            if not client.send(op, payload):
                self._drop(client)  # hopelessly backed up

    def _drop(self, client: _Client) -> None:
        self._clients.pop(client.id, None)
        if self._pause_holder == client.id:
            self._pause_holder = None

    # -- per-connection handling -------------------------------------------------

    async def _ws_endpoint(self, websocket) -> None:
        await websocket.accept()
        client = _Client(self._next_client_id, websocket)
        self._next_client_id += 1
        self._clients[client.id] = client
        sender = asyncio.get_running_loop().create_task(self._run_sender(client))
        try:
            while True:
                frame = await websocket.receive_text()
                self._handle_frame(client, frame)
        except WebSocketDisconnect:
            pass
        finally:
            self._drop(client)
            sender.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender

    async def _run_sender(self, client: _Client) -> None:
        while True:
            frame = await client.outbox.get()
            await client.websocket.send_text(frame)

    def _handle_frame(self, client: _Client, frame: str) -> None:
        try:
            msg = decode_message(frame, prev_seq=client.last_seq_in)
        except ProtocolError as exc:
            client.send("error", {"code": exc.code, "message": str(exc)})
            return  # errors never disconnect the client
        client.last_seq_in = msg.seq
        if msg.op == "hello":
            self._on_hello(client, msg.payload)
        elif msg.op == "action":
            self._on_action(client, msg.payload)
        else:
            client.send("error", {"code": "UNEXPECTED_OP",
                                  "message": f"{msg.op!r} is server-to-client"})

    def _on_hello(self, client: _Client, payload: dict) -> None:
        role = payload.get("role", "tutor")
        if role not in ROLES:
            client.send("error", {"code": "BAD_ROLE",
                                  "message": f"unknown role {role!r}"})
            return
        client.role = role
        client.subscribed = True
        if role == "tutor" and self._pause_holder is None:
            self._pause_holder = client.id
        client.send("welcome", {
            "scenario": {"id": self.scenario.id, "title": self.scenario.title,
                         "target_words": list(self.scenario.target_words)},
            "role": role,
            "pause_authority": self._pause_holder == client.id,
            "state": self.session.snapshot(),
            "summary": self._last_summary,
        })

    def _on_action(self, client: _Client, payload: dict) -> None:
        if not client.subscribed:
            client.send("error", {"code": "HELLO_REQUIRED",
                                  "message": "send hello before actions"})
            return
        action = payload.get("type")
        if action not in ACTION_TYPES:
            client.send("error", {"code": "UNKNOWN_ACTION",
                                  "message": f"unknown action {action!r}"})
            return
        if action == "answer":
            if client.role == "observer":
                client.send("error", {"code": "READ_ONLY",
                                      "message": "observers cannot answer"})
                return
            choice = payload.get("choice")
            if not isinstance(choice, int) or isinstance(choice, bool):
                client.send("error", {"code": "BAD_CHOICE",
                                      "message": "choice must be an integer"})
                return
            self._events.put_nowait(AnswerSelected(choice, self._now_wall_ms()))
        elif action == "pause_toggle":
            if client.id != self._pause_holder:
                client.send("error", {"code": "PAUSE_AUTHORITY_HELD",
                                      "message": "another tutor holds pause"})
                return
            self._events.put_nowait(PauseToggled())
        elif action == "shutdown":
            if client.role != "tutor":
                client.send("error", {"code": "NOT_AUTHORIZED",
                                      "message": "only tutors may stop the session"})
                return
            self._events.put_nowait(Shutdown())


def serve(scenario: Scenario, port: int, host: str = "127.0.0.1",
          **service_kwargs) -> None:
    """Run the websocket service until interrupted."""
    import uvicorn

    service = EngineService(scenario, **service_kwargs)
    app = service.build_app()
    uvicorn.run(app, host=host, port=port, log_level="warning")
