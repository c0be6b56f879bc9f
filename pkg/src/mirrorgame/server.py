"""WebSocket transport for live sessions.

One connection drives one session.  The client opens with a hello naming a
config preset, streams ``hp`` positions, and receives ``vp`` positions at the
model tick plus a final report.  Messages are newline-delimited JSON, one
object per frame.  Human samples arriving faster than the tick are
downsampled to the latest value at each tick boundary; a missing sample
reuses the last one.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .control import CouplingWeights
from .errors import TooShort
from .experiments import WEIGHT_PRESETS, analysis_to_dict
from .liveplay import SessionConfig, SessionState, session_report, session_tick
from .signature import Signature, synth_signature

DEFAULT_LIVE_WEIGHTS = CouplingWeights(theta_p=0.2, theta_sigma=0.4, theta_v=0.4, eta=1e-4)


def session_presets(
    signature: Signature,
    period: float = 0.04,
    max_duration: float = 60.0,
    hp_signature: Signature | None = None,
) -> dict[str, SessionConfig]:
    """Named session configs: ``default`` plus one per dyad weight preset."""
    base = dict(period=period, max_duration=max_duration, hp_signature=hp_signature)
    presets = {"default": SessionConfig(signature=signature, weights=DEFAULT_LIVE_WEIGHTS, **base)}
    for name, w in WEIGHT_PRESETS.items():
        presets[name] = SessionConfig(signature=signature, weights=w, **base)
    return presets


class _Connection:
    def __init__(self, ws: WebSocket, presets: dict[str, SessionConfig]):
        self.ws = ws
        self.presets = presets
        self.state: SessionState | None = None
        self.latest_hp: float | None = None
        self.stop_requested = False
        self.disconnected = False
        self._reported = False

    async def send(self, obj: dict) -> None:
        await self.ws.send_text(json.dumps(obj) + "\n")

    async def run(self) -> None:
        try:
            raw = await self.ws.receive_text()
        except (WebSocketDisconnect, RuntimeError):
            return
        try:
            hello = json.loads(raw)
        except json.JSONDecodeError:
            hello = None
        if not isinstance(hello, dict) or hello.get("type") != "hello":
            await self.send({"type": "error", "code": "expected_hello"})
            await self.ws.close()
            return
        preset = hello.get("config_preset", "default")
        if preset not in self.presets:
            await self.send({"type": "error", "code": "unknown_preset"})
            await self.ws.close()
            return
        cfg = self.presets[preset]
        self.state = SessionState(config=cfg)
        self.state.start()
        await self.send({"type": "ready", "T": cfg.period, "domain": [cfg.domain[0], cfg.domain[1]]})
        ticker = asyncio.create_task(self._ticker())
        try:
            await self._receive_loop()
        finally:
            self.stop_requested = True
            try:
                await ticker
            except Exception:
                pass
            await self._finish()

    async def _receive_loop(self) -> None:
        while True:
            try:
                raw = await self.ws.receive_text()
            except (WebSocketDisconnect, RuntimeError):
                self.disconnected = self.ws.client_state.name != "CONNECTED"
                return
            try:
                msg = json.loads(raw)
            except json.JSONDecodeError:
                await self.send({"type": "error", "code": "bad_message"})
                continue
            mtype = msg.get("type") if isinstance(msg, dict) else None
            if mtype == "hp":
                try:
                    self.latest_hp = float(msg["x"])
                except (KeyError, TypeError, ValueError):
                    await self.send({"type": "error", "code": "bad_message"})
            elif mtype == "stop":
                return
            else:
                await self.send({"type": "error", "code": "bad_message"})

    async def _ticker(self) -> None:
        loop = asyncio.get_running_loop()
        start = loop.time()
        i = 0
        period = self.state.config.period
        while not self.stop_requested and self.state.phase == "running":
            i += 1
            delay = start + i * period - loop.time()
            await asyncio.sleep(max(delay, 0.0))
            if self.stop_requested or self.state.phase != "running":
                break
            if self.latest_hp is None:
                continue  # hold until the first human sample arrives
            _, vp_x = session_tick(self.state, self.latest_hp)
            try:
                await self.send({"type": "vp", "t": self.state.elapsed, "x": vp_x})
            except (WebSocketDisconnect, RuntimeError):
                self.disconnected = True
                return
        if self.state.phase == "finished" and not self.stop_requested:
            await self._finish()

    async def _finish(self) -> None:
        if self._reported or self.disconnected or self.state is None:
            return
        self._reported = True
        self.state.phase = "finished"
        try:
            report = session_report(self.state)
            payload = {"type": "report", **analysis_to_dict(report)}
        except TooShort:
            payload = {"type": "error", "code": "too_short"}
        try:
            await self.send(payload)
            await self.ws.close()
        except (WebSocketDisconnect, RuntimeError):
            self.disconnected = True


def create_app(
    presets: dict[str, SessionConfig] | None = None,
    signature: Signature | None = None,
    period: float = 0.04,
    max_duration: float = 60.0,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    """Build the live-play app: ``/ws`` plus an optional static frontend."""
    if presets is None:
        if signature is None:
            signature = synth_signature(seed=7, label="vp-default")
        presets = session_presets(signature, period=period, max_duration=max_duration)
    app = FastAPI(title="mirrorgame live server")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        await _Connection(ws, presets).run()

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="ui")
    return app
