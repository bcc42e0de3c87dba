"""CLI entry point and live service.

Batch mode runs a simulation and writes the metrics CSV; live mode paces the
engine to wall-clock round period and serves the dashboard protocol: GET
/modes, GET /state, and a websocket at /ws that pushes one state frame per
round and accepts mode-change / topology commands. All engine interaction
flows through the single serialized inbox drained at round boundaries, so a
recorded command log replays bit-identically in batch mode.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from .config import SimConfig, default_config, load_config
from .engine import World, build_manifest, compute_metrics, export_metrics, run, step_round
from .errors import CertificationError, ConfigError, WcpsError

log = logging.getLogger("wcps.gateway")

DEFAULT_PORT = 8080
OUTBOX_LIMIT = 256

COMMAND_TYPES = ("mode_request", "move_node", "set_reference", "set_link_p", "isolate_node")


def encode_state(world: World, entry) -> dict:
    """The per-round state frame; field names are part of the wire contract."""
    topo = world.topology
    return {
        "type": "state",
        "round": entry.round,
        "t_ms": entry.t_ms,
        "pendulums": [
            {
                "id": i,
                "x": p[0],
                "theta": p[2],
                "u": p[4],
                "active": bool(p[5]),
            }
            for i, p in enumerate(entry.pendulums)
        ],
        "nodes": [
            {
                "id": v,
                "x": float(topo.positions[v, 0]),
                "y": float(topo.positions[v, 1]),
                "mode": nm,
                "epoch": ne,
                "status": ns,
                "rx": bool(nrx),
            }
            for v, (nm, ne, ns, nrx) in enumerate(entry.nodes)
        ],
        "links": [{"a": a, "b": b, "p": p} for a, b, p in topo.links()],
        "mode": entry.mode,
        "dwell_remaining": world.dwell_remaining(),
    }


def encode_modes(world: World) -> dict:
    from .schedule import energy_cost

    return {
        "modes": [
            {
                "id": m.id,
                "name": m.name,
                "laws": {str(t.pendulum_id): t.law for t in m.task_set.pendulums},
                "energy_ms": energy_cost(m.schedule),
            }
            for m in world.modes
        ],
        "tau_min": world.tau_min,
        "lead_rounds": world.cfg.lead_rounds,
    }


def wire_events(entry) -> list[dict]:
    """Event frames derived from one round's trace entry (never dropped)."""
    frames = []
    for ev in entry.events:
        kind = ev.get("kind")
        if kind == "mode_changed":
            frames.append({"type": "mode_changed", "mode": ev["mode"], "round": ev["round"]})
        elif kind == "rejected":
            frames.append({"type": "rejected", "earliest_round": ev.get("earliest_round")})
        elif kind == "announce":
            frames.append(
                {
                    "type": "announce",
                    "mode": ev["target"],
                    "switch_round": ev["switch_round"],
                    "epoch": ev["epoch"],
                }
            )
        elif kind == "safe_entry":
            frames.append(
                {"type": "safe_entry", "node": ev["node"], "reason": ev["reason"], "round": entry.round}
            )
        elif kind == "resync":
            frames.append({"type": "resync", "node": ev["node"], "round": entry.round})
        elif kind == "fall":
            frames.append({"type": "fall", "pendulum": ev["pendulum"], "round": entry.round})
    return frames


class Outbox:
    """Bounded per-client frame queue: drop-oldest for state frames, never
    for event frames."""

    def __init__(self, limit: int = OUTBOX_LIMIT):
        self._lock = threading.Lock()
        self._frames: list[dict] = []
        self._limit = limit

    def push(self, frame: dict, droppable: bool) -> None:
        with self._lock:
            if droppable and len(self._frames) >= self._limit:
                for i, f in enumerate(self._frames):
                    if f.get("type") == "state":
                        del self._frames[i]
                        break
            self._frames.append(frame)

    def drain(self) -> list[dict]:
        with self._lock:
            out = self._frames
            self._frames = []
            return out


@dataclass
class SessionRunner:
    """Owns the engine thread of one live session."""

    cfg: SimConfig
    pace_s: float | None = None  # None: wall-clock round period; 0: unthrottled
    max_rounds: int | None = None

    world: World = field(init=False)
    _thread: threading.Thread | None = field(init=False, default=None)
    _stop: threading.Event = field(init=False, default_factory=threading.Event)
    _outboxes: list[Outbox] = field(init=False, default_factory=list)
    _lock: threading.Lock = field(init=False, default_factory=threading.Lock)
    latest_state: dict | None = field(init=False, default=None)

    def __post_init__(self):
        self.world = World(self.cfg)
        if self.pace_s is None:
            self.pace_s = self.cfg.round_period_ms / 1000.0

    # -- engine loop -------------------------------------------------------
    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, name="wcps-engine", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=10)

    def running(self) -> bool:
        return self._thread is not None and self._thread.is_alive()

    def _loop(self) -> None:
        while not self._stop.is_set():
            if self.max_rounds is not None and self.world.round >= self.max_rounds:
                break
            t0 = time.monotonic()
            entry = step_round(self.world)
            frame = encode_state(self.world, entry)
            events = wire_events(entry)
            with self._lock:
                self.latest_state = frame
                boxes = list(self._outboxes)
            for box in boxes:
                box.push(frame, droppable=True)
                for ev in events:
                    box.push(ev, droppable=False)
            if self.pace_s:
                remaining = self.pace_s - (time.monotonic() - t0)
                if remaining > 0:
                    self._stop.wait(remaining)

    # -- client side -------------------------------------------------------
    def subscribe(self) -> Outbox:
        box = Outbox()
        with self._lock:
            self._outboxes.append(box)
        return box

    def unsubscribe(self, box: Outbox) -> None:
        with self._lock:
            if box in self._outboxes:
                self._outboxes.remove(box)

    def submit(self, cmd: dict) -> dict | None:
        """Queue a client command; returns an error frame for malformed input.

        Unknown command types are ignored with a logged warning; malformed
        known commands produce an error frame and the session continues.
        """
        if not isinstance(cmd, dict) or "type" not in cmd:
            return {"type": "error", "message": "commands must be objects with a 'type' field"}
        kind = cmd["type"]
        if kind not in COMMAND_TYPES:
            log.warning("ignoring unknown command type %r", kind)
            return None
        try:
            checked = _validate_command(cmd)
        except (KeyError, TypeError, ValueError) as e:
            return {"type": "error", "message": f"malformed {kind} command: {e}"}
        self.world.submit_command(checked)
        return None

    @property
    def command_log(self) -> list[dict]:
        return list(self.world.command_log)

    def result(self):
        """Trace, metrics, and manifest of the rounds executed so far."""
        return (
            tuple(self.world.trace),
            compute_metrics(self.world),
            build_manifest(self.world),
        )


def _validate_command(cmd: dict) -> dict:
    kind = cmd["type"]
    if kind == "mode_request":
        return {"type": kind, "mode": int(cmd["mode"])}
    if kind == "move_node":
        return {
            "type": kind,
            "node": int(cmd["node"]),
            "x": float(cmd["x"]),
            "y": float(cmd["y"]),
        }
    if kind == "set_reference":
        return {"type": kind, "x": float(cmd["x"])}
    if kind == "set_link_p":
        p = float(cmd["p"])
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        return {"type": kind, "p": p}
    if kind == "isolate_node":
        return {"type": kind, "node": int(cmd["node"])}
    raise ValueError(f"unhandled command type {kind}")


def build_app(session: SessionRunner, ui_dir: str | None = None) -> FastAPI:
    """FastAPI app around one live session."""
    app = FastAPI(title="wcps gateway")

    @app.get("/modes")
    def modes():
        return encode_modes(session.world)

    @app.get("/state")
    def state():
        if session.latest_state is None:
            return JSONResponse({"type": "error", "message": "no rounds executed yet"}, status_code=404)
        return session.latest_state

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        box = session.subscribe()

        async def pump_out():
            while True:
                frames = box.drain()
                for frame in frames:
                    await websocket.send_json(frame)
                if not frames:
                    await asyncio.sleep(0.01)

        async def pump_in():
            while True:
                msg = await websocket.receive_text()
                try:
                    cmd = json.loads(msg)
                except json.JSONDecodeError as e:
                    await websocket.send_json({"type": "error", "message": f"not JSON: {e}"})
                    continue
                err = session.submit(cmd)
                if err is not None:
                    await websocket.send_json(err)

        try:
            done, pending = await asyncio.wait(
                [asyncio.create_task(pump_out()), asyncio.create_task(pump_in())],
                return_when=asyncio.FIRST_EXCEPTION,
            )
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if exc is not None and not isinstance(exc, (WebSocketDisconnect, RuntimeError)):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            session.unsubscribe(box)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def _load_cli_config(path: str | None) -> SimConfig:
    path = path or os.environ.get("WCPS_CONFIG")
    return load_config(path) if path else default_config()


def _cmd_run(args) -> int:
    cfg = _load_cli_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.duration is not None:
        cfg.duration_rounds = args.duration
    cfg.validate()
    result = run(cfg)
    csv = export_metrics(
        result.trace, n_pend=len(cfg.pendulums), n_nodes=result.world.topology.n_nodes
    )
    with open(args.out, "w") as f:
        f.write(csv)
    if args.manifest:
        with open(args.manifest, "w") as f:
            json.dump(result.manifest, f, indent=2)
    print(json.dumps(result.metrics.to_dict(), indent=2))
    return 0


def _cmd_certify(args) -> int:
    cfg = _load_cli_config(args.config)
    world = World(cfg)  # raises CertificationError on any unstable mode
    for cert, mode in zip(world.certs, world.modes):
        if cert.vacuous:
            print(f"mode {mode.id} ({mode.name}): certified (no closed loop)")
        else:
            print(
                f"mode {mode.id} ({mode.name}): certified rho={cert.rho:.6f} "
                f"decay={cert.decay:.6f}"
            )
    print(f"mu={world.bound.mu:.6f}")
    print(f"tau_min={world.bound.tau_min} (effective {world.tau_min} with dwell floor)")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    cfg = _load_cli_config(args.config)
    session = SessionRunner(cfg, max_rounds=args.max_rounds)
    app = build_app(session, ui_dir=args.ui)
    session.start()
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    finally:
        session.stop()
        if args.command_log:
            with open(args.command_log, "w") as f:
                json.dump(session.command_log, f, indent=2)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcps",
        description="Wireless cyber-physical system simulator: pendulums over multi-hop floods",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="batch simulation, metrics to CSV")
    p_run.add_argument("--config", help="JSON config file (default: built-in demo config)")
    p_run.add_argument("--seed", type=int, help="override config seed")
    p_run.add_argument("--duration", type=int, help="override duration in rounds")
    p_run.add_argument("--out", default="metrics.csv", help="metrics CSV path")
    p_run.add_argument("--manifest", help="also write the run manifest JSON here")
    p_run.set_defaults(func=_cmd_run)

    p_serve = sub.add_parser("serve", help="live session with dashboard endpoints")
    p_serve.add_argument("--config", help="JSON config file")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument(
        "--port", type=int, default=int(os.environ.get("WCPS_PORT", DEFAULT_PORT))
    )
    p_serve.add_argument("--ui", help="static dashboard directory to mount at /")
    p_serve.add_argument("--command-log", help="write the session command log JSON on exit")
    p_serve.add_argument("--max-rounds", type=int, help="stop the engine after this many rounds")
    p_serve.set_defaults(func=_cmd_serve)

    p_cert = sub.add_parser("certify", help="print per-mode certificates and tau_min")
    p_cert.add_argument("--config", help="JSON config file")
    p_cert.set_defaults(func=_cmd_certify)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CertificationError as e:
        print(f"certification failure: {e}", file=sys.stderr)
        return 1
    except (ConfigError, WcpsError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
