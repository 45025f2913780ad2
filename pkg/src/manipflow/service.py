"""Newline-delimited JSON TCP service in front of a Memory, plus the client.

One JSON object per line in both directions. Requests carry a requestId the
response echoes; "subscribe" turns on commit notifications for the
connection; "invoke" runs a named server-side operation and streams its
intermediate events before the final response. Malformed lines are answered
in-band with requestId null and the connection stays open.
"""

from __future__ import annotations

import json
import os
import queue
import socket
import socketserver
import threading
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

from .idf import canonical_json, from_jsonable, to_jsonable
from .memory import (Memory, MissingShapeName, Segment, SkillFile,
                     UnknownSkill, export_skill, import_skill)
from .robot import RobotDescription

DEFAULT_PORT = 7471
ADDR_ENV_VAR = "MAKEABLE_MEMORY_ADDR"

InvokeHandler = Callable[[Mapping[str, Any], Callable[[Mapping[str, Any]], None]],
                         Mapping[str, Any]]


def default_address() -> Tuple[str, int]:
    raw = os.environ.get(ADDR_ENV_VAR, f"127.0.0.1:{DEFAULT_PORT}")
    host, _, port = raw.rpartition(":")
    return (host or "127.0.0.1", int(port))


def _segment(name: str) -> Segment:
    try:
        return Segment[name]
    except KeyError:
        raise ValueError(f"unknown segment {name!r}") from None


class _Handler(socketserver.StreamRequestHandler):
    server: "MemoryServer"

    def setup(self) -> None:
        super().setup()
        self.write_lock = threading.Lock()
        self.subscribed_segments: Optional[set] = None
        self.unsubscribe: Optional[Callable[[], None]] = None

    def _send(self, payload: Mapping[str, Any]) -> None:
        data = (canonical_json(payload) + "\n").encode("utf-8")
        with self.write_lock:
            try:
                self.wfile.write(data)
                self.wfile.flush()
            except (BrokenPipeError, OSError):
                pass

    def _notify(self, segment: Segment, entity_id: str, revision: int) -> None:
        if self.subscribed_segments is not None and \
                segment.name not in self.subscribed_segments:
            return
        self._send({"event": "committed", "segment": segment.name,
                    "entityId": entity_id, "revision": revision})

    def handle(self) -> None:
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            try:
                request = json.loads(line)
                if not isinstance(request, dict):
                    raise ValueError("request must be a JSON object")
            except (json.JSONDecodeError, ValueError) as exc:
                self._send({"requestId": None, "status": "error",
                            "error": f"malformed request: {exc}"})
                continue
            request_id = request.get("requestId")
            try:
                data = self._dispatch(request)
                self._send({"requestId": request_id, "status": "ok",
                            "data": data})
            except Exception as exc:
                self._send({"requestId": request_id, "status": "error",
                            "error": f"{type(exc).__name__}: {exc}"})

    def finish(self) -> None:
        if self.unsubscribe is not None:
            self.unsubscribe()
        super().finish()

    def _dispatch(self, request: Mapping[str, Any]) -> Mapping[str, Any]:
        op = request.get("op")
        memory = self.server.memory
        if op == "commit":
            entity = from_jsonable(request["entity"])
            revision = memory.commit(_segment(request["segment"]), entity,
                                     entity_id=request.get("entityId"))
            return {"revision": revision}
        if op == "query":
            rows = memory.query_rows(
                _segment(request["segment"]),
                entity_type=request.get("entityType"),
                entity_id=request.get("entityId"),
                revision=request.get("revision"),
                predicate=request.get("predicate"))
            return {"results": [{"entityId": eid, "revision": rev,
                                 "entity": to_jsonable(entity)}
                                for eid, entity, rev in rows]}
        if op == "snapshot":
            memory.snapshot(request["directory"])
            return {"directory": request["directory"]}
        if op == "exportSkill":
            skill_file = export_skill(memory, request["name"])
            return {"skillFile": to_jsonable(skill_file)}
        if op == "importSkill":
            skill_file = from_jsonable(request["skillFile"], SkillFile)
            robot = self.server.robot
            if robot is None:
                raise ValueError("server has no robot to import skills for")
            skill = import_skill(memory, skill_file, robot)
            return {"skill": to_jsonable(skill)}
        if op == "subscribe":
            segments = request.get("segments")
            self.subscribed_segments = set(segments) if segments else None
            if self.unsubscribe is None:
                self.unsubscribe = memory.subscribe(self._notify)
            return {"subscribed": True}
        if op == "invoke":
            name = request.get("name")
            handler = self.server.invokables.get(name or "")
            if handler is None:
                raise ValueError(f"unknown invokable {name!r}")
            request_id = request.get("requestId")

            def emit(event: Mapping[str, Any]) -> None:
                payload = dict(event)
                payload["requestId"] = request_id
                payload.setdefault("event", "progress")
                self._send(payload)

            return handler(request.get("args", {}), emit)
        raise ValueError(f"unknown op {op!r}")


class MemoryServer:
    """Threaded TCP server around one Memory instance."""

    def __init__(self, memory: Memory, host: str = "127.0.0.1",
                 port: int = DEFAULT_PORT,
                 robot: Optional[RobotDescription] = None,
                 invokables: Optional[Mapping[str, InvokeHandler]] = None):
        self.memory = memory
        self.robot = robot
        self.invokables: Dict[str, InvokeHandler] = dict(invokables or {})

        server = socketserver.ThreadingTCPServer((host, port), _Handler,
                                                 bind_and_activate=False)
        server.allow_reuse_address = True
        server.daemon_threads = True
        server.memory = memory  # type: ignore[attr-defined]
        server.robot = robot  # type: ignore[attr-defined]
        server.invokables = self.invokables  # type: ignore[attr-defined]
        server.server_bind()
        server.server_activate()
        self._server = server
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> Tuple[str, int]:
        return self._server.server_address  # type: ignore[return-value]

    def start(self) -> "MemoryServer":
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        kwargs={"poll_interval": 0.05},
                                        daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever(poll_interval=0.05)

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def serve(bind_address: "str | Tuple[str, int]", memory: Memory,
          robot: Optional[RobotDescription] = None,
          invokables: Optional[Mapping[str, InvokeHandler]] = None
          ) -> MemoryServer:
    """Start serving a memory on the given address; returns the running
    server (call ``stop()`` to shut down)."""
    if isinstance(bind_address, str):
        host, _, port = bind_address.rpartition(":")
        address = (host or "127.0.0.1", int(port))
    else:
        address = bind_address
    return MemoryServer(memory, address[0], address[1], robot,
                        invokables).start()


class ServiceError(Exception):
    pass


class MemoryClient:
    """Blocking request/response client with a background reader thread;
    subscription notifications and invoke progress events are routed to
    queues/callbacks."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT,
                 timeout: float = 10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rb")
        self._timeout = timeout
        self._lock = threading.Lock()
        self._next_id = 0
        self._pending: Dict[str, "queue.Queue[dict]"] = {}
        self._event_handlers: Dict[str, Callable[[dict], None]] = {}
        self.notifications: "queue.Queue[dict]" = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            for raw in self._file:
                try:
                    message = json.loads(raw.decode("utf-8"))
                except json.JSONDecodeError:
                    continue
                if "status" in message:
                    q = self._pending.get(message.get("requestId"))
                    if q is not None:
                        q.put(message)
                elif message.get("event") == "committed":
                    self.notifications.put(message)
                else:
                    handler = self._event_handlers.get(message.get("requestId"))
                    if handler is not None:
                        handler(message)
        except (OSError, ValueError):
            pass

    def request(self, op: str, on_event: Optional[Callable[[dict], None]] = None,
                **kwargs: Any) -> dict:
        with self._lock:
            self._next_id += 1
            request_id = f"r{self._next_id}"
        payload = {"requestId": request_id, "op": op, **kwargs}
        response_queue: "queue.Queue[dict]" = queue.Queue()
        self._pending[request_id] = response_queue
        if on_event is not None:
            self._event_handlers[request_id] = on_event
        try:
            self._sock.sendall((canonical_json(payload) + "\n").encode("utf-8"))
            response = response_queue.get(timeout=self._timeout)
        finally:
            self._pending.pop(request_id, None)
            self._event_handlers.pop(request_id, None)
        if response.get("status") != "ok":
            raise ServiceError(response.get("error", "request failed"))
        return response.get("data", {})

    # -- convenience wrappers ------------------------------------------------

    def commit(self, segment: "Segment | str", entity: Any,
               entity_id: Optional[str] = None) -> int:
        name = segment.name if isinstance(segment, Segment) else segment
        kwargs: Dict[str, Any] = {"segment": name,
                                  "entity": to_jsonable(entity)}
        if entity_id is not None:
            kwargs["entityId"] = entity_id
        return int(self.request("commit", **kwargs)["revision"])

    def query(self, segment: "Segment | str", **filters: Any) -> List[dict]:
        name = segment.name if isinstance(segment, Segment) else segment
        return list(self.request("query", segment=name, **filters)["results"])

    def subscribe(self, segments: Optional[Sequence[str]] = None) -> None:
        kwargs = {"segments": list(segments)} if segments else {}
        self.request("subscribe", **kwargs)

    def export_skill(self, name: str) -> SkillFile:
        data = self.request("exportSkill", name=name)
        return from_jsonable(data["skillFile"], SkillFile)

    def import_skill(self, skill_file: SkillFile) -> dict:
        return self.request("importSkill", skillFile=to_jsonable(skill_file))

    def invoke(self, name: str, args: Optional[Mapping[str, Any]] = None,
               on_event: Optional[Callable[[dict], None]] = None) -> dict:
        return self.request("invoke", name=name, args=dict(args or {}),
                            on_event=on_event)

    def snapshot(self, directory: str) -> None:
        self.request("snapshot", directory=directory)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass
