"""HTTP session service for interactive firing.

Each session holds one complex, one rule set, and a move history.  Every
mutation bumps a monotone version counter; writers must echo the version
they saw, and a mismatch is rejected with 409 so two clients cannot
interleave moves.  Undo rebuilds the state by replaying the shortened
history from the initial configuration, which keeps "fire then undo"
an identity on the state content (the version keeps climbing).

With a persist directory every session appends its events to a JSONL
file and is rebuilt from it on startup.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from typing import Optional

from fastapi import FastAPI
from pydantic import BaseModel

from . import engine
from .analysis import predict_pyramid
from .complexes import format_edge, format_face, load_complex
from .errors import FlowFireError, IllegalMove, NotConservative
from .flow import edges_to_faces, faces_to_edges, is_conservative, load_config, phi, psi


class SessionError(Exception):
    def __init__(self, status, detail):
        super().__init__(detail)
        self.status = status
        self.detail = detail


def _monitor_values(faces, rules, pulse_k):
    entries = list(faces.values.values())
    values = {
        "chips": sum(entries),
        "max": max(entries + [0]),
        "min": min(entries + [0]),
    }
    if rules.hole is None:
        values["phi"] = phi(faces)
    elif pulse_k is not None:
        values["psi"] = psi(faces, pulse_k, rules.hole)
    return values


def _click_edges(cx, move, rules):
    """Grid edges whose click should trigger this move."""
    if move[0] in (engine.EDGE_FIRE, engine.EDGE_FIRE_ONE_SIDED):
        return [move[1]]
    if move[0] == engine.TRANSFER:
        return list(cx.shared_edges(move[1], move[2]))
    return list(cx.shared_edges(rules.hole, move[1]))


def _move_label(cx, move):
    kind = move[0]
    if kind in (engine.EDGE_FIRE, engine.EDGE_FIRE_ONE_SIDED):
        return f"fire {format_edge(cx, move[1])}"
    if kind == engine.TRANSFER:
        return f"transfer {format_face(cx, move[1])} to {format_face(cx, move[2])}"
    return f"{kind} at {format_face(cx, move[1])}"


class Session:
    def __init__(self, session_id, cx, initial, rules, pulse_k):
        self.id = session_id
        self.complex = cx
        self.initial = initial
        self.rules = rules
        self.pulse_k = pulse_k
        self.state = initial.copy()
        self.moves = []
        self.version = 0
        self.lock = threading.Lock()
        self.last = None

    # -- queries ---------------------------------------------------------

    def sorted_moves(self):
        return engine.legal_moves(self.state, self.rules)

    def window(self):
        if self.complex.kind != "grid":
            return None
        xs, ys = [], []
        if self.rules.hole is not None:
            hx, hy = self.rules.hole
            xs.append(hx)
            ys.append(hy)
            if self.pulse_k is not None:
                r = self.pulse_k + 1
                xs += [hx - r, hx + r]
                ys += [hy - r, hy + r]
        for cell in self.state.values:
            if self.rules.representation == "face":
                xs.append(cell[0])
                ys.append(cell[1])
            else:
                xs.append(cell[1])
                ys.append(cell[2])
        if not xs:
            xs, ys = [0], [0]
        return [min(xs) - 1, min(ys) - 1, max(xs) + 1, max(ys) + 1]

    def snapshot(self):
        cx = self.complex
        faces = None
        edges = None
        if self.rules.representation == "face":
            faces = self.state
            edges = faces_to_edges(self.state)
        else:
            edges = self.state
            if is_conservative(self.state):
                faces = edges_to_faces(self.state)
        monitors = {}
        if faces is not None:
            monitors = _monitor_values(faces, self.rules, self.pulse_k)
        moves = self.sorted_moves()
        snap = {
            "session": self.id,
            "version": self.version,
            "kind": cx.kind,
            "rules": {
                "representation": self.rules.representation,
                "hole": format_face(cx, self.rules.hole)
                if self.rules.hole is not None
                else None,
                "transfer_threshold": self.rules.transfer_threshold,
            },
            "pulse_k": self.pulse_k,
            "steps": len(self.moves),
            "terminal": not moves,
            "state": self.state.to_json(),
            "faces": faces.to_json() if faces is not None else None,
            "edges": edges.to_json() if edges is not None else None,
            "monitors": monitors,
            "window": self.window(),
            "last": self.last,
        }
        return snap

    def moves_payload(self):
        cx = self.complex
        moves = self.sorted_moves()
        return {
            "session": self.id,
            "version": self.version,
            "moves": [
                {
                    "index": i,
                    "move": engine.move_to_json(cx, m),
                    "label": _move_label(cx, m),
                    "edges": [
                        format_edge(cx, e) for e in _click_edges(cx, m, self.rules)
                    ],
                }
                for i, m in enumerate(moves)
            ],
        }

    # -- mutations (caller holds the lock) --------------------------------

    def _check_version(self, version):
        if version != self.version:
            raise SessionError(409, {"reason": "stale version", "expected": self.version})

    def fire(self, version, move_index):
        self._check_version(version)
        moves = self.sorted_moves()
        if not 0 <= move_index < len(moves):
            raise SessionError(
                422, {"reason": "move index out of range", "count": len(moves)}
            )
        move = moves[move_index]
        face_rep = self.rules.representation == "face"
        before = _monitor_values(self.state, self.rules, self.pulse_k) if face_rep else {}
        self.state = engine.apply_move(self.state, move, self.rules)
        self.moves.append(move)
        self.version += 1
        after = _monitor_values(self.state, self.rules, self.pulse_k) if face_rep else {}
        self.last = {
            "action": "fire",
            "move": engine.move_to_json(self.complex, move),
            "deltas": {k: after[k] - before[k] for k in after if k in before},
        }
        return move

    def undo(self, version):
        self._check_version(version)
        if not self.moves:
            raise SessionError(422, {"reason": "nothing to undo"})
        history = self.moves[:-1]
        state = self.initial.copy()
        for move in history:
            state = engine.apply_move(state, move, self.rules)
        self.state = state
        self.moves = history
        self.version += 1
        self.last = {"action": "undo", "move": None, "deltas": {}}

    def autorun(self, version, strategy_name, seed, step_cap):
        self._check_version(version)
        strategy = engine.Strategy(strategy_name, seed)
        report = engine.run(
            self.state, self.rules, strategy, step_cap=step_cap, monitors=()
        )
        self.state = report.final
        self.moves.extend(report.moves)
        self.version += 1
        self.last = {
            "action": "autorun",
            "move": None,
            "deltas": {},
            "steps": report.steps,
            "stop_reason": report.stop_reason,
        }
        return report


class SessionStore:
    def __init__(self, persist_dir=None):
        self.persist_dir = persist_dir
        self.sessions = {}
        self._lock = threading.Lock()
        if persist_dir:
            os.makedirs(persist_dir, exist_ok=True)
            self._recover()

    # -- persistence -------------------------------------------------------

    def _path(self, session_id):
        return os.path.join(self.persist_dir, f"{session_id}.jsonl")

    def _append(self, session_id, event):
        if not self.persist_dir:
            return
        with open(self._path(session_id), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def _recover(self):
        for name in sorted(os.listdir(self.persist_dir)):
            if not name.endswith(".jsonl"):
                continue
            session_id = name[: -len(".jsonl")]
            try:
                with open(os.path.join(self.persist_dir, name)) as fh:
                    lines = [json.loads(line) for line in fh if line.strip()]
                if not lines or lines[0].get("event") != "create":
                    continue
                head = lines[0]
                session = self._build(
                    session_id,
                    head["complex"],
                    head["config"],
                    head["rules"],
                    head.get("pulse_k"),
                    head.get("transfer_threshold", 2),
                )
                for event in lines[1:]:
                    if event["event"] == "fire":
                        move = engine.move_from_json(session.complex, event["move"])
                        session.state = engine.apply_move(session.state, move, session.rules)
                        session.moves.append(move)
                        session.version += 1
                    elif event["event"] == "undo":
                        session.undo(session.version)
                    elif event["event"] == "autorun":
                        for obj in event["moves"]:
                            move = engine.move_from_json(session.complex, obj)
                            session.state = engine.apply_move(session.state, move, session.rules)
                            session.moves.append(move)
                        session.version += 1
                    if "last" in event:
                        session.last = event["last"]
                self.sessions[session_id] = session
            except (FlowFireError, ValueError, KeyError, IndexError, OSError):
                # A torn or stale log must not block startup.
                continue

    # -- session lifecycle ---------------------------------------------------

    def _build(self, session_id, complex_obj, config_obj, rules_mode, pulse_k, threshold):
        cx = load_complex(complex_obj)
        state = load_config(cx, config_obj)
        hole = None
        if rules_mode == "hole":
            if cx.distinguished is None:
                raise SessionError(
                    422, {"reason": "hole rules need a distinguished face"}
                )
            hole = cx.distinguished
        rules = engine.Rules(
            cx, representation=state.rep, hole=hole, transfer_threshold=threshold
        )
        if pulse_k is None and hole is not None and state.rep == "face":
            k = state.values.get(hole, 0)
            if k > 0 and state.values == {hole: k}:
                pulse_k = k
        return Session(session_id, cx, state, rules, pulse_k)

    def create(self, complex_obj, config_obj, rules_mode, pulse_k, threshold):
        session_id = uuid.uuid4().hex[:12]
        try:
            session = self._build(
                session_id, complex_obj, config_obj, rules_mode, pulse_k, threshold
            )
        except SessionError:
            raise
        except (FlowFireError, ValueError, KeyError) as exc:
            raise SessionError(422, {"reason": str(exc)})
        with self._lock:
            self.sessions[session_id] = session
        self._append(
            session_id,
            {
                "event": "create",
                "complex": complex_obj,
                "config": config_obj,
                "rules": rules_mode,
                "pulse_k": session.pulse_k,
                "transfer_threshold": threshold,
            },
        )
        return session

    def get(self, session_id):
        with self._lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise SessionError(404, {"reason": "unknown session"})
        return session


class CreateBody(BaseModel):
    complex: dict
    config: dict
    rules: str = "nohole"
    pulse_k: Optional[int] = None
    transfer_threshold: int = 2


class FireBody(BaseModel):
    version: int
    move_index: int


class VersionBody(BaseModel):
    version: int


class AutorunBody(BaseModel):
    version: int
    strategy: str = "seeded-random"
    seed: int = 0
    step_cap: int = 100_000


def create_app(persist_dir=None, web_dir=None):
    app = FastAPI(title="flowfire", docs_url=None, redoc_url=None)
    store = SessionStore(persist_dir)
    app.state.store = store

    @app.exception_handler(SessionError)
    async def _session_error(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    @app.get("/healthz")
    def healthz():
        return {"ok": True, "sessions": len(store.sessions)}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateBody):
        if body.rules not in ("hole", "nohole"):
            raise SessionError(422, {"reason": "rules must be hole or nohole"})
        session = store.create(
            body.complex, body.config, body.rules, body.pulse_k, body.transfer_threshold
        )
        return session.snapshot()

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.snapshot()

    @app.get("/sessions/{session_id}/moves")
    def get_moves(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return session.moves_payload()

    @app.post("/sessions/{session_id}/fire")
    def fire(session_id: str, body: FireBody):
        session = store.get(session_id)
        with session.lock:
            try:
                move = session.fire(body.version, body.move_index)
            except IllegalMove as exc:
                raise SessionError(422, {"reason": str(exc)})
            store._append(
                session_id,
                {
                    "event": "fire",
                    "move": engine.move_to_json(session.complex, move),
                    "last": session.last,
                },
            )
            return session.snapshot()

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str, body: VersionBody):
        session = store.get(session_id)
        with session.lock:
            session.undo(body.version)
            store._append(session_id, {"event": "undo", "last": session.last})
            return session.snapshot()

    @app.post("/sessions/{session_id}/autorun")
    def autorun(session_id: str, body: AutorunBody):
        if body.strategy not in engine.STRATEGY_NAMES:
            raise SessionError(422, {"reason": f"unknown strategy {body.strategy!r}"})
        if body.step_cap < 1:
            raise SessionError(422, {"reason": "step_cap must be positive"})
        session = store.get(session_id)
        with session.lock:
            report = session.autorun(body.version, body.strategy, body.seed, body.step_cap)
            store._append(
                session_id,
                {
                    "event": "autorun",
                    "moves": [
                        engine.move_to_json(session.complex, m) for m in report.moves
                    ],
                    "last": session.last,
                },
            )
            snap = session.snapshot()
            snap["autorun"] = {
                "steps": report.steps,
                "terminal": report.terminal,
                "stop_reason": report.stop_reason,
            }
            return snap

    @app.get("/sessions/{session_id}/predict")
    def predict(session_id: str):
        session = store.get(session_id)
        with session.lock:
            if session.rules.hole is None or session.pulse_k is None:
                raise SessionError(
                    422, {"reason": "prediction needs hole rules and a pulse"}
                )
            predicted = predict_pyramid(
                session.pulse_k, session.rules.hole, session.complex
            )
            current = session.state
            if session.rules.representation == "edge":
                try:
                    current = edges_to_faces(session.state)
                except NotConservative:
                    current = None
            return {
                "session": session.id,
                "version": session.version,
                "pulse_k": session.pulse_k,
                "predicted": predicted.to_json(),
                "matches": current is not None and dict(current.values) == dict(predicted.values),
            }

    if web_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=web_dir, html=True), name="web")

    return app
