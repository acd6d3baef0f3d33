"""HTTP session service: a human plays the comparison oracle.

Each session runs one greedy search. The service proposes pairs, the
client reports which looks closer to the target its user has in mind, or
that the proposed object *is* the target. Completed sessions feed the
per-dataset learned state (popularity counters and closeness orders),
which persists through an append-only event log plus per-dataset
snapshots.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .datafiles import Dataset
from .demand import marginals
from .learning import LearnedPolicy, OrderStore, TargetCounter, dump_state, flush_history, load_state
from .policy import ExactRankPolicy
from .search import SearchSession
from .seeds import substream
from .uidatasets import bundled_datasets

SESSION_TIMEOUT_S = 30 * 60.0


class CreateSessionBody(BaseModel):
    dataset_id: str
    policy_mode: str = "exact"
    epsilon: float = 0.1


class AnswerBody(BaseModel):
    choice: str                 # "current" | "proposed"
    turn: int | None = None     # optional duplicate/stale guard


class FoundBody(BaseModel):
    object_id: int


@dataclass
class Session:
    """One live search, driven by a human through the HTTP API.

    The inner :class:`SearchSession` is the same state machine the
    simulated searches run on; the human merely replaces the oracle.
    """

    id: str
    dataset_id: str
    policy_mode: str
    search: SearchSession
    history: list[tuple[int, int, int]] = field(default_factory=list)
    status: str = "active"
    last_touch: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def current(self) -> int:
        return self.search.current

    @property
    def proposed(self) -> int:
        proposal = self.search.pending
        assert proposal is not None
        return proposal

    @property
    def turn(self) -> int:
        return len(self.history)

    @property
    def cost(self) -> int:
        return len(self.history)


class DatasetState:
    """One dataset plus its learned state and persistence bookkeeping."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset
        n = dataset.space.n
        _, self.mu = marginals(dataset.demand)
        self.exact_policy = ExactRankPolicy(dataset.space, self.mu)
        self.counter = TargetCounter(n)
        self.stores = [OrderStore(n, x) for x in range(n)]
        self.applied_events = 0
        self.lock = threading.Lock()  # serializes learned-state mutations

    def learned_policy(self, epsilon: float) -> LearnedPolicy:
        return LearnedPolicy(self.counter, self.stores, epsilon)

    def apply_completion(self, target: int, history) -> None:
        self.counter.record_target(target)
        flush_history(self.stores[target], history, target)
        self.applied_events += 1

    def snapshot(self) -> dict:
        return {"applied": self.applied_events,
                "state": dump_state(self.counter, self.stores)}

    def restore(self, doc: dict) -> None:
        self.counter, self.stores = load_state(doc["state"])
        self.applied_events = doc["applied"]


class SessionService:
    def __init__(self, data_dir: str | Path, seed: int = 0,
                 datasets: dict[str, Dataset] | None = None,
                 session_timeout: float = SESSION_TIMEOUT_S):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "learned").mkdir(exist_ok=True)
        self.seed = seed
        self.session_timeout = session_timeout
        self.datasets = {
            did: DatasetState(ds)
            for did, ds in (datasets or bundled_datasets()).items()
        }
        self.sessions: dict[str, Session] = {}
        self._counter = 0
        self._lock = threading.Lock()
        self._log_lock = threading.Lock()
        self._boot()

    # -- persistence ----------------------------------------------------

    @property
    def _log_path(self) -> Path:
        return self.data_dir / "events.jsonl"

    def _snapshot_path(self, dataset_id: str) -> Path:
        return self.data_dir / "learned" / f"{dataset_id}.json"

    def _boot(self) -> None:
        """Snapshot plus log replay: learned state survives restarts."""
        for did, state in self.datasets.items():
            path = self._snapshot_path(did)
            if path.exists():
                state.restore(json.loads(path.read_text()))
        behind: set[str] = set()
        if self._log_path.exists():
            seen: dict[str, int] = {did: 0 for did in self.datasets}
            with open(self._log_path) as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    did = event["dataset"]
                    if did not in self.datasets:
                        continue
                    seen[did] += 1
                    state = self.datasets[did]
                    if seen[did] <= state.applied_events:
                        continue  # already inside the snapshot
                    state.apply_completion(event["target"],
                                           [tuple(h) for h in event["history"]])
                    behind.add(did)
        # catch snapshots up with whatever the log replay added
        for did in behind:
            self._write_snapshot(did)

    def _write_snapshot(self, dataset_id: str) -> None:
        state = self.datasets[dataset_id]
        tmp = self._snapshot_path(dataset_id).with_suffix(".tmp")
        tmp.write_text(json.dumps(state.snapshot(), sort_keys=True))
        tmp.replace(self._snapshot_path(dataset_id))

    def _persist_completion(self, dataset_id: str, target: int, history) -> None:
        event = {"dataset": dataset_id, "target": target,
                 "history": [list(h) for h in history]}
        with self._log_lock:
            with open(self._log_path, "a") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        self._write_snapshot(dataset_id)

    # -- session plumbing -------------------------------------------------

    def _object_view(self, dataset_id: str, obj: int) -> dict:
        ds = self.datasets[dataset_id].dataset
        display = ds.display[obj] if obj < len(ds.display) else {"kind": "id", "payload": obj}
        return {"id": obj, "display": display}

    def _get_session(self, session_id: str) -> Session:
        with self._lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise HTTPException(404, "unknown session")
        if (session.status == "active"
                and time.monotonic() - session.last_touch > self.session_timeout):
            session.status = "abandoned"  # timed out: contributes nothing
        return session

    def create_session(self, body: CreateSessionBody) -> dict:
        state = self.datasets.get(body.dataset_id)
        if state is None:
            raise HTTPException(404, f"unknown dataset {body.dataset_id!r}")
        if body.policy_mode not in ("exact", "learned"):
            raise HTTPException(422, "policy_mode must be 'exact' or 'learned'")
        if body.policy_mode == "learned":
            policy = state.learned_policy(body.epsilon)
        else:
            policy = state.exact_policy
        with self._lock:
            index = self._counter
            self._counter += 1
        rng = substream(self.seed, "session", index)
        source = int(rng.integers(state.dataset.space.n))
        search = SearchSession(policy, source, rng, cap=1 << 30)
        with state.lock:
            proposed = search.propose()
        session = Session(
            id=f"{index:06d}{rng.integers(1 << 32):08x}",
            dataset_id=body.dataset_id, policy_mode=body.policy_mode,
            search=search)
        with self._lock:
            self.sessions[session.id] = session
        return {
            "session_id": session.id,
            "current": self._object_view(body.dataset_id, source),
            "proposed": self._object_view(body.dataset_id, proposed),
            "turn": 0,
        }

    def answer(self, session_id: str, body: AnswerBody) -> dict:
        session = self._get_session(session_id)
        with session.lock:
            if session.status != "active":
                raise HTTPException(409, f"session is {session.status}")
            if body.turn is not None and body.turn != session.turn:
                raise HTTPException(409, "stale or duplicate answer")
            if body.choice not in ("current", "proposed"):
                raise HTTPException(422, "choice must be 'current' or 'proposed'")
            winner = session.current if body.choice == "current" else session.proposed
            session.history.append((session.current, session.proposed, winner))
            session.search.observe(winner)
            state = self.datasets[session.dataset_id]
            with state.lock:
                session.search.propose()
            session.last_touch = time.monotonic()
            return {
                "current": self._object_view(session.dataset_id, session.current),
                "proposed": self._object_view(session.dataset_id, session.proposed),
                "turn": session.turn,
            }

    def mark_found(self, session_id: str, body: FoundBody) -> dict:
        session = self._get_session(session_id)
        with session.lock:
            if session.status != "active":
                raise HTTPException(409, f"session is {session.status}")
            if body.object_id not in (session.current, session.proposed):
                raise HTTPException(
                    422, "found object must be one of the two on display")
            session.history.append(
                (session.current, session.proposed, body.object_id))
            session.status = "found"
            target = body.object_id
            state = self.datasets[session.dataset_id]
            with state.lock:
                state.apply_completion(target, session.history)
            self._persist_completion(session.dataset_id, target, session.history)
            return {"status": "found", "cost": session.cost}

    def list_datasets(self) -> list[dict]:
        out = []
        for did, state in sorted(self.datasets.items()):
            ds = state.dataset
            kind = ds.display[0]["kind"] if ds.display else "id"
            out.append({"id": did, "name": ds.name or did,
                        "size": ds.space.n, "display_kind": kind})
        return out

    def session_stats(self, session_id: str) -> dict:
        session = self._get_session(session_id)
        return {"cost": session.cost, "status": session.status,
                "history_length": len(session.history)}


def create_app(data_dir: str | Path = "service-data", seed: int = 0,
               datasets: dict[str, Dataset] | None = None,
               ui_dir: str | None = None,
               session_timeout: float = SESSION_TIMEOUT_S) -> FastAPI:
    service = SessionService(data_dir, seed=seed, datasets=datasets,
                             session_timeout=session_timeout)
    app = FastAPI(title="navsearch session service")
    app.state.service = service

    from fastapi.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody):
        return service.create_session(body)

    @app.post("/api/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody):
        return service.answer(session_id, body)

    @app.post("/api/sessions/{session_id}/found")
    def found(session_id: str, body: FoundBody):
        return service.mark_found(session_id, body)

    @app.get("/api/datasets")
    def datasets_index():
        return service.list_datasets()

    @app.get("/api/sessions/{session_id}/stats")
    def stats(session_id: str):
        return service.session_stats(session_id)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
