"""Stateful HTTP service hosting interactive allocation sessions: a subject
allocates discrete defense units on one of the two bundled session networks,
gets attack feedback each round, and a behavioral fit when done.

State is an append-only JSON-lines event log so a restarted service replays
losslessly; there is no database."""

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .behavior import Defender, InvestmentProfile, ModelError
from .estimation import (
    OUTCOME_DEFENDED,
    RoundRecord,
    fit_alpha_eta,
    simulate_attack_outcome,
)
from .graph import AttackGraph, EdgeKey
from .scenarios import (
    NETWORK_A_CRITICAL_EDGE,
    NETWORK_B_CROSSOVER_EDGE,
    build_network_a,
    build_network_b,
)

PAID_ROUND_STREAM = 104729  # seed lane for the paid-round draw


class SessionError(ValueError):
    def __init__(self, code: str, message: str, status: int = 400):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def _edge_name(key: EdgeKey) -> str:
    return f"{key[0]}->{key[1]}"


def _edge_key(name: str) -> EdgeKey:
    src, _, dst = name.partition("->")
    if not dst:
        raise SessionError("bad_edge", f"malformed edge name {name!r}")
    return (src, dst)


NETWORKS = {"A": build_network_a, "B": build_network_b}


def network_description(name: str) -> dict:
    try:
        graph, defenders = NETWORKS[name]()
    except KeyError:
        raise SessionError("unknown_network", f"unknown network {name!r}", 404) from None
    data = graph.to_dict()
    out = {
        "name": name,
        "nodes": data["nodes"],
        "edges": data["edges"],
        "sources": data["sources"],
        "critical_assets": data["critical_assets"],
        "unit_budget_default": 24,
    }
    if name == "A":
        out["critical_edge"] = _edge_name(NETWORK_A_CRITICAL_EDGE)
    else:
        out["cross_over_edge"] = _edge_name(NETWORK_B_CROSSOVER_EDGE)
    return out


@dataclass
class Session:
    id: str
    network: str
    unit_budget: int
    total_rounds: int
    seed: int
    rounds: list[RoundRecord] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "complete" if len(self.rounds) >= self.total_rounds else "active"

    @property
    def next_round(self) -> int:
        return len(self.rounds) + 1

    def graph_and_defender(self) -> tuple[AttackGraph, Defender]:
        graph, defenders = NETWORKS[self.network](unit_budget=float(self.unit_budget))
        return graph, defenders[0]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "network": self.network,
            "unit_budget": self.unit_budget,
            "total_rounds": self.total_rounds,
            "seed": self.seed,
            "status": self.status,
            "completed_rounds": len(self.rounds),
            "rounds": [
                {
                    "index": r.index,
                    "allocation": {_edge_name(k): v for k, v in r.allocation.items()},
                    "outcome": r.outcome,
                    "path": [_edge_name(k) for k in (r.path or [])],
                }
                for r in self.rounds
            ],
        }


class SessionStore:
    """In-memory sessions with an optional append-only JSONL event log."""

    def __init__(self, log_path: Optional[str] = None):
        self.sessions: dict[str, Session] = {}
        self.log_path = Path(log_path) if log_path else None
        self._lock = threading.Lock()
        if self.log_path and self.log_path.exists():
            self._replay()

    def _replay(self) -> None:
        for line in self.log_path.read_text().splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            if event["event"] == "create":
                s = Session(event["id"], event["network"], event["unit_budget"],
                            event["total_rounds"], event["seed"])
                self.sessions[s.id] = s
            elif event["event"] == "round":
                s = self.sessions[event["id"]]
                s.rounds.append(RoundRecord(
                    index=event["index"],
                    allocation={_edge_key(k): v for k, v in event["allocation"].items()},
                    outcome=event["outcome"],
                    path=[_edge_key(k) for k in event["path"]],
                ))

    def _log(self, event: dict) -> None:
        if self.log_path:
            with open(self.log_path, "a") as fh:
                fh.write(json.dumps(event) + "\n")
                fh.flush()

    def create_session(self, network: str, unit_budget: int = 24,
                       rounds: int = 10, seed: int = 0) -> Session:
        if network not in NETWORKS:
            raise SessionError("unknown_network", f"unknown network {network!r}", 404)
        if unit_budget <= 0 or rounds <= 0:
            raise SessionError("bad_params", "unit budget and rounds must be positive")
        with self._lock:
            sid = uuid.uuid4().hex[:12]
            session = Session(sid, network, int(unit_budget), int(rounds), int(seed))
            self.sessions[sid] = session
            self._log({"event": "create", "id": sid, "network": network,
                       "unit_budget": int(unit_budget), "total_rounds": int(rounds),
                       "seed": int(seed)})
        return session

    def get(self, sid: str) -> Session:
        try:
            return self.sessions[sid]
        except KeyError:
            raise SessionError("not_found", f"no session {sid!r}", 404) from None

    def submit_allocation(self, sid: str, round_index: int,
                          allocation: dict[str, int]) -> tuple[str, list[str], Session]:
        with self._lock:
            session = self.get(sid)
            if session.status != "active":
                raise SessionError("complete", "session already complete", 409)
            if round_index != session.next_round:
                raise SessionError(
                    "out_of_order",
                    f"expected round {session.next_round}, got {round_index}", 409)
            alloc = {}
            for name, units in allocation.items():
                if isinstance(units, bool) or not isinstance(units, int):
                    raise SessionError("bad_units", f"units for {name} must be integers", 422)
                alloc[_edge_key(name)] = units
            record = RoundRecord(index=round_index, allocation=alloc)
            graph, defender = session.graph_and_defender()
            try:
                record.validate(session.unit_budget, graph.edge_map)
            except ModelError as exc:
                raise SessionError("bad_units", str(exc), 422) from None
            profile = InvestmentProfile(
                {(defender.id, k): float(v) for k, v in alloc.items()})
            outcome, path = simulate_attack_outcome(
                graph, profile, [session.seed, round_index])
            record.outcome = outcome
            record.path = path
            session.rounds.append(record)
            self._log({"event": "round", "id": sid, "index": round_index,
                       "allocation": {_edge_name(k): v for k, v in alloc.items()},
                       "outcome": outcome,
                       "path": [_edge_name(k) for k in path]})
        return outcome, [_edge_name(k) for k in path], session

    def session_summary(self, sid: str) -> dict:
        session = self.get(sid)
        if session.status != "complete":
            raise SessionError("incomplete", "session is not complete", 409)
        graph, defender = session.graph_and_defender()
        fit = fit_alpha_eta(graph, session.unit_budget, session.rounds, defender)
        rng = np.random.default_rng([session.seed, PAID_ROUND_STREAM])
        paid_round = int(rng.integers(1, session.total_rounds + 1))
        outcomes = [r.outcome for r in session.rounds]
        return {
            "session_id": sid,
            "network": session.network,
            "alpha_hat": fit.alpha_hat,
            "eta_hat": fit.eta_hat,
            "residual": fit.residual,
            "per_round_alpha": fit.per_round_alpha,
            "trend": fit.trend,
            "defended_count": sum(1 for o in outcomes if o == OUTCOME_DEFENDED),
            "outcomes": outcomes,
            "paid_round": paid_round,
            "paid_round_defended": outcomes[paid_round - 1] == OUTCOME_DEFENDED,
        }


try:
    from pydantic import BaseModel as _BaseModel

    class CreateSessionBody(_BaseModel):
        network: str
        unit_budget: int = 24
        rounds: int = 10
        seed: int = 0

    class AllocationBody(_BaseModel):
        # floats rejected later so the error carries a session-domain message
        allocation: dict

except ImportError:  # pragma: no cover - pydantic ships with fastapi
    CreateSessionBody = AllocationBody = None


def create_app(store: Optional[SessionStore] = None, static_dir: Optional[str] = None):
    """FastAPI application exposing the session API (and optionally the built
    browser client as static files)."""
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="allocation sessions")
    app.state.store = store or SessionStore()

    @app.exception_handler(SessionError)
    async def _session_error(_request: Request, exc: SessionError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    @app.get("/networks/{name}")
    def get_network(name: str):
        return network_description(name)

    @app.post("/sessions")
    def post_session(body: CreateSessionBody):
        session = app.state.store.create_session(
            body.network, body.unit_budget, body.rounds, body.seed)
        return session.to_dict()

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return app.state.store.get(sid).to_dict()

    @app.post("/sessions/{sid}/rounds/{index}")
    def post_round(sid: str, index: int, body: AllocationBody):
        outcome, path, session = app.state.store.submit_allocation(
            sid, index, body.allocation)
        return {
            "outcome": outcome,
            "path": path,
            "round": index,
            "status": session.status,
            "next_round": session.next_round if session.status == "active" else None,
        }

    @app.get("/sessions/{sid}/summary")
    def get_summary(sid: str):
        return app.state.store.session_summary(sid)

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
