"""Live round-based session host: 5 seats (human or bot), HTTP + event stream.

The round state machine is synchronous and self-contained (LiveSession), so
it can be driven directly in tests; the FastAPI layer adds transport,
per-session locking, and the round timeout. Scoring goes through the same
resolution path as the simulator, so a bot-only session served here writes
the same log bytes as run_session with the same seed.

Sessions with no human seats play out to completion on creation.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import re
from dataclasses import dataclass, field
from datetime import datetime

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from pydantic import BaseModel

from . import game
from .agents import (
    AgentPolicy,
    SessionConfig,
    SessionLog,
    SessionState,
    log_lines,
    treatment_label,
)
from .control import ControlMode

DEFAULT_TIMEOUT_S = 5.0

SEAT_KINDS = ("human", "bot")

# symbol + intensity digit per treatment; b=0 keeps digit 1 for fixed width
_ID_CODE = {"N2": ("N", "2"), "N1": ("N", "1"), "o": ("o", "1"),
            "P1": ("P", "1"), "P2": ("P", "2")}

_ID_RE = re.compile(r"^(\d{5})([ABC])(\d{2})([NoP])(\d)(\d+)$")


class SessionError(Exception):
    status = 409


class UnknownSession(SessionError):
    status = 404


class SessionFull(SessionError):
    pass


class DuplicateToken(SessionError):
    pass


class SessionInProgress(SessionError):
    pass


class OutOfPhase(SessionError):
    pass


class DoubleSubmission(SessionError):
    pass


class InvalidStrategy(SessionError):
    status = 422


class BadConfig(SessionError):
    status = 422


class DuplicateSession(SessionError):
    pass


class UnknownToken(SessionError):
    status = 403


class NotFinished(SessionError):
    pass


def id_code(b: float) -> tuple[str, str]:
    label = treatment_label(b)
    if label is not None:
        return _ID_CODE[label]
    symbol = "P" if b > 0 else "N" if b < 0 else "o"
    return symbol, str(min(9, round(abs(b) / 0.4)) or 1)


def make_session_id(b: float, repetition: int, server_code: str = "00",
                    when: datetime | None = None) -> str:
    """Structured label: date YMMDD, period letter, server code, parameter
    symbol, intensity digit, repetition. Permutation is carried by the
    config, not the id."""
    when = when or datetime.now()
    date = f"{when.year % 10}{when.month:02d}{when.day:02d}"
    period = "A" if when.hour < 12 else "B" if when.hour < 18 else "C"
    symbol, intensity = id_code(b)
    return f"{date}{period}{server_code}{symbol}{intensity}{repetition}"


def parse_session_id(sid: str) -> dict:
    m = _ID_RE.match(sid)
    if not m:
        raise ValueError(f"malformed session id {sid!r}")
    date, period, server, symbol, intensity, repetition = m.groups()
    return {
        "date": date,
        "period": period,
        "server_code": server,
        "symbol": symbol,
        "intensity": int(intensity),
        "repetition": int(repetition),
    }


def averaged_ranks(scores) -> list[float]:
    """Rank 1 = highest score; tied scores share the averaged rank."""
    scores = list(scores)
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    ranks = [0.0] * len(scores)
    pos = 0
    while pos < len(order):
        j = pos
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[pos]]:
            j += 1
        shared = (pos + j) / 2 + 1
        for k in range(pos, j + 1):
            ranks[order[k]] = shared
        pos = j + 1
    return ranks


class LiveSession:
    """One session's state machine. All methods are synchronous; the app
    layer serializes calls per session.

    Phases: lobby -> round_open(1) -> round_resolved(1) -> round_open(2)
    -> ... -> finished. Bot seats submit as soon as a round opens; human
    seats submit over HTTP; fill_missing() implements the round timeout
    (missing seats repeat their previous choice, uniform in round 1).
    """

    def __init__(self, config: SessionConfig, seat_plan: list[str],
                 session_id: str, timeout_s: float | None = DEFAULT_TIMEOUT_S):
        if len(seat_plan) != config.players:
            raise ValueError(f"seat plan must cover {config.players} seats")
        for kind in seat_plan:
            if kind not in SEAT_KINDS:
                raise ValueError(f"unknown seat kind {kind!r}")
        self.state = SessionState(config)
        self.config = config
        self.seat_plan = list(seat_plan)
        self.session_id = session_id
        self.timeout_s = timeout_s
        self.phase = "lobby"
        self.phase_history: list[tuple[str, int]] = [("lobby", 0)]
        self.tokens: dict[str, int] = {}
        self.pending: dict[int, int] = {}
        self.outbox: list[dict] = []
        if not self._unbound_human_seats():
            self._start()

    # -- phase bookkeeping ------------------------------------------------

    @property
    def t(self) -> int:
        return self.state.t

    @property
    def rounds(self) -> int:
        return self.config.rounds

    def _set_phase(self, phase: str, t: int) -> None:
        self.phase = phase
        self.phase_history.append((phase, t))

    def _emit(self, event: dict) -> None:
        self.outbox.append(event)

    def take_outbox(self) -> list[dict]:
        events, self.outbox = self.outbox, []
        return events

    def _unbound_human_seats(self) -> list[int]:
        taken = set(self.tokens.values())
        return [i for i, kind in enumerate(self.seat_plan)
                if kind == "human" and i not in taken]

    # -- lobby ------------------------------------------------------------

    def join(self, token: str) -> int:
        if self.phase != "lobby":
            raise SessionInProgress("session already started")
        if token in self.tokens:
            raise DuplicateToken(f"token already seated")
        free = self._unbound_human_seats()
        if not free:
            raise SessionFull("no free human seat")
        seat = free[0]
        self.tokens[token] = seat
        self._emit({"type": "lobby", "joined": len(self.tokens),
                    "needed": len(self._unbound_human_seats())})
        if not self._unbound_human_seats():
            self._start()
        return seat

    def fill_with_bots(self) -> None:
        """Convert still-unjoined human seats to bots; lobby only."""
        if self.phase != "lobby":
            raise SessionInProgress("session already started")
        for i in self._unbound_human_seats():
            self.seat_plan[i] = "bot"
        self._start()

    def _start(self) -> None:
        self._set_phase("round_open", 1)
        self._emit({"type": "round_open", "t": 1})
        self._advance()

    # -- rounds -----------------------------------------------------------

    def submit(self, token: str, strategy) -> None:
        if token not in self.tokens:
            raise UnknownToken("token is not seated in this session")
        if self.phase != "round_open":
            raise OutOfPhase(f"phase is {self.phase}")
        if not isinstance(strategy, int) or isinstance(strategy, bool) \
                or not 1 <= strategy <= game.N_STRATEGIES:
            raise InvalidStrategy(f"strategy must be an integer 1..{game.N_STRATEGIES}")
        seat = self.tokens[token]
        if seat in self.pending:
            raise DoubleSubmission("choice already submitted this round")
        self.pending[seat] = strategy
        self._advance()

    def fill_missing(self) -> None:
        """Timeout path: absent seats repeat their previous choice (round 1:
        uniform random from the seat's own stream), then the round resolves."""
        if self.phase != "round_open":
            raise OutOfPhase(f"phase is {self.phase}")
        last = self.state.records[-1] if self.state.records else None
        for seat in range(self.config.players):
            if seat not in self.pending:
                if last is None:
                    self.pending[seat] = self.state.seats[seat].first_choice()
                else:
                    self.pending[seat] = last.choices[seat]
        self._advance()

    def _bots_submit(self) -> None:
        last = self.state.records[-1] if self.state.records else None
        for seat, kind in enumerate(self.seat_plan):
            if kind != "bot" or seat in self.pending:
                continue
            bot = self.state.seats[seat]
            if last is None:
                self.pending[seat] = bot.first_choice()
            else:
                self.pending[seat] = bot.next_choice(
                    seat, last, self.state.A_perm, self.state.control_belief,
                    self.state.exp_values)

    def _advance(self) -> None:
        # loop, not recursion: a bot-only session runs every round here
        while self.phase == "round_open":
            self._bots_submit()
            if len(self.pending) < self.config.players:
                return
            t = self.t
            choices = [self.pending[seat] for seat in range(self.config.players)]
            record = self.state.resolve(choices)
            self.pending = {}
            self._set_phase("round_resolved", t)
            self._emit({"type": "round_result", "t": t, "record": record})
            if t == self.rounds:
                self._set_phase("finished", t)
                self._emit({"type": "finished", "ranking": self.ranking()})
            else:
                self._set_phase("round_open", t + 1)
                self._emit({"type": "round_open", "t": t + 1})

    # -- views and export ---------------------------------------------------

    def waiting_on_humans(self) -> bool:
        return (self.phase == "round_open"
                and any(self.seat_plan[s] == "human" and s not in self.pending
                        for s in range(self.config.players)))

    def feedback_for(self, seat: int, record) -> dict:
        return {
            "strategy": record.choices[seat],
            "counts": list(record.counts),
            "game_earn": record.game_payoffs[seat],
            "reward": record.rewards[seat],
            "tax": record.taxes[seat],
            "round_sum": record.totals[seat],
            "cumulative": record.cumulative[seat],
        }

    def ranking(self) -> list[dict]:
        scores = self.state.cumulative
        ranks = averaged_ranks(scores)
        by_seat = {seat: token for token, seat in self.tokens.items()}
        rows = [{"seat": s, "kind": self.seat_plan[s], "token": by_seat.get(s),
                 "cumulative": float(scores[s]), "rank": ranks[s]}
                for s in range(self.config.players)]
        return sorted(rows, key=lambda r: r["rank"])

    def view(self, token: str | None = None) -> dict:
        out = {
            "session_id": self.session_id,
            "phase": self.phase,
            "t": self.t if self.phase in ("round_open",) else len(self.state.records),
            "rounds": self.rounds,
            "players": self.config.players,
            "b": self.config.b,
            "permutation": self.config.permutation,
            "timeout_s": self.timeout_s,
            "joined": len(self.tokens),
            "needed": len(self._unbound_human_seats()),
            "seat": None,
            "submitted": None,
            "feedback": None,
            "cumulative": None,
            "ranking": self.ranking() if self.phase == "finished" else None,
        }
        if token is not None:
            if token not in self.tokens:
                raise UnknownToken("token is not seated in this session")
            seat = self.tokens[token]
            out["seat"] = seat
            out["submitted"] = seat in self.pending
            if self.state.records:
                record = self.state.records[-1]
                out["feedback"] = self.feedback_for(seat, record)
                out["cumulative"] = record.cumulative[seat]
        return out

    def export_log(self, partial: bool = False) -> SessionLog:
        if self.phase != "finished" and not partial:
            raise NotFinished("session still running; pass partial to export anyway")
        return SessionLog(config=self.config, records=list(self.state.records),
                          session_id=self.session_id)

    def log_text(self, partial: bool = False) -> str:
        log = self.export_log(partial=partial)
        extra = {"partial": True} if self.phase != "finished" else None
        return "\n".join(log_lines(log, extra)) + "\n"


# -- HTTP layer -------------------------------------------------------------


class CreateSessionRequest(BaseModel):
    config: dict = {}
    seat_plan: list[str] | None = None
    timeout_s: float | None = DEFAULT_TIMEOUT_S
    allow_any_b: bool = False


class JoinRequest(BaseModel):
    token: str


class ChoiceRequest(BaseModel):
    token: str
    strategy: int


@dataclass
class SessionHandle:
    session: LiveSession
    lock: asyncio.Lock = field(default_factory=asyncio.Lock)
    queues: list[tuple[int, asyncio.Queue]] = field(default_factory=list)
    timeout_task: asyncio.Task | None = None
    timeout_round: int = 0


def config_from_dict(raw: dict) -> SessionConfig:
    raw = dict(raw)
    if "policy" in raw:
        raw["policy"] = AgentPolicy.from_dict(raw["policy"])
    if "mode" in raw:
        raw["mode"] = ControlMode(**raw["mode"])
    return SessionConfig(**raw)


def create_app(server_code: str = "00", allow_any_b: bool = False) -> FastAPI:
    app = FastAPI(title="evoctrl session server")
    # browser clients are served from wherever; the API carries no cookies
    # or credentials, so a blanket allow is safe
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    sessions: dict[str, SessionHandle] = {}
    repetition = {}

    def handle_of(sid: str) -> SessionHandle:
        if sid not in sessions:
            raise UnknownSession(f"no session {sid!r}")
        return sessions[sid]

    def push_events(handle: SessionHandle, events: list[dict]) -> None:
        for event in events:
            if event["type"] == "round_result":
                for seat, queue in handle.queues:
                    payload = {"type": "round_result", "t": event["t"],
                               "feedback": handle.session.feedback_for(seat, event["record"])}
                    queue.put_nowait(payload)
            else:
                for _seat, queue in handle.queues:
                    queue.put_nowait(event)

    def manage_timeout(handle: SessionHandle) -> None:
        session = handle.session
        if session.timeout_s is None:
            return
        if not session.waiting_on_humans():
            if handle.timeout_task is not None and not handle.timeout_task.done():
                handle.timeout_task.cancel()
            handle.timeout_task = None
            return
        if handle.timeout_task is not None and not handle.timeout_task.done() \
                and handle.timeout_round == session.t:
            return
        if handle.timeout_task is not None and not handle.timeout_task.done():
            handle.timeout_task.cancel()
        handle.timeout_round = session.t
        handle.timeout_task = asyncio.get_running_loop().create_task(
            fire_timeout(handle, session.t))

    async def fire_timeout(handle: SessionHandle, t: int) -> None:
        await asyncio.sleep(handle.session.timeout_s)
        async with handle.lock:
            session = handle.session
            if session.phase == "round_open" and session.t == t:
                session.fill_missing()
                push_events(handle, session.take_outbox())
        manage_timeout(handle)

    async def mutate(handle: SessionHandle, fn):
        async with handle.lock:
            result = fn()
            push_events(handle, handle.session.take_outbox())
        manage_timeout(handle)
        return result

    @app.exception_handler(SessionError)
    async def session_error(request: Request, exc: SessionError):
        return JSONResponse(status_code=exc.status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.post("/sessions")
    async def create_session(req: CreateSessionRequest):
        try:
            config = config_from_dict(req.config)
        except (TypeError, ValueError) as exc:
            raise BadConfig(str(exc)) from exc
        if treatment_label(config.b) is None and not (req.allow_any_b or allow_any_b):
            raise BadConfig(f"b={config.b} is not a standard treatment; "
                            "pass allow_any_b to override")
        seat_plan = req.seat_plan or ["bot"] * config.players
        symbol, intensity = id_code(config.b)
        if config.session_id:
            sid = config.session_id
            if sid in sessions:
                raise DuplicateSession(f"session id {sid!r} taken")
        else:
            counter = repetition.setdefault((symbol, intensity), itertools.count(1))
            sid = make_session_id(config.b, next(counter), server_code)
            while sid in sessions:
                sid = make_session_id(config.b, next(counter), server_code)
        try:
            live = LiveSession(config, seat_plan, sid, timeout_s=req.timeout_s)
        except ValueError as exc:
            raise BadConfig(str(exc)) from exc
        handle = SessionHandle(session=live)
        sessions[sid] = handle
        handle.session.take_outbox()  # creation events predate any subscriber
        manage_timeout(handle)
        return {"session_id": sid, "permutation": config.permutation,
                "phase": handle.session.phase}

    @app.post("/sessions/{sid}/join")
    async def join(sid: str, req: JoinRequest):
        handle = handle_of(sid)
        seat = await mutate(handle, lambda: handle.session.join(req.token))
        view = handle.session.view(req.token)
        return {"seat": seat, **view}

    @app.post("/sessions/{sid}/choice")
    async def choice(sid: str, req: ChoiceRequest):
        handle = handle_of(sid)
        await mutate(handle, lambda: handle.session.submit(req.token, req.strategy))
        return {"ok": True, "t": handle.session.t}

    @app.get("/sessions/{sid}/state")
    async def state(sid: str, token: str | None = Query(default=None)):
        handle = handle_of(sid)
        async with handle.lock:
            return handle.session.view(token)

    @app.post("/sessions/{sid}/fill_bots")
    async def fill_bots(sid: str):
        handle = handle_of(sid)
        await mutate(handle, handle.session.fill_with_bots)
        return {"phase": handle.session.phase}

    @app.get("/sessions/{sid}/events")
    async def events(sid: str, token: str = Query(...)):
        handle = handle_of(sid)
        session = handle.session
        if token not in session.tokens:
            raise UnknownToken("token is not seated in this session")
        seat = session.tokens[token]
        queue: asyncio.Queue = asyncio.Queue()

        async def stream():
            handle.queues.append((seat, queue))
            try:
                snapshot = {"type": "phase", "phase": session.phase,
                            "t": session.t if session.phase == "round_open"
                            else len(session.state.records)}
                yield f"data: {json.dumps(snapshot, separators=(',', ':'))}\n\n"
                while True:
                    try:
                        event = await asyncio.wait_for(queue.get(), timeout=15)
                    except asyncio.TimeoutError:
                        yield ": ping\n\n"
                        continue
                    yield f"data: {json.dumps(event, separators=(',', ':'))}\n\n"
                    if event.get("type") == "finished":
                        return
            finally:
                handle.queues.remove((seat, queue))

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/sessions/{sid}/log")
    async def session_log(sid: str, partial: bool = Query(default=False)):
        handle = handle_of(sid)
        async with handle.lock:
            text = handle.session.log_text(partial=partial)
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.get("/sessions")
    async def list_sessions():
        return [{"session_id": sid, "phase": h.session.phase,
                 "t": len(h.session.state.records), "rounds": h.session.rounds}
                for sid, h in sessions.items()]

    return app


def serve(host: str = "127.0.0.1", port: int = 8000, server_code: str = "00",
          allow_any_b: bool = False) -> None:
    import uvicorn

    uvicorn.run(create_app(server_code=server_code, allow_any_b=allow_any_b),
                host=host, port=port)
