"""HTTP draft assistant: live sessions, pick validation, recommendations.

A session is created with the bans and ten slot bindings up front; picks
then arrive strictly in turn order. Every read rebuilds the acting
player's view through the same draft-state rules the model trained on, so
whatever a binding claims about the opposing team, the model never sees
opponent roles or histories — only public picks and bans.

Sessions live in memory behind per-session locks; an optional append-only
journal of creation and pick events replays at startup to reconstruct the
exact same sessions. Responses are deterministic given checkpoint and
journal.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .checkpoint import CheckpointBundle, params_digest
from .data import CorpusError, HistoryProvider
from .model import encode_states
from .recommend import DEFAULT_TAU, Strategy, recommend
from .state import (
    BLUE,
    MASK_ID,
    NUM_TURNS,
    TEAM_OF_TURN,
    UNK_ID,
    DraftState,
    PlayerHistory,
    SlotView,
    legal_champions,
)

DEFAULT_K = 3


class ServiceError(Exception):
    """Maps to a JSON error body {code, message, field?}."""

    def __init__(self, status: int, code: str, message: str, field_path: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.field_path = field_path


# ---------------------------------------------------------------------------
# request bodies


class HistoryEntryBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    champion: str
    role: str | None = None
    features: list[float]


class SlotBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    player_id: str | None = None
    role: str | None = None
    history: list[HistoryEntryBody] | None = None


class CreateSessionBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    checkpoint: str | None = None
    bans: list[str] = []
    slots: list[SlotBody]


class PickBody(BaseModel):
    model_config = ConfigDict(extra="forbid")
    turn: int
    champion: str


# ---------------------------------------------------------------------------
# sessions


@dataclass(frozen=True)
class SlotBinding:
    player_id: str | None
    role_id: int                       # UNK_ID when unbound
    role_name: str | None
    history: PlayerHistory | None      # None = anonymous


@dataclass
class Session:
    session_id: str
    checkpoint: str
    bans: frozenset[int]
    bindings: tuple[SlotBinding, ...]
    picks: list[int] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def cursor(self) -> int | None:
        return len(self.picks) + 1 if len(self.picks) < NUM_TURNS else None

    def snapshot_picks(self) -> list[int]:
        with self.lock:
            return list(self.picks)


def session_draft_state(session: Session, num_champions: int, picks: list[int]) -> DraftState:
    """The board as the acting player sees it; Blue's view once complete.

    Built by the same visibility rules as states from recorded matches:
    earlier picks public, acting slot masked, later slots unknown, roles
    and histories only for the viewing team.
    """
    turn = len(picks) + 1 if len(picks) < NUM_TURNS else None
    viewer = TEAM_OF_TURN[turn] if turn is not None else BLUE
    slots = []
    for t in range(1, NUM_TURNS + 1):
        team = TEAM_OF_TURN[t]
        own = team == viewer
        if t <= len(picks):
            champion = picks[t - 1]
        elif turn is not None and t == turn:
            champion = MASK_ID
        else:
            champion = UNK_ID
        binding = session.bindings[t - 1]
        slots.append(SlotView(
            t, team, champion,
            binding.role_id if own else UNK_ID,
            binding.history if own else None,
        ))
    return DraftState(
        num_champions=num_champions,
        query_turn=turn,
        acting_team=viewer,
        bans=session.bans,
        slots=tuple(slots),
    )


# ---------------------------------------------------------------------------
# application context


class ServiceContext:
    def __init__(self, bundles, corpus=None, journal_path=None):
        if isinstance(bundles, CheckpointBundle):
            bundles = {"default": bundles}
        if not bundles:
            raise ValueError("at least one checkpoint is required")
        self.bundles: dict[str, CheckpointBundle] = dict(bundles)
        self.default_checkpoint = next(iter(self.bundles))
        self.corpus = corpus
        self.providers: dict[str, HistoryProvider] = {}
        first = self.bundles[self.default_checkpoint]
        for name, bundle in self.bundles.items():
            if bundle.vocab != first.vocab:
                raise ValueError(f"checkpoint {name!r} uses a different vocabulary")
            if corpus is not None:
                if corpus.vocab != bundle.vocab:
                    raise ValueError("player directory vocabulary does not match checkpoint")
                self.providers[name] = HistoryProvider(
                    corpus, bundle.normalizer,
                    history_length=bundle.model.config.history_length,
                )
        self.vocab = first.vocab
        self.digests = {name: params_digest(b.model) for name, b in self.bundles.items()}
        self.sessions: dict[str, Session] = {}
        self.sessions_lock = threading.Lock()
        self.journal_path = Path(journal_path) if journal_path else None
        self.journal_lock = threading.Lock()
        self._id_counter = 0

    # -- session plumbing ---------------------------------------------------

    def new_session_id(self) -> str:
        with self.sessions_lock:
            self._id_counter += 1
            return f"d{self._id_counter:06d}"

    def get_session(self, session_id: str) -> Session:
        with self.sessions_lock:
            session = self.sessions.get(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def journal(self, event: dict) -> None:
        if self.journal_path is None:
            return
        with self.journal_lock:
            with open(self.journal_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, sort_keys=True) + "\n")
                fh.flush()

    def replay_journal(self) -> int:
        """Rebuild sessions from an existing journal file; returns event count."""
        if self.journal_path is None or not self.journal_path.exists():
            return 0
        count = 0
        with open(self.journal_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                    kind = event["event"]
                    if kind == "create":
                        body = CreateSessionBody.model_validate(event["body"])
                        self.create_session(body, journal=False,
                                            session_id=event["session_id"])
                    elif kind == "pick":
                        session = self.get_session(event["session_id"])
                        self.apply_pick(session, int(event["turn"]),
                                        event["champion"], journal=False)
                    else:
                        raise ValueError(f"unknown event kind {kind!r}")
                except (ServiceError, ValueError, KeyError) as exc:
                    raise ValueError(
                        f"corrupt journal {self.journal_path}:{lineno}: {exc}"
                    ) from exc
                count += 1
        with self.sessions_lock:
            numbered = [
                int(m.group(1)) for m in
                (re.fullmatch(r"d(\d+)", sid) for sid in self.sessions)
                if m is not None
            ]
            self._id_counter = max([self._id_counter, *numbered])
        return count

    # -- domain operations --------------------------------------------------

    def resolve_bundle(self, name: str | None) -> tuple[str, CheckpointBundle]:
        resolved = name if name is not None else self.default_checkpoint
        bundle = self.bundles.get(resolved)
        if bundle is None:
            raise ServiceError(404, "unknown_checkpoint", f"no checkpoint {resolved!r}",
                               field_path="checkpoint")
        return resolved, bundle

    def _resolve_binding(self, body: SlotBody, index: int, bundle, ckpt_name: str) -> SlotBinding:
        where = f"slots[{index}]"
        role_id = UNK_ID
        if body.role is not None:
            try:
                role_id = self.vocab.role_id(body.role)
            except CorpusError:
                raise ServiceError(400, "unknown_role", f"unknown role {body.role!r}",
                                   field_path=f"{where}.role") from None
        if body.player_id is not None and body.history is not None:
            raise ServiceError(400, "conflicting_binding",
                               "bind either a player id or an inline history, not both",
                               field_path=where)
        history: PlayerHistory | None = None
        if body.player_id is not None:
            provider = self.providers.get(ckpt_name)
            if provider is None:
                raise ServiceError(400, "no_player_directory",
                                   "service started without a match corpus; "
                                   "player ids cannot be resolved",
                                   field_path=f"{where}.player_id")
            if body.player_id not in self.corpus.player_slots:
                raise ServiceError(400, "unknown_player",
                                   f"player {body.player_id!r} is not in the corpus",
                                   field_path=f"{where}.player_id")
            history = provider.history(body.player_id, len(self.corpus.matches))
        elif body.history is not None:
            history = self._inline_history(body.history, index, bundle)
        return SlotBinding(body.player_id, role_id, body.role, history)

    def _inline_history(self, entries: list[HistoryEntryBody], index: int, bundle) -> PlayerHistory:
        num_features = len(bundle.normalizer.means)
        length = bundle.model.config.history_length
        entries = entries[-length:]  # keep the most recent window
        champs = np.empty(len(entries), dtype=np.int64)
        roles = np.empty(len(entries), dtype=np.int64)
        feats = np.empty((len(entries), num_features), dtype=np.float64)
        for j, entry in enumerate(entries):
            where = f"slots[{index}].history[{j}]"
            try:
                champs[j] = self.vocab.champion_id(entry.champion)
            except CorpusError:
                raise ServiceError(400, "unknown_champion",
                                   f"unknown champion {entry.champion!r}",
                                   field_path=f"{where}.champion") from None
            try:
                roles[j] = self.vocab.role_id(entry.role)
            except CorpusError:
                raise ServiceError(400, "unknown_role", f"unknown role {entry.role!r}",
                                   field_path=f"{where}.role") from None
            if len(entry.features) != num_features:
                raise ServiceError(400, "bad_features",
                                   f"expected {num_features} feature values, "
                                   f"got {len(entry.features)}",
                                   field_path=f"{where}.features")
            feats[j] = entry.features
        champs.setflags(write=False)
        roles.setflags(write=False)
        normalized = bundle.normalizer.transform(feats)
        normalized.setflags(write=False)
        return PlayerHistory(champs, roles, normalized)

    def create_session(self, body: CreateSessionBody, journal: bool = True,
                       session_id: str | None = None) -> Session:
        ckpt_name, bundle = self.resolve_bundle(body.checkpoint)
        if len(body.slots) != NUM_TURNS:
            raise ServiceError(400, "bad_slots",
                               f"exactly {NUM_TURNS} slot bindings required, "
                               f"got {len(body.slots)}", field_path="slots")
        ban_ids = []
        for i, name in enumerate(body.bans):
            try:
                ban_ids.append(self.vocab.champion_id(name))
            except CorpusError:
                raise ServiceError(400, "unknown_champion", f"unknown champion {name!r}",
                                   field_path=f"bans[{i}]") from None
        if len(set(ban_ids)) != len(ban_ids):
            raise ServiceError(400, "duplicate_ban", "bans contain duplicates",
                               field_path="bans")
        if self.vocab.num_champions - len(ban_ids) < NUM_TURNS:
            raise ServiceError(400, "too_many_bans",
                               "not enough champions left to complete a draft",
                               field_path="bans")
        bindings = tuple(
            self._resolve_binding(slot, i, bundle, ckpt_name)
            for i, slot in enumerate(body.slots)
        )
        session = Session(
            session_id=session_id or self.new_session_id(),
            checkpoint=ckpt_name,
            bans=frozenset(ban_ids),
            bindings=bindings,
        )
        with self.sessions_lock:
            if session.session_id in self.sessions:
                raise ServiceError(409, "duplicate_session",
                                   f"session {session.session_id!r} already exists")
            self.sessions[session.session_id] = session
        if journal:
            self.journal({"event": "create", "session_id": session.session_id,
                          "body": body.model_dump(exclude_none=True)})
        return session

    def apply_pick(self, session: Session, turn: int, champion_name: str,
                   journal: bool = True) -> list[int]:
        with session.lock:
            cursor = session.cursor
            if cursor is None:
                raise ServiceError(409, "complete", "draft already has all ten picks")
            if turn != cursor:
                raise ServiceError(409, "out_of_turn",
                                   f"it is turn {cursor}, not turn {turn}",
                                   field_path="turn")
            try:
                champion = self.vocab.champion_id(champion_name)
            except CorpusError:
                raise ServiceError(422, "unknown_champion",
                                   f"unknown champion {champion_name!r}",
                                   field_path="champion") from None
            if champion in session.bans:
                raise ServiceError(422, "banned",
                                   f"champion {champion_name!r} is banned")
            if champion in session.picks:
                raise ServiceError(422, "taken",
                                   f"champion {champion_name!r} is already picked")
            session.picks.append(champion)
            picks = list(session.picks)
        if journal:
            self.journal({"event": "pick", "session_id": session.session_id,
                          "turn": turn, "champion": champion_name})
        return picks

    # -- payload builders ---------------------------------------------------

    def state_payload(self, session: Session, picks: list[int] | None = None) -> dict:
        if picks is None:
            picks = session.snapshot_picks()
        bundle = self.bundles[session.checkpoint]
        state = session_draft_state(session, self.vocab.num_champions, picks)
        out = bundle.model.forward(encode_states([state], bundle.model.config))
        win_blue = float(out.win_blue.data[0])
        turn = state.query_turn
        perspective = state.acting_team
        slots = []
        for t in range(1, NUM_TURNS + 1):
            binding = session.bindings[t - 1]
            picked = picks[t - 1] if t <= len(picks) else None
            slots.append({
                "turn": t,
                "team": TEAM_OF_TURN[t],
                "champion": self.vocab.champion_name(picked) if picked is not None else None,
                "role": binding.role_name,
                "player": binding.player_id,
                "known_history": binding.history is not None,
            })
        return {
            "session_id": session.session_id,
            "checkpoint": session.checkpoint,
            "complete": turn is None,
            "turn": turn,
            "acting_team": TEAM_OF_TURN[turn] if turn is not None else None,
            "bans": [self.vocab.champion_name(b) for b in sorted(session.bans)],
            "picks": [
                {"turn": t, "team": TEAM_OF_TURN[t],
                 "champion": self.vocab.champion_name(c)}
                for t, c in enumerate(picks, start=1)
            ],
            "slots": slots,
            "win_prob": {
                "blue": win_blue,
                "purple": 1.0 - win_blue,
                "team": perspective,
                "value": bundle.model.win_prob_for(win_blue, perspective),
            },
        }

    def recommendations_payload(self, session: Session, strategy: Strategy,
                                tau: float, k: int) -> dict:
        picks = session.snapshot_picks()
        turn = len(picks) + 1 if len(picks) < NUM_TURNS else None
        if turn is None:
            raise ServiceError(409, "complete", "draft is complete; nothing to recommend")
        bundle = self.bundles[session.checkpoint]
        state = session_draft_state(session, self.vocab.num_champions, picks)
        recs = recommend(bundle.model, state, strategy, tau=tau, k=k)
        cards = []
        for r in recs:
            card = {
                "champion": self.vocab.champion_name(r.champion),
                "champion_id": r.champion,
                "select_prob": r.select_prob,
                "win_prob": r.win_prob,
                "passed_threshold": r.passed_threshold,
            }
            exp = r.explanation
            if not exp.empty:
                card["explanation"] = {
                    "synergy_champion": (
                        self.vocab.champion_name(exp.synergy_champion)
                        if exp.synergy_champion is not None else None
                    ),
                    "synergy_weight": exp.synergy_weight,
                    "counter_champion": (
                        self.vocab.champion_name(exp.counter_champion)
                        if exp.counter_champion is not None else None
                    ),
                    "counter_weight": exp.counter_weight,
                }
            cards.append(card)
        return {
            "session_id": session.session_id,
            "turn": turn,
            "acting_team": TEAM_OF_TURN[turn],
            "strategy": strategy.value,
            "tau": tau,
            "k": k,
            "model_version": f"{session.checkpoint}@{self.digests[session.checkpoint][:12]}",
            "legal_count": len(legal_champions(state)),
            "recommendations": cards,
        }

    def _feature_names(self) -> list[str]:
        if self.corpus is not None:
            return list(self.corpus.game.feature_names)
        named = self.bundles[self.default_checkpoint].feature_names
        if named is not None:
            return list(named)
        width = len(self.bundles[self.default_checkpoint].normalizer.means)
        return [f"feature{i}" for i in range(width)]

    def meta_payload(self) -> dict:
        return {
            "champions": list(self.vocab.champions),
            "roles": list(self.vocab.roles),
            "feature_names": self._feature_names(),
            "checkpoints": [
                {
                    "name": name,
                    "digest": self.digests[name][:12],
                    "hidden_dim": b.model.config.hidden_dim,
                    "history_length": b.model.config.history_length,
                }
                for name, b in self.bundles.items()
            ],
            "default_checkpoint": self.default_checkpoint,
            "num_turns": NUM_TURNS,
            "turn_teams": [TEAM_OF_TURN[t] for t in range(1, NUM_TURNS + 1)],
            "defaults": {"strategy": "p+v", "tau": DEFAULT_TAU, "k": DEFAULT_K},
            "player_directory": self.corpus is not None,
        }


# ---------------------------------------------------------------------------
# FastAPI wiring


def _error_response(status: int, code: str, message: str, field_path: str | None = None):
    body = {"code": code, "message": message}
    if field_path is not None:
        body["field"] = field_path
    return JSONResponse(status_code=status, content=body)


def _loc_to_field(loc) -> str:
    parts = []
    for piece in loc:
        if piece == "body":
            continue
        if isinstance(piece, int):
            parts.append(f"[{piece}]")
        else:
            parts.append(("." if parts else "") + str(piece))
    return "".join(parts) or "body"


def build_app(bundles, corpus=None, journal_path=None, frontend_dir=None) -> FastAPI:
    """Assemble the service; replays an existing journal before serving."""
    context = ServiceContext(bundles, corpus=corpus, journal_path=journal_path)
    context.replay_journal()
    app = FastAPI(title="draft assistant", openapi_url="/v1/openapi.json")
    app.state.context = context

    @app.exception_handler(ServiceError)
    async def handle_service_error(request: Request, exc: ServiceError):
        return _error_response(exc.status, exc.code, exc.message, exc.field_path)

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        err = exc.errors()[0]
        return _error_response(400, "bad_request", err.get("msg", "invalid request"),
                               _loc_to_field(err.get("loc", ())))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(context.sessions)}

    @app.get("/v1/meta")
    def meta():
        return context.meta_payload()

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        session = context.create_session(body)
        return {"session_id": session.session_id,
                "state": context.state_payload(session)}

    @app.get("/v1/sessions/{session_id}/state")
    def get_state(session_id: str):
        session = context.get_session(session_id)
        return context.state_payload(session)

    @app.post("/v1/sessions/{session_id}/picks")
    def post_pick(session_id: str, body: PickBody):
        session = context.get_session(session_id)
        picks = context.apply_pick(session, body.turn, body.champion)
        return context.state_payload(session, picks)

    @app.get("/v1/sessions/{session_id}/recommendations")
    def get_recommendations(session_id: str, k: int = DEFAULT_K,
                            strategy: str = "p+v", tau: float = DEFAULT_TAU):
        session = context.get_session(session_id)
        try:
            parsed = Strategy.parse(strategy)
        except ValueError as exc:
            raise ServiceError(400, "bad_strategy", str(exc), field_path="strategy") from None
        if k < 1:
            raise ServiceError(400, "bad_k", f"k must be at least 1, got {k}",
                               field_path="k")
        if tau < 0:
            raise ServiceError(400, "bad_tau", f"tau must be non-negative, got {tau}",
                               field_path="tau")
        return context.recommendations_payload(session, parsed, tau, k)

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
