"""Partially observable draft states.

A draft runs ten turns in the fixed order 1-(2,3)-(4,5)-(6,7)-(8,9)-10,
blue picking on turns {1,4,5,8,9} and purple on {2,3,6,7,10}. The state a
model sees at turn t is what the acting player can see: every pick made on
an earlier turn, the bans, and the roles plus match histories of their own
team only. The acting slot carries a special mask token; hidden slots carry
the unknown token. ``apply_whatif`` edits a state as if a candidate champion
were picked on the acting turn, which is how recommendation probes ask
"what would our win probability be if we locked this in".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # only for annotations; data.py imports this module
    from .data import HistoryProvider, MatchRecord

# Reserved vocabulary ids, shared by the champion and role vocabularies.
# Real entries start right after them.
PAD_ID = 0
UNK_ID = 1
MASK_ID = 2
NUM_RESERVED = 3

BLUE = "blue"
PURPLE = "purple"
NUM_TURNS = 10

BLUE_TURNS = (1, 4, 5, 8, 9)
PURPLE_TURNS = (2, 3, 6, 7, 10)
TEAM_OF_TURN = {t: (BLUE if t in BLUE_TURNS else PURPLE) for t in range(1, NUM_TURNS + 1)}


class DraftError(ValueError):
    """Invalid draft-state construction or edit."""


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PlayerHistory:
    """A player's recent matches, oldest first, with normalized features.

    An instance with zero rows means "known player, no prior matches" and
    encodes as all padding. This is distinct from an unknown player (history
    ``None`` on the slot), which encodes as unknown-tokens that are fully
    valid attention targets.
    """

    champions: np.ndarray  # (n,) int64 champion vocab ids
    roles: np.ndarray      # (n,) int64 role vocab ids
    features: np.ndarray   # (n, F) float32, already normalized

    def __post_init__(self):
        n = self.champions.shape[0]
        if self.roles.shape != (n,) or self.features.ndim != 2 or self.features.shape[0] != n:
            raise DraftError(
                f"history arrays disagree: champions {self.champions.shape}, "
                f"roles {self.roles.shape}, features {self.features.shape}"
            )

    @property
    def length(self) -> int:
        return int(self.champions.shape[0])

    @classmethod
    def empty(cls, num_features: int) -> "PlayerHistory":
        return cls(
            _frozen_array([], np.int64),
            _frozen_array([], np.int64),
            _frozen_array(np.zeros((0, num_features)), np.float32),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PlayerHistory):
            return NotImplemented
        return (
            np.array_equal(self.champions, other.champions)
            and np.array_equal(self.roles, other.roles)
            and np.array_equal(self.features, other.features)
        )

    __hash__ = None


@dataclass(frozen=True)
class SlotView:
    """One draft slot as seen by the acting player.

    ``champion`` is a vocab id: the real pick when visible, MASK_ID on the
    acting slot, UNK_ID when hidden. ``history`` is None for players whose
    identity the acting player cannot see (opponents, anonymous teammates).
    """

    turn: int
    team: str
    champion: int
    role: int
    history: PlayerHistory | None


@dataclass(frozen=True, eq=False)
class DraftState:
    """The board at one moment, from one side's point of view."""

    num_champions: int
    query_turn: int | None  # 1..10, or None for a completed draft
    acting_team: str
    bans: frozenset[int]
    slots: tuple[SlotView, ...]

    def __post_init__(self):
        if len(self.slots) != NUM_TURNS:
            raise DraftError(f"a draft state needs {NUM_TURNS} slots, got {len(self.slots)}")
        for i, slot in enumerate(self.slots):
            if slot.turn != i + 1:
                raise DraftError(f"slots must be ordered by turn; slot {i} has turn {slot.turn}")
            if slot.team != TEAM_OF_TURN[slot.turn]:
                raise DraftError(f"turn {slot.turn} belongs to {TEAM_OF_TURN[slot.turn]}")
        if self.query_turn is not None:
            if not 1 <= self.query_turn <= NUM_TURNS:
                raise DraftError(f"query_turn out of range: {self.query_turn}")
            if self.slots[self.query_turn - 1].champion != MASK_ID:
                raise DraftError(f"slot of query turn {self.query_turn} must carry the mask token")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DraftState):
            return NotImplemented
        return (
            self.num_champions == other.num_champions
            and self.query_turn == other.query_turn
            and self.acting_team == other.acting_team
            and self.bans == other.bans
            and self.slots == other.slots
        )

    __hash__ = None

    def visible_picks(self) -> frozenset[int]:
        return frozenset(s.champion for s in self.slots if s.champion >= NUM_RESERVED)


def legal_champions(state: DraftState) -> frozenset[int]:
    """Champion ids pickable on the acting turn: not banned, not on the board."""
    everyone = frozenset(range(NUM_RESERVED, NUM_RESERVED + state.num_champions))
    return everyone - state.bans - state.visible_picks()


def build_state(match: "MatchRecord", provider: "HistoryProvider", turn: int) -> DraftState:
    """The state the acting player of ``turn`` saw in a recorded match.

    Picks of earlier turns are visible; the acting slot is masked; later
    slots are unknown. Roles and histories surface only for the acting
    player's own team, with histories drawn from strictly earlier matches.
    """
    if not 1 <= turn <= NUM_TURNS:
        raise DraftError(f"turn out of range: {turn}")
    vocab = provider.vocab
    order = provider.order_of(match.match_id)
    acting = TEAM_OF_TURN[turn]
    slots = []
    for slot in match.slots:
        own = slot.team == acting
        if slot.turn < turn:
            champion = vocab.champion_id(slot.champion)
        elif slot.turn == turn:
            champion = MASK_ID
        else:
            champion = UNK_ID
        role = vocab.role_id(slot.role) if own else UNK_ID
        history = provider.history(slot.player_id, order) if own else None
        slots.append(SlotView(slot.turn, slot.team, champion, role, history))
    return DraftState(
        num_champions=vocab.num_champions,
        query_turn=turn,
        acting_team=acting,
        bans=frozenset(vocab.champion_id(b) for b in match.bans),
        slots=tuple(slots),
    )


def build_completed_state(
    match: "MatchRecord", provider: "HistoryProvider", perspective: str = BLUE
) -> DraftState:
    """A finished draft with every pick visible, for post-draft outcome reads.

    Observability follows the in-draft convention: only the perspective
    team's roles and histories are revealed, so the model sees the same kind
    of input it trained on.
    """
    if perspective not in (BLUE, PURPLE):
        raise DraftError(f"perspective must be {BLUE!r} or {PURPLE!r}, got {perspective!r}")
    vocab = provider.vocab
    order = provider.order_of(match.match_id)
    slots = []
    for slot in match.slots:
        own = slot.team == perspective
        slots.append(
            SlotView(
                slot.turn,
                slot.team,
                vocab.champion_id(slot.champion),
                vocab.role_id(slot.role) if own else UNK_ID,
                provider.history(slot.player_id, order) if own else None,
            )
        )
    return DraftState(
        num_champions=vocab.num_champions,
        query_turn=None,
        acting_team=perspective,
        bans=frozenset(vocab.champion_id(b) for b in match.bans),
        slots=tuple(slots),
    )


def apply_whatif(state: DraftState, champion: int) -> DraftState:
    """Place ``champion`` on the acting slot and advance the mask one turn.

    On turn 10 the edit completes the draft (no new mask); otherwise the
    slot of turn t+1 flips unknown -> mask. Every other slot, the bans, and
    the acting perspective are untouched.
    """
    if state.query_turn is None:
        raise DraftError("cannot apply a hypothetical pick to a completed draft")
    if champion not in legal_champions(state):
        raise DraftError(f"champion {champion} is not legal on turn {state.query_turn}")
    t = state.query_turn
    slots = list(state.slots)
    acting = slots[t - 1]
    slots[t - 1] = SlotView(acting.turn, acting.team, champion, acting.role, acting.history)
    if t < NUM_TURNS:
        nxt = slots[t]
        slots[t] = SlotView(nxt.turn, nxt.team, MASK_ID, nxt.role, nxt.history)
        next_turn = t + 1
    else:
        next_turn = None
    return DraftState(
        num_champions=state.num_champions,
        query_turn=next_turn,
        acting_team=state.acting_team,
        bans=state.bans,
        slots=tuple(slots),
    )
