"""Match corpora: loading, validation, vocabularies, chronological splits,
feature normalization, and per-player history windows.

A corpus is a JSON-lines file, one match per line:

    {"match_id": "m000001", "timestamp": 1690000000.0,
     "bans": ["annie", ...],
     "slots": [{"player_id": "p17", "turn": 1, "team": "blue",
                "role": "top", "champion": "gnar", "outcome": "win",
                "features": {"kda": 3.1, "gold_per_min": 401.2}}, ...]}

Matches are ordered by (timestamp, match_id); "earlier" always means
strictly smaller order index under that key. Slot ``role`` may be null for
games without a role concept. Feature keys must agree across every slot of
the corpus and are ordered by first-slot sorted order.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .state import (
    NUM_RESERVED,
    NUM_TURNS,
    TEAM_OF_TURN,
    UNK_ID,
    PlayerHistory,
)

OUTCOME_WIN = "win"
OUTCOME_LOSS = "loss"


class CorpusError(ValueError):
    """Malformed corpus file or record."""


class Vocab:
    """Name<->id maps for champions and roles.

    Ids 0..2 are reserved (padding, unknown, mask); real entries start at 3
    in the order given, so the name lists fully determine every id.
    """

    __slots__ = ("champions", "roles", "_champion_ids", "_role_ids")

    def __init__(self, champions, roles=()):
        self.champions = tuple(champions)
        self.roles = tuple(roles)
        if len(set(self.champions)) != len(self.champions):
            raise CorpusError("duplicate champion names in vocabulary")
        if len(set(self.roles)) != len(self.roles):
            raise CorpusError("duplicate role names in vocabulary")
        self._champion_ids = {n: NUM_RESERVED + i for i, n in enumerate(self.champions)}
        self._role_ids = {n: NUM_RESERVED + i for i, n in enumerate(self.roles)}

    @property
    def num_champions(self) -> int:
        return len(self.champions)

    @property
    def num_roles(self) -> int:
        return len(self.roles)

    @property
    def champion_vocab_size(self) -> int:
        return NUM_RESERVED + len(self.champions)

    @property
    def role_vocab_size(self) -> int:
        return NUM_RESERVED + len(self.roles)

    def champion_id(self, name: str) -> int:
        try:
            return self._champion_ids[name]
        except KeyError:
            raise CorpusError(f"unknown champion name: {name!r}") from None

    def champion_name(self, champion_id: int) -> str:
        if not NUM_RESERVED <= champion_id < self.champion_vocab_size:
            raise CorpusError(f"champion id {champion_id} is not a real champion")
        return self.champions[champion_id - NUM_RESERVED]

    def role_id(self, name: str | None) -> int:
        if name is None:
            return UNK_ID
        try:
            return self._role_ids[name]
        except KeyError:
            raise CorpusError(f"unknown role name: {name!r}") from None

    def role_name(self, role_id: int) -> str:
        if not NUM_RESERVED <= role_id < self.role_vocab_size:
            raise CorpusError(f"role id {role_id} is not a real role")
        return self.roles[role_id - NUM_RESERVED]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Vocab):
            return NotImplemented
        return self.champions == other.champions and self.roles == other.roles

    def to_dict(self) -> dict:
        return {"champions": list(self.champions), "roles": list(self.roles)}

    @classmethod
    def from_dict(cls, d: dict) -> "Vocab":
        return cls(d["champions"], d.get("roles", ()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GameConfig:
    """Shape of the game a corpus describes."""

    num_champions: int
    num_roles: int
    feature_names: tuple[str, ...]
    history_length: int = 50

    def __post_init__(self):
        if self.num_champions < 1:
            raise CorpusError("a game needs at least one champion")
        if self.history_length < 1:
            raise CorpusError("history_length must be positive")


@dataclass(frozen=True)
class Slot:
    """One player's seat in one recorded match."""

    player_id: str
    turn: int
    team: str
    role: str | None
    champion: str
    win: bool
    features: tuple[float, ...]


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    timestamp: float
    bans: tuple[str, ...]
    slots: tuple[Slot, ...]  # ordered by turn 1..10

    def blue_won(self) -> bool:
        return self.slots[0].win  # turn 1 is always blue


def _validate_match(record: MatchRecord, feature_names: tuple[str, ...]) -> None:
    mid = record.match_id
    if len(record.slots) != NUM_TURNS:
        raise CorpusError(f"{mid}: expected {NUM_TURNS} slots, got {len(record.slots)} [rule: slots]")
    turns = [s.turn for s in record.slots]
    if turns != list(range(1, NUM_TURNS + 1)):
        raise CorpusError(f"{mid}: turns must be a permutation of 1..10 [rule: turns]")
    for s in record.slots:
        if s.team != TEAM_OF_TURN[s.turn]:
            raise CorpusError(
                f"{mid}: turn {s.turn} belongs to {TEAM_OF_TURN[s.turn]}, got {s.team!r} "
                f"[rule: team-of-turn]"
            )
        if len(s.features) != len(feature_names):
            raise CorpusError(f"{mid}: slot features disagree with corpus features [rule: features]")
    champions = [s.champion for s in record.slots]
    if len(set(champions)) != NUM_TURNS:
        raise CorpusError(f"{mid}: the ten picks must be distinct champions [rule: distinct-champions]")
    banned = set(record.bans)
    if banned & set(champions):
        raise CorpusError(f"{mid}: a banned champion was picked [rule: banned-pick]")
    if len(set(record.bans)) != len(record.bans):
        raise CorpusError(f"{mid}: duplicate ban [rule: distinct-bans]")
    players = [s.player_id for s in record.slots]
    if len(set(players)) != NUM_TURNS:
        raise CorpusError(f"{mid}: the ten seats must hold distinct players [rule: distinct-players]")
    blue = {s.win for s in record.slots if s.team == "blue"}
    purple = {s.win for s in record.slots if s.team == "purple"}
    if len(blue) != 1 or len(purple) != 1 or blue == purple:
        raise CorpusError(
            f"{mid}: outcome must be constant within a team and opposite across teams "
            f"[rule: outcome-consistency]"
        )


@dataclass
class Corpus:
    """Validated matches in chronological order plus lookup indexes."""

    game: GameConfig
    vocab: Vocab
    matches: tuple[MatchRecord, ...]
    player_slots: dict[str, list[tuple[int, int]]]  # player -> [(order, slot_idx)], ascending
    order_by_id: dict[str, int]

    def __len__(self) -> int:
        return len(self.matches)

    @classmethod
    def from_matches(
        cls,
        matches,
        feature_names: tuple[str, ...],
        vocab: Vocab | None = None,
        history_length: int = 50,
    ) -> "Corpus":
        """Assemble from in-memory records whose feature tuples already follow
        ``feature_names`` order; derives the vocabulary when none is given."""
        matches = sorted(matches, key=lambda m: (m.timestamp, m.match_id))
        if not matches:
            raise CorpusError("empty corpus")
        if vocab is None:
            champs = sorted({c for m in matches for c in m.bans}
                            | {s.champion for m in matches for s in m.slots})
            roles = sorted({s.role for m in matches for s in m.slots if s.role is not None})
            vocab = Vocab(champs, roles)
        return cls._assemble(tuple(matches), vocab, history_length, tuple(feature_names))

    @classmethod
    def _assemble(cls, matches, vocab, history_length, feature_names) -> "Corpus":
        ids = [m.match_id for m in matches]
        if len(set(ids)) != len(ids):
            raise CorpusError("duplicate match_id in corpus")
        game = GameConfig(
            num_champions=vocab.num_champions,
            num_roles=vocab.num_roles,
            feature_names=feature_names,
            history_length=history_length,
        )
        for m in matches:
            _validate_match(m, feature_names)
            for s in m.slots:
                vocab.champion_id(s.champion)
                vocab.role_id(s.role)
            for b in m.bans:
                vocab.champion_id(b)
        player_slots: dict[str, list[tuple[int, int]]] = {}
        order_by_id: dict[str, int] = {}
        for order, m in enumerate(matches):
            order_by_id[m.match_id] = order
            for idx, s in enumerate(m.slots):
                player_slots.setdefault(s.player_id, []).append((order, idx))
        return cls(game, vocab, matches, player_slots, order_by_id)


def _parse_slot(raw: dict, feature_names: tuple[str, ...], where: str) -> Slot:
    try:
        features_map = raw["features"]
        if set(features_map.keys()) != set(feature_names):
            raise CorpusError(f"{where}: slot feature keys disagree with corpus [rule: features]")
        outcome = raw["outcome"]
        if outcome not in (OUTCOME_WIN, OUTCOME_LOSS):
            raise CorpusError(f"{where}: outcome must be '{OUTCOME_WIN}' or '{OUTCOME_LOSS}'")
        return Slot(
            player_id=str(raw["player_id"]),
            turn=int(raw["turn"]),
            team=str(raw["team"]),
            role=None if raw.get("role") is None else str(raw["role"]),
            champion=str(raw["champion"]),
            win=outcome == OUTCOME_WIN,
            features=tuple(float(features_map[k]) for k in feature_names),
        )
    except KeyError as e:
        raise CorpusError(f"{where}: missing slot key {e.args[0]!r} [rule: schema]") from None


def load_corpus(path, vocab_path=None, history_length: int = 50,
                vocab: Vocab | None = None) -> Corpus:
    """Parse and validate a JSONL corpus; derive the vocabulary if none given.

    The vocabulary can come from a file (``vocab_path``) or be handed over
    directly (``vocab``), e.g. the one embedded in a checkpoint.
    """
    path = Path(path)
    if vocab_path is not None:
        if vocab is not None:
            raise CorpusError("pass either vocab_path or vocab, not both")
        vocab = Vocab.load(vocab_path)
    records: list[MatchRecord] = []
    feature_names: tuple[str, ...] | None = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path.name}:{lineno}"
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{where}: malformed JSON ({e.msg})") from None
            try:
                slots_raw = raw["slots"]
                if feature_names is None:
                    if not slots_raw:
                        raise CorpusError(f"{where}: match has no slots [rule: slots]")
                    feature_names = tuple(sorted(slots_raw[0]["features"].keys()))
                slots = tuple(
                    sorted(
                        (_parse_slot(s, feature_names, where) for s in slots_raw),
                        key=lambda s: s.turn,
                    )
                )
                records.append(
                    MatchRecord(
                        match_id=str(raw["match_id"]),
                        timestamp=float(raw["timestamp"]),
                        bans=tuple(str(b) for b in raw["bans"]),
                        slots=slots,
                    )
                )
            except KeyError as e:
                raise CorpusError(f"{where}: missing key {e.args[0]!r} [rule: schema]") from None
    if not records:
        raise CorpusError(f"{path.name}: empty corpus")
    records.sort(key=lambda m: (m.timestamp, m.match_id))
    if vocab is None:
        champs = sorted({c for m in records for c in m.bans}
                        | {s.champion for m in records for s in m.slots})
        roles = sorted({s.role for m in records for s in m.slots if s.role is not None})
        vocab = Vocab(champs, roles)
    return Corpus._assemble(tuple(records), vocab, history_length, feature_names)


def save_corpus(corpus: Corpus, path) -> None:
    """Write JSONL that loads back value-identical (same order, same floats)."""
    names = corpus.game.feature_names
    with Path(path).open("w") as fh:
        for m in corpus.matches:
            doc = {
                "match_id": m.match_id,
                "timestamp": m.timestamp,
                "bans": list(m.bans),
                "slots": [
                    {
                        "player_id": s.player_id,
                        "turn": s.turn,
                        "team": s.team,
                        "role": s.role,
                        "champion": s.champion,
                        "outcome": OUTCOME_WIN if s.win else OUTCOME_LOSS,
                        "features": {k: v for k, v in zip(names, s.features)},
                    }
                    for s in m.slots
                ],
            }
            fh.write(json.dumps(doc) + "\n")


@dataclass(frozen=True)
class SplitIndices:
    """Chronological partition of corpus order indices."""

    train: range
    val: range
    test: range


def split_chronological(corpus: Corpus, fractions=(0.85, 0.05, 0.10)) -> SplitIndices:
    """Oldest 85% to train, next 5% to validation, the rest to test.

    Counts are floors of the fractions, remainder to test, so every match
    lands in exactly one split. Fewer than 20 matches cannot produce three
    non-degenerate splits and is an error.
    """
    m = len(corpus)
    if m < 20:
        raise CorpusError(f"corpus too small to split: {m} matches < 20")
    if len(fractions) != 3 or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be three positives summing to 1, got {fractions}")
    n_train = int(fractions[0] * m)
    n_val = int(fractions[1] * m)
    return SplitIndices(
        train=range(0, n_train),
        val=range(n_train, n_train + n_val),
        test=range(n_train + n_val, m),
    )


@dataclass
class Normalizer:
    """Per-feature standardization fitted on training matches only."""

    means: np.ndarray
    stds: np.ndarray
    clip: float = 5.0

    @classmethod
    def fit(cls, corpus: Corpus, indices, clip: float = 5.0) -> "Normalizer":
        rows = [s.features for i in indices for s in corpus.matches[i].slots]
        if not rows:
            raise CorpusError("cannot fit a normalizer on zero matches")
        return cls.from_rows(np.asarray(rows, dtype=np.float64), clip=clip)

    @classmethod
    def from_rows(cls, mat: np.ndarray, clip: float = 5.0) -> "Normalizer":
        means = mat.mean(axis=0)
        stds = mat.std(axis=0)
        stds = np.where(stds < 1e-12, 1.0, stds)  # constant features pass through centered
        return cls(means=means, stds=stds, clip=clip)

    def transform(self, features) -> np.ndarray:
        arr = np.asarray(features, dtype=np.float64)
        if arr.shape[-1] != self.means.shape[0]:
            raise CorpusError(
                f"feature width {arr.shape[-1]} != fitted width {self.means.shape[0]}"
            )
        z = (arr - self.means) / self.stds
        return np.clip(z, -self.clip, self.clip).astype(np.float32)

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist(), "clip": self.clip}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(
            means=np.asarray(d["means"], dtype=np.float64),
            stds=np.asarray(d["stds"], dtype=np.float64),
            clip=float(d["clip"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "Normalizer":
        return cls.from_dict(json.loads(Path(path).read_text()))


class HistoryProvider:
    """Builds each player's last-L match window as seen at draft time.

    Windows contain only strictly earlier matches under the corpus order,
    hold at most ``history_length`` entries (most recent last), and carry
    features already normalized. Lookups are cached per (player, cutoff).
    """

    def __init__(self, corpus: Corpus, normalizer: Normalizer, history_length: int | None = None):
        self.corpus = corpus
        self.normalizer = normalizer
        self.history_length = (
            corpus.game.history_length if history_length is None else int(history_length)
        )
        if self.history_length < 1:
            raise CorpusError("history_length must be positive")
        self._cache: dict[tuple[str, int], PlayerHistory] = {}
        self._empty = PlayerHistory.empty(len(corpus.game.feature_names))

    @property
    def vocab(self) -> Vocab:
        return self.corpus.vocab

    def order_of(self, match_id: str) -> int:
        try:
            return self.corpus.order_by_id[match_id]
        except KeyError:
            raise CorpusError(f"match {match_id!r} is not in the corpus") from None

    def history(self, player_id: str, before_order: int) -> PlayerHistory:
        key = (player_id, before_order)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        refs = self.corpus.player_slots.get(player_id, [])
        cut = bisect_left(refs, (before_order, -1))
        window = refs[max(0, cut - self.history_length): cut]
        if not window:
            self._cache[key] = self._empty
            return self._empty
        vocab = self.corpus.vocab
        champs = np.empty(len(window), dtype=np.int64)
        roles = np.empty(len(window), dtype=np.int64)
        feats = np.empty((len(window), len(self.corpus.game.feature_names)), dtype=np.float64)
        for i, (order, slot_idx) in enumerate(window):
            slot = self.corpus.matches[order].slots[slot_idx]
            champs[i] = vocab.champion_id(slot.champion)
            roles[i] = vocab.role_id(slot.role)
            feats[i] = slot.features
        champs.setflags(write=False)
        roles.setflags(write=False)
        normalized = self.normalizer.transform(feats)
        normalized.setflags(write=False)
        hist = PlayerHistory(champs, roles, normalized)
        self._cache[key] = hist
        return hist
