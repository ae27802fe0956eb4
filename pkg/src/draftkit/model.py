"""The two-level draft network.

Level one encodes each player's match history: champion, role, and stat
features of every past match are embedded, summed with a fixed sinusoidal
position code, run through bidirectional self-attention blocks, and the
representation at the last (most recent) position summarizes the player.

Level two encodes the board: per slot, the (possibly masked/unknown)
champion and role embeddings, a team embedding, a fixed turn-position
code, and the player summary are summed and run through further blocks
over the ten slots. Two heads read the result:

- the pick head scores every champion for the acting slot, ties its output
  matrix to the champion embedding table, and renormalizes over the legal
  set by additive masking, so banned or already-picked champions carry
  (numerically) zero probability;
- the outcome head compares the two teams' mean slot representations
  through two affine maps and a sigmoid, giving the blue side's win
  probability.

Padding rows embed to exactly zero and are excluded from attention, so a
player with no recorded matches reduces to the positional code alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tensor as T
from .state import (
    BLUE,
    BLUE_TURNS,
    NUM_RESERVED,
    NUM_TURNS,
    PAD_ID,
    PURPLE_TURNS,
    DraftError,
    DraftState,
    legal_champions,
)
from .tensor import NEG_INF, Tensor

BLUE_SLOTS = tuple(t - 1 for t in BLUE_TURNS)
PURPLE_SLOTS = tuple(t - 1 for t in PURPLE_TURNS)
SLOT_TEAM_IDS = np.array([0 if (k + 1) in BLUE_TURNS else 1 for k in range(NUM_TURNS)])


def sinusoidal_table(length: int, dim: int) -> np.ndarray:
    """Fixed position code: interleaved sin/cos over geometric wavelengths."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (2.0 * (i // 2)) / dim)
    table = np.where(i % 2 == 0, np.sin(angle), np.cos(angle))
    return table.astype(np.float32)


@dataclass(frozen=True)
class ModelConfig:
    num_champions: int
    num_roles: int
    num_features: int
    hidden_dim: int = 128
    num_blocks: int = 2
    num_heads: int = 2
    history_length: int = 50
    dropout: float = 0.1

    def __post_init__(self):
        if self.num_champions < 1:
            raise ValueError("num_champions must be positive")
        if self.hidden_dim % max(self.num_heads, 1) != 0:
            raise ValueError(
                f"hidden_dim {self.hidden_dim} not divisible by num_heads {self.num_heads}"
            )
        if self.num_blocks < 0:
            raise ValueError("num_blocks must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def champion_vocab(self) -> int:
        return NUM_RESERVED + self.num_champions

    @property
    def role_vocab(self) -> int:
        return NUM_RESERVED + self.num_roles

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.num_heads

    def to_dict(self) -> dict:
        return {
            "num_champions": self.num_champions,
            "num_roles": self.num_roles,
            "num_features": self.num_features,
            "hidden_dim": self.hidden_dim,
            "num_blocks": self.num_blocks,
            "num_heads": self.num_heads,
            "history_length": self.history_length,
            "dropout": self.dropout,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class StateBatch:
    """Dense arrays for a homogeneous batch of draft states.

    ``query_slot`` is the 0-based acting slot, or -1 for every row when the
    batch holds completed drafts (then the pick head is skipped and
    ``legal_mask`` is unused).
    """

    hist_champion: np.ndarray   # (B, 10, L) int32
    hist_role: np.ndarray       # (B, 10, L) int32
    hist_features: np.ndarray   # (B, 10, L, F) float32
    hist_valid: np.ndarray      # (B, 10, L) bool
    slot_champion: np.ndarray   # (B, 10) int32
    slot_role: np.ndarray       # (B, 10) int32
    query_slot: np.ndarray      # (B,) int64
    legal_mask: np.ndarray      # (B, champion_vocab) float32 additive

    @property
    def size(self) -> int:
        return self.slot_champion.shape[0]

    def take(self, indices) -> "StateBatch":
        idx = np.asarray(indices)
        return StateBatch(
            self.hist_champion[idx], self.hist_role[idx], self.hist_features[idx],
            self.hist_valid[idx], self.slot_champion[idx], self.slot_role[idx],
            self.query_slot[idx], self.legal_mask[idx],
        )


def encode_states(states: Sequence[DraftState], config: ModelConfig) -> StateBatch:
    """Pack draft states into arrays the forward pass consumes.

    Encoding reads nothing but the state's own fields, so two states that
    compare equal encode to identical rows no matter how they were built.
    """
    n = len(states)
    if n == 0:
        raise DraftError("cannot encode an empty state batch")
    L, F = config.history_length, config.num_features
    hist_champion = np.zeros((n, NUM_TURNS, L), dtype=np.int32)
    hist_role = np.zeros((n, NUM_TURNS, L), dtype=np.int32)
    hist_features = np.zeros((n, NUM_TURNS, L, F), dtype=np.float32)
    hist_valid = np.zeros((n, NUM_TURNS, L), dtype=bool)
    slot_champion = np.zeros((n, NUM_TURNS), dtype=np.int32)
    slot_role = np.zeros((n, NUM_TURNS), dtype=np.int32)
    query_slot = np.full(n, -1, dtype=np.int64)
    legal_mask = np.full((n, config.champion_vocab), NEG_INF, dtype=np.float32)

    completed = states[0].query_turn is None
    for i, state in enumerate(states):
        if state.num_champions != config.num_champions:
            raise DraftError(
                f"state has {state.num_champions} champions, model expects {config.num_champions}"
            )
        if (state.query_turn is None) != completed:
            raise DraftError("cannot mix in-draft and completed states in one batch")
        for k, slot in enumerate(state.slots):
            slot_champion[i, k] = slot.champion
            slot_role[i, k] = slot.role
            hist = slot.history
            if hist is None:
                # unknown player: unknown-tokens, zero features, fully valid
                hist_champion[i, k, :] = 1  # UNK_ID
                hist_role[i, k, :] = 1
                hist_valid[i, k, :] = True
            elif hist.length:
                m = hist.length
                if m > L:
                    raise DraftError(f"history of length {m} exceeds model window {L}")
                hist_champion[i, k, L - m:] = hist.champions
                hist_role[i, k, L - m:] = hist.roles
                hist_features[i, k, L - m:] = hist.features
                hist_valid[i, k, L - m:] = True
            # empty known history: all padding rows, hist_valid stays False
        if not completed:
            query_slot[i] = state.query_turn - 1
            legal = legal_champions(state)
            if not legal:
                raise DraftError("no legal champion for the acting turn")
            legal_mask[i, sorted(legal)] = 0.0
    return StateBatch(
        hist_champion, hist_role, hist_features, hist_valid,
        slot_champion, slot_role, query_slot, legal_mask,
    )


@dataclass
class ForwardResult:
    pick_probs: Tensor | None      # (B, champion_vocab) masked softmax rows
    win_blue: Tensor               # (B,) blue's win probability
    slot_repr: Tensor              # (B, 10, hidden) final board representations
    match_attention: list[np.ndarray] = field(default_factory=list)   # per block (B, H, 10, 10)
    player_attention: list[np.ndarray] = field(default_factory=list)  # per block (B*10, H, L, L)


class TransformerBlock:
    """Self-attention + feed-forward with residuals, layer norm, dropout."""

    def __init__(self, params: dict[str, Tensor], prefix: str, config: ModelConfig):
        self.p = params
        self.prefix = prefix
        self.heads = config.num_heads
        self.head_dim = config.head_dim
        self.dropout = config.dropout

    @staticmethod
    def create(params: dict[str, Tensor], prefix: str, config: ModelConfig, rng) -> None:
        d = config.hidden_dim
        inner = 4 * d
        def lin(name, rows, cols):
            params[f"{prefix}.{name}.w"] = Tensor(
                rng.normal(0.0, 0.02, size=(rows, cols)).astype(np.float32), requires_grad=True
            )
            params[f"{prefix}.{name}.b"] = Tensor(
                np.zeros(cols, dtype=np.float32), requires_grad=True
            )
        lin("attn.q", d, d)
        lin("attn.k", d, d)
        lin("attn.v", d, d)
        lin("attn.out", d, d)
        params[f"{prefix}.ln1.gain"] = Tensor(np.ones(d, dtype=np.float32), requires_grad=True)
        params[f"{prefix}.ln1.bias"] = Tensor(np.zeros(d, dtype=np.float32), requires_grad=True)
        lin("ffn.in", d, inner)
        lin("ffn.out", inner, d)
        params[f"{prefix}.ln2.gain"] = Tensor(np.ones(d, dtype=np.float32), requires_grad=True)
        params[f"{prefix}.ln2.bias"] = Tensor(np.zeros(d, dtype=np.float32), requires_grad=True)

    def _affine(self, x: Tensor, name: str) -> Tensor:
        return T.add(T.matmul(x, self.p[f"{self.prefix}.{name}.w"]), self.p[f"{self.prefix}.{name}.b"])

    def __call__(
        self,
        x: Tensor,
        additive_mask: np.ndarray | None,
        training: bool,
        rng,
        collect_attention: bool,
    ) -> tuple[Tensor, np.ndarray | None]:
        b, t, d = x.shape
        h, hd = self.heads, self.head_dim

        def split(z: Tensor) -> Tensor:
            return T.transpose(T.reshape(z, (b, t, h, hd)), (0, 2, 1, 3))

        q = split(self._affine(x, "attn.q"))
        k = split(self._affine(x, "attn.k"))
        v = split(self._affine(x, "attn.v"))
        scores = T.scale(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(hd))
        probs = T.softmax(scores, additive_mask)
        attention = probs.data.copy() if collect_attention else None
        probs = T.dropout(probs, self.dropout, training, rng)
        context = T.reshape(T.transpose(T.matmul(probs, v), (0, 2, 1, 3)), (b, t, d))
        attended = T.dropout(self._affine(context, "attn.out"), self.dropout, training, rng)
        x = T.layer_norm(
            T.add(x, attended), self.p[f"{self.prefix}.ln1.gain"], self.p[f"{self.prefix}.ln1.bias"]
        )
        ff = self._affine(T.gelu(self._affine(x, "ffn.in")), "ffn.out")
        ff = T.dropout(ff, self.dropout, training, rng)
        x = T.layer_norm(
            T.add(x, ff), self.p[f"{self.prefix}.ln2.gain"], self.p[f"{self.prefix}.ln2.bias"]
        )
        return x, attention


class DraftPredictor:
    """Player-history encoder + board encoder + pick/outcome heads."""

    def __init__(self, config: ModelConfig, params: dict[str, Tensor], fixed: dict[str, Tensor]):
        self.config = config
        self.params = params
        self.fixed = fixed
        self.player_blocks = [
            TransformerBlock(params, f"player.block{i}", config) for i in range(config.num_blocks)
        ]
        self.match_blocks = [
            TransformerBlock(params, f"match.block{i}", config) for i in range(config.num_blocks)
        ]

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "DraftPredictor":
        """Fresh parameters in a fixed creation order, so one seed fully
        determines the weights.

        Biases and the outcome head's final map start at zero, which pins
        the untrained win probability to exactly 0.5 for every input.
        """
        d = config.hidden_dim
        params: dict[str, Tensor] = {}

        # The positional tables are fixed sin/cos rows with O(1) components,
        # so the learned content tables start at a comparable scale; far
        # smaller and the summed input is position-dominated, which starves
        # the history signal early in training.
        EMBED_STD = 0.4

        def table(name, rows, zero_pad_row=False):
            w = rng.normal(0.0, EMBED_STD, size=(rows, d)).astype(np.float32)
            if zero_pad_row:
                w[PAD_ID] = 0.0
            params[name] = Tensor(w, requires_grad=True)

        table("embed.champion", config.champion_vocab, zero_pad_row=True)
        table("embed.role", config.role_vocab, zero_pad_row=True)
        params["embed.feature"] = Tensor(
            rng.normal(0.0, EMBED_STD, size=(config.num_features, d)).astype(np.float32),
            requires_grad=True,
        )
        params["embed.team"] = Tensor(
            rng.normal(0.0, EMBED_STD, size=(2, d)).astype(np.float32), requires_grad=True
        )
        for i in range(config.num_blocks):
            TransformerBlock.create(params, f"player.block{i}", config, rng)
        for i in range(config.num_blocks):
            TransformerBlock.create(params, f"match.block{i}", config, rng)
        params["head.pick.w"] = Tensor(
            rng.normal(0.0, 0.02, size=(d, d)).astype(np.float32), requires_grad=True
        )
        params["head.pick.b"] = Tensor(np.zeros(d, dtype=np.float32), requires_grad=True)
        params["head.pick.out_bias"] = Tensor(
            np.zeros(config.champion_vocab, dtype=np.float32), requires_grad=True
        )
        params["head.outcome.w1"] = Tensor(
            rng.normal(0.0, 0.02, size=(d, d)).astype(np.float32), requires_grad=True
        )
        params["head.outcome.b1"] = Tensor(np.zeros(d, dtype=np.float32), requires_grad=True)
        params["head.outcome.w2"] = Tensor(np.zeros((d, 1), dtype=np.float32), requires_grad=True)
        params["head.outcome.b2"] = Tensor(np.zeros(1, dtype=np.float32), requires_grad=True)

        fixed = {
            "pos.history": Tensor(sinusoidal_table(config.history_length, d)),
            "pos.turn": Tensor(sinusoidal_table(NUM_TURNS, d)),
        }
        return cls(config, params, fixed)

    def astype(self, dtype) -> "DraftPredictor":
        """A copy with every array cast to ``dtype`` (float64 for grad checks)."""
        params = {
            k: Tensor(v.data.astype(dtype), requires_grad=v.requires_grad)
            for k, v in self.params.items()
        }
        fixed = {k: Tensor(v.data.astype(dtype)) for k, v in self.fixed.items()}
        return DraftPredictor(self.config, params, fixed)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def encode_player_histories(
        self, batch: StateBatch, training: bool = False, rng=None, collect_attention: bool = False
    ) -> tuple[Tensor, list[np.ndarray]]:
        """(B, 10, hidden) player summaries from the last history position."""
        cfg = self.config
        b = batch.size
        L = cfg.history_length
        rows = b * NUM_TURNS
        champ = batch.hist_champion.reshape(rows, L)
        role = batch.hist_role.reshape(rows, L)
        feats = batch.hist_features.reshape(rows, L, cfg.num_features)
        valid = batch.hist_valid.reshape(rows, L)

        h = T.embedding(self.params["embed.champion"], champ, pad_index=PAD_ID)
        h = T.add(h, T.embedding(self.params["embed.role"], role, pad_index=PAD_ID))
        h = T.add(h, T.matmul(Tensor(feats.astype(self.params["embed.feature"].data.dtype)),
                              self.params["embed.feature"]))
        h = T.add(h, self.fixed["pos.history"])
        key_mask = np.where(valid, 0.0, NEG_INF).astype(np.float32)[:, None, None, :]
        maps: list[np.ndarray] = []
        for block in self.player_blocks:
            h, attn = block(h, key_mask, training, rng, collect_attention)
            if collect_attention:
                maps.append(attn)
        last = T.index_select(h, np.array([L - 1]), axis=1)
        return T.reshape(last, (b, NUM_TURNS, cfg.hidden_dim)), maps

    def forward(
        self,
        batch: StateBatch,
        training: bool = False,
        rng: np.random.Generator | None = None,
        collect_player_attention: bool = False,
        player_reps: Tensor | None = None,
    ) -> ForwardResult:
        cfg = self.config
        b = batch.size
        if player_reps is not None:
            # caller precomputed the (B, 10, hidden) player summaries — used by
            # what-if probes, where every row shares the same ten histories
            if player_reps.data.shape != (b, NUM_TURNS, cfg.hidden_dim):
                raise DraftError(
                    f"player_reps shape {player_reps.data.shape} does not match "
                    f"batch ({b}, {NUM_TURNS}, {cfg.hidden_dim})"
                )
            reps, player_maps = player_reps, []
        else:
            reps, player_maps = self.encode_player_histories(
                batch, training, rng, collect_player_attention
            )

        x = T.embedding(self.params["embed.champion"], batch.slot_champion)
        x = T.add(x, T.embedding(self.params["embed.role"], batch.slot_role))
        team_ids = np.broadcast_to(SLOT_TEAM_IDS, (b, NUM_TURNS))
        x = T.add(x, T.embedding(self.params["embed.team"], team_ids))
        x = T.add(x, self.fixed["pos.turn"])
        x = T.add(x, reps)
        match_maps: list[np.ndarray] = []
        for block in self.match_blocks:
            x, attn = block(x, None, training, rng, collect_attention=True)
            match_maps.append(attn)

        with_query = bool((batch.query_slot >= 0).all())
        if not with_query and bool((batch.query_slot >= 0).any()):
            raise DraftError("mixed query/completed rows in one batch")
        pick_probs = None
        if with_query:
            acting = T.select_rows(x, batch.query_slot)
            hidden = T.gelu(T.add(T.matmul(acting, self.params["head.pick.w"]),
                                  self.params["head.pick.b"]))
            logits = T.add(
                T.matmul(hidden, T.transpose(self.params["embed.champion"], (1, 0))),
                self.params["head.pick.out_bias"],
            )
            pick_probs = T.softmax(logits, batch.legal_mask)

        blue = T.mean(T.index_select(x, np.array(BLUE_SLOTS), axis=1), axis=1)
        purple = T.mean(T.index_select(x, np.array(PURPLE_SLOTS), axis=1), axis=1)
        hidden = T.add(T.matmul(T.sub(blue, purple), self.params["head.outcome.w1"]),
                       self.params["head.outcome.b1"])
        logit = T.add(T.matmul(hidden, self.params["head.outcome.w2"]),
                      self.params["head.outcome.b2"])
        win_blue = T.reshape(T.sigmoid(logit), (b,))
        return ForwardResult(pick_probs, win_blue, x, match_maps, player_maps)

    def win_prob_for(self, win_blue: float, team: str) -> float:
        """Blue's probability converted to the asking side's perspective."""
        return win_blue if team == BLUE else 1.0 - win_blue
