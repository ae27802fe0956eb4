"""Ranked champion recommendations with what-if win probabilities.

Three strategies: rank by selection probability, rank by the win
probability the model predicts if the champion were locked in, or rank by
win probability restricted to champions the player plausibly plays
(selection probability above a threshold), padding from the selection
ranking when too few champions pass.

Win probabilities come from what-if probes: place the candidate on the
acting slot, run the forward pass, and read the outcome head from the
acting team's perspective. Histories do not change under a what-if edit,
so the player encodings are computed once per state and shared across all
probes. Explanations read the final board-attention row of the acting
slot from the probe's own forward pass: the strongest-attended visible
teammate pick is reported as the synergy champion, the strongest-attended
visible opponent pick as the counter champion.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .model import DraftPredictor, encode_states
from .state import (
    BLUE,
    NUM_RESERVED,
    NUM_TURNS,
    TEAM_OF_TURN,
    DraftError,
    DraftState,
    apply_whatif,
    build_completed_state,
    legal_champions,
)
from .tensor import Tensor

DEFAULT_TAU = 0.02


class Strategy(Enum):
    PICK_PROB = "p"
    WIN_PROB = "v"
    WIN_OVER_LIKELY = "p+v"

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        # tolerate "p v": a '+' in a query string decodes to a space
        normalized = text.strip().lower().replace(" ", "+")
        for member in cls:
            if member.value == normalized:
                return member
        raise ValueError(f"unknown strategy {text!r} (expected p, v, or p+v)")


@dataclass(frozen=True)
class Explanation:
    """Strongest-attended visible picks around a candidate; None = no candidate."""

    synergy_champion: int | None = None
    synergy_weight: float | None = None
    counter_champion: int | None = None
    counter_weight: float | None = None

    @property
    def empty(self) -> bool:
        return self.synergy_champion is None and self.counter_champion is None


@dataclass(frozen=True)
class Recommendation:
    champion: int
    select_prob: float
    win_prob: float          # acting team's perspective
    passed_threshold: bool
    explanation: Explanation


@dataclass(frozen=True)
class ProbeResult:
    win_probs: dict[int, float]              # candidate -> acting-team win prob
    attention_rows: dict[int, np.ndarray]    # candidate -> (10,) head-avg final row
    states: dict[int, DraftState]            # candidate -> the probed state


def _player_perspective(win_blue: float, team: str) -> float:
    return win_blue if team == BLUE else 1.0 - win_blue


def probe_details(
    model: DraftPredictor, state: DraftState, candidates: Sequence[int]
) -> ProbeResult:
    """One what-if forward per candidate, batched, player encodings shared."""
    if state.query_turn is None:
        raise DraftError("cannot probe a completed draft")
    if not candidates:
        raise DraftError("no candidates to probe")
    ordered = sorted(set(candidates))
    if len(ordered) != len(candidates):
        raise DraftError("duplicate probe candidates")
    whatifs = [apply_whatif(state, c) for c in ordered]
    batch = encode_states(whatifs, model.config)
    base = encode_states([state], model.config)
    reps, _ = model.encode_player_histories(base)
    shared = Tensor(np.broadcast_to(reps.data, (len(ordered),) + reps.data.shape[1:]).copy())
    out = model.forward(batch, player_reps=shared)
    row_slot = state.query_turn - 1
    head_avg = out.match_attention[-1].mean(axis=1)  # (B, 10, 10)
    win_probs, rows, states = {}, {}, {}
    for i, c in enumerate(ordered):
        win_probs[c] = _player_perspective(float(out.win_blue.data[i]), state.acting_team)
        rows[c] = head_avg[i, row_slot].copy()
        states[c] = whatifs[i]
    return ProbeResult(win_probs, rows, states)


def probe_outcomes(
    model: DraftPredictor, state: DraftState, candidates: Sequence[int]
) -> dict[int, float]:
    """Map each candidate champion to the predicted win probability if picked."""
    return probe_details(model, state, candidates).win_probs


def _explanation_for(probed: DraftState, turn: int, row: np.ndarray) -> Explanation:
    team = TEAM_OF_TURN[turn]
    best: dict[bool, tuple[float, int] | None] = {True: None, False: None}
    for idx, slot in enumerate(probed.slots):
        if idx == turn - 1 or slot.champion < NUM_RESERVED:
            continue
        own = slot.team == team
        weight = float(row[idx])
        if best[own] is None or weight > best[own][0]:
            best[own] = (weight, slot.champion)
    synergy, counter = best[True], best[False]
    return Explanation(
        synergy_champion=synergy[1] if synergy else None,
        synergy_weight=synergy[0] if synergy else None,
        counter_champion=counter[1] if counter else None,
        counter_weight=counter[0] if counter else None,
    )


def explain(model: DraftPredictor, state: DraftState, champion: int) -> Explanation:
    """Synergy/counter attribution for picking ``champion`` now."""
    probe = probe_details(model, state, [champion])
    return _explanation_for(probe.states[champion], state.query_turn, probe.attention_rows[champion])


def rank_candidates(
    legal: Sequence[int],
    select_probs: Mapping[int, float],
    win_probs: Mapping[int, float] | None,
    strategy: Strategy,
    tau: float = DEFAULT_TAU,
) -> list[tuple[int, bool]]:
    """Full deterministic ranking as (champion, passed_threshold) pairs.

    Ties in win probability break toward higher selection probability, then
    lower champion id; selection-probability ties break toward lower id.
    """
    by_pick = sorted(legal, key=lambda c: (-select_probs[c], c))
    if strategy is Strategy.PICK_PROB:
        return [(c, True) for c in by_pick]
    if win_probs is None:
        raise DraftError(f"strategy {strategy.value} needs win probabilities")
    by_win = sorted(legal, key=lambda c: (-win_probs[c], -select_probs[c], c))
    if strategy is Strategy.WIN_PROB:
        return [(c, True) for c in by_win]
    passers = [c for c in by_win if select_probs[c] > tau]
    padding = [c for c in by_pick if select_probs[c] <= tau]
    return [(c, True) for c in passers] + [(c, False) for c in padding]


def recommend(
    model: DraftPredictor,
    state: DraftState,
    strategy: Strategy = Strategy.WIN_OVER_LIKELY,
    tau: float = DEFAULT_TAU,
    k: int = 3,
) -> list[Recommendation]:
    """Top-k recommendations for the acting turn under one strategy."""
    if k < 1:
        raise DraftError(f"k must be at least 1, got {k}")
    if tau < 0:
        raise DraftError(f"tau must be non-negative, got {tau}")
    if state.query_turn is None:
        raise DraftError("draft is complete; nothing to recommend")
    legal = sorted(legal_champions(state))
    out = model.forward(encode_states([state], model.config))
    probs = out.pick_probs.data[0]
    select_probs = {c: float(probs[c]) for c in legal}
    if strategy is Strategy.PICK_PROB:
        ranked = rank_candidates(legal, select_probs, None, strategy, tau)[:k]
        probe = probe_details(model, state, [c for c, _ in ranked])
    else:
        probe = probe_details(model, state, legal)
        ranked = rank_candidates(legal, select_probs, probe.win_probs, strategy, tau)[:k]
    recs = []
    for champion, passed in ranked:
        recs.append(Recommendation(
            champion=champion,
            select_prob=select_probs[champion],
            win_prob=probe.win_probs[champion],
            passed_threshold=passed,
            explanation=_explanation_for(
                probe.states[champion], state.query_turn, probe.attention_rows[champion]
            ),
        ))
    return recs


# ---------------------------------------------------------------------------
# board-attention analysis


@dataclass
class AttentionHeatmap:
    """Slot-by-slot attention averaged over matches, in team/role order."""

    matrix: np.ndarray       # (10, 10), rows sum to ~1
    labels: list[str]        # "blue/top", ..., "purple/support"


def _slot_order(match, roles_known: bool) -> list[int]:
    """Slot indices sorted blue-team-first, then by role name, then turn."""
    def key(item):
        idx, slot = item
        team_rank = 0 if slot.team == BLUE else 1
        role = slot.role if (roles_known and slot.role is not None) else ""
        return (team_rank, role, slot.turn)
    return [idx for idx, _ in sorted(enumerate(match.slots), key=key)]


def role_attention_heatmap(
    model: DraftPredictor,
    corpus,
    provider,
    indices: Sequence[int],
    batch_size: int = 256,
) -> AttentionHeatmap:
    """Average final-layer board attention over completed drafts.

    Each match's 10x10 head-averaged map is permuted into a canonical
    (team, role) order using the full role assignment from the record, then
    averaged. The model itself still sees only what a Blue-perspective
    completed state reveals.
    """
    indices = sorted(indices)
    if not indices:
        raise DraftError("heatmap needs at least one match")
    roles_known = any(s.role is not None for s in corpus.matches[indices[0]].slots)
    total = np.zeros((NUM_TURNS, NUM_TURNS), dtype=np.float64)
    count = 0
    labels: list[str] | None = None
    for start in range(0, len(indices), batch_size):
        chunk = indices[start:start + batch_size]
        states = [build_completed_state(corpus.matches[i], provider) for i in chunk]
        out = model.forward(encode_states(states, model.config))
        head_avg = out.match_attention[-1].mean(axis=1)
        for row, i in enumerate(chunk):
            match = corpus.matches[i]
            order = _slot_order(match, roles_known)
            total += head_avg[row][order][:, order]
            count += 1
            if labels is None:
                labels = [
                    f"{match.slots[idx].team}/"
                    + (match.slots[idx].role if roles_known and match.slots[idx].role is not None
                       else f"slot{match.slots[idx].turn}")
                    for idx in order
                ]
    return AttentionHeatmap(matrix=total / count, labels=labels)


def save_heatmap_csv(heatmap: AttentionHeatmap, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + heatmap.labels)
        for label, row in zip(heatmap.labels, heatmap.matrix):
            writer.writerow([label] + [repr(float(v)) for v in row])


def save_heatmap_png(heatmap: AttentionHeatmap, path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7.5, 6.5))
    image = ax.imshow(heatmap.matrix, cmap="viridis")
    ax.set_xticks(range(len(heatmap.labels)), heatmap.labels, rotation=45, ha="right")
    ax.set_yticks(range(len(heatmap.labels)), heatmap.labels)
    ax.set_xlabel("attended slot")
    ax.set_ylabel("query slot")
    fig.colorbar(image, ax=ax, label="mean attention")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
