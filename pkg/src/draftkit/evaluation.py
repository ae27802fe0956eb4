"""Offline evaluation: ranking metrics, outcome metrics, and baselines.

Held-out matches are expanded into one state per pick turn; metrics are
averaged uniformly over those states with compensated summation, and the
split boundaries are re-checked here so a leaky caller fails loudly.

Two frequency baselines rank champions by how often the acting player
has picked them: over the whole visible history window, or over only the
last n entries. Both rank every real champion (no legality filtering), so
a banned champion costs them ranking mass — exactly the handicap a
context-blind baseline deserves.

Strategy evaluation scores a recommender's top-k suggestions with a
second, separately trained model: the reported number is the best win
probability the judge sees among the k suggestions, averaged over states.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from .checkpoint import CheckpointBundle, params_digest
from .model import DraftPredictor, encode_states
from .recommend import Strategy, probe_outcomes, recommend
from .state import (
    NUM_RESERVED,
    NUM_TURNS,
    DraftState,
    build_completed_state,
    build_state,
    legal_champions,
)

RANK_KS = (1, 5, 10)
NG_KS = (5, 10)
WIN_KS = (3, 10)


class EvalError(ValueError):
    pass


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values)


def ranking_metrics(
    ranked: Sequence[int], target: int, k: int, complete: bool = True
) -> tuple[float, float]:
    """(hit, gain) for one ranked list against the champion actually picked.

    Hit is 1 when the target sits in the top k (1-based); gain discounts
    the hit by 1/log2(rank + 1). With ``complete`` the target must appear
    somewhere in the list; without it a missing target scores zero, for
    truncated top-k lists.
    """
    if k < 1:
        raise EvalError(f"k must be at least 1, got {k}")
    if len(set(ranked)) != len(ranked):
        raise EvalError("ranking contains duplicates")
    try:
        rank = list(ranked).index(target) + 1
    except ValueError:
        if complete:
            raise EvalError(f"target champion {target} missing from ranking")
        return 0.0, 0.0
    if rank > k:
        return 0.0, 0.0
    return 1.0, 1.0 / math.log2(rank + 1)


def outcome_metrics(probs: Sequence[float], outcomes: Sequence[int]) -> tuple[float, float]:
    """(accuracy, mean absolute error) of win probabilities against results.

    A probability of exactly 0.5 counts as predicting a win.
    """
    if len(probs) != len(outcomes):
        raise EvalError(f"{len(probs)} probabilities vs {len(outcomes)} outcomes")
    if len(probs) == 0:
        raise EvalError("no outcomes to score")
    hits, errors = [], []
    for p, o in zip(probs, outcomes):
        p = float(p)
        o = int(o)
        if not 0.0 <= p <= 1.0:
            raise EvalError(f"win probability {p} outside [0, 1]")
        if o not in (0, 1):
            raise EvalError(f"outcome {o} is not 0 or 1")
        hits.append(1.0 if (1 if p >= 0.5 else 0) == o else 0.0)
        errors.append(abs(p - o))
    return _mean(hits), _mean(errors)


@dataclass
class MetricReport:
    """Averaged metrics over a set of evaluation states; absent = not run."""

    num_states: int
    hr: dict[int, float] | None = None
    ng: dict[int, float] | None = None
    acc: float | None = None
    mae: float | None = None
    win: dict[int, float] | None = None
    label: str = ""

    def rows(self) -> list[tuple[str, float | int]]:
        out: list[tuple[str, float | int]] = [("states", self.num_states)]
        if self.hr is not None:
            out += [(f"HR@{k}", self.hr[k]) for k in sorted(self.hr)]
        if self.ng is not None:
            out += [(f"NG@{k}", self.ng[k]) for k in sorted(self.ng)]
        if self.acc is not None:
            out.append(("ACC", self.acc))
        if self.mae is not None:
            out.append(("MAE", self.mae))
        if self.win is not None:
            out += [(f"Win@{k}", self.win[k]) for k in sorted(self.win)]
        return out

    def to_csv(self) -> str:
        lines = ["metric,value"]
        for name, value in self.rows():
            lines.append(f"{name},{value!r}")
        return "\n".join(lines) + "\n"

    def format_table(self) -> str:
        rows = self.rows()
        width = max(len(name) for name, _ in rows)
        lines = [f"{self.label}" if self.label else "evaluation"]
        for name, value in rows:
            shown = str(value) if isinstance(value, int) else f"{value:.6f}"
            lines.append(f"  {name:<{width}}  {shown}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# frequency baselines


@dataclass(frozen=True)
class FrequencyBaseline:
    """Rank champions by the acting player's own pick counts.

    ``window=None`` counts the whole visible history; ``window=n`` counts
    only the most recent n picks.
    """

    window: int | None = None

    def __post_init__(self):
        if self.window is not None and self.window < 1:
            raise EvalError(f"baseline window must be at least 1, got {self.window}")

    @classmethod
    def parse(cls, text: str) -> "FrequencyBaseline":
        text = text.strip().lower()
        if text == "pop":
            return cls(window=None)
        if text.startswith("spop:"):
            try:
                return cls(window=int(text.split(":", 1)[1]))
            except ValueError as exc:
                raise EvalError(f"bad baseline spec {text!r}") from exc
        raise EvalError(f"unknown baseline {text!r} (expected pop or spop:<n>)")

    def rank(self, state: DraftState) -> list[int]:
        if state.query_turn is None:
            raise EvalError("baseline needs an in-progress draft")
        history = state.slots[state.query_turn - 1].history
        counts: dict[int, int] = {}
        if history is not None:
            champs = history.champions
            if self.window is not None:
                champs = champs[-self.window:]
            for c in champs:
                counts[int(c)] = counts.get(int(c), 0) + 1
        universe = range(NUM_RESERVED, NUM_RESERVED + state.num_champions)
        return sorted(universe, key=lambda c: (-counts.get(c, 0), c))


# ---------------------------------------------------------------------------
# split hygiene


def _split_part(split, part: str) -> list[int]:
    try:
        indices = list(getattr(split, part))
    except AttributeError:
        raise EvalError(f"unknown split part {part!r}") from None
    if not indices:
        raise EvalError(f"split part {part!r} is empty")
    if part != "train":
        train = set(split.train)
        overlap = train.intersection(indices)
        if overlap:
            raise EvalError(f"{part} split overlaps training matches: {sorted(overlap)[:5]}")
        if min(indices) <= max(split.train, default=-1):
            raise EvalError(f"{part} split is not strictly after the training range")
    return sorted(indices)


def _states_and_targets(corpus, provider, indices):
    """All (state, target champion id, blue outcome) triples, turn order."""
    vocab = provider.vocab
    triples = []
    for i in indices:
        match = corpus.matches[i]
        outcome = 1 if match.blue_won() else 0
        by_turn = {slot.turn: slot for slot in match.slots}
        for turn in range(1, NUM_TURNS + 1):
            state = build_state(match, provider, turn)
            target = vocab.champion_id(by_turn[turn].champion)
            triples.append((state, target, outcome))
    return triples


# ---------------------------------------------------------------------------
# model evaluation


def evaluate(
    model: DraftPredictor,
    corpus,
    provider,
    split,
    part: str = "test",
    post_draft: bool = False,
    batch_size: int = 256,
) -> MetricReport:
    """Score a trained model on one split of a corpus.

    Default mode expands each match into ten pick states and reports both
    ranking and outcome metrics; ``post_draft`` scores only the completed
    drafts (outcome metrics alone).
    """
    indices = _split_part(split, part)
    if post_draft:
        probs, outcomes = [], []
        for start in range(0, len(indices), batch_size):
            chunk = indices[start:start + batch_size]
            states = [build_completed_state(corpus.matches[i], provider) for i in chunk]
            out = model.forward(encode_states(states, model.config))
            probs.extend(float(v) for v in out.win_blue.data)
            outcomes.extend(1 if corpus.matches[i].blue_won() else 0 for i in chunk)
        acc, mae = outcome_metrics(probs, outcomes)
        return MetricReport(num_states=len(indices), acc=acc, mae=mae,
                            label=f"{part} (post-draft)")

    triples = _states_and_targets(corpus, provider, indices)
    hr_acc = {k: [] for k in RANK_KS}
    ng_acc = {k: [] for k in NG_KS}
    probs, outcomes = [], []
    for start in range(0, len(triples), batch_size):
        chunk = triples[start:start + batch_size]
        states = [s for s, _, _ in chunk]
        out = model.forward(encode_states(states, model.config))
        for row, (state, target, outcome) in enumerate(chunk):
            p = out.pick_probs.data[row]
            ranked = sorted(legal_champions(state), key=lambda c: (-p[c], c))
            for k in RANK_KS:
                hr, ng = ranking_metrics(ranked, target, k)
                hr_acc[k].append(hr)
                if k in ng_acc:
                    ng_acc[k].append(ng)
            probs.append(float(out.win_blue.data[row]))
            outcomes.append(outcome)
    acc, mae = outcome_metrics(probs, outcomes)
    return MetricReport(
        num_states=len(triples),
        hr={k: _mean(v) for k, v in hr_acc.items()},
        ng={k: _mean(v) for k, v in ng_acc.items()},
        acc=acc, mae=mae, label=part,
    )


def evaluate_baseline(
    baseline: FrequencyBaseline, corpus, provider, split, part: str = "test"
) -> MetricReport:
    """Ranking metrics for a frequency baseline on the same states."""
    indices = _split_part(split, part)
    triples = _states_and_targets(corpus, provider, indices)
    hr_acc = {k: [] for k in RANK_KS}
    ng_acc = {k: [] for k in NG_KS}
    for state, target, _ in triples:
        ranked = baseline.rank(state)
        for k in RANK_KS:
            hr, ng = ranking_metrics(ranked, target, k)
            hr_acc[k].append(hr)
            if k in ng_acc:
                ng_acc[k].append(ng)
    name = "pop" if baseline.window is None else f"spop:{baseline.window}"
    return MetricReport(
        num_states=len(triples),
        hr={k: _mean(v) for k, v in hr_acc.items()},
        ng={k: _mean(v) for k, v in ng_acc.items()},
        label=f"{part} baseline {name}",
    )


# ---------------------------------------------------------------------------
# strategy evaluation with an independent judge


def strategy_eval(
    recommender: CheckpointBundle,
    judge: CheckpointBundle,
    corpus,
    provider,
    split,
    strategy: Strategy,
    tau: float = 0.02,
    rank_k: int = 10,
    win_ks: Sequence[int] = WIN_KS,
    part: str = "test",
) -> MetricReport:
    """Score one recommendation strategy with a separately trained judge.

    For each state the recommender produces its top ``rank_k`` champions;
    the judge then what-if-scores the top ``max(win_ks)`` of them, and
    Win@k is the judge's best win probability among the first k, averaged
    over states. Ranking metrics are computed on the same truncated list.
    """
    rec_model, judge_model = recommender.model, judge.model
    if rec_model.config.champion_vocab != judge_model.config.champion_vocab:
        raise EvalError("recommender and judge disagree on the champion universe")
    if rec_model.config.history_length != judge_model.config.history_length:
        raise EvalError("recommender and judge disagree on history length")
    if params_digest(rec_model) == params_digest(judge_model):
        warnings.warn(
            "recommender and judge share identical parameters; "
            "the judge is not an independent check", stacklevel=2
        )
    win_ks = sorted(set(win_ks))
    if not win_ks or win_ks[0] < 1:
        raise EvalError(f"bad win_ks {win_ks}")
    probe_k = min(max(win_ks), rank_k)

    indices = _split_part(split, part)
    triples = _states_and_targets(corpus, provider, indices)
    hr_acc, ng_acc = [], []
    win_acc = {k: [] for k in win_ks}
    for state, target, _ in triples:
        recs = recommend(rec_model, state, strategy, tau=tau, k=rank_k)
        champs = [r.champion for r in recs]
        hr, ng = ranking_metrics(champs, target, rank_k, complete=False)
        hr_acc.append(hr)
        ng_acc.append(ng)
        judged = probe_outcomes(judge_model, state, champs[:probe_k])
        for k in win_ks:
            top = champs[:min(k, len(champs))]
            win_acc[k].append(max(judged[c] for c in top))
    return MetricReport(
        num_states=len(triples),
        hr={rank_k: _mean(hr_acc)},
        ng={rank_k: _mean(ng_acc)},
        win={k: _mean(v) for k, v in win_acc.items()},
        label=f"{part} strategy {strategy.value}",
    )
