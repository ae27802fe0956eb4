"""Synthetic match corpus with known hidden structure.

The generator plants exactly the regularities the model is supposed to
recover, so desk-scale experiments have a ground truth to compare against:

- every player keeps 3 persistent preferred champions with uneven weights;
  ``preference_sharpness`` sets how much pick mass the trio absorbs (1.0
  makes picks deterministic members of the trio whenever one is legal);
- pick choice is context-sensitive: candidates that synergize with already
  visible same-team picks get an exponential bonus, which is information a
  popularity baseline cannot use;
- outcomes are logistic over hidden per-player skill, hidden per-champion
  strength, a symmetric pairwise synergy table weighted by role pairing
  (three planted high-weight role pairs), and an antisymmetric cross-team
  counter table;
- optionally (``familiarity_weight`` > 0) each player picking inside their
  own preferred trio adds to their team's score, so putting someone on a
  champion they never play genuinely costs win probability — off by
  default, which leaves previously generated corpora byte-identical;
- per-match stat features leak skill (plus a win bonus) through noise, so
  histories carry usable outcome signal.

Champion ``champ_{k:03d}`` maps to vocab id ``k + NUM_RESERVED``, so hidden
tables can be indexed straight from vocab ids minus the reserved offset.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Corpus, MatchRecord, Slot, Vocab
from .state import BLUE, NUM_TURNS, PURPLE, TEAM_OF_TURN

ROLE_NAMES = ("top", "jungle", "middle", "ad_carry", "support")
PLANTED_ROLE_PAIRS = (("top", "jungle"), ("middle", "jungle"), ("ad_carry", "support"))
FEATURE_NAMES = ("damage_share", "gold_per_min", "kda")  # alphabetical, matching loader order


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the hidden data-generating process."""

    num_players: int
    num_matches: int
    num_champions: int
    preference_sharpness: float = 0.7
    num_roles: int = 5
    num_bans: int = 10
    # outcome model (weights chosen so the total logit std is ~1)
    skill_weight: float = 0.25
    strength_weight: float = 0.14
    synergy_weight: float = 1.0
    counter_weight: float = 0.05
    familiarity_weight: float = 0.0
    # pick model
    context_beta: float = 2.0
    preference_strength_bias: float = 0.8
    # role-pair weighting of synergy
    offrole_weight: float = 0.15
    base_time: float = 1_700_000_000.0

    def __post_init__(self):
        if self.num_players < NUM_TURNS:
            raise ValueError(f"need at least {NUM_TURNS} players, got {self.num_players}")
        if self.num_champions < self.num_bans + NUM_TURNS:
            raise ValueError(
                f"{self.num_champions} champions cannot sustain {self.num_bans} bans "
                f"plus {NUM_TURNS} distinct picks"
            )
        if not 0.0 <= self.preference_sharpness <= 1.0:
            raise ValueError("preference_sharpness must be in [0, 1]")
        if self.num_roles not in (0, 5):
            raise ValueError("num_roles must be 0 (roleless) or 5")


def planted_synergy_table(seed: int, num_champions: int, scale: float = 0.3) -> np.ndarray:
    """Symmetric zero-diagonal pairwise synergy, entries ~ N(0, scale)."""
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, scale, size=(num_champions, num_champions))
    table = np.triu(a, k=1)
    return table + table.T


def _role_pair_weights(config: GeneratorConfig) -> np.ndarray:
    """(R, R) symmetric weights; planted pairs high, everything else low."""
    if config.num_roles == 0:
        return np.ones((1, 1))
    idx = {name: i for i, name in enumerate(ROLE_NAMES)}
    w = np.full((config.num_roles, config.num_roles), config.offrole_weight)
    for a, b in PLANTED_ROLE_PAIRS:
        w[idx[a], idx[b]] = w[idx[b], idx[a]] = 1.0
    return w


@dataclass(frozen=True)
class HiddenTruth:
    """The latent tables a generated corpus was drawn from.

    Only for validation experiments and generator-aware tests; nothing in
    the model pipeline may touch these.
    """

    skill: np.ndarray        # (num_players,)
    strength: np.ndarray     # (num_champions,)
    preferences: np.ndarray  # (num_players, 3) champion indices, weight order
    synergy: np.ndarray      # (C, C) symmetric
    counter: np.ndarray      # (C, C) antisymmetric
    config: GeneratorConfig


def generate_synthetic(
    seed: int,
    num_players: int,
    num_matches: int,
    num_champions: int,
    preference_sharpness: float = 0.7,
    synergy_table: np.ndarray | None = None,
    **overrides,
) -> Corpus:
    """Draw a full corpus from the hidden process; same seed, same bytes."""
    corpus, _ = generate_synthetic_with_truth(
        seed, num_players, num_matches, num_champions, preference_sharpness,
        synergy_table, **overrides,
    )
    return corpus


def generate_synthetic_with_truth(
    seed: int,
    num_players: int,
    num_matches: int,
    num_champions: int,
    preference_sharpness: float = 0.7,
    synergy_table: np.ndarray | None = None,
    **overrides,
) -> tuple[Corpus, HiddenTruth]:
    config = GeneratorConfig(
        num_players=num_players,
        num_matches=num_matches,
        num_champions=num_champions,
        preference_sharpness=preference_sharpness,
        **overrides,
    )
    C = config.num_champions
    if synergy_table is None:
        synergy_table = np.zeros((C, C))
    synergy_table = np.asarray(synergy_table, dtype=np.float64)
    if synergy_table.shape != (C, C):
        raise ValueError(f"synergy table must be ({C}, {C}), got {synergy_table.shape}")
    if not np.allclose(synergy_table, synergy_table.T):
        raise ValueError("synergy table must be symmetric")

    rng = np.random.default_rng(seed)
    # hidden tables, drawn in a fixed order so seeds stay comparable
    skill = rng.normal(0.0, 1.0, size=config.num_players)
    strength = rng.normal(0.0, 1.0, size=C)
    counter_raw = rng.normal(0.0, 1.0, size=(C, C))
    counter = (np.triu(counter_raw, k=1) - np.triu(counter_raw, k=1).T) / np.sqrt(2.0)

    # persistent preferences, biased toward strong champions
    pref_probs = np.exp(config.preference_strength_bias * strength)
    pref_probs /= pref_probs.sum()
    trio_weights = np.array([0.5, 0.3, 0.2])
    preferences = np.empty((config.num_players, 3), dtype=np.int64)
    pick_weights = np.empty((config.num_players, C))
    s = config.preference_sharpness
    for p in range(config.num_players):
        trio = rng.choice(C, size=3, replace=False, p=pref_probs)
        preferences[p] = trio
        w = np.full(C, (1.0 - s) / (C - 3))
        w[trio] = s * trio_weights
        pick_weights[p] = w
    on_pool = np.zeros((config.num_players, C), dtype=bool)
    for p in range(config.num_players):
        on_pool[p, preferences[p]] = True

    role_w = _role_pair_weights(config)
    roleless = config.num_roles == 0
    blue_turns = [t for t in range(1, NUM_TURNS + 1) if TEAM_OF_TURN[t] == BLUE]
    purple_turns = [t for t in range(1, NUM_TURNS + 1) if TEAM_OF_TURN[t] == PURPLE]

    matches: list[MatchRecord] = []
    for i in range(config.num_matches):
        seats = rng.choice(config.num_players, size=NUM_TURNS, replace=False)
        role_of_turn: dict[int, int] = {}
        if not roleless:
            for team_turns in (blue_turns, purple_turns):
                for turn, role in zip(team_turns, rng.permutation(config.num_roles)):
                    role_of_turn[turn] = int(role)
        bans = rng.choice(C, size=config.num_bans, replace=False)

        taken = np.zeros(C, dtype=bool)
        taken[bans] = True
        picks: dict[int, int] = {}  # turn -> champion index
        for turn in range(1, NUM_TURNS + 1):
            player = seats[turn - 1]
            team = TEAM_OF_TURN[turn]
            legal = np.flatnonzero(~taken)
            w = pick_weights[player][legal].copy()
            bonus = np.zeros(len(legal))
            for prev_turn, prev_champ in picks.items():
                if TEAM_OF_TURN[prev_turn] != team:
                    continue
                pair_w = (
                    1.0
                    if roleless
                    else role_w[role_of_turn[turn], role_of_turn[prev_turn]]
                )
                bonus += synergy_table[legal, prev_champ] * pair_w
            w *= np.exp(config.context_beta * bonus)
            total = w.sum()
            if total <= 0:  # the whole preference trio is illegal at sharpness 1
                w = np.ones(len(legal))
                total = float(len(legal))
            champ = int(rng.choice(legal, p=w / total))
            picks[turn] = champ
            taken[champ] = True

        def team_score(turns):
            players = [seats[t - 1] for t in turns]
            champs = [picks[t] for t in turns]
            score = config.skill_weight * sum(skill[p] for p in players)
            score += config.strength_weight * sum(strength[c] for c in champs)
            score += config.familiarity_weight * sum(
                1.0 for p, c in zip(players, champs) if on_pool[p, c]
            )
            pair_sum = 0.0
            for a in range(len(turns)):
                for b in range(a + 1, len(turns)):
                    pw = (
                        1.0
                        if roleless
                        else role_w[role_of_turn[turns[a]], role_of_turn[turns[b]]]
                    )
                    pair_sum += synergy_table[champs[a], champs[b]] * pw
            return score + config.synergy_weight * pair_sum

        logit = team_score(blue_turns) - team_score(purple_turns)
        logit += config.counter_weight * sum(
            counter[picks[tb], picks[tp]] for tb in blue_turns for tp in purple_turns
        )
        blue_wins = bool(rng.random() < 1.0 / (1.0 + np.exp(-logit)))

        slots = []
        for turn in range(1, NUM_TURNS + 1):
            player = int(seats[turn - 1])
            team = TEAM_OF_TURN[turn]
            won = blue_wins if team == BLUE else not blue_wins
            sk = skill[player]
            kda = max(0.1, 2.2 + 1.4 * sk + 0.9 * won + rng.normal(0.0, 0.5))
            gold = 395.0 + 42.0 * sk + 18.0 * won + rng.normal(0.0, 22.0)
            dmg = float(np.clip(0.2 + 0.045 * sk + 0.02 * won + rng.normal(0.0, 0.035), 0.02, 0.65))
            features = dict(damage_share=round(dmg, 4), gold_per_min=round(gold, 2), kda=round(kda, 3))
            slots.append(
                Slot(
                    player_id=f"player_{player:04d}",
                    turn=turn,
                    team=team,
                    role=None if roleless else ROLE_NAMES[role_of_turn[turn]],
                    champion=f"champ_{picks[turn]:03d}",
                    win=won,
                    features=tuple(features[k] for k in FEATURE_NAMES),
                )
            )
        matches.append(
            MatchRecord(
                match_id=f"m{i:06d}",
                timestamp=config.base_time + 60.0 * i,
                bans=tuple(f"champ_{b:03d}" for b in sorted(bans)),
                slots=tuple(slots),
            )
        )

    vocab = Vocab(
        champions=[f"champ_{k:03d}" for k in range(C)],
        roles=() if roleless else ROLE_NAMES[: config.num_roles],
    )
    corpus = Corpus.from_matches(matches, FEATURE_NAMES, vocab=vocab)
    truth = HiddenTruth(
        skill=skill, strength=strength, preferences=preferences,
        synergy=synergy_table, counter=counter, config=config,
    )
    return corpus, truth


def permute_outcomes(corpus: Corpus, seed: int) -> Corpus:
    """Reassign winner bits by a random permutation across matches.

    Drafts, players, and features stay untouched; only the outcome labels
    move. Trained on this, a model has nothing real to learn about match
    results, which is the control for outcome-learning experiments.
    """
    rng = np.random.default_rng(seed)
    bits = np.array([m.blue_won() for m in corpus.matches])
    shuffled = bits[rng.permutation(len(bits))]
    matches = []
    for m, blue_wins in zip(corpus.matches, shuffled):
        blue_wins = bool(blue_wins)
        slots = tuple(
            replace(s, win=blue_wins if s.team == BLUE else not blue_wins) for s in m.slots
        )
        matches.append(replace(m, slots=slots))
    return Corpus.from_matches(
        matches,
        corpus.game.feature_names,
        vocab=corpus.vocab,
        history_length=corpus.game.history_length,
    )
