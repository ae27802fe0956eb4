"""Training loop: joint pick/outcome objective over per-turn instances.

Every match contributes ten instances, one per turn, each pairing the
partially observable state with the champion actually picked and the match
outcome from Blue's perspective. The loss mixes champion negative
log-likelihood and outcome binary cross-entropy through a single weight,
adds an L2 penalty over all learnable parameters, and is minimized with
Adam under global-norm clipping and a cosine learning-rate schedule. The
best epoch by validation data loss is what gets checkpointed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Callable, Sequence

import numpy as np

from . import tensor as T
from .checkpoint import CheckpointBundle
from .data import Corpus, HistoryProvider, Normalizer, split_chronological
from .model import DraftPredictor, ModelConfig, StateBatch, encode_states
from .optim import AdamState, LrSchedule, adam_step, clip_global_norm, cosine_lr
from .state import NUM_TURNS, DraftState, build_state, legal_champions
from .tensor import Tensor

CHAMPION_LOSSES = ("categorical", "bce-onehot")


class TrainError(RuntimeError):
    """Training aborted (diverged or misconfigured)."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; the defaults are the tuned five-role profile."""

    epochs: int = 10
    batch_size: int = 512
    initial_lr: float = 1e-3
    weight_decay: float = 1e-5
    dropout: float = 0.1
    hidden_dim: int = 128
    num_blocks: int = 2
    num_heads: int = 2
    history_length: int = 50
    pick_loss_weight: float = 0.1   # champion-loss share; outcome loss gets the rest
    grad_clip: float = 5.0
    seed: int = 0
    champion_loss: str = "categorical"

    def __post_init__(self):
        if not 0.0 <= self.pick_loss_weight <= 1.0:
            raise ValueError("pick_loss_weight must be in [0, 1]")
        if self.champion_loss not in CHAMPION_LOSSES:
            raise ValueError(f"champion_loss must be one of {CHAMPION_LOSSES}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.weight_decay < 0 or self.grad_clip <= 0:
            raise ValueError("weight_decay must be >= 0 and grad_clip > 0")

    @classmethod
    def roleless_profile(cls) -> "TrainConfig":
        """The tuned profile for the roleless game variant."""
        return cls(epochs=20, weight_decay=1e-4, dropout=0.2, hidden_dim=64,
                   num_blocks=1, num_heads=1, history_length=20)

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for f in fields(self):
                fh.write(f"{f.name} = {getattr(self, f.name)}\n")

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        """Flat key=value file; '#' starts a comment; unknown keys are errors."""
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value, got {raw!r}")
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key not in types:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                if key in values:
                    raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
                kind = types[key]
                try:
                    if kind == "int":
                        values[key] = int(value)
                    elif kind == "float":
                        values[key] = float(value)
                    else:
                        values[key] = value
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: {key} needs a {kind}, got {value!r}") from None
        return cls(**values)


@dataclass(frozen=True)
class TrainInstance:
    """One supervised example: a per-turn state with its targets."""

    state: DraftState
    champion: int       # vocab id actually picked on the state's query turn
    outcome_blue: float  # 1.0 if Blue won the source match


def build_instances(
    corpus: Corpus, provider: HistoryProvider, indices: Sequence[int]
) -> list[TrainInstance]:
    instances = []
    for i in indices:
        match = corpus.matches[i]
        outcome = 1.0 if match.blue_won() else 0.0
        for turn in range(1, NUM_TURNS + 1):
            state = build_state(match, provider, turn)
            target = provider.vocab.champion_id(match.slots[turn - 1].champion)
            if target not in legal_champions(state):
                raise TrainError(
                    f"match {match.match_id} turn {turn}: recorded pick is illegal "
                    "in the reconstructed state"
                )
            instances.append(TrainInstance(state, target, outcome))
    return instances


def _instance_batch(instances: Sequence[TrainInstance], config: ModelConfig):
    batch = encode_states([inst.state for inst in instances], config)
    targets = np.array([inst.champion for inst in instances], dtype=np.int64)
    outcomes = np.array([inst.outcome_blue for inst in instances], dtype=np.float32)
    return batch, targets, outcomes


@dataclass
class LossParts:
    total: Tensor
    pick_nll: float      # mean champion loss over the batch
    outcome_bce: float   # mean outcome loss over the batch
    penalty: float       # weight-decay term


def compute_loss(
    model: DraftPredictor,
    batch: StateBatch,
    targets: np.ndarray,
    outcomes: np.ndarray,
    config: TrainConfig,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> LossParts:
    out = model.forward(batch, training=training, rng=rng)
    if config.champion_loss == "categorical":
        pick_rows = T.nll(out.pick_probs, targets)
    else:
        pick_rows = T.onehot_binary_cross_entropy(out.pick_probs, targets)
    pick = T.mean(pick_rows, axis=0)
    outcome = T.mean(T.binary_cross_entropy(out.win_blue, outcomes), axis=0)
    lam = config.pick_loss_weight
    total = T.add(T.scale(pick, lam), T.scale(outcome, 1.0 - lam))
    penalty = 0.0
    if config.weight_decay > 0.0:
        terms = [T.sum_squares(p) for p in model.params.values()]
        l2 = terms[0]
        for term in terms[1:]:
            l2 = T.add(l2, term)
        total = T.add(total, T.scale(l2, config.weight_decay))
        penalty = float(l2.data) * config.weight_decay
    return LossParts(total, float(pick.data), float(outcome.data), penalty)


def _validation_scores(model, instances, config: TrainConfig, batch_size=512):
    """(data loss, HR@1, MAE) on held-out instances, eval mode."""
    lam = config.pick_loss_weight
    losses, hits, errors = [], [], []
    for start in range(0, len(instances), batch_size):
        chunk = instances[start:start + batch_size]
        batch, targets, outcomes = _instance_batch(chunk, model.config)
        out = model.forward(batch)
        probs = out.pick_probs.data
        picked = probs[np.arange(len(chunk)), targets]
        nll = -np.log(np.maximum(picked, 1e-30))
        p = np.clip(out.win_blue.data.astype(np.float64), 1e-7, 1 - 1e-7)
        o = outcomes.astype(np.float64)
        bce = -(o * np.log(p) + (1 - o) * np.log1p(-p))
        losses.extend((lam * nll + (1.0 - lam) * bce).tolist())
        hits.extend((probs.argmax(axis=1) == targets).tolist())
        errors.extend(np.abs(out.win_blue.data.astype(np.float64) - o).tolist())
    n = len(instances)
    return (math.fsum(losses) / n, math.fsum(hits) / n, math.fsum(errors) / n)


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float
    val_hr1: float
    val_mae: float

    CSV_HEADER = "epoch,train_loss,val_loss,val_HR@1,val_MAE"

    def csv_row(self) -> str:
        return (f"{self.epoch},{self.train_loss!r},{self.val_loss!r},"
                f"{self.val_hr1!r},{self.val_mae!r}")


def train(
    corpus: Corpus,
    config: TrainConfig,
    keep: str = "best",
    on_epoch: Callable[[EpochLog], None] | None = None,
) -> tuple[CheckpointBundle, list[EpochLog]]:
    """Fit a model on the corpus's chronological train split.

    ``keep`` selects which weights end up in the returned bundle: "best"
    restores the epoch with the lowest validation data loss, "final" keeps
    the last epoch (overfitting studies want this).
    """
    if keep not in ("best", "final"):
        raise ValueError(f"keep must be 'best' or 'final', got {keep!r}")
    split = split_chronological(corpus)
    normalizer = Normalizer.fit(corpus, split.train)
    provider = HistoryProvider(corpus, normalizer, history_length=config.history_length)
    vocab = corpus.vocab
    model_config = ModelConfig(
        num_champions=vocab.num_champions,
        num_roles=vocab.num_roles,
        num_features=len(corpus.game.feature_names),
        hidden_dim=config.hidden_dim,
        num_blocks=config.num_blocks,
        num_heads=config.num_heads,
        history_length=config.history_length,
        dropout=config.dropout,
    )
    rng = np.random.default_rng(config.seed)
    model = DraftPredictor.initialize(model_config, rng)
    train_instances = build_instances(corpus, provider, split.train)
    val_instances = build_instances(corpus, provider, split.val)

    steps_per_epoch = math.ceil(len(train_instances) / config.batch_size)
    schedule = LrSchedule(config.initial_lr, total_steps=config.epochs * steps_per_epoch)
    adam = AdamState()
    best_val = math.inf
    best_epoch = -1
    best_params: dict[str, np.ndarray] | None = None
    logs: list[EpochLog] = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(train_instances))
        batch_losses = []
        for start in range(0, len(order), config.batch_size):
            chunk = [train_instances[i] for i in order[start:start + config.batch_size]]
            batch, targets, outcomes = _instance_batch(chunk, model.config)
            model.zero_grad()
            parts = compute_loss(model, batch, targets, outcomes, config,
                                 training=True, rng=rng)
            loss_value = float(parts.total.data)
            if not math.isfinite(loss_value):
                raise TrainError(
                    f"non-finite loss at epoch {epoch} step {step} "
                    f"(pick {parts.pick_nll}, outcome {parts.outcome_bce})"
                )
            parts.total.backward()
            clip_global_norm(model.params, config.grad_clip)
            adam_step(model.params, adam, cosine_lr(step, schedule))
            step += 1
            batch_losses.append(loss_value * len(chunk))
        train_loss = math.fsum(batch_losses) / len(train_instances)
        val_loss, val_hr1, val_mae = _validation_scores(model, val_instances, config)
        log = EpochLog(epoch, train_loss, val_loss, val_hr1, val_mae)
        logs.append(log)
        if on_epoch is not None:
            on_epoch(log)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            if keep == "best":
                best_params = {k: p.data.copy() for k, p in model.params.items()}
    if keep == "best" and best_params is not None:
        for name, arr in best_params.items():
            model.params[name].data[:] = arr
        epoch_kept = best_epoch
        val_kept = best_val
    else:
        epoch_kept = config.epochs - 1
        val_kept = logs[-1].val_loss
    model.zero_grad()
    bundle = CheckpointBundle(
        model=model,
        vocab=vocab,
        normalizer=normalizer,
        train_config=train_config_dict(config),
        seed=config.seed,
        epoch=epoch_kept,
        val_loss=val_kept,
        feature_names=tuple(corpus.game.feature_names),
    )
    return bundle, logs


def train_config_dict(config: TrainConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(config)}


def train_config_from_dict(d: dict) -> TrainConfig:
    return replace(TrainConfig(), **d)
