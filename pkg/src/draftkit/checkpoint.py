"""Single-file model checkpoints.

Everything needed to run inference travels in one ``.npz``: parameter and
fixed-table arrays under namespaced keys, plus a JSON metadata blob holding
the model configuration, the vocabulary, the feature normalizer, and the
training provenance (seed, epoch, validation loss). Loading reconstructs a
ready-to-use model without touching the corpus the model was trained on.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .data import Normalizer, Vocab
from .model import DraftPredictor, ModelConfig
from .tensor import Tensor

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or inconsistent checkpoint file."""


@dataclass
class CheckpointBundle:
    model: DraftPredictor
    vocab: Vocab
    normalizer: Normalizer
    train_config: dict | None = None
    seed: int | None = None
    epoch: int | None = None
    val_loss: float | None = None
    feature_names: tuple[str, ...] | None = None


def params_digest(model: DraftPredictor) -> str:
    """SHA-256 over parameter names and bytes; identifies a weight set."""
    h = hashlib.sha256()
    for name in sorted(model.params):
        h.update(name.encode())
        h.update(np.ascontiguousarray(model.params[name].data).tobytes())
    return h.hexdigest()


def save_checkpoint(path, bundle: CheckpointBundle) -> None:
    meta = {
        "format_version": FORMAT_VERSION,
        "model_config": bundle.model.config.to_dict(),
        "vocab": bundle.vocab.to_dict(),
        "normalizer": bundle.normalizer.to_dict(),
        "train_config": bundle.train_config,
        "seed": bundle.seed,
        "epoch": bundle.epoch,
        "val_loss": bundle.val_loss,
        "feature_names": list(bundle.feature_names) if bundle.feature_names else None,
        "params_digest": params_digest(bundle.model),
    }
    arrays = {"meta": np.array(json.dumps(meta))}
    for name, p in bundle.model.params.items():
        arrays[f"param/{name}"] = p.data
    for name, t in bundle.model.fixed.items():
        arrays[f"fixed/{name}"] = t.data
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> CheckpointBundle:
    try:
        with np.load(path, allow_pickle=False) as archive:
            files = dict(archive)
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if "meta" not in files:
        raise CheckpointError(f"{path}: missing metadata entry")
    meta = json.loads(str(files["meta"]))
    if meta.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {meta.get('format_version')} "
            f"(this build reads {FORMAT_VERSION})"
        )
    config = ModelConfig.from_dict(meta["model_config"])
    params = {
        key[len("param/"):]: Tensor(arr, requires_grad=True)
        for key, arr in files.items() if key.startswith("param/")
    }
    fixed = {
        key[len("fixed/"):]: Tensor(arr)
        for key, arr in files.items() if key.startswith("fixed/")
    }
    expected = DraftPredictor.initialize(config, np.random.default_rng(0))
    if set(params) != set(expected.params) or set(fixed) != set(expected.fixed):
        missing = set(expected.params) - set(params)
        extra = set(params) - set(expected.params)
        raise CheckpointError(
            f"{path}: parameter set mismatch (missing {sorted(missing)}, extra {sorted(extra)})"
        )
    for name, p in params.items():
        if p.data.shape != expected.params[name].data.shape:
            raise CheckpointError(
                f"{path}: {name} has shape {p.data.shape}, "
                f"config implies {expected.params[name].data.shape}"
            )
    model = DraftPredictor(config, params, fixed)
    digest = meta.get("params_digest")
    if digest is not None and digest != params_digest(model):
        raise CheckpointError(f"{path}: parameter bytes do not match the stored digest")
    return CheckpointBundle(
        model=model,
        vocab=Vocab.from_dict(meta["vocab"]),
        normalizer=Normalizer.from_dict(meta["normalizer"]),
        train_config=meta.get("train_config"),
        seed=meta.get("seed"),
        epoch=meta.get("epoch"),
        val_loss=meta.get("val_loss"),
        feature_names=(
            tuple(meta["feature_names"]) if meta.get("feature_names") else None
        ),
    )
