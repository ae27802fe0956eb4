"""Command-line entry points.

Subcommands: ``synth`` draws a reproducible synthetic corpus; ``train``
fits a model from a key=value config and writes a single-file checkpoint
plus a CSV epoch log; ``eval`` scores a checkpoint (or a frequency
baseline) on a held-out split; ``strategy-eval`` compares recommendation
strategies under an independently trained judge; ``heatmap`` exports the
averaged board-attention matrix; ``serve`` starts the HTTP assistant.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .data import HistoryProvider, Vocab, load_corpus, save_corpus, split_chronological
from .evaluation import (
    FrequencyBaseline,
    evaluate,
    evaluate_baseline,
    strategy_eval,
)
from .recommend import (
    Strategy,
    role_attention_heatmap,
    save_heatmap_csv,
    save_heatmap_png,
)
from .train import EpochLog, TrainConfig, train


def _load_eval_corpus(args, bundle):
    """Corpus for a checkpoint: explicit vocab file wins, else the embedded one."""
    if args.vocab:
        corpus = load_corpus(args.data, vocab_path=args.vocab)
    else:
        corpus = load_corpus(args.data, vocab=bundle.vocab)
    if corpus.vocab != bundle.vocab:
        raise SystemExit("error: corpus vocabulary does not match the checkpoint")
    return corpus


def _provider_for(corpus, bundle):
    return HistoryProvider(corpus, bundle.normalizer,
                           history_length=bundle.model.config.history_length)


def _emit_report(report, out_csv: str | None):
    print(report.format_table())
    if out_csv:
        Path(out_csv).write_text(report.to_csv(), encoding="utf-8")
        print(f"wrote {out_csv}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args):
    from .synthetic import generate_synthetic

    corpus = generate_synthetic(
        seed=args.seed,
        num_players=args.players,
        num_matches=args.matches,
        num_champions=args.champions,
        preference_sharpness=args.sharpness,
        num_roles=args.roles,
        num_bans=args.bans,
    )
    save_corpus(corpus, args.out)
    vocab_path = args.vocab_out or str(Path(args.out).with_suffix(".vocab.json"))
    corpus.vocab.save(vocab_path)
    print(f"wrote {len(corpus.matches)} matches to {args.out}")
    print(f"wrote vocabulary ({corpus.vocab.num_champions} champions, "
          f"{corpus.vocab.num_roles} roles) to {vocab_path}")


def cmd_train(args):
    config = TrainConfig.from_file(args.config)
    corpus = load_corpus(args.data, vocab_path=args.vocab)
    log_path = args.log or str(Path(args.out).with_suffix(".log.csv"))
    lines = [EpochLog.CSV_HEADER]

    def on_epoch(log: EpochLog):
        lines.append(log.csv_row())
        if not args.quiet:
            print(f"epoch {log.epoch:3d}  train {log.train_loss:.4f}  "
                  f"val {log.val_loss:.4f}  HR@1 {log.val_hr1:.4f}  "
                  f"MAE {log.val_mae:.4f}")

    bundle, _ = train(corpus, config, keep=args.keep, on_epoch=on_epoch)
    save_checkpoint(args.out, bundle)
    Path(log_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"kept epoch {bundle.epoch} (val loss {bundle.val_loss:.6f})")
    print(f"wrote checkpoint to {args.out}")
    print(f"wrote training log to {log_path}")


def cmd_eval(args):
    bundle = load_checkpoint(args.ckpt)
    corpus = _load_eval_corpus(args, bundle)
    provider = _provider_for(corpus, bundle)
    split = split_chronological(corpus)
    if args.baseline:
        if args.post_draft:
            raise SystemExit("error: --baseline has no outcome head; "
                             "it cannot run with --post-draft")
        baseline = FrequencyBaseline.parse(args.baseline)
        report = evaluate_baseline(baseline, corpus, provider, split, part=args.split)
    else:
        report = evaluate(bundle.model, corpus, provider, split,
                          part=args.split, post_draft=args.post_draft,
                          batch_size=args.batch_size)
    _emit_report(report, args.out_csv)


def cmd_strategy_eval(args):
    rec = load_checkpoint(args.rec)
    judge = load_checkpoint(args.oracle)
    corpus = _load_eval_corpus(args, rec)
    provider = _provider_for(corpus, rec)
    split = split_chronological(corpus)
    try:
        win_ks = tuple(int(k) for k in args.k.split(","))
    except ValueError:
        raise SystemExit(f"error: --k expects a comma-separated list, got {args.k!r}")
    strategy = Strategy.parse(args.strategy)
    report = strategy_eval(rec, judge, corpus, provider, split, strategy,
                           tau=args.tau, rank_k=args.rank_k, win_ks=win_ks,
                           part=args.split)
    _emit_report(report, args.out_csv)


def cmd_heatmap(args):
    bundle = load_checkpoint(args.ckpt)
    corpus = _load_eval_corpus(args, bundle)
    provider = _provider_for(corpus, bundle)
    split = split_chronological(corpus)
    indices = list(getattr(split, args.split))
    heat = role_attention_heatmap(bundle.model, corpus, provider, indices)
    save_heatmap_csv(heat, args.out_csv)
    print(f"wrote {args.out_csv}")
    if args.out_png:
        save_heatmap_png(heat, args.out_png)
        print(f"wrote {args.out_png}")


def cmd_serve(args):
    import uvicorn

    from .service import build_app

    bundle = load_checkpoint(args.ckpt)
    if args.vocab:
        on_disk = Vocab.load(args.vocab)
        if on_disk != bundle.vocab:
            raise SystemExit("error: vocabulary file does not match the checkpoint")
    corpus = None
    if args.data:
        corpus = load_corpus(args.data, vocab=bundle.vocab)
    app = build_app({args.name: bundle}, corpus=corpus,
                    journal_path=args.journal, frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="draftkit",
        description="two-level attention model for pick recommendations in "
                    "ten-player draft games",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic match corpus")
    p.add_argument("--out", required=True, help="corpus JSONL path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--players", type=int, default=200)
    p.add_argument("--matches", type=int, default=5000)
    p.add_argument("--champions", type=int, default=50)
    p.add_argument("--roles", type=int, default=5, choices=(0, 5))
    p.add_argument("--bans", type=int, default=10)
    p.add_argument("--sharpness", type=float, default=0.7,
                   help="how concentrated player champion preferences are")
    p.add_argument("--vocab-out", default=None,
                   help="vocabulary JSON path (default: <out>.vocab.json)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    p.add_argument("--config", required=True, help="flat key=value config file")
    p.add_argument("--data", required=True, help="corpus JSONL path")
    p.add_argument("--out", required=True, help="checkpoint output path (.npz)")
    p.add_argument("--vocab", default=None, help="vocabulary JSON path")
    p.add_argument("--log", default=None,
                   help="epoch CSV log path (default: <out>.log.csv)")
    p.add_argument("--keep", choices=("best", "final"), default="best",
                   help="keep the best-validation weights or the final epoch")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a held-out split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--vocab", default=None)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--post-draft", action="store_true",
                   help="score only completed drafts (outcome metrics)")
    p.add_argument("--baseline", default=None,
                   help="score a frequency baseline instead: pop or spop:<n>")
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("strategy-eval",
                       help="compare a recommendation strategy under a judge model")
    p.add_argument("--rec", required=True, help="recommender checkpoint")
    p.add_argument("--oracle", required=True, help="judge checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--vocab", default=None)
    p.add_argument("--strategy", required=True, help="p, v, or p+v")
    p.add_argument("--tau", type=float, default=0.02)
    p.add_argument("--k", default="3,10", help="comma-separated Win@k depths")
    p.add_argument("--rank-k", type=int, default=10,
                   help="length of the recommendation list being judged")
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=cmd_strategy_eval)

    p = sub.add_parser("heatmap", help="export averaged board attention")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--vocab", default=None)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-png", default=None)
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("serve", help="run the HTTP draft assistant")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--vocab", default=None,
                   help="vocabulary JSON; checked against the checkpoint")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--name", default="default", help="checkpoint name in the API")
    p.add_argument("--data", default=None,
                   help="corpus JSONL enabling player_id bindings")
    p.add_argument("--journal", default=None, help="append-only session journal path")
    p.add_argument("--frontend", default=None, help="static UI directory to serve at /")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
