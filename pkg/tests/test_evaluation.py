"""Metric formulas, baselines, and the evaluation loops."""

import math
import types

import numpy as np
import pytest

from draftkit.checkpoint import CheckpointBundle
from draftkit.data import HistoryProvider, Normalizer, PlayerHistory, split_chronological
from draftkit.evaluation import (
    EvalError,
    FrequencyBaseline,
    MetricReport,
    evaluate,
    evaluate_baseline,
    outcome_metrics,
    ranking_metrics,
    strategy_eval,
)
from draftkit.model import DraftPredictor
from draftkit.recommend import Strategy
from draftkit.synthetic import generate_synthetic
from test_model import CFG, fresh_state


@pytest.fixture(scope="module")
def corpus_bits():
    corpus = generate_synthetic(
        seed=11, num_players=20, num_matches=60, num_champions=12, num_bans=2
    )
    split = split_chronological(corpus)
    normalizer = Normalizer.fit(corpus, split.train)
    provider = HistoryProvider(corpus, normalizer, history_length=CFG.history_length)
    return corpus, provider, split


def scrambled_model(seed):
    m = DraftPredictor.initialize(CFG, np.random.default_rng(seed))
    rng = np.random.default_rng(seed + 1000)
    m.params["head.outcome.w2"].data[:] = rng.normal(0.0, 0.5, size=(CFG.hidden_dim, 1))
    return m


def bundle_for(model, corpus, split, seed):
    normalizer = Normalizer.fit(corpus, split.train)
    return CheckpointBundle(
        model=model, vocab=corpus.vocab, normalizer=normalizer,
        train_config=None, seed=seed, epoch=0, val_loss=0.0,
    )


# ---------------------------------------------------------------------------
# ranking metric formula


def test_ranking_metrics_hand_values():
    ranked = [5, 3, 9, 2]
    assert ranking_metrics(ranked, 5, 1) == (1.0, 1.0)
    assert ranking_metrics(ranked, 3, 1) == (0.0, 0.0)
    hr, ng = ranking_metrics(ranked, 3, 2)
    assert hr == 1.0
    assert ng == pytest.approx(1.0 / math.log2(3.0), abs=1e-15)
    hr, ng = ranking_metrics(ranked, 2, 10)
    assert hr == 1.0
    assert ng == pytest.approx(1.0 / math.log2(5.0), abs=1e-15)


def test_ranking_metrics_errors():
    with pytest.raises(EvalError, match="missing from ranking"):
        ranking_metrics([1, 2, 3], 9, 2)
    assert ranking_metrics([1, 2, 3], 9, 2, complete=False) == (0.0, 0.0)
    with pytest.raises(EvalError, match="duplicates"):
        ranking_metrics([1, 1, 2], 1, 1)
    with pytest.raises(EvalError, match="k must be"):
        ranking_metrics([1], 1, 0)


def test_ranking_metrics_against_relevance_vector_oracle():
    rng = np.random.default_rng(17)
    for _ in range(300):
        n = int(rng.integers(1, 30))
        ranked = list(rng.permutation(n))
        target = int(rng.integers(0, n))
        k = int(rng.integers(1, 16))
        hr, ng = ranking_metrics(ranked, target, k)
        # oracle: binary relevance vector, discounted sum over the top k
        rel = [1.0 if c == target else 0.0 for c in ranked]
        hr_expect = sum(rel[:k])
        ng_expect = sum(r / math.log2(i + 2) for i, r in enumerate(rel[:k]))
        assert abs(hr - hr_expect) <= 1e-12
        assert abs(ng - ng_expect) <= 1e-12


# ---------------------------------------------------------------------------
# outcome metric formula


def test_outcome_metrics_hand_values():
    acc, mae = outcome_metrics([0.8, 0.3, 0.5], [1, 0, 1])
    assert acc == 1.0
    assert mae == pytest.approx((0.2 + 0.3 + 0.5) / 3, abs=1e-15)
    acc, _ = outcome_metrics([0.5], [0])  # exactly 0.5 predicts a win
    assert acc == 0.0


def test_outcome_metrics_errors():
    with pytest.raises(EvalError, match="probabilities vs"):
        outcome_metrics([0.5], [1, 0])
    with pytest.raises(EvalError, match="outside"):
        outcome_metrics([1.5], [1])
    with pytest.raises(EvalError, match="not 0 or 1"):
        outcome_metrics([0.5], [2])
    with pytest.raises(EvalError, match="no outcomes"):
        outcome_metrics([], [])


def test_outcome_metrics_against_numpy_oracle():
    rng = np.random.default_rng(23)
    for _ in range(300):
        n = int(rng.integers(1, 50))
        p = rng.uniform(0.0, 1.0, size=n)
        o = rng.integers(0, 2, size=n)
        acc, mae = outcome_metrics(list(p), list(o))
        assert abs(acc - np.mean((p >= 0.5).astype(int) == o)) <= 1e-12
        assert abs(mae - np.abs(p - o).mean()) <= 1e-12


# ---------------------------------------------------------------------------
# report formatting


def test_metric_report_rows_and_csv():
    report = MetricReport(
        num_states=40, hr={1: 0.25, 5: 0.5}, ng={5: 0.3},
        acc=0.6, mae=0.4, label="demo",
    )
    names = [n for n, _ in report.rows()]
    assert names == ["states", "HR@1", "HR@5", "NG@5", "ACC", "MAE"]
    lines = report.to_csv().strip().split("\n")
    assert lines[0] == "metric,value"
    parsed = {row.split(",")[0]: row.split(",")[1] for row in lines[1:]}
    assert float(parsed["HR@1"]) == 0.25  # repr round-trips exactly
    table = report.format_table()
    assert "demo" in table and "HR@5" in table


def test_metric_report_omits_absent_sections():
    report = MetricReport(num_states=3, acc=0.5, mae=0.5)
    names = [n for n, _ in report.rows()]
    assert names == ["states", "ACC", "MAE"]


# ---------------------------------------------------------------------------
# frequency baselines


def test_baseline_parse():
    assert FrequencyBaseline.parse("pop").window is None
    assert FrequencyBaseline.parse("spop:20").window == 20
    with pytest.raises(EvalError, match="unknown baseline"):
        FrequencyBaseline.parse("random")
    with pytest.raises(EvalError, match="bad baseline"):
        FrequencyBaseline.parse("spop:abc")
    with pytest.raises(EvalError, match="window"):
        FrequencyBaseline(window=0)


def history_of(champs):
    n = len(champs)
    return PlayerHistory(
        np.array(champs, dtype=np.int64),
        np.full(n, 3, dtype=np.int64),
        np.zeros((n, 3), dtype=np.float32),
    )


def test_baseline_ranking_counts_and_ties():
    state = fresh_state(CFG, turn=4, bans=(4,), picked={1: 6, 2: 8, 3: 10},
                        histories={4: history_of([5, 5, 7, 3, 5, 7])})
    ranked = FrequencyBaseline().rank(state)
    assert ranked[:3] == [5, 7, 3]
    assert ranked[3:] == [4, 6, 8, 9, 10, 11, 12, 13, 14]  # ties by id
    assert 4 in ranked and 6 in ranked  # banned/taken champions not filtered
    assert len(ranked) == CFG.num_champions


def test_baseline_recent_window():
    state = fresh_state(CFG, turn=4, picked={1: 6, 2: 8, 3: 10},
                        histories={4: history_of([5, 5, 7, 3, 5, 7])})
    ranked = FrequencyBaseline(window=2).rank(state)  # last two: 5, 7
    assert ranked[:2] == [5, 7]
    assert ranked[2:] == [3, 4, 6, 8, 9, 10, 11, 12, 13, 14]


def test_baseline_window_at_least_history_equals_full_count():
    state = fresh_state(CFG, turn=4, picked={1: 6, 2: 8, 3: 10},
                        histories={4: history_of([5, 5, 7, 3, 5, 7])})
    assert FrequencyBaseline(window=6).rank(state) == FrequencyBaseline().rank(state)
    assert FrequencyBaseline(window=99).rank(state) == FrequencyBaseline().rank(state)


def test_baseline_empty_history_ranks_by_id():
    state = fresh_state(CFG, turn=1)
    ranked = FrequencyBaseline().rank(state)
    assert ranked == list(range(3, 3 + CFG.num_champions))


# ---------------------------------------------------------------------------
# evaluation loops


def test_evaluate_untrained_model(corpus_bits):
    corpus, provider, split = corpus_bits
    model = DraftPredictor.initialize(CFG, np.random.default_rng(7))
    report = evaluate(model, corpus, provider, split)
    assert report.num_states == 10 * len(split.test)
    assert report.hr[1] <= report.hr[5] <= report.hr[10]
    for value in list(report.hr.values()) + list(report.ng.values()):
        assert 0.0 <= value <= 1.0
    assert report.mae == 0.5  # untrained outcome head is exactly 0.5
    blue_rate = np.mean([1 if corpus.matches[i].blue_won() else 0 for i in split.test])
    assert report.acc == pytest.approx(blue_rate, abs=1e-12)


def test_evaluate_deterministic(corpus_bits):
    corpus, provider, split = corpus_bits
    model = scrambled_model(7)
    a = evaluate(model, corpus, provider, split)
    b = evaluate(model, corpus, provider, split)
    assert a.rows() == b.rows()


def test_evaluate_order_and_batch_independent(corpus_bits):
    corpus, provider, split = corpus_bits
    model = scrambled_model(7)
    base = evaluate(model, corpus, provider, split)
    shuffled = types.SimpleNamespace(
        train=split.train, val=split.val, test=list(reversed(list(split.test)))
    )
    assert evaluate(model, corpus, provider, shuffled).rows() == base.rows()
    assert evaluate(model, corpus, provider, split, batch_size=7).rows() == base.rows()


def test_evaluate_rejects_leaky_or_empty_split(corpus_bits):
    corpus, provider, split = corpus_bits
    model = scrambled_model(7)
    leaky = types.SimpleNamespace(train=split.train, val=split.val,
                                  test=list(split.test) + [0])
    with pytest.raises(EvalError, match="overlaps training"):
        evaluate(model, corpus, provider, leaky)
    empty = types.SimpleNamespace(train=split.train, val=split.val, test=[])
    with pytest.raises(EvalError, match="empty"):
        evaluate(model, corpus, provider, empty)
    with pytest.raises(EvalError, match="unknown split part"):
        evaluate(model, corpus, provider, split, part="holdout")


def test_evaluate_post_draft(corpus_bits):
    corpus, provider, split = corpus_bits
    model = DraftPredictor.initialize(CFG, np.random.default_rng(7))
    report = evaluate(model, corpus, provider, split, post_draft=True)
    assert report.hr is None and report.ng is None
    assert report.num_states == len(split.test)
    assert report.mae == 0.5


def test_evaluate_baseline_loop(corpus_bits):
    corpus, provider, split = corpus_bits
    report = evaluate_baseline(FrequencyBaseline(), corpus, provider, split)
    assert report.acc is None and report.mae is None
    assert report.num_states == 10 * len(split.test)
    assert 0.0 <= report.hr[1] <= report.hr[10] <= 1.0
    huge = evaluate_baseline(FrequencyBaseline(window=10_000), corpus, provider, split)
    assert huge.rows() == report.rows()


# ---------------------------------------------------------------------------
# strategy evaluation


def test_strategy_eval_reports_judge_scores(corpus_bits):
    corpus, provider, split = corpus_bits
    rec = bundle_for(scrambled_model(7), corpus, split, seed=7)
    judge = bundle_for(scrambled_model(8), corpus, split, seed=8)
    report = strategy_eval(rec, judge, corpus, provider, split,
                           Strategy.PICK_PROB, rank_k=5, win_ks=(1, 3))
    assert report.num_states == 10 * len(split.test)
    assert set(report.win) == {1, 3}
    assert report.win[1] <= report.win[3]  # max over a superset
    assert 0.0 <= report.hr[5] <= 1.0
    assert set(report.hr) == {5} and set(report.ng) == {5}


def test_strategy_eval_warns_on_identical_params(corpus_bits):
    corpus, provider, split = corpus_bits
    rec = bundle_for(scrambled_model(7), corpus, split, seed=7)
    with pytest.warns(UserWarning, match="identical parameters"):
        strategy_eval(rec, rec, corpus, provider, split,
                      Strategy.PICK_PROB, rank_k=3, win_ks=(1,))


def test_strategy_eval_rejects_mismatched_judge(corpus_bits):
    corpus, provider, split = corpus_bits
    rec = bundle_for(scrambled_model(7), corpus, split, seed=7)
    from draftkit.model import ModelConfig
    other_cfg = ModelConfig(
        num_champions=CFG.num_champions, num_roles=CFG.num_roles,
        num_features=CFG.num_features, hidden_dim=16, num_blocks=1,
        num_heads=2, history_length=4, dropout=0.0,
    )
    judge = bundle_for(DraftPredictor.initialize(other_cfg, np.random.default_rng(1)),
                       corpus, split, seed=1)
    with pytest.raises(EvalError, match="history length"):
        strategy_eval(rec, judge, corpus, provider, split, Strategy.PICK_PROB)
