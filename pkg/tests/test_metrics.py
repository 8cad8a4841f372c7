import math

import numpy as np
import pytest

from kart.attack import CandidateRanking, rank_candidates_topk
from kart.errors import ConfigurationError, KartError, UndefinedMetricError
from kart.lexicon import JointDistribution, build_name_lexicon, build_vocabulary, popularity_prior
from kart.metrics import (
    AttackReport,
    embedding_distance,
    kl_to_popularity,
    marginal_name_mass,
    popular_name_baseline,
    posterior_to_joint,
    rank_percentile,
    topk_accuracy,
)
from kart.scorer import uniform_scorer
from kart.scorer.mlm import TinyMlmScorer


def ranking(gold_rank, mention_id="m"):
    return CandidateRanking(
        mention_id=mention_id, entries=(), gold_rank=gold_rank
    )


def test_topk_all_rank_one():
    rankings = [ranking(1) for _ in range(4)]
    acc = topk_accuracy(rankings, [1, 10, 100])
    assert acc == {1: 1.0, 10: 1.0, 100: 1.0}


def test_topk_direct_count():
    rankings = [ranking(5), ranking(50), ranking(500)]
    assert topk_accuracy(rankings, [100]) == {100: 2 / 3}


def test_topk_recount_oracle():
    rng = np.random.default_rng(4)
    ranks = [int(r) for r in rng.integers(1, 1000, size=200)]
    rankings = [ranking(r, str(i)) for i, r in enumerate(ranks)]
    ks = [1, 10, 100, 1000]
    acc = topk_accuracy(rankings, ks)
    for k in ks:
        recount = sum(1 for r in ranks if r <= k) / len(ranks)
        assert acc[k] == recount
    assert all(acc[a] <= acc[b] for a, b in zip(ks, ks[1:]))


def test_topk_empty_is_undefined():
    with pytest.raises(UndefinedMetricError):
        topk_accuracy([], [1])


def test_rank_percentile_bounds():
    assert rank_percentile([ranking(100)], 100) == 100.0
    assert rank_percentile([ranking(1)], 494_000) == pytest.approx(
        100 / 494_000
    )


def test_rank_percentile_matches_full_sort(small_models, small_world, lexicon):
    from kart.attack import invert_names

    result = invert_names(
        small_models["id"], small_world["public"], lexicon,
        seed=2, phi_table=small_world["table"], top_k_entries=5,
    )
    # brute-force re-rank: full grid sort per mention
    percents = []
    for mention, (first, last) in zip(result.mentions, result.posteriors):
        grid = sorted(
            ((pf * pl, u, v) for u, pf in first.items() for v, pl in last.items()),
            key=lambda t: (-t[0], t[1], t[2]),
        )
        rank = next(
            i
            for i, (_, u, v) in enumerate(grid, 1)
            if (u, v) == (mention.gold_first, mention.gold_last)
        )
        percents.append(100 * rank / lexicon.grid_size)
    want = float(np.mean(percents))
    got = rank_percentile(result.rankings, lexicon.grid_size)
    assert got == pytest.approx(want, abs=1e-12)


def uniform_joint(n=3, m=2):
    return JointDistribution(
        first_names=tuple(f"u{i}" for i in range(n)),
        last_names=tuple(f"v{j}" for j in range(m)),
        first_probs=tuple([1 / n] * n),
        last_probs=tuple([1 / m] * m),
    )


def test_kl_zero_when_posterior_equals_prior():
    prior = uniform_joint()
    assert kl_to_popularity([prior], prior) == pytest.approx(0.0, abs=1e-12)


def test_kl_point_mass_vs_uniform_is_log_n():
    n, m = 4, 5
    prior = uniform_joint(n, m)
    point = JointDistribution(
        first_names=prior.first_names,
        last_names=prior.last_names,
        first_probs=(1.0,) + (0.0,) * (n - 1),
        last_probs=(1.0,) + (0.0,) * (m - 1),
    )
    assert kl_to_popularity([point], prior) == pytest.approx(
        math.log(n * m), abs=1e-9
    )


def test_kl_hand_computed_six_candidates():
    prior = JointDistribution(
        first_names=("a", "b", "c"),
        last_names=("x", "y"),
        first_probs=(0.5, 0.3, 0.2),
        last_probs=(0.6, 0.4),
    )
    post = JointDistribution(
        first_names=("a", "b", "c"),
        last_names=("x", "y"),
        first_probs=(0.2, 0.3, 0.5),
        last_probs=(0.5, 0.5),
    )
    # oracle: direct sum over the six joint cells
    want = 0.0
    for pf, qf in zip(post.first_probs, prior.first_probs):
        for pl, ql in zip(post.last_probs, prior.last_probs):
            p, q = pf * pl, qf * ql
            want += p * math.log(p / q)
    got = kl_to_popularity([post], prior)
    assert got == pytest.approx(want, abs=1e-12)
    assert got >= 0


def test_kl_mismatched_support_rejected():
    prior = uniform_joint()
    other = JointDistribution(
        first_names=("different",),
        last_names=("v0",),
        first_probs=(1.0,),
        last_probs=(1.0,),
    )
    with pytest.raises(ConfigurationError):
        kl_to_popularity([other], prior)


def mention_for(lexicon):
    from kart.attack import FullNameMention

    return FullNameMention(
        mention_id="m", doc_id="d", patient_id=0,
        tokens=("[cls]", "[mask]", "[mask]", "is", "[sep]"),
        first_pos=1, last_pos=2,
        gold_first=lexicon.first[0], gold_last=lexicon.last[0],
        age=30, sex="male",
    )


def test_mass_uniform_closed_form(lexicon):
    vocab = build_vocabulary(
        [list(lexicon.first) + list(lexicon.last) + ["is", "extra", "words"]]
    )
    model = uniform_scorer(vocab)
    got = marginal_name_mass(model, [mention_for(lexicon)], lexicon)
    w = vocab.vocab_size
    want = (len(lexicon.first) / w) * (len(lexicon.last) / w)
    assert got == pytest.approx(want, rel=1e-9)


def test_mass_is_one_when_lexicon_covers_vocab():
    lex = build_name_lexicon(
        [("aaa", 1.0), ("bbb", 1.0)], [("aaa", 1.0), ("bbb", 1.0)]
    )
    vocab = build_vocabulary([["aaa", "bbb"]])
    # lexicon = whole vocabulary, including specials
    lex_full = build_name_lexicon(
        [(t, 1.0) for t in vocab.vocabulary],
        [(t, 1.0) for t in vocab.vocabulary],
    )
    model = uniform_scorer(vocab)
    got = marginal_name_mass(model, [mention_for(lex_full)], lex_full)
    assert got == pytest.approx(1.0, abs=1e-6)


def test_embedding_distance_identity_and_arithmetic():
    vocab = build_vocabulary([["t1", "t2"]])
    e1 = np.zeros((vocab.vocab_size, 2), dtype=np.float32)
    m1 = TinyMlmScorer(vocab, 128, e1, np.zeros(vocab.vocab_size, dtype=np.float32))
    assert embedding_distance(m1, m1, ["t1", "t2"]) == 0.0

    e2 = e1.copy()
    e2[vocab.token_id("t2")] = np.array([3.0, 4.0], dtype=np.float32)
    m2 = TinyMlmScorer(vocab, 128, e2, np.zeros(vocab.vocab_size, dtype=np.float32))
    assert embedding_distance(m1, m2, ["t1", "t2"]) == pytest.approx(2.5)


def test_embedding_distance_dimension_mismatch():
    vocab = build_vocabulary([["t1"]])
    m1 = TinyMlmScorer(
        vocab, 128,
        np.zeros((vocab.vocab_size, 2), dtype=np.float32),
        np.zeros(vocab.vocab_size, dtype=np.float32),
    )
    m2 = TinyMlmScorer(
        vocab, 128,
        np.zeros((vocab.vocab_size, 3), dtype=np.float32),
        np.zeros(vocab.vocab_size, dtype=np.float32),
    )
    with pytest.raises(ConfigurationError):
        embedding_distance(m1, m2, ["t1"])


def test_baseline_most_popular_pair_ranks_first(lexicon):
    result = popular_name_baseline(
        lexicon, [(lexicon.first[0], lexicon.last[0])], [1]
    )
    assert result["gold_ranks"] == [1]
    assert result["topk_accuracy"][1] == 1.0


def test_baseline_matches_brute_force_product_sort():
    lex = build_name_lexicon(
        [("a", 5.0), ("b", 3.0), ("c", 2.0)],
        [("x", 4.0), ("y", 1.0)],
    )
    prior = popularity_prior(lex)
    grid = sorted(
        (
            (prior.prob(u, v), u, v)
            for u in lex.first
            for v in lex.last
        ),
        key=lambda t: (-t[0], t[1], t[2]),
    )
    for want_rank, (_, u, v) in enumerate(grid, 1):
        got = popular_name_baseline(lex, [(u, v)], [1])["gold_ranks"][0]
        assert got == want_rank


def test_baseline_equivalence_to_rank_candidates(lexicon):
    """Running the ranker on normalized popularity marginals must agree
    with the baseline exactly."""
    prior = popularity_prior(lexicon)
    first = prior.first_marginal()
    last = prior.last_marginal()
    targets = [
        (lexicon.first[3], lexicon.last[5]),
        (lexicon.first[0], lexicon.last[-1]),
        (lexicon.first[-1], lexicon.last[0]),
    ]
    base = popular_name_baseline(lexicon, targets, [1, 10])
    via_ranker = [
        rank_candidates_topk(first, last, 1, t).gold_rank for t in targets
    ]
    assert base["gold_ranks"] == via_ranker


def test_baseline_rejects_target_outside_grid(lexicon):
    with pytest.raises(KartError, match="outside"):
        popular_name_baseline(lexicon, [("n00000", "smith")], [1])


def test_report_roundtrip_and_csv():
    report = AttackReport(
        n_mentions=10,
        topk_accuracy={1: 0.1, 10: 0.4},
        rank_percent=12.5,
        mean_kl=0.003,
        mean_unnormalized_mass=0.2,
        provenance={"model": {"kind": "count_nb"}},
        extras={"foo": 1},
    )
    text = report.to_json()
    again = AttackReport.from_json(text)
    assert again.to_json() == text
    csv_text = report.to_csv()
    assert "top1_accuracy,0.1" in csv_text
    assert "rank_percent,12.5" in csv_text


def test_report_with_inapplicable_metrics_is_strict_json():
    import json as _json

    report = AttackReport(
        n_mentions=0,
        topk_accuracy={},
        rank_percent=float("nan"),
        mean_kl=0.0,
        mean_unnormalized_mass=float("nan"),
    )
    text = report.to_json()

    def reject_constants(value):
        raise ValueError(f"non-strict JSON constant {value!r}")

    parsed = _json.loads(text, parse_constant=reject_constants)
    assert parsed["metrics"]["rank_percent"] is None
    again = AttackReport.from_json(text)
    assert math.isnan(again.rank_percent)
    assert math.isnan(again.mean_unnormalized_mass)


def test_ranking_without_mass_is_strict_json():
    import json as _json

    from kart.attack import CandidateRanking

    ranking = CandidateRanking(mention_id="m", entries=(), gold_rank=3)
    text = _json.dumps(ranking.to_dict())

    def reject_constants(value):
        raise ValueError(value)

    _json.loads(text, parse_constant=reject_constants)
    again = CandidateRanking.from_dict(_json.loads(text))
    assert math.isnan(again.unnormalized_mass)
    assert again.gold_rank == 3


def test_report_validates_monotonicity():
    with pytest.raises(ConfigurationError):
        AttackReport(
            n_mentions=1,
            topk_accuracy={1: 0.9, 10: 0.1},
            rank_percent=1.0,
            mean_kl=0.0,
            mean_unnormalized_mass=0.0,
        )
    with pytest.raises(ConfigurationError):
        AttackReport(
            n_mentions=1,
            topk_accuracy={1: 1.5},
            rank_percent=1.0,
            mean_kl=0.0,
            mean_unnormalized_mass=0.0,
        )


def test_posterior_to_joint_requires_full_support(lexicon):
    prior = popularity_prior(lexicon)
    with pytest.raises(ConfigurationError):
        posterior_to_joint({"nope": 1.0}, prior.last_marginal(), prior)
