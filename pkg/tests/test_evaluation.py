import warnings

import numpy as np
import pytest

from oracles import confusion_f1, pairwise_auc
from sga.augment import AugmentConfig
from sga.encoder import EncoderConfig
from sga.evaluation import (
    ExperimentConfig,
    SplitSpec,
    aggregate,
    compute_metrics,
    perturb_edges,
    predict_signs,
    roc_auc,
    run_ablation,
    run_arms_once,
    split,
)
from sga.graph import SignedGraph
from sga.io import SyntheticSpec, generate_synthetic


def _graph(n=60, seed=0):
    return generate_synthetic(SyntheticSpec(num_nodes=n, edge_density=0.12, minority_fraction=0.3, seed=seed))


def _keys(edges):
    return {(int(u), int(v)) for u, v, _ in edges}


def test_split_reproducible_disjoint_stratified():
    g = _graph(200)
    spec = SplitSpec()
    tr, te = split(g, spec, 3)
    tr2, te2 = split(g, spec, 3)
    assert np.array_equal(tr, tr2) and np.array_equal(te, te2)
    assert not _keys(tr) & _keys(te)
    assert _keys(tr) | _keys(te) == _keys(g.edge_array())
    for s in (1, -1):
        n_s = int(np.sum(g.edge_array()[:, 2] == s))
        assert abs(int(np.sum(te[:, 2] == s)) - 0.2 * n_s) <= 1
    other = split(g, spec, 4)[1]
    assert not np.array_equal(te, other)


def test_split_falls_back_when_one_sign_is_rare():
    g = SignedGraph.from_edges([(i, i + 1, 1) for i in range(10)] + [(0, 5, -1)])
    with pytest.warns(UserWarning):
        tr, te = split(g, SplitSpec(), 0)
    assert len(tr) + len(te) == 11


def test_split_needs_edges():
    with pytest.raises(ValueError):
        split(SignedGraph.from_edges([(0, 1, 1)]), SplitSpec(), 0)


def test_metrics_match_oracles():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        truth = rng.choice([1, -1], size=n)
        truth[0], truth[1] = 1, -1
        # coarse scores force ties
        scores = np.round(rng.random(n), int(rng.integers(1, 3)))
        labels = rng.choice([1, -1], size=n)
        got = compute_metrics(scores, labels, truth)
        assert got["auc"] == pairwise_auc(scores.tolist(), truth.tolist())
        want = confusion_f1(labels.tolist(), truth.tolist())
        for k, v in want.items():
            assert got[k] == pytest.approx(v, abs=1e-12)


def test_perfect_ordering_auc_one():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [-1, -1, 1, 1]) == 1.0
    assert roc_auc([0.9, 0.8, 0.2, 0.1], [-1, -1, 1, 1]) == 0.0
    assert roc_auc([0.5] * 4, [-1, 1, -1, 1]) == 0.5


def test_micro_f1_half():
    m = compute_metrics([0.6, 0.6, 0.4, 0.4], [1, 1, -1, -1], [1, -1, 1, -1])
    assert m["f1_micro"] == 0.5
    assert m["f1_binary"] == 0.5


def test_single_class_warns_and_reports_none():
    with pytest.warns(UserWarning, match="AUC"):
        m = compute_metrics([0.2, 0.7], [1, 1], [1, 1])
    assert m["auc"] is None
    assert m["f1_binary"] == 1.0


def test_predict_signs_excludes_none_class():
    Z = np.array([[1.0], [1.0]])
    theta = np.zeros((2, 3))
    theta[:, 2] = 50.0  # "?" dominates
    theta[0, 0] = 1.0
    score, label = predict_signs(Z, theta, [(0, 1, 1)])
    assert label.tolist() == [1]
    assert 0.5 < score[0] < 1.0


def test_aggregate_skips_missing():
    agg = aggregate([{"auc": 0.5, "f1_binary": 1, "f1_micro": 1, "f1_macro": 1},
                     {"auc": None, "f1_binary": 0, "f1_micro": 0, "f1_macro": 0}])
    assert agg["auc"] == {"mean": 0.5, "std": 0.0, "n": 1}
    assert agg["f1_binary"]["mean"] == 0.5


def _small_cfg(**aug):
    return ExperimentConfig(
        encoder=EncoderConfig(d=4, d_in=4, epochs=20),
        augment=AugmentConfig(**aug),
        split=SplitSpec(num_runs=1, seeds=[0]),
    )


def test_sa_with_nothing_to_accept_equals_base():
    g = _graph()
    out = run_arms_once(g, _small_cfg(eps_add_pos=1.0, eps_add_neg=1.0, eps_del_pos=0.0, eps_del_neg=0.0), 0,
                        arms=("base", "+SA"))
    assert out["_augment"]["accepted"] == 0
    assert out["+SA"] == out["base"]


def test_augmentation_never_sees_test_signs(monkeypatch):
    from sga import evaluation

    g = _graph()
    cfg = _small_cfg(eps_add_pos=0.4, eps_add_neg=0.4, eps_del_pos=0.3, eps_del_neg=0.3)
    seen = []
    real = evaluation.augment

    def spy(gt, Z, theta, acfg, exclude=None):
        res = real(gt, Z, theta, acfg, exclude=exclude)
        seen.append((gt.edge_list(), exclude, res))
        return res

    monkeypatch.setattr(evaluation, "augment", spy)
    train, test = split(g, cfg.split, 0)
    # same split, every test sign flipped: augmentation must not change
    for t in (test, test * np.array([1, 1, -1])):
        monkeypatch.setattr(evaluation, "split", lambda *a, t=t: (train, t))
        run_arms_once(g, cfg, 0, arms=("base", "+SA"))

    (e1, x1, r1), (e2, x2, r2) = seen
    assert e1 == e2 and x1 == x2
    assert [d.candidate for d in r1.accepted] == [d.candidate for d in r2.accepted]
    test_pairs = _keys(test)
    assert x1 == test_pairs
    assert not {c.candidate.change().pair for c in r1.accepted} & test_pairs
    assert not test_pairs & _keys(r1.graph.edge_list())


def test_ablation_report_shape():
    g = _graph()
    rep = run_ablation(g, _small_cfg())
    assert set(rep["aggregate"]) == {"base", "+SA", "+TP", "+SGA"}
    assert set(rep["paired_vs_base"]) == {"+SA", "+TP", "+SGA"}
    assert len(rep["runs"]) == 1


def test_perturb_flip_and_remove():
    rng = np.random.default_rng(0)
    e = np.array([(i, i + 1, 1 if i % 3 else -1) for i in range(30)])
    flipped = perturb_edges(e, 31, "rand-flip", 0.2, rng)
    assert int(np.sum(flipped[:, 2] != e[:, 2])) == 6
    removed = perturb_edges(e, 31, "rand-neg", 0.5, rng, direction="remove")
    assert int(np.sum(removed[:, 2] == -1)) == 5
    assert int(np.sum(removed[:, 2] == 1)) == 20


def test_perturb_add_avoids_existing_and_excluded():
    rng = np.random.default_rng(1)
    e = np.array([(i, i + 1, 1) for i in range(10)])
    excl = {(0, 2), (1, 3)}
    out = perturb_edges(e, 11, "rand-pos", 0.5, rng, exclude=excl)
    assert len(out) == 15
    keys = [(int(u), int(v)) for u, v, _ in out]
    assert len(set(keys)) == 15 and not set(keys) & excl
    assert all(u < v for u, v in keys)


def test_perturb_rejects_bad_input():
    e = np.array([(0, 1, 1)])
    with pytest.raises(ValueError):
        perturb_edges(e, 2, "rand-zero", 0.1, np.random.default_rng(0))
    with pytest.raises(ValueError):
        perturb_edges(e, 2, "rand-pos", 0.9, np.random.default_rng(0))


def test_config_round_trip():
    cfg = _small_cfg(eps_add_pos=0.7)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    bad = _small_cfg()
    bad.curriculum.lambda0 = 0.0
    assert bad.validate()
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert cfg.validate() == []
