from itertools import combinations

import numpy as np
import pytest

from oracles import brute_d3, dense, random_signed_edges, scalar_probs
from sga.augment import (
    AugmentConfig,
    Candidate,
    CandidateSet,
    augmentation_report,
    build_augmented_trainset,
    candidate_pairs,
    generate_candidates,
    select_beneficial,
)
from sga.graph import ChangeKind, load_graph


def _random_setup(rng, n=5, width=3):
    g = load_graph(random_signed_edges(rng, n, 0.5), num_nodes=n)
    Z = rng.standard_normal((n, width))
    theta = rng.standard_normal((2 * width, 3)) * 3
    return g, Z, theta


def _all_absent_pairs(g):
    return np.array([(u, v) for u, v in combinations(range(g.num_nodes), 2) if not g.has_edge(u, v)]).reshape(-1, 2)


def test_add_threshold_one_gives_no_additions(rng):
    g, Z, theta = _random_setup(rng, 8)
    cfg = AugmentConfig(eps_add_pos=1.0, eps_add_neg=1.0)
    assert generate_candidates(g, Z, theta, cfg, pairs=_all_absent_pairs(g)).additions == []


def test_delete_threshold_zero_gives_no_deletions(rng):
    g, Z, theta = _random_setup(rng, 8)
    cfg = AugmentConfig(eps_del_pos=0.0, eps_del_neg=0.0)
    assert generate_candidates(g, Z, theta, cfg, pairs=_all_absent_pairs(g)).deletions == []


@pytest.mark.parametrize("seed", range(10))
def test_candidates_match_exhaustive_rule_check(seed):
    rng = np.random.default_rng(seed)
    g, Z, theta = _random_setup(rng, 5)
    cfg = AugmentConfig(eps_add_pos=0.4, eps_add_neg=0.35, eps_del_pos=0.5, eps_del_neg=0.45)
    got = generate_candidates(g, Z, theta, cfg, pairs=_all_absent_pairs(g))

    want_add, want_del = set(), set()
    for u, v in combinations(range(5), 2):
        pp, pn, _ = scalar_probs(Z, theta, u, v)
        s = g.sign(u, v)
        if s == 0:
            fire_p, fire_n = pp > cfg.eps_add_pos, pn > cfg.eps_add_neg
            if fire_p or fire_n:
                sign = 1 if fire_p and (not fire_n or pp >= pn) else -1
                want_add.add((u, v, sign))
        elif s > 0 and pp < cfg.eps_del_pos:
            want_del.add((u, v, 1))
        elif s < 0 and pn < cfg.eps_del_neg:
            want_del.add((u, v, -1))
    assert {(c.u, c.v, c.sign) for c in got.additions} == want_add
    assert {(c.u, c.v, c.sign) for c in got.deletions} == want_del
    for c in got.additions:
        assert not g.has_edge(c.u, c.v)
    for c in got.deletions:
        assert g.sign(c.u, c.v) == c.sign


def test_candidate_generation_is_pure(rng):
    g, Z, theta = _random_setup(rng, 30, 4)
    cfg = AugmentConfig(eps_add_pos=0.3, eps_add_neg=0.3, eps_del_pos=0.4, eps_del_neg=0.4, seed=5)
    a = generate_candidates(g, Z, theta, cfg)
    b = generate_candidates(g, Z, theta, cfg)
    assert a.additions == b.additions and a.deletions == b.deletions


def test_cap_keeps_largest_margins(rng):
    g, Z, theta = _random_setup(rng, 30, 4)
    loose = AugmentConfig(eps_add_pos=0.2, eps_add_neg=0.2, max_candidates_per_kind=10**6)
    capped = AugmentConfig(eps_add_pos=0.2, eps_add_neg=0.2, max_candidates_per_kind=7)
    full = generate_candidates(g, Z, theta, loose)
    cut = generate_candidates(g, Z, theta, capped)
    assert len(cut.additions) == 7
    assert cut.additions == full.additions[:7]
    assert cut.stats["additions_before_cap"] == len(full.additions)


def test_invalid_threshold_rejected(rng):
    g, Z, theta = _random_setup(rng)
    with pytest.raises(ValueError):
        generate_candidates(g, Z, theta, AugmentConfig(eps_add_pos=1.5))


def test_candidate_pairs_universe(rng):
    g = load_graph(random_signed_edges(rng, 40, 0.08), num_nodes=40)
    cfg = AugmentConfig(num_random_pairs=50, seed=2)
    pairs = candidate_pairs(g, cfg)
    keys = [tuple(p) for p in pairs.tolist()]
    assert len(set(keys)) == len(keys)
    assert all(u < v and not g.has_edge(u, v) for u, v in keys)
    two_hop = {
        (min(u, v), max(u, v))
        for w in range(40)
        for u, v in combinations(g.neighbors(w), 2)
        if not g.has_edge(u, v)
    }
    assert two_hop <= set(keys)
    assert np.array_equal(pairs, candidate_pairs(g, cfg))
    excluded = set(keys[:10])
    assert not excluded & {tuple(p) for p in candidate_pairs(g, cfg, exclude=excluded).tolist()}


def _add(u, v, sign, margin=0.5):
    return Candidate(u, v, sign, 0.9, ChangeKind.ADD, margin)


def test_closing_balanced_triangle_is_accepted():
    g = load_graph([(0, 1, 1), (1, 2, -1)])
    res = select_beneficial(g, CandidateSet([_add(0, 2, -1)]), AugmentConfig())
    assert len(res.accepted) == 1 and not res.rejected
    assert res.graph.sign(0, 2) == -1
    assert g.has_edge(0, 2) is False


def test_unbalancing_candidate_is_rejected():
    # node 0 sits in two balanced triangles; the candidate would add an unbalanced one
    g = load_graph([(0, 1, 1), (1, 2, 1), (0, 2, 1), (0, 3, 1), (2, 3, 1), (1, 4, 1), (0, 4, 1)])
    assert g.local_balance_degree(0) == 1.0
    res = select_beneficial(g, CandidateSet([_add(3, 4, -1)]), AugmentConfig())
    assert len(res.rejected) == 1 and not res.accepted
    assert res.rejected[0].delta_u < 0 or res.rejected[0].delta_v < 0


def test_empty_candidates_leave_graph_unchanged(rng):
    g = load_graph(random_signed_edges(rng, 15, 0.3), num_nodes=15)
    res = select_beneficial(g, CandidateSet(), AugmentConfig())
    assert res.graph.edge_list() == g.edge_list()
    assert build_augmented_trainset(g.edge_list(), res.accepted) == g.edge_list()


def _random_candidates(g, rng, count):
    out = []
    seen = set()
    while len(out) < count:
        u, v = sorted(int(x) for x in rng.choice(g.num_nodes, size=2, replace=False))
        if (u, v) in seen:
            continue
        seen.add((u, v))
        margin = float(rng.random())
        if g.has_edge(u, v):
            out.append(Candidate(u, v, g.sign(u, v), 0.1, ChangeKind.DELETE, margin))
        else:
            out.append(_add(u, v, int(rng.choice([1, -1])), margin))
    return CandidateSet(
        [c for c in out if c.kind is ChangeKind.ADD], [c for c in out if c.kind is ChangeKind.DELETE]
    )


@pytest.mark.parametrize("seed", range(5))
def test_decisions_match_from_scratch_oracle(seed):
    rng = np.random.default_rng(seed)
    g = load_graph(random_signed_edges(rng, 30, 0.15), num_nodes=30)
    cands = _random_candidates(g, rng, 100)
    res = select_beneficial(g, cands, AugmentConfig())
    decided = {(d.candidate.u, d.candidate.v, d.candidate.kind): d.accepted for d in res.accepted + res.rejected}

    A = dense(30, g.edge_list())
    for c in cands.ordered():
        before = brute_d3(A)
        B = A.copy()
        if c.kind is ChangeKind.ADD:
            if A[c.u, c.v] != 0:
                assert decided[(c.u, c.v, c.kind)] is False
                continue
            B[c.u, c.v] = B[c.v, c.u] = c.sign
        else:
            if A[c.u, c.v] != c.sign:
                assert decided[(c.u, c.v, c.kind)] is False
                continue
            B[c.u, c.v] = B[c.v, c.u] = 0
        after = brute_d3(B)
        ok = after[c.u] >= before[c.u] and after[c.v] >= before[c.v]
        assert decided[(c.u, c.v, c.kind)] is ok
        if ok:
            A = B
    assert np.array_equal(A, dense(30, res.graph.edge_list()))


def test_unscreened_deletions_always_accepted(rng):
    g = load_graph(random_signed_edges(rng, 20, 0.4), num_nodes=20)
    dels = [Candidate(u, v, s, 0.0, ChangeKind.DELETE, 0.1) for u, v, s in g.edge_list()[:15]]
    res = select_beneficial(g, CandidateSet([], dels), AugmentConfig(screen_deletions=False))
    assert len(res.accepted) == 15


def test_build_augmented_trainset():
    train = [(0, 1, 1), (1, 2, -1), (2, 3, 1)]
    accepted = [
        _add(0, 2, 1),
        Candidate(1, 2, -1, 0.1, ChangeKind.DELETE, 0.2),
        _add(3, 0, -1),
    ]
    assert build_augmented_trainset(train, accepted) == [(0, 1, 1), (0, 2, 1), (0, 3, -1), (2, 3, 1)]


def test_build_augmented_trainset_conflict_keeps_more_probable():
    lo = Candidate(0, 2, 1, 0.6, ChangeKind.ADD, 0.1)
    hi = Candidate(0, 2, -1, 0.8, ChangeKind.ADD, 0.1)
    out = build_augmented_trainset([(0, 1, 1)], [lo, hi])
    assert out == [(0, 1, 1), (0, 2, -1)]
    assert build_augmented_trainset([(0, 1, 1)], [hi, lo]) == out


def test_report_is_json_ready(rng):
    import json

    g, Z, theta = _random_setup(rng, 20, 3)
    cfg = AugmentConfig(eps_add_pos=0.3, eps_add_neg=0.3, eps_del_pos=0.5, eps_del_neg=0.5)
    res = select_beneficial(g, generate_candidates(g, Z, theta, cfg), cfg)
    doc = json.loads(json.dumps(augmentation_report(res, cfg)))
    assert doc["num_accepted"] == len(res.accepted)
    assert doc["config"]["eps_add_pos"] == 0.3
    assert {"delta_u", "delta_v", "kind", "prob"} <= set(doc["accepted"][0] if doc["accepted"] else doc["rejected"][0])
