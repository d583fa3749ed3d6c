"""Candidate edge edits from classifier probabilities, screened by local balance.

Additions are proposed for absent pairs whose predicted positive (negative)
probability exceeds its threshold; deletions for present edges whose
probability of their own sign falls below its threshold. Candidates are then
applied one at a time, in descending order of how far they clear their
threshold, and kept only if neither endpoint's local balance degree drops.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.sparse as sp

from .encoder import class_probs
from .graph import ChangeKind, EdgeChange, SignedGraph, exact_balance_delta

log = logging.getLogger(__name__)


@dataclass
class AugmentConfig:
    eps_add_pos: float = 0.9
    eps_add_neg: float = 0.9
    eps_del_pos: float = 0.2
    eps_del_neg: float = 0.2
    max_candidates_per_kind: int = 5000
    screen_deletions: bool = True
    # Universe of absent pairs scored for additions.
    max_two_hop_pairs: int = 2_000_000
    num_random_pairs: int = 10_000
    seed: int = 0

    def validate(self) -> list[str]:
        errs = []
        for name in ("eps_add_pos", "eps_add_neg", "eps_del_pos", "eps_del_neg"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                errs.append(f"{name}={val} outside [0, 1]")
        for name in ("max_candidates_per_kind", "max_two_hop_pairs", "num_random_pairs"):
            if getattr(self, name) < 0:
                errs.append(f"{name} must be >= 0")
        return errs


@dataclass(frozen=True)
class Candidate:
    u: int
    v: int
    sign: int
    prob: float
    kind: ChangeKind
    margin: float

    def change(self) -> EdgeChange:
        return EdgeChange(self.kind, self.u, self.v, self.sign)


@dataclass
class CandidateSet:
    additions: list[Candidate] = field(default_factory=list)
    deletions: list[Candidate] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def ordered(self) -> list[Candidate]:
        """All candidates by descending margin; ties by kind then pair."""
        allc = self.additions + self.deletions
        return sorted(allc, key=lambda c: (-c.margin, c.kind.value, c.u, c.v))


@dataclass
class Decision:
    candidate: Candidate
    accepted: bool
    delta_u: float
    delta_v: float


@dataclass
class AugmentResult:
    graph: SignedGraph
    accepted: list[Decision]
    rejected: list[Decision]
    candidates: CandidateSet


# -- pair universe -----------------------------------------------------------

def candidate_pairs(
    g: SignedGraph,
    cfg: AugmentConfig,
    exclude: set[tuple[int, int]] | None = None,
) -> np.ndarray:
    """Absent pairs (u < v) to score for additions.

    Every pair at distance exactly two, subsampled to ``max_two_hop_pairs``
    if larger, plus ``num_random_pairs`` uniformly drawn absent pairs. Pairs
    in ``exclude`` are dropped. Deterministic for a given ``cfg.seed``.
    """
    n = g.num_nodes
    rng = np.random.default_rng([cfg.seed, 0xA06])
    e = g.edge_array()
    if n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    two = sp.triu(a @ a, k=1).tocoo()
    pairs = np.stack([two.row, two.col], axis=1).astype(np.int64)
    if len(pairs):
        present = np.asarray(a[pairs[:, 0], pairs[:, 1]]).ravel() > 0
        pairs = pairs[~present]
    if len(pairs) > cfg.max_two_hop_pairs:
        keep = rng.choice(len(pairs), size=cfg.max_two_hop_pairs, replace=False)
        pairs = pairs[np.sort(keep)]

    taken = set(map(tuple, pairs.tolist()))
    extra = []
    budget = min(cfg.num_random_pairs, n * (n - 1) // 2 - g.num_edges - len(taken))
    tries = 0
    while len(extra) < budget and tries < 50:
        tries += 1
        draw = rng.integers(0, n, size=(2 * (budget - len(extra)) + 16, 2))
        for x, y in draw.tolist():
            if x == y:
                continue
            if x > y:
                x, y = y, x
            if (x, y) in taken or g.has_edge(x, y):
                continue
            taken.add((x, y))
            extra.append((x, y))
            if len(extra) == budget:
                break
    if extra:
        pairs = np.vstack([pairs, np.array(extra, dtype=np.int64)])
    if exclude:
        mask = np.array([(int(x), int(y)) not in exclude for x, y in pairs], dtype=bool)
        pairs = pairs[mask] if len(pairs) else pairs
    pairs = pairs.reshape(-1, 2)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return pairs[order]


def _score(Z, theta, pairs, chunk=200_000):
    out = np.empty((len(pairs), 3))
    for s in range(0, len(pairs), chunk):
        sl = pairs[s : s + chunk]
        out[s : s + chunk] = class_probs(Z, theta, sl[:, 0], sl[:, 1])
    return out


# -- generation --------------------------------------------------------------

def generate_candidates(
    g: SignedGraph,
    Z: np.ndarray,
    theta: np.ndarray,
    cfg: AugmentConfig,
    pairs: np.ndarray | None = None,
    exclude: set[tuple[int, int]] | None = None,
) -> CandidateSet:
    """Apply the threshold rules to ``pairs`` (additions) and to every edge of ``g`` (deletions).

    ``pairs`` defaults to :func:`candidate_pairs`. An addition takes the sign
    whose rule fired; if both fire the larger probability wins, ties going
    positive. Each kind is capped at ``max_candidates_per_kind`` by margin.
    """
    errs = cfg.validate()
    if errs:
        raise ValueError("; ".join(errs))
    if pairs is None:
        pairs = candidate_pairs(g, cfg, exclude)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)

    additions: list[Candidate] = []
    if len(pairs):
        present = np.array([g.has_edge(int(x), int(y)) for x, y in pairs], dtype=bool)
        pairs = pairs[~present]
    if len(pairs):
        p = _score(Z, theta, pairs)
        fire_pos = p[:, 0] > cfg.eps_add_pos
        fire_neg = p[:, 1] > cfg.eps_add_neg
        for i in np.flatnonzero(fire_pos | fire_neg):
            pp, pn = p[i, 0], p[i, 1]
            positive = fire_pos[i] and (not fire_neg[i] or pp >= pn)
            if positive:
                sign, prob, margin = 1, pp, pp - cfg.eps_add_pos
            else:
                sign, prob, margin = -1, pn, pn - cfg.eps_add_neg
            additions.append(
                Candidate(int(pairs[i, 0]), int(pairs[i, 1]), sign, float(prob), ChangeKind.ADD, float(margin))
            )

    deletions: list[Candidate] = []
    e = g.edge_array()
    if len(e):
        p = _score(Z, theta, e[:, :2])
        for i in range(len(e)):
            u, v, s = (int(x) for x in e[i])
            if s > 0 and p[i, 0] < cfg.eps_del_pos:
                deletions.append(Candidate(u, v, s, float(p[i, 0]), ChangeKind.DELETE, float(cfg.eps_del_pos - p[i, 0])))
            elif s < 0 and p[i, 1] < cfg.eps_del_neg:
                deletions.append(Candidate(u, v, s, float(p[i, 1]), ChangeKind.DELETE, float(cfg.eps_del_neg - p[i, 1])))

    stats = {
        "pairs_scored": int(len(pairs)),
        "additions_before_cap": len(additions),
        "deletions_before_cap": len(deletions),
    }
    cap = cfg.max_candidates_per_kind
    key = lambda c: (-c.margin, c.u, c.v)  # noqa: E731
    additions = sorted(additions, key=key)[:cap]
    deletions = sorted(deletions, key=key)[:cap]
    stats["additions"] = len(additions)
    stats["deletions"] = len(deletions)
    stats["cap"] = cap
    return CandidateSet(additions, deletions, stats)


# -- screening --------------------------------------------------------------

def select_beneficial(g: SignedGraph, cands: CandidateSet, cfg: AugmentConfig) -> AugmentResult:
    """Sequentially keep candidates that do not lower either endpoint's balance degree.

    Each candidate is judged against the graph with all previously accepted
    edits already applied, using exact rational arithmetic. ``g`` is left
    untouched; the edited copy is returned in the result.
    """
    work = g.copy()
    accepted: list[Decision] = []
    rejected: list[Decision] = []
    for c in cands.ordered():
        change = c.change()
        if c.kind is ChangeKind.ADD and work.has_edge(c.u, c.v):
            rejected.append(Decision(c, False, 0.0, 0.0))
            continue
        if c.kind is ChangeKind.DELETE and work.sign(c.u, c.v) != c.sign:
            rejected.append(Decision(c, False, 0.0, 0.0))
            continue
        du, dv = exact_balance_delta(work, change)
        ok = du >= 0 and dv >= 0
        if c.kind is ChangeKind.DELETE and not cfg.screen_deletions:
            ok = True
        decision = Decision(c, ok, float(du), float(dv))
        if ok:
            work.apply(change)
            accepted.append(decision)
        else:
            rejected.append(decision)
    return AugmentResult(work, accepted, rejected, cands)


def build_augmented_trainset(
    train_edges, accepted: list[Decision] | list[Candidate]
) -> list[tuple[int, int, int]]:
    """Training edges plus accepted additions minus accepted deletions, sorted by pair."""
    cur: dict[tuple[int, int], int] = {}
    for u, v, s in train_edges:
        u, v = (int(u), int(v)) if u < v else (int(v), int(u))
        cur[(u, v)] = int(s)
    added_prob: dict[tuple[int, int], float] = {}
    for item in accepted:
        c = item.candidate if isinstance(item, Decision) else item
        key = (c.u, c.v) if c.u < c.v else (c.v, c.u)
        if c.kind is ChangeKind.DELETE:
            cur.pop(key, None)
            continue
        if key in added_prob:
            if cur[key] != c.sign:
                log.warning("pair %s proposed with both signs; keeping the more probable", key)
            if c.prob > added_prob[key]:
                cur[key] = c.sign
                added_prob[key] = c.prob
            continue
        if key in cur:
            continue
        cur[key] = c.sign
        added_prob[key] = c.prob
    return [(u, v, s) for (u, v), s in sorted(cur.items())]


def augment(
    g: SignedGraph,
    Z: np.ndarray,
    theta: np.ndarray,
    cfg: AugmentConfig,
    exclude: set[tuple[int, int]] | None = None,
) -> AugmentResult:
    cands = generate_candidates(g, Z, theta, cfg, exclude=exclude)
    result = select_beneficial(g, cands, cfg)
    log.info(
        "augmentation: %d additions / %d deletions proposed, %d accepted, %d rejected",
        len(cands.additions), len(cands.deletions), len(result.accepted), len(result.rejected),
    )
    return result


def augmentation_report(result: AugmentResult, cfg: AugmentConfig) -> dict:
    """JSON-ready summary of the decisions, thresholds and cap statistics."""

    def rec(d: Decision):
        c = d.candidate
        return {
            "kind": c.kind.value, "u": c.u, "v": c.v, "sign": c.sign,
            "prob": c.prob, "margin": c.margin,
            "delta_u": d.delta_u, "delta_v": d.delta_v,
        }

    return {
        "config": asdict(cfg),
        "candidate_stats": result.candidates.stats,
        "num_accepted": len(result.accepted),
        "num_rejected": len(result.rejected),
        "accepted": [rec(d) for d in result.accepted],
        "rejected": [rec(d) for d in result.rejected],
    }
