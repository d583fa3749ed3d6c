"""Link sign prediction metrics, train/test splits, ablation arms and random baselines."""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .augment import AugmentConfig, AugmentResult, augment
from .curriculum import build_schedule, score_edges, train_with_curriculum
from .encoder import EncoderConfig, TrainedModel, class_probs, fit
from .graph import SignedGraph

log = logging.getLogger(__name__)

METRICS = ("auc", "f1_binary", "f1_micro", "f1_macro")
ARMS = ("base", "+SA", "+TP", "+SGA")
RANDOM_MODES = ("rand-pos", "rand-neg", "rand-flip")


@dataclass
class SplitSpec:
    train_fraction: float = 0.8
    num_runs: int = 5
    seeds: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])

    def validate(self) -> list[str]:
        errs = []
        if not 0.0 < self.train_fraction < 1.0:
            errs.append("train_fraction must be in (0, 1)")
        if self.num_runs < 1:
            errs.append("num_runs must be >= 1")
        if len(self.seeds) < self.num_runs:
            errs.append(f"need {self.num_runs} seeds, got {len(self.seeds)}")
        return errs


@dataclass
class CurriculumConfig:
    lambda0: float = 0.25
    T: int = 100

    def validate(self) -> list[str]:
        errs = []
        if not 0.0 < self.lambda0 <= 1.0:
            errs.append("lambda0 must be in (0, 1]")
        if self.T < 0:
            errs.append("T must be >= 0")
        return errs


# -- split / predict / metrics -------------------------------------------------

def split(g: SignedGraph, spec: SplitSpec, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random edge partition, stratified by sign. Returns ``(train, test)`` arrays of ``(u, v, sign)``."""
    e = g.edge_array()
    if len(e) < 5:
        raise ValueError(f"need at least 5 edges to split, got {len(e)}")
    rng = np.random.default_rng([seed, 0x5B17])
    test_mask = np.zeros(len(e), dtype=bool)
    groups = [np.flatnonzero(e[:, 2] == s) for s in (1, -1)]
    if any(0 < len(idx) < 2 for idx in groups):
        warnings.warn("too few edges of one sign to stratify; using an unstratified split")
        groups = [np.arange(len(e))]
    for idx in groups:
        if len(idx) == 0:
            continue
        n_test = int(round(len(idx) * (1.0 - spec.train_fraction)))
        n_test = min(max(n_test, 1), len(idx) - 1)
        test_mask[rng.permutation(idx)[:n_test]] = True
    return e[~test_mask], e[test_mask]


def predict_signs(Z: np.ndarray, theta: np.ndarray, test_edges) -> tuple[np.ndarray, np.ndarray]:
    """Positive-class score ``Pr+ / (Pr+ + Pr-)`` and predicted sign (+1/-1) per test edge.

    The no-edge class takes no part in the decision.
    """
    test_edges = np.asarray(test_edges, dtype=np.int64).reshape(-1, 3)
    p = class_probs(Z, theta, test_edges[:, 0], test_edges[:, 1])
    denom = p[:, 0] + p[:, 1]
    score = np.divide(p[:, 0], denom, out=np.full(len(p), 0.5), where=denom > 0)
    labels = np.where(p[:, 0] >= p[:, 1], 1, -1)
    return score, labels


def roc_auc(scores, truth) -> float | None:
    """Mann-Whitney AUC with mid-ranks for ties; ``None`` if one class is absent."""
    scores = np.asarray(scores, dtype=float)
    pos = np.asarray(truth) > 0
    n_pos = int(pos.sum())
    n_neg = len(pos) - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    u_stat = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_stat / (n_pos * n_neg))


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def compute_metrics(scores, labels, truth) -> dict:
    """AUC on ``scores``; F1 binary (positive class), micro and macro on ``labels``."""
    labels = np.asarray(labels)
    truth = np.asarray(truth)
    if len(truth) == 0:
        raise ValueError("empty test set")
    auc = roc_auc(scores, truth)
    if auc is None:
        warnings.warn("only one class in the truth set; AUC undefined")
    per_class = {}
    tp_total = 0
    for c in (1, -1):
        tp = int(np.sum((labels == c) & (truth == c)))
        fp = int(np.sum((labels == c) & (truth != c)))
        fn = int(np.sum((labels != c) & (truth == c)))
        per_class[c] = _f1(tp, fp, fn)
        tp_total += tp
    return {
        "auc": auc,
        "f1_binary": per_class[1],
        "f1_micro": tp_total / len(truth),
        "f1_macro": (per_class[1] + per_class[-1]) / 2.0,
    }


def evaluate_model(model: TrainedModel, test_edges) -> dict:
    scores, labels = predict_signs(model.Z, model.params.theta, test_edges)
    return compute_metrics(scores, labels, np.asarray(test_edges)[:, 2])


def aggregate(runs: list[dict]) -> dict:
    out = {}
    for m in METRICS:
        vals = [r[m] for r in runs if r.get(m) is not None]
        if vals:
            out[m] = {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n": len(vals)}
        else:
            out[m] = {"mean": None, "std": None, "n": 0}
    return out


# -- experiment runners -------------------------------------------------------

def _train_graph(g: SignedGraph, train_edges) -> SignedGraph:
    return SignedGraph.from_edges(
        [tuple(map(int, r)) for r in train_edges], num_nodes=g.num_nodes,
        zero_triangle_degree=g.zero_triangle_degree,
    )


def _pairs(edges) -> set[tuple[int, int]]:
    return {(int(u), int(v)) for u, v, _ in edges}


@dataclass
class ExperimentConfig:
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    augment: AugmentConfig = field(default_factory=AugmentConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)
    split: SplitSpec = field(default_factory=SplitSpec)

    def validate(self) -> list[str]:
        errs = []
        for name in ("encoder", "augment", "curriculum", "split"):
            errs += [f"{name}: {e}" for e in getattr(self, name).validate()]
        return errs

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(
            encoder=EncoderConfig(**d.get("encoder", {})),
            augment=AugmentConfig(**d.get("augment", {})),
            curriculum=CurriculumConfig(**d.get("curriculum", {})),
            split=SplitSpec(**d.get("split", {})),
        )


def run_arms_once(
    g: SignedGraph,
    cfg: ExperimentConfig,
    seed: int,
    arms=ARMS,
) -> dict:
    """One split, every requested arm on it. Returns ``{arm: metrics}`` plus ``_augment`` info.

    The stage-1 encoder used for augmentation is the base-arm model, so
    ``base`` and ``+SA`` share it. Augmentation reads only the training
    graph; test pairs are excluded from the addition universe.
    """
    train, test = split(g, cfg.split, seed)
    gt = _train_graph(g, train)
    enc = _with_seed(cfg.encoder, seed)
    out: dict = {}
    base = fit(gt, enc)
    if "base" in arms:
        out["base"] = evaluate_model(base, test)

    aug_result: AugmentResult | None = None
    if "+SA" in arms or "+SGA" in arms:
        acfg = AugmentConfig(**{**asdict(cfg.augment), "seed": seed})
        aug_result = augment(gt, base.Z, base.params.theta, acfg, exclude=_pairs(test))
        ga = aug_result.graph
        out["_augment"] = {
            "accepted": len(aug_result.accepted),
            "rejected": len(aug_result.rejected),
            "train_edges": int(len(train)),
            "augmented_edges": int(ga.num_edges),
            **aug_result.candidates.stats,
        }
    if "+SA" in arms:
        out["+SA"] = evaluate_model(fit(aug_result.graph, enc), test)
    if "+TP" in arms:
        out["+TP"] = evaluate_model(_curriculum_fit(gt, cfg, enc), test)
    if "+SGA" in arms:
        out["+SGA"] = evaluate_model(_curriculum_fit(aug_result.graph, cfg, enc), test)
    return out


def _with_seed(enc: EncoderConfig, seed: int) -> EncoderConfig:
    return EncoderConfig(**{**asdict(enc), "seed": seed})


def _curriculum_fit(g: SignedGraph, cfg: ExperimentConfig, enc: EncoderConfig) -> TrainedModel:
    edges = g.edge_array()
    table = score_edges(g, edges)
    sched = build_schedule(table, cfg.curriculum.lambda0, cfg.curriculum.T, enc.epochs)
    return train_with_curriculum(g, sched, enc, edges)


def run_ablation(g: SignedGraph, cfg: ExperimentConfig, arms=ARMS) -> dict:
    """Every arm over ``cfg.split.num_runs`` paired seeds.

    Returns per-run records, per-arm aggregates, and paired differences of
    each arm against ``base``.
    """
    errs = cfg.validate()
    if errs:
        raise ValueError("; ".join(errs))
    seeds = cfg.split.seeds[: cfg.split.num_runs]
    runs = []
    for seed in seeds:
        res = run_arms_once(g, cfg, seed, arms)
        runs.append({"seed": seed, **res})
        log.info("seed %d: %s", seed, {a: res[a]["auc"] for a in arms if a in res})
    report = {"runs": runs, "aggregate": {}, "paired_vs_base": {}}
    for arm in arms:
        report["aggregate"][arm] = aggregate([r[arm] for r in runs])
    if "base" in arms:
        for arm in arms:
            if arm == "base":
                continue
            diffs = {}
            for m in METRICS:
                d = [r[arm][m] - r["base"][m] for r in runs if r[arm][m] is not None and r["base"][m] is not None]
                diffs[m] = {"mean": float(np.mean(d)) if d else None, "std": float(np.std(d)) if d else None}
            report["paired_vs_base"][arm] = diffs
    return report


def perturb_edges(
    train_edges,
    num_nodes: int,
    mode: str,
    ratio: float,
    rng: np.random.Generator,
    direction: str = "add",
    exclude=None,
) -> np.ndarray:
    """Randomly perturb training edges.

    ``rand-pos`` / ``rand-neg`` add (``direction='add'``) or remove
    (``'remove'``) ``ratio`` times the number of edges of that sign;
    ``rand-flip`` flips the sign of ``ratio`` of all edges. Added pairs
    avoid ``exclude`` (typically the test pairs).
    """
    if mode not in RANDOM_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if not 0.0 <= ratio <= 0.5:
        raise ValueError(f"ratio {ratio} outside [0, 0.5]")
    e = np.asarray(train_edges, dtype=np.int64).reshape(-1, 3).copy()
    if mode == "rand-flip":
        k = int(round(ratio * len(e)))
        idx = rng.choice(len(e), size=k, replace=False)
        e[idx, 2] *= -1
        return e
    sign = 1 if mode == "rand-pos" else -1
    of_sign = np.flatnonzero(e[:, 2] == sign)
    k = int(round(ratio * len(of_sign)))
    if direction == "remove":
        drop = rng.choice(of_sign, size=k, replace=False)
        return np.delete(e, drop, axis=0)
    if direction != "add":
        raise ValueError(f"unknown direction {direction!r}")
    present = _pairs(e) | set(exclude or ())
    new = []
    while len(new) < k:
        a, b = (int(x) for x in rng.integers(0, num_nodes, size=2))
        if a == b:
            continue
        a, b = min(a, b), max(a, b)
        if (a, b) in present:
            continue
        present.add((a, b))
        new.append((a, b, sign))
    if new:
        e = np.vstack([e, np.array(new, dtype=np.int64)])
    return e[np.lexsort((e[:, 1], e[:, 0]))]


def run_random_baseline(
    g: SignedGraph,
    mode: str,
    ratio: float,
    cfg: ExperimentConfig,
    direction: str = "add",
) -> dict:
    """Train plain SGCN on randomly perturbed training edges; evaluate on the untouched test split."""
    seeds = cfg.split.seeds[: cfg.split.num_runs]
    runs = []
    for seed in seeds:
        train, test = split(g, cfg.split, seed)
        rng = np.random.default_rng([seed, 0xBA5E])
        pert = perturb_edges(train, g.num_nodes, mode, ratio, rng, direction, exclude=_pairs(test))
        gp = _train_graph(g, pert)
        model = fit(gp, _with_seed(cfg.encoder, seed))
        runs.append({"seed": seed, **evaluate_model(model, test)})
    return {
        "mode": mode, "ratio": ratio, "direction": direction,
        "runs": runs, "aggregate": aggregate(runs),
    }
