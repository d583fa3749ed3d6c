"""Command-line entry point: ``sga {stats,augment,train,evaluate,ablate,baseline-random}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .augment import augment, augmentation_report
from .curriculum import build_schedule, score_edges, train_with_curriculum
from .encoder import fit, save_checkpoint
from .evaluation import (
    RANDOM_MODES,
    ExperimentConfig,
    _train_graph,
    evaluate_model,
    run_ablation,
    run_random_baseline,
    split,
)
from .io import (
    DatasetError,
    SyntheticSpec,
    generate_synthetic,
    ingest_dataset,
    save_json,
    write_edge_list,
    write_id_map,
)

log = logging.getLogger("sga")


@dataclass
class RunConfig:
    """Everything needed to reproduce a run."""

    dataset: str | None = None
    format: str | None = None
    synthetic: SyntheticSpec | None = None
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    curriculum_training: bool = False
    output_dir: str = "runs/out"

    def validate(self) -> list[str]:
        errs = []
        if (self.dataset is None) == (self.synthetic is None):
            errs.append("exactly one of dataset or synthetic must be set")
        if self.dataset is not None and not Path(self.dataset).is_file():
            errs.append(f"dataset file not found: {self.dataset}")
        if self.synthetic is not None:
            errs += [f"synthetic: {e}" for e in self.synthetic.validate()]
        errs += self.experiment.validate()
        return errs

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "format": self.format,
            "synthetic": asdict(self.synthetic) if self.synthetic else None,
            "experiment": self.experiment.to_dict(),
            "curriculum_training": self.curriculum_training,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        syn = d.get("synthetic")
        return cls(
            dataset=d.get("dataset"),
            format=d.get("format"),
            synthetic=SyntheticSpec(**syn) if syn else None,
            experiment=ExperimentConfig.from_dict(d.get("experiment", {})),
            curriculum_training=bool(d.get("curriculum_training", False)),
            output_dir=d.get("output_dir", "runs/out"),
        )


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="RunConfig JSON file; flags override its values")
    common.add_argument("--dataset", help="edge-list file (csv, snap or tsv)")
    common.add_argument("--format", choices=["csv", "snap", "tsv"], help="dataset format (default: guessed)")
    common.add_argument("--synthetic", action="store_true", help="use the synthetic generator instead of a file")
    common.add_argument("--nodes", type=int, help="synthetic: number of nodes")
    common.add_argument("--density", type=float, help="synthetic: edge density")
    common.add_argument("--positive-ratio", type=float, help="synthetic: fraction of positive edges")
    common.add_argument("--balance", type=float, help="synthetic: planted balance level")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for single-run commands")
    common.add_argument("--seeds", type=int, nargs="+", help="seeds for multi-run commands")
    common.add_argument("--runs", type=int, help="number of runs")
    common.add_argument("--dim", type=int, help="embedding dimension per sign part")
    common.add_argument("--layers", type=int, help="number of SGCN layers")
    common.add_argument("--lr", type=float, help="learning rate")
    common.add_argument("--epochs", type=int, help="training epochs")
    common.add_argument("--eps-add-pos", type=float)
    common.add_argument("--eps-add-neg", type=float)
    common.add_argument("--eps-del-pos", type=float)
    common.add_argument("--eps-del-neg", type=float)
    common.add_argument("--no-screen-deletions", action="store_true", help="apply deletions without the balance check")
    common.add_argument("--lambda0", type=float, help="curriculum: initial fraction of easiest edges")
    common.add_argument("--T", type=int, dest="T", help="curriculum: epochs until all edges are used")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sga", description="Signed graph augmentation pipeline.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("stats", parents=[common], help="print dataset statistics")
    sub.add_parser("augment", parents=[common], help="train the stage-1 encoder and write the augmented edge list")
    t = sub.add_parser("train", parents=[common], help="train on the training split and write a checkpoint")
    t.add_argument("--curriculum", action="store_true", help="use the difficulty curriculum")
    sub.add_parser("evaluate", parents=[common], help="plain SGCN over all seeds; metrics JSON")
    a = sub.add_parser("ablate", parents=[common], help="base / +SA / +TP / +SGA arms")
    a.add_argument("--arms", nargs="+", default=["base", "+SA", "+TP", "+SGA"],
                   choices=["base", "+SA", "+TP", "+SGA"])
    b = sub.add_parser("baseline-random", parents=[common], help="random perturbation baselines")
    b.add_argument("--modes", nargs="+", default=list(RANDOM_MODES), choices=list(RANDOM_MODES))
    b.add_argument("--ratios", type=float, nargs="+", default=[0.05, 0.10, 0.15, 0.20])
    b.add_argument("--directions", nargs="+", default=["add", "remove"], choices=["add", "remove"])
    return p


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = RunConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.dataset:
        cfg.dataset, cfg.synthetic = args.dataset, None
    if args.format:
        cfg.format = args.format
    if args.synthetic or any(x is not None for x in (args.nodes, args.density, args.positive_ratio, args.balance)):
        cfg.dataset = None
        syn = cfg.synthetic or SyntheticSpec()
        for flag, name in (("nodes", "num_nodes"), ("density", "edge_density"),
                           ("positive_ratio", "positive_ratio"), ("balance", "planted_balance")):
            val = getattr(args, flag)
            if val is not None:
                setattr(syn, name, val)
        if args.seed is not None:
            syn.seed = args.seed
        cfg.synthetic = syn
    if args.out:
        cfg.output_dir = args.out
    ex = cfg.experiment
    for flag, target, name in (
        ("dim", ex.encoder, "d"), ("layers", ex.encoder, "num_layers"), ("lr", ex.encoder, "lr"),
        ("epochs", ex.encoder, "epochs"), ("eps_add_pos", ex.augment, "eps_add_pos"),
        ("eps_add_neg", ex.augment, "eps_add_neg"), ("eps_del_pos", ex.augment, "eps_del_pos"),
        ("eps_del_neg", ex.augment, "eps_del_neg"), ("lambda0", ex.curriculum, "lambda0"),
        ("T", ex.curriculum, "T"), ("runs", ex.split, "num_runs"),
    ):
        val = getattr(args, flag)
        if val is not None:
            setattr(target, name, val)
    if args.no_screen_deletions:
        ex.augment.screen_deletions = False
    if args.seeds:
        ex.split.seeds = list(args.seeds)
        if args.runs is None:
            ex.split.num_runs = len(args.seeds)
    if args.seed is not None:
        ex.encoder.seed = args.seed
        ex.augment.seed = args.seed
    if getattr(args, "curriculum", False):
        cfg.curriculum_training = True
    return cfg


def _load(cfg: RunConfig, out: Path):
    if cfg.dataset:
        ds = ingest_dataset(cfg.dataset, cfg.format)
        write_id_map(out / "id_map.json", ds.id_map)
        return ds.graph, ds.summary
    return generate_synthetic(cfg.synthetic), None


def _stamp(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "version": __version__, "config": cfg.to_dict()}


def cmd_stats(cfg: RunConfig, out: Path, args) -> int:
    g, summary = _load(cfg, out)
    if summary is not None:
        lines = summary.lines()
        doc = asdict(summary)
    else:
        lines = [f"synthetic: {cfg.synthetic}", f"nodes: {g.num_nodes}",
                 f"undirected edges: {g.num_edges} ({g.num_positive} positive, {g.num_negative} negative)"]
        doc = {"num_nodes": g.num_nodes, "positive_edges": g.num_positive, "negative_edges": g.num_negative}
    bal = int(g.stats.balanced.sum() // 3)
    unb = int(g.stats.unbalanced.sum() // 3)
    lines.append(f"triangles: {bal + unb} ({bal} balanced, {unb} unbalanced)")
    doc.update(balanced_triangles=bal, unbalanced_triangles=unb)
    print("\n".join(lines))
    save_json(out / "stats.json", {**_stamp(cfg, "stats"), "stats": doc})
    return 0


def cmd_augment(cfg: RunConfig, out: Path, args) -> int:
    g, _ = _load(cfg, out)
    ex = cfg.experiment
    seed = ex.encoder.seed
    train, test = split(g, ex.split, seed)
    gt = _train_graph(g, train)
    model = fit(gt, ex.encoder)
    result = augment(gt, model.Z, model.params.theta, ex.augment,
                     exclude={(int(u), int(v)) for u, v, _ in test})
    write_edge_list(out / "train.csv", train, header="training split")
    write_edge_list(out / "test.csv", test, header="test split")
    write_edge_list(out / "augmented.csv", result.graph.edges(), header="augmented training edges")
    save_json(out / "augmentation.json", {**_stamp(cfg, "augment"), **augmentation_report(result, ex.augment)})
    print(f"accepted {len(result.accepted)} of {len(result.accepted) + len(result.rejected)} candidates; "
          f"{gt.num_edges} -> {result.graph.num_edges} training edges")
    return 0


def cmd_train(cfg: RunConfig, out: Path, args) -> int:
    g, _ = _load(cfg, out)
    ex = cfg.experiment
    train, test = split(g, ex.split, ex.encoder.seed)
    gt = _train_graph(g, train)
    if cfg.curriculum_training:
        edges = gt.edge_array()
        table = score_edges(gt, edges)
        write_edge_list_scores(out / "difficulty.csv", table)
        sched = build_schedule(table, ex.curriculum.lambda0, ex.curriculum.T, ex.encoder.epochs)
        model = train_with_curriculum(gt, sched, ex.encoder, edges)
    else:
        model = fit(gt, ex.encoder)
    save_checkpoint(out / "checkpoint.json", model)
    metrics = evaluate_model(model, test)
    save_json(out / "metrics.json", {
        **_stamp(cfg, "train"), "runs": [{"seed": ex.encoder.seed, **metrics}],
        "losses": model.losses, "subset_sizes": model.subset_sizes,
    })
    print(json.dumps(metrics))
    return 0


def write_edge_list_scores(path: Path, table) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("u,v,sign,score\n")
        for (u, v, s), sc in zip(table.edges, table.scores):
            fh.write(f"{u},{v},{s},{sc!r}\n")


def cmd_evaluate(cfg: RunConfig, out: Path, args) -> int:
    g, _ = _load(cfg, out)
    report = run_ablation(g, cfg.experiment, arms=("base",))
    save_json(out / "metrics.json", {**_stamp(cfg, "evaluate"), **report})
    _write_csv(out / "metrics.csv", report["runs"], ["base"])
    print(json.dumps(report["aggregate"], indent=2))
    return 0


def cmd_ablate(cfg: RunConfig, out: Path, args) -> int:
    g, _ = _load(cfg, out)
    arms = tuple(args.arms)
    report = run_ablation(g, cfg.experiment, arms=arms)
    save_json(out / "metrics.json", {**_stamp(cfg, "ablate"), **report})
    _write_csv(out / "metrics.csv", report["runs"], arms)
    for arm in arms:
        agg = report["aggregate"][arm]
        print(arm, " ".join(f"{m}={agg[m]['mean']:.4f}±{agg[m]['std']:.4f}"
                            for m in agg if agg[m]["mean"] is not None))
    return 0


def cmd_baseline(cfg: RunConfig, out: Path, args) -> int:
    g, _ = _load(cfg, out)
    base = run_ablation(g, cfg.experiment, arms=("base",))
    results = [{"mode": "none", "ratio": 0.0, "direction": None, "aggregate": base["aggregate"]["base"],
                "runs": [{"seed": r["seed"], **r["base"]} for r in base["runs"]]}]
    for mode in args.modes:
        directions = [None] if mode == "rand-flip" else args.directions
        for direction in directions:
            for ratio in args.ratios:
                res = run_random_baseline(g, mode, ratio, cfg.experiment, direction or "add")
                res["direction"] = direction
                results.append(res)
                print(mode, direction or "", ratio, f"auc={res['aggregate']['auc']['mean']:.4f}")
    save_json(out / "baselines.json", {**_stamp(cfg, "baseline-random"), "results": results})
    return 0


def _write_csv(path: Path, runs, arms) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("seed,arm,auc,f1_binary,f1_micro,f1_macro\n")
        for r in runs:
            for arm in arms:
                m = r[arm]
                fh.write(f"{r['seed']},{arm},{m['auc']},{m['f1_binary']},{m['f1_micro']},{m['f1_macro']}\n")


COMMANDS = {
    "stats": cmd_stats,
    "augment": cmd_augment,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "baseline-random": cmd_baseline,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _resolve_config(args)
    errs = cfg.validate()
    if errs:
        for e in errs:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_json(out / "run_config.json", _stamp(cfg, args.command))
    try:
        return COMMANDS[args.command](cfg, out, args)
    except (DatasetError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
