"""Dataset ingestion, synthetic signed graphs and edge-list persistence.

Formats understood by :func:`ingest_dataset`:

``csv``
    The canonical ``u,v,sign`` edge list (sign 1 or -1). Lines starting
    with ``#`` are comments.
``snap``
    SNAP rating dumps such as ``soc-sign-bitcoinalpha.csv``:
    ``source,target,rating,time``; the sign is the sign of the rating.
``tsv``
    SNAP whitespace-separated ``FromNodeId ToNodeId Sign`` files
    (Epinions, Slashdot), ``#`` comments allowed.

Records are directed in the raw files. They are symmetrised: every
unordered pair gets the majority sign of its records; pairs with a tied
vote are dropped and logged. Raw ids are remapped to dense 0-based ids.
"""

from __future__ import annotations

import gzip
import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import GraphError, SignedGraph, load_graph

log = logging.getLogger(__name__)

FORMATS = ("csv", "snap", "tsv")


class DatasetError(ValueError):
    pass


@dataclass
class DatasetSummary:
    path: str
    format: str
    records: int
    positive_records: int
    negative_records: int
    num_nodes: int
    positive_edges: int
    negative_edges: int
    tied_pairs_dropped: int
    self_loops_dropped: int

    @property
    def edges(self) -> int:
        return self.positive_edges + self.negative_edges

    def lines(self) -> list[str]:
        return [
            f"dataset: {self.path} ({self.format})",
            f"links: {self.records}",
            f"positive links: {self.positive_records}",
            f"negative links: {self.negative_records}",
            f"nodes: {self.num_nodes}",
            f"undirected edges: {self.edges} ({self.positive_edges} positive, {self.negative_edges} negative)",
            f"tied pairs dropped: {self.tied_pairs_dropped}",
            f"self-loops dropped: {self.self_loops_dropped}",
        ]


@dataclass
class Dataset:
    graph: SignedGraph
    summary: DatasetSummary
    id_map: dict[str, int] = field(repr=False)


def _open(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def guess_format(path: str | Path) -> str:
    name = Path(path).name.lower().removesuffix(".gz")
    if name.startswith("soc-sign-bitcoin"):
        return "snap"
    if name.endswith(".txt") or name.endswith(".tsv"):
        return "tsv"
    return "csv"


def read_records(path: str | Path, fmt: str) -> list[tuple[str, str, int]]:
    """Parse raw ``(src, dst, sign)`` records; errors carry the line number."""
    if fmt not in FORMATS:
        raise DatasetError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    path = Path(path)
    out = []
    with _open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",") if fmt in ("csv", "snap") else line.split()
            try:
                if fmt == "snap":
                    src, dst, rating = parts[0], parts[1], float(parts[2])
                    if rating == 0:
                        raise ValueError("zero rating")
                    sign = 1 if rating > 0 else -1
                else:
                    if len(parts) != 3:
                        raise ValueError(f"expected 3 fields, got {len(parts)}")
                    src, dst, sign = parts[0].strip(), parts[1].strip(), int(parts[2])
                    if sign not in (1, -1):
                        raise ValueError(f"sign must be 1 or -1, got {sign}")
                int(src), int(dst)
            except (ValueError, IndexError) as exc:
                raise DatasetError(f"{path}:{lineno}: malformed line {line!r} ({exc})") from None
            out.append((src.strip(), dst.strip(), sign))
    return out


def symmetrize(records) -> tuple[list[tuple[int, int, int]], dict[str, int], int, int]:
    """Majority-sign undirected edges over dense ids.

    Returns ``(edges, id_map, tied_pairs, self_loops)``. Ids are assigned
    in ascending numeric order of the raw ids.
    """
    raw_ids = sorted({r[0] for r in records} | {r[1] for r in records}, key=int)
    id_map = {rid: i for i, rid in enumerate(raw_ids)}
    votes: dict[tuple[int, int], int] = defaultdict(int)
    loops = 0
    for src, dst, s in records:
        a, b = id_map[src], id_map[dst]
        if a == b:
            loops += 1
            continue
        votes[(a, b) if a < b else (b, a)] += s
    edges = []
    ties = 0
    for (a, b), tally in sorted(votes.items()):
        if tally == 0:
            ties += 1
            continue
        edges.append((a, b, 1 if tally > 0 else -1))
    if ties:
        log.info("dropped %d pairs with tied sign votes", ties)
    if loops:
        log.info("dropped %d self-loop records", loops)
    return edges, id_map, ties, loops


def ingest_dataset(path: str | Path, fmt: str | None = None, zero_triangle_degree: float = 1.0) -> Dataset:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    fmt = fmt or guess_format(path)
    records = read_records(path, fmt)
    edges, id_map, ties, loops = symmetrize(records)
    g = load_graph(edges, num_nodes=len(id_map), zero_triangle_degree=zero_triangle_degree)
    pos = sum(1 for r in records if r[2] > 0)
    summary = DatasetSummary(
        path=str(path), format=fmt, records=len(records),
        positive_records=pos, negative_records=len(records) - pos,
        num_nodes=g.num_nodes, positive_edges=g.num_positive, negative_edges=g.num_negative,
        tied_pairs_dropped=ties, self_loops_dropped=loops,
    )
    return Dataset(g, summary, id_map)


def read_edge_list(path: str | Path, num_nodes: int | None = None) -> SignedGraph:
    """Load a canonical CSV without id remapping."""
    recs = read_records(path, "csv")
    try:
        return load_graph(((int(u), int(v), s) for u, v, s in recs), num_nodes=num_nodes)
    except GraphError as exc:
        raise DatasetError(f"{path}: {exc}") from None


def write_edge_list(path: str | Path, edges, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, v, s in edges:
            fh.write(f"{int(u)},{int(v)},{int(s)}\n")


def write_id_map(path: str | Path, id_map: dict[str, int]) -> None:
    Path(path).write_text(json.dumps(id_map))


# -- synthetic ------------------------------------------------------------

@dataclass
class SyntheticSpec:
    """Two-faction signed graph.

    Each sampled edge falls inside a faction with probability
    ``positive_ratio``. The minority faction holds ``minority_fraction`` of
    the nodes; by default it is sized so that uniformly random pairs would
    land inside a faction with that same probability, which concentrates
    negative edges on the minority, as in trust networks.

    With probability ``planted_balance`` an edge's sign follows the
    factions (+ inside, - across, a structurally balanced skeleton);
    otherwise it is drawn at random with ``P(+) = positive_ratio``. The expected positive fraction is therefore
    ``positive_ratio`` whatever the balance level.

    ``degree_exponent > 0`` draws node activity weights from a Pareto-like
    law so degrees are heavy-tailed, as in trust networks.
    """

    num_nodes: int = 500
    edge_density: float = 0.02
    positive_ratio: float = 0.8
    planted_balance: float = 0.9
    degree_exponent: float = 0.0
    minority_fraction: float | None = None
    seed: int = 0

    def minority(self) -> float:
        if self.minority_fraction is not None:
            return self.minority_fraction
        r = max(self.positive_ratio, 0.5)
        return (1.0 - np.sqrt(2.0 * r - 1.0)) / 2.0

    def validate(self) -> list[str]:
        errs = []
        if self.num_nodes < 4:
            errs.append("num_nodes must be >= 4")
        for name in ("edge_density", "positive_ratio", "planted_balance"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                errs.append(f"{name}={val} outside [0, 1]")
        if self.minority_fraction is not None and not 0.0 < self.minority_fraction <= 0.5:
            errs.append("minority_fraction must be in (0, 0.5]")
        if self.degree_exponent < 0:
            errs.append("degree_exponent must be >= 0")
        return errs


def generate_synthetic(spec: SyntheticSpec) -> SignedGraph:
    errs = spec.validate()
    if errs:
        raise ValueError("; ".join(errs))
    rng = np.random.default_rng([spec.seed, 0x5F17])
    n = spec.num_nodes
    k = min(max(2, int(round(spec.minority() * n))), n // 2)
    faction = rng.permutation(n) < k
    if spec.degree_exponent > 0:
        w = (1.0 - rng.random(n)) ** (-1.0 / spec.degree_exponent)
    else:
        w = np.ones(n)
    w = w / w.sum()

    total_pairs = n * (n - 1) // 2
    target = int(round(spec.edge_density * total_pairs))
    within_pairs = k * (k - 1) // 2 + (n - k) * (n - k - 1) // 2
    across_pairs = k * (n - k)
    quota = {True: min(int(rng.binomial(target, spec.positive_ratio)), within_pairs)}
    quota[False] = min(target - quota[True], across_pairs)

    # Weighted pairs over all nodes, kept while their category has room.
    chosen: dict[tuple[int, int], bool] = {}
    got = {True: 0, False: 0}
    stall = 0
    while (got[True] < quota[True] or got[False] < quota[False]) and stall < 200:
        batch = max(256, 4 * (quota[True] + quota[False] - got[True] - got[False]))
        a = rng.choice(n, batch, p=w)
        b = rng.choice(n, batch, p=w)
        before = got[True] + got[False]
        for x, y in zip(a.tolist(), b.tolist()):
            if x == y:
                continue
            within = bool(faction[x] == faction[y])
            if got[within] >= quota[within]:
                continue
            key = (x, y) if x < y else (y, x)
            if key in chosen:
                continue
            chosen[key] = within
            got[within] += 1
        stall = stall + 1 if got[True] + got[False] == before else 0

    edges = []
    for (x, y), within in sorted(chosen.items()):
        if rng.random() < spec.planted_balance:
            s = 1 if within else -1
        else:
            s = 1 if rng.random() < spec.positive_ratio else -1
        edges.append((x, y, s))
    return load_graph(edges, num_nodes=n)


def save_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, default=_json_default))


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "__dataclass_fields__"):
        return asdict(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
