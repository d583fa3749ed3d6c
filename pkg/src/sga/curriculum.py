"""Edge difficulty from local balance and an easy-to-hard training schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderConfig, TrainedModel, fit
from .graph import GraphError, SignedGraph


@dataclass
class DifficultyTable:
    edges: np.ndarray  # (m, 3) rows u, v, sign
    scores: np.ndarray  # (m,) in [0, 2]

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(int(u), int(v)): float(s) for (u, v, _), s in zip(self.edges, self.scores)}


def score_edges(g: SignedGraph, edges=None) -> DifficultyTable:
    """Difficulty ``1 - (D3(u) + D3(v)) / 2`` for each edge, in [0, 2]."""
    edges = g.edge_array() if edges is None else np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    for u, v, _ in edges:
        if not g.has_edge(int(u), int(v)):
            raise GraphError(f"edge ({u}, {v}) not in graph")
    d3 = g.balance_degrees()
    scores = 1.0 - (d3[edges[:, 0]] + d3[edges[:, 1]]) / 2.0 if len(edges) else np.zeros(0)
    return DifficultyTable(edges, scores)


@dataclass
class CurriculumSchedule:
    """Edges sorted easiest first plus the linear pacing parameters.

    ``order`` indexes into the training edge array; ``sorted_edges`` is that
    array permuted accordingly.
    """

    order: np.ndarray
    sorted_edges: np.ndarray
    lambda0: float
    T: int
    total_epochs: int

    @property
    def num_edges(self) -> int:
        return len(self.order)

    def __call__(self, t: int) -> int:
        return pacing(t, self)


def build_schedule(table: DifficultyTable, lambda0: float, T: int, total_epochs: int) -> CurriculumSchedule:
    if not 0.0 < lambda0 <= 1.0:
        raise ValueError(f"lambda0={lambda0} outside (0, 1]")
    if T < 0:
        raise ValueError("T must be >= 0")
    e = table.edges
    # stable: ties keep (u, v) order
    order = np.lexsort((e[:, 1], e[:, 0], table.scores)) if len(e) else np.zeros(0, dtype=np.int64)
    return CurriculumSchedule(order, e[order], float(lambda0), int(T), int(total_epochs))


def pacing(t: int, schedule: CurriculumSchedule) -> int:
    """Number of easiest edges exposed at epoch ``t``: floor(min(1, l0 + (1 - l0) t / T) |E|), at least 1."""
    m = schedule.num_edges
    if t < 0:
        raise ValueError("epoch index must be >= 0")
    if schedule.T == 0:
        frac = 1.0
    else:
        frac = min(1.0, schedule.lambda0 + (1.0 - schedule.lambda0) * t / schedule.T)
    return max(1, min(m, math.floor(frac * m)))


def train_with_curriculum(
    g: SignedGraph,
    schedule: CurriculumSchedule,
    config: EncoderConfig,
    edges: np.ndarray | None = None,
) -> TrainedModel:
    """Train on ``g`` exposing only the first ``pacing(t)`` scheduled edges at epoch ``t``.

    ``edges`` must be the array the schedule was built from (defaults to
    ``g.edge_array()``).
    """
    edges = g.edge_array() if edges is None else edges
    if len(edges) != schedule.num_edges:
        raise ValueError("schedule was built for a different edge set")
    return fit(g, config, edges=edges, order=schedule.order, pacing=schedule)
