"""SGCN encoder with a three-class edge classifier, trained by hand-derived backprop.

Layer 1 aggregates initial features through the positive and negative
row-normalised adjacencies separately. Deeper layers mix the two paths
following balance theory (a friend's enemy is an enemy, an enemy's enemy a
friend). The classifier scores a node pair from the concatenation of the two
node embeddings into {positive, negative, no edge}.

Row-vector convention throughout: ``H_next = act(X @ W)`` where ``X`` is the
column-wise concatenation of the aggregated inputs.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .graph import SignedGraph

log = logging.getLogger(__name__)

CLASS_POS, CLASS_NEG, CLASS_NONE = 0, 1, 2
CHECKPOINT_FORMAT = "sga-checkpoint"
CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int, value: float):
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}")
        self.epoch = epoch


# -- activations ---------------------------------------------------------

def _tanh(x):
    return np.tanh(x)


def _tanh_grad(y):
    return 1.0 - y * y


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(y):
    return (y > 0).astype(y.dtype)


def _identity(x):
    return x


def _identity_grad(y):
    return np.ones_like(y)


ACTIVATIONS = {
    "tanh": (_tanh, _tanh_grad),
    "relu": (_relu, _relu_grad),
    "identity": (_identity, _identity_grad),
}


# -- data types ----------------------------------------------------------

@dataclass
class NormalizedAdjacency:
    """Row-normalised positive and negative adjacency (CSR)."""

    pos: sp.csr_matrix
    neg: sp.csr_matrix

    @classmethod
    def from_graph(cls, g: SignedGraph) -> "NormalizedAdjacency":
        n = g.num_nodes
        e = g.edge_array()
        mats = []
        for s in (1, -1):
            sel = e[e[:, 2] == s] if len(e) else e
            rows = np.concatenate([sel[:, 0], sel[:, 1]])
            cols = np.concatenate([sel[:, 1], sel[:, 0]])
            a = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
            deg = np.asarray(a.sum(axis=1)).ravel()
            inv = np.zeros(n)
            inv[deg > 0] = 1.0 / deg[deg > 0]
            mats.append(sp.csr_matrix(sp.diags(inv) @ a))
        return cls(mats[0], mats[1])


@dataclass
class ModelParams:
    """Encoder weights per layer plus the classifier matrix.

    ``W_pos[0]`` / ``W_neg[0]`` have shape ``(2 * d_in, d)``; deeper layers
    ``(3 * d, d)``. ``theta`` has shape ``(4 * d, 3)``: it maps the pair
    embedding ``[Z_i, Z_j]`` (each ``Z`` row has width ``2 * d``) to the
    logits of {+, -, ?}.
    """

    W_pos: list[np.ndarray]
    W_neg: list[np.ndarray]
    theta: np.ndarray

    @property
    def d(self) -> int:
        return self.W_pos[0].shape[1]

    @property
    def num_layers(self) -> int:
        return len(self.W_pos)

    @property
    def d_in(self) -> int:
        return self.W_pos[0].shape[0] // 2

    @classmethod
    def init(cls, d_in: int, d: int, num_layers: int, rng: np.random.Generator) -> "ModelParams":
        def glorot(fan_in, fan_out):
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-lim, lim, size=(fan_in, fan_out))

        W_pos, W_neg = [], []
        for layer in range(num_layers):
            fan_in = 2 * d_in if layer == 0 else 3 * d
            W_pos.append(glorot(fan_in, d))
            W_neg.append(glorot(fan_in, d))
        theta = glorot(4 * d, 3)
        return cls(W_pos, W_neg, theta)

    def blocks(self) -> list[np.ndarray]:
        """All parameter arrays in a fixed order (shared with gradients)."""
        return [*self.W_pos, *self.W_neg, self.theta]

    @classmethod
    def from_blocks(cls, blocks: list[np.ndarray]) -> "ModelParams":
        n = (len(blocks) - 1) // 2
        return cls(list(blocks[:n]), list(blocks[n : 2 * n]), blocks[-1])

    def copy(self) -> "ModelParams":
        return ModelParams.from_blocks([b.copy() for b in self.blocks()])

    def validate(self) -> None:
        d = self.d
        if len(self.W_pos) != len(self.W_neg) or not self.W_pos:
            raise ValueError("W_pos and W_neg must be non-empty and of equal length")
        for layer, (wp, wn) in enumerate(zip(self.W_pos, self.W_neg), start=1):
            want_rows = 2 * self.d_in if layer == 1 else 3 * d
            for name, w in (("W_pos", wp), ("W_neg", wn)):
                if w.shape != (want_rows, d):
                    raise ValueError(
                        f"layer {layer}: {name} has shape {w.shape}, expected {(want_rows, d)}"
                    )
        if self.theta.shape != (4 * d, 3):
            raise ValueError(f"theta has shape {self.theta.shape}, expected {(4 * d, 3)}")
        if not all(np.all(np.isfinite(b)) for b in self.blocks()):
            raise ValueError("non-finite parameter entries")


@dataclass
class EmbeddingState:
    """Layer outputs of one forward pass.

    ``inputs_pos[l]`` / ``inputs_neg[l]`` keep the concatenated layer inputs
    so the backward pass does not have to recompute them.
    """

    H_pos: list[np.ndarray]
    H_neg: list[np.ndarray]
    inputs_pos: list[np.ndarray] = field(repr=False, default_factory=list)
    inputs_neg: list[np.ndarray] = field(repr=False, default_factory=list)

    @property
    def Z(self) -> np.ndarray:
        return np.hstack([self.H_pos[-1], self.H_neg[-1]])


# -- forward / backward ----------------------------------------------------

def forward(
    adj: NormalizedAdjacency,
    params: ModelParams,
    H0: np.ndarray,
    activation: str = "tanh",
) -> EmbeddingState:
    act, _ = ACTIVATIONS[activation]
    n = adj.pos.shape[0]
    if H0.shape[0] != n:
        raise ValueError(f"H0 has {H0.shape[0]} rows, graph has {n} nodes")
    Ap, An = adj.pos, adj.neg
    state = EmbeddingState([], [])
    for layer, (wp, wn) in enumerate(zip(params.W_pos, params.W_neg), start=1):
        if layer == 1:
            xp = np.hstack([Ap @ H0, H0])
            xn = np.hstack([An @ H0, H0])
        else:
            hp, hn = state.H_pos[-1], state.H_neg[-1]
            xp = np.hstack([Ap @ hp, An @ hn, hp])
            xn = np.hstack([Ap @ hn, An @ hp, hn])
        for name, x, w in (("W_pos", xp, wp), ("W_neg", xn, wn)):
            if x.shape[1] != w.shape[0]:
                raise ValueError(
                    f"layer {layer}: input width {x.shape[1]} does not match {name} rows {w.shape[0]}"
                )
        state.inputs_pos.append(xp)
        state.inputs_neg.append(xn)
        state.H_pos.append(act(xp @ wp))
        state.H_neg.append(act(xn @ wn))
    return state


def backward(
    adj: NormalizedAdjacency,
    params: ModelParams,
    state: EmbeddingState,
    dZ: np.ndarray,
    activation: str = "tanh",
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Gradients of the encoder weights given the upstream gradient ``dZ``."""
    _, act_grad = ACTIVATIONS[activation]
    d = params.d
    ApT, AnT = adj.pos.T.tocsr(), adj.neg.T.tocsr()
    dHp, dHn = dZ[:, :d], dZ[:, d:]
    L = params.num_layers
    gW_pos = [None] * L
    gW_neg = [None] * L
    for idx in range(L - 1, -1, -1):
        sp_ = dHp * act_grad(state.H_pos[idx])
        sn_ = dHn * act_grad(state.H_neg[idx])
        gW_pos[idx] = state.inputs_pos[idx].T @ sp_
        gW_neg[idx] = state.inputs_neg[idx].T @ sn_
        if idx == 0:
            break
        dxp = sp_ @ params.W_pos[idx].T
        dxn = sn_ @ params.W_neg[idx].T
        # xp = [Ap hp, An hn, hp], xn = [Ap hn, An hp, hn]
        dHp = ApT @ dxp[:, :d] + dxp[:, 2 * d :] + AnT @ dxn[:, d : 2 * d]
        dHn = AnT @ dxp[:, d : 2 * d] + ApT @ dxn[:, :d] + dxn[:, 2 * d :]
    return gW_pos, gW_neg


# -- classifier ------------------------------------------------------------

def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def pair_features(Z: np.ndarray, u, v) -> np.ndarray:
    return np.hstack([Z[u], Z[v]])


def class_probs(Z: np.ndarray, theta: np.ndarray, u, v) -> np.ndarray:
    """Vectorised (Pr+, Pr-, Pr?) for arrays of node pairs; shape ``(k, 3)``."""
    u = np.atleast_1d(np.asarray(u))
    v = np.atleast_1d(np.asarray(v))
    return _softmax(pair_features(Z, u, v) @ theta)


def edge_class_probs(Z: np.ndarray, theta: np.ndarray, u: int, v: int) -> tuple[float, float, float]:
    n = Z.shape[0]
    for x in (u, v):
        if not 0 <= x < n:
            raise IndexError(f"node {x} out of range for {n} nodes")
    p = class_probs(Z, theta, u, v)[0]
    return float(p[0]), float(p[1]), float(p[2])


def loss(samples: np.ndarray, Z: np.ndarray, theta: np.ndarray) -> float:
    """Mean cross-entropy of ``samples`` (rows ``u, v, class``)."""
    return loss_and_grad(samples, Z, theta)[0]


def loss_and_grad(
    samples: np.ndarray, Z: np.ndarray, theta: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus gradients w.r.t. ``Z`` and ``theta``."""
    samples = np.asarray(samples)
    k = len(samples)
    if k == 0:
        raise ValueError("empty training set")
    u, v, y = samples[:, 0], samples[:, 1], samples[:, 2]
    n, w = Z.shape
    # logits are additive over the two endpoints, so work per node
    left, right = Z @ theta[:w], Z @ theta[w:]
    logits = left[u] + right[v]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=1))
    logp = shifted[np.arange(k), y] - logsum
    value = float(-logp.mean())

    g = np.exp(shifted - logsum[:, None])
    g[np.arange(k), y] -= 1.0
    g /= k
    # per-node sums of g over the samples a node starts / ends
    ones = np.ones(k)
    cols = np.arange(k)
    g_left = sp.csr_matrix((ones, (u, cols)), shape=(n, k)) @ g
    g_right = sp.csr_matrix((ones, (v, cols)), shape=(n, k)) @ g
    g_theta = np.vstack([Z.T @ g_left, Z.T @ g_right])
    dZ = g_left @ theta[:w].T + g_right @ theta[w:].T
    return value, dZ, g_theta


def labeled_samples(edges: np.ndarray) -> np.ndarray:
    """Map ``(u, v, sign)`` rows to ``(u, v, class)`` rows."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    out = edges.copy()
    out[:, 2] = np.where(edges[:, 2] > 0, CLASS_POS, CLASS_NEG)
    return out


def sample_non_edges(g: SignedGraph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly sample ``count`` distinct absent pairs as ``(u, v, CLASS_NONE)``."""
    n = g.num_nodes
    max_pairs = n * (n - 1) // 2 - g.num_edges
    count = min(count, max_pairs)
    seen: set[tuple[int, int]] = set()
    out = []
    while len(out) < count:
        batch = rng.integers(0, n, size=(max(2 * (count - len(out)), 16), 2))
        for a, b in batch:
            a, b = int(a), int(b)
            if a == b:
                continue
            if a > b:
                a, b = b, a
            if (a, b) in seen or g.has_edge(a, b):
                continue
            seen.add((a, b))
            out.append((a, b, CLASS_NONE))
            if len(out) == count:
                break
    return np.array(out, dtype=np.int64).reshape(-1, 3)


# -- model wrapper / training -----------------------------------------------

def full_loss_and_grads(
    adj: NormalizedAdjacency,
    params: ModelParams,
    H0: np.ndarray,
    samples: np.ndarray,
    activation: str = "tanh",
) -> tuple[float, list[np.ndarray], EmbeddingState]:
    """Loss of ``samples`` and the gradient of every block in ``params.blocks()`` order."""
    state = forward(adj, params, H0, activation)
    value, dZ, g_theta = loss_and_grad(samples, state.Z, params.theta)
    g_pos, g_neg = backward(adj, params, state, dZ, activation)
    return value, [*g_pos, *g_neg, g_theta], state


class Adam:
    def __init__(self, shapes, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, blocks, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(blocks, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class SGD:
    def __init__(self, shapes, lr=0.01):
        self.lr = lr

    def step(self, blocks, grads):
        for p, g in zip(blocks, grads):
            p -= self.lr * g


@dataclass
class EncoderConfig:
    d: int = 64
    num_layers: int = 2
    lr: float = 0.01
    epochs: int = 300
    d_in: int = 64
    activation: str = "tanh"
    optimizer: str = "adam"
    weight_decay: float = 0.0
    none_ratio: float = 1.0
    seed: int = 0

    def validate(self) -> list[str]:
        errs = []
        if self.d < 1 or self.d_in < 1:
            errs.append("d and d_in must be positive")
        if self.num_layers < 1:
            errs.append("num_layers must be >= 1")
        if not self.lr > 0:
            errs.append("lr must be positive")
        if self.epochs < 1:
            errs.append("epochs must be >= 1")
        if self.activation not in ACTIVATIONS:
            errs.append(f"unknown activation {self.activation!r}")
        if self.optimizer not in ("adam", "sgd"):
            errs.append(f"unknown optimizer {self.optimizer!r}")
        if self.none_ratio < 0:
            errs.append("none_ratio must be >= 0")
        if self.weight_decay < 0:
            errs.append("weight_decay must be >= 0")
        return errs


@dataclass
class TrainedModel:
    params: ModelParams
    H0: np.ndarray
    config: EncoderConfig
    losses: list[float]
    subset_sizes: list[int]
    embedding: EmbeddingState | None = None

    @property
    def Z(self) -> np.ndarray:
        return self.embedding.Z

    def probs(self, u, v) -> np.ndarray:
        return class_probs(self.Z, self.params.theta, u, v)


def initial_features(num_nodes: int, d_in: int, seed: int) -> np.ndarray:
    """Seeded isotropic Gaussian node features (datasets carry no attributes)."""
    rng = np.random.default_rng([seed, 0x5EED])
    return rng.standard_normal((num_nodes, d_in))


def fit(
    g: SignedGraph,
    config: EncoderConfig,
    edges: np.ndarray | None = None,
    order: np.ndarray | None = None,
    pacing=None,
) -> TrainedModel:
    """Train encoder and classifier on the edges of ``g``.

    ``edges`` defaults to ``g.edge_array()``. When ``order`` and ``pacing``
    are given, epoch ``t`` only computes the loss over the edges
    ``order[:pacing(t)]`` (kept in their original order) and a proportional
    prefix of the no-edge samples. Message passing always uses all of ``g``.
    """
    errs = config.validate()
    if errs:
        raise ValueError("; ".join(errs))
    if edges is None:
        edges = g.edge_array()
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 3)
    if len(edges) == 0:
        raise ValueError("empty training edge set")

    rng = np.random.default_rng(config.seed)
    params = ModelParams.init(config.d_in, config.d, config.num_layers, rng)
    H0 = initial_features(g.num_nodes, config.d_in, config.seed)
    adj = NormalizedAdjacency.from_graph(g)
    labeled = labeled_samples(edges)
    none = sample_non_edges(g, int(round(config.none_ratio * len(edges))), rng)

    opt_cls = Adam if config.optimizer == "adam" else SGD
    blocks = params.blocks()
    opt = opt_cls([b.shape for b in blocks], lr=config.lr)

    losses: list[float] = []
    sizes: list[int] = []
    m = len(labeled)
    for epoch in range(config.epochs):
        if pacing is None:
            k = m
            batch = np.vstack([labeled, none])
        else:
            k = int(pacing(epoch))
            idx = np.sort(order[:k])
            k_none = int(round(len(none) * k / m))
            batch = np.vstack([labeled[idx], none[:k_none]])
        value, grads, _ = full_loss_and_grads(adj, params, H0, batch, config.activation)
        if not np.isfinite(value):
            raise TrainingDiverged(epoch, value)
        if config.weight_decay:
            grads = [gr + config.weight_decay * b for gr, b in zip(grads, blocks)]
        opt.step(blocks, grads)
        losses.append(value)
        sizes.append(k)

    _check_trailing_window(losses)
    state = forward(adj, params, H0, config.activation)
    return TrainedModel(params, H0, config, losses, sizes, state)


def _check_trailing_window(losses: list[float], window: int = 20) -> None:
    if len(losses) >= 2 * window:
        early = np.mean(losses[-2 * window : -window])
        late = np.mean(losses[-window:])
        if late > early:
            log.warning("training loss rose over the last %d epochs (%.4f -> %.4f)", window, early, late)


def train_encoder(g: SignedGraph, config: EncoderConfig | None = None, **overrides) -> TrainedModel:
    """Plain (non-curriculum) training on every edge of ``g``."""
    config = config or EncoderConfig()
    if overrides:
        config = EncoderConfig(**{**config.__dict__, **overrides})
    return fit(g, config)


# -- checkpoints ------------------------------------------------------------

def save_checkpoint(path: str | Path, model: TrainedModel) -> None:
    """Write parameters and config as JSON.

    Floats are stored via ``float.hex`` so a save/load round trip is exact.
    """
    p = model.params
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "d": p.d,
        "d_in": p.d_in,
        "num_layers": p.num_layers,
        "seed": model.config.seed,
        "config": model.config.__dict__,
        "W_pos": [_encode(w) for w in p.W_pos],
        "W_neg": [_encode(w) for w in p.W_neg],
        "theta": _encode(p.theta),
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path: str | Path) -> tuple[ModelParams, EncoderConfig]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a checkpoint file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    params = ModelParams(
        [_decode(w) for w in doc["W_pos"]],
        [_decode(w) for w in doc["W_neg"]],
        _decode(doc["theta"]),
    )
    params.validate()
    return params, EncoderConfig(**doc["config"])


def _encode(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(x).hex() for x in a.ravel()]}


def _decode(obj: dict) -> np.ndarray:
    return np.array([float.fromhex(x) for x in obj["data"]], dtype=float).reshape(obj["shape"])
