"""Two-layer GCN with hand-derived gradients, weighted cross-entropy and Adam.

The encoder is ``Z = relu(A X W1)`` and the classifier ``logits = A Z W2``;
``A`` is the renormalized adjacency. Everything runs in float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dream.errors import DataError, InvariantError, NumericError
from dream.graph import NormalizedAdjacency, spmm

PROB_FLOOR = 1e-12


@dataclass
class ModelParams:
    w1: np.ndarray  # d_in x d, encoder
    w2: np.ndarray  # d x C, classifier

    @property
    def d(self) -> int:
        return int(self.w1.shape[1])

    @property
    def c(self) -> int:
        return int(self.w2.shape[1])

    @property
    def d_in(self) -> int:
        return int(self.w1.shape[0])

    def arrays(self) -> list[np.ndarray]:
        return [self.w1, self.w2]

    def copy(self) -> ModelParams:
        return ModelParams(self.w1.copy(), self.w2.copy())

    def to_json(self) -> dict:
        return {"w1": self.w1.tolist(), "w2": self.w2.tolist(), "d": self.d, "c": self.c}

    @classmethod
    def from_json(cls, obj: dict) -> ModelParams:
        w1 = np.asarray(obj["w1"], dtype=np.float64)
        w2 = np.asarray(obj["w2"], dtype=np.float64)
        if w1.ndim != 2 or w2.ndim != 2 or w1.shape[1] != w2.shape[0]:
            raise DataError(f"checkpoint shapes inconsistent: w1 {w1.shape}, w2 {w2.shape}")
        if w1.shape[1] != obj.get("d", w1.shape[1]) or w2.shape[1] != obj.get("c", w2.shape[1]):
            raise DataError("checkpoint d/c fields disagree with weight shapes")
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
            raise DataError("checkpoint contains non-finite weights")
        return cls(w1, w2)


def save_checkpoint(params: ModelParams, path, extra: dict | None = None) -> None:
    obj = params.to_json()
    if extra:
        obj.update(extra)
    Path(path).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path) -> ModelParams:
    return ModelParams.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def init_params(d_in: int, d: int, c: int, seed: int | np.random.Generator) -> ModelParams:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    w1 = glorot(rng, d_in, d)
    w2 = glorot(rng, d, c)
    return ModelParams(w1, w2)


@dataclass
class ForwardCache:
    ax: np.ndarray  # A X
    pre: np.ndarray  # A X W1
    z: np.ndarray  # relu(pre), the representation used for similarity
    logits: np.ndarray
    p: np.ndarray


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: ModelParams, adj: NormalizedAdjacency, x: np.ndarray, ax: np.ndarray | None = None) -> ForwardCache:
    """Full-graph forward pass. ``ax`` may carry a precomputed ``A @ X``."""
    if x.shape[1] != params.d_in:
        raise DataError(f"feature dim {x.shape[1]} != W1 rows {params.d_in}")
    if ax is None:
        ax = spmm(adj, x)
    pre = ax @ params.w1
    if not np.all(np.isfinite(pre)):
        raise NumericError("non-finite activations in layer 1 (encoder)")
    z = np.maximum(pre, 0.0)
    logits = spmm(adj, z @ params.w2)
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in layer 2 (classifier)")
    return ForwardCache(ax=ax, pre=pre, z=z, logits=logits, p=softmax_rows(logits))


def ce_terms(p: np.ndarray, labeled: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Per-node cross-entropy over ``labeled`` and the number of clamped probabilities."""
    picked = p[labeled, labels]
    clamped = int(np.count_nonzero(picked < PROB_FLOOR))
    return -np.log(np.maximum(picked, PROB_FLOOR)), clamped


def _check_loss_inputs(p, labeled, labels, weights):
    if len(labeled) < 1:
        raise DataError("labeled set is empty")
    if len(labels) != len(labeled) or len(weights) != len(labeled):
        raise DataError("labels/weights must align with the labeled set")
    if np.any(labels < 0) or np.any(labels >= p.shape[1]):
        raise DataError("labels out of range")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise DataError("weights must be finite and non-negative")


def weighted_ce_loss(cache: ForwardCache, labeled, labels, weights) -> float:
    """(1/|S|) * sum_i w_i * -log P[i, y_i]; summed in the order of ``labeled``."""
    labeled = np.asarray(labeled, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    _check_loss_inputs(cache.p, labeled, labels, weights)
    ce, _ = ce_terms(cache.p, labeled, labels)
    return float(np.dot(weights, ce) / len(labeled))


def backward(
    cache: ForwardCache,
    params: ModelParams,
    adj: NormalizedAdjacency,
    labeled,
    labels,
    weights,
) -> list[np.ndarray]:
    """Exact gradients of ``weighted_ce_loss`` w.r.t. [W1, W2]. Weights are constants."""
    labeled = np.asarray(labeled, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    n = adj.num_nodes
    if (
        cache.p.shape != (n, params.c)
        or cache.z.shape != (n, params.d)
        or cache.ax.shape != (n, params.d_in)
    ):
        raise InvariantError("forward cache does not match parameter/graph shapes")
    _check_loss_inputs(cache.p, labeled, labels, weights)

    g_logits = np.zeros_like(cache.p)
    coef = (weights / len(labeled))[:, None]
    rows = cache.p[labeled].copy()
    rows[np.arange(len(labeled)), labels] -= 1.0
    # np.add.at handles a node listed twice in ``labeled``
    np.add.at(g_logits, labeled, coef * rows)
    # A is symmetric, so A^T G == A G
    g_zw = spmm(adj, g_logits)
    g_w2 = cache.z.T @ g_zw
    g_pre = (g_zw @ params.w2.T) * (cache.pre > 0)
    g_w1 = cache.ax.T @ g_pre
    return [g_w1, g_w2]


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: ModelParams, lr: float = 1e-2, **kw) -> AdamState:
        arrs = params.arrays()
        return cls(m=[np.zeros_like(a) for a in arrs], v=[np.zeros_like(a) for a in arrs], lr=lr, **kw)


def adam_step(params: ModelParams, grads: list[np.ndarray], state: AdamState) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update. Inputs are left untouched."""
    arrs = params.arrays()
    if len(grads) != len(arrs) or any(g.shape != a.shape for g, a in zip(grads, arrs)):
        raise DataError("gradient shapes do not match parameters")
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise NumericError("non-finite gradient")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_m, new_v, new_p = [], [], []
    for a, g, m, v in zip(arrs, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_p.append(a - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
        new_m.append(m)
        new_v.append(v)
    new_state = AdamState(m=new_m, v=new_v, step=t, lr=state.lr, beta1=b1, beta2=b2, eps=state.eps)
    return ModelParams(*new_p), new_state


def gradcheck(
    params: ModelParams,
    adj: NormalizedAdjacency,
    x: np.ndarray,
    labeled,
    labels,
    weights,
    h: float = 1e-5,
    floor: float = 1e-6,
) -> float:
    """Max element-wise relative error between analytic and central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, floor)``; ``floor`` keeps
    entries whose true gradient is ~0 from dividing by rounding noise.
    """
    ax = spmm(adj, x)
    cache = forward(params, adj, x, ax=ax)
    analytic = backward(cache, params, adj, labeled, labels, weights)

    def loss_at(p: ModelParams) -> float:
        return weighted_ce_loss(forward(p, adj, x, ax=ax), labeled, labels, weights)

    worst = 0.0
    probe = params.copy()
    for k, arr in enumerate(probe.arrays()):
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + h
            up = loss_at(probe)
            arr[idx] = orig - h
            down = loss_at(probe)
            arr[idx] = orig
            num = (up - down) / (2.0 * h)
            a = analytic[k][idx]
            err = abs(a - num) / max(abs(a), abs(num), floor)
            worst = max(worst, err)
    return worst
