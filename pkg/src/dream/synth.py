"""Planted-partition benchmark graphs with sub-communities inside each class.

Nodes are split into C classes, each class into ``m`` sub-communities. Edge
probability depends on whether two nodes share a sub-community (``p_in``),
only a class (``p_mid``), or neither (``p_out``). Features are
``class mean + sub-community offset + gaussian noise``.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from dream.data import NodeData
from dream.errors import ConfigError
from dream.graph import build_graph


@dataclass(frozen=True)
class SynthSpec:
    n: int = 600
    c: int = 3
    m: int = 2
    p_in: float = 0.03
    p_mid: float = 0.004
    p_out: float = 0.0005
    d_in: int = 16
    sep: float = 4.0  # norm of each class mean
    sub_shift: float = 0.6  # norm of each sub-community offset
    feat_noise: float = 0.5  # std of i.i.d. feature noise
    train_frac: float = 0.1
    val_frac: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.n < 1 or self.c < 1 or self.m < 1 or self.d_in < 1:
            raise ConfigError("n, c, m and d_in must be positive")
        for name in ("p_in", "p_mid", "p_out", "train_frac", "val_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.train_frac + self.val_frac > 1.0:
            raise ConfigError("train_frac + val_frac exceeds 1")
        if self.sep < 0 or self.sub_shift < 0 or self.feat_noise < 0:
            raise ConfigError("feature scales must be non-negative")
        if self.p_in == self.p_mid == self.p_out == 0.0:
            warnings.warn("all edge probabilities are 0; the graph will have no edges", stacklevel=3)
        elif not self.p_in >= self.p_mid >= self.p_out:
            warnings.warn("edge probabilities are not ordered p_in >= p_mid >= p_out", stacklevel=3)

    def to_json(self) -> dict:
        return asdict(self)


def block_assignment(n: int, c: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Contiguous class blocks and sub-community blocks; sizes differ by at most one."""
    cls = np.zeros(n, dtype=np.int64)
    sub = np.zeros(n, dtype=np.int64)
    for k, members in enumerate(np.array_split(np.arange(n), c)):
        cls[members] = k
        for j, part in enumerate(np.array_split(members, m)):
            sub[part] = k * m + j
    return cls, sub


def _directions(count: int, d_in: int, offset: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    """``count`` vectors of norm ``scale``: basis axes from ``offset`` on if they fit, else random."""
    if offset + count <= d_in:
        return scale * np.eye(count, d_in, k=offset)
    v = rng.normal(size=(count, d_in))
    return scale * v / np.linalg.norm(v, axis=1, keepdims=True)


def stratified_masks(labels: np.ndarray, train_frac: float, val_frac: float, rng: np.random.Generator):
    n = len(labels)
    train = np.zeros(n, dtype=bool)
    val = np.zeros(n, dtype=bool)
    test = np.zeros(n, dtype=bool)
    for k in np.unique(labels):
        members = rng.permutation(np.flatnonzero(labels == k))
        n_tr = int(round(train_frac * len(members)))
        n_va = int(round(val_frac * len(members)))
        train[members[:n_tr]] = True
        val[members[n_tr : n_tr + n_va]] = True
        test[members[n_tr + n_va :]] = True
    return train, val, test


def generate(spec: SynthSpec) -> NodeData:
    spec.validate()
    edge_seq, feat_seq, mask_seq = np.random.SeedSequence(spec.seed).spawn(3)
    cls, sub = block_assignment(spec.n, spec.c, spec.m)

    rng = np.random.default_rng(edge_seq)
    iu, ju = np.triu_indices(spec.n, k=1)
    prob = np.where(sub[iu] == sub[ju], spec.p_in, np.where(cls[iu] == cls[ju], spec.p_mid, spec.p_out))
    hit = rng.random(len(iu)) < prob
    edges = np.stack([iu[hit], ju[hit]], axis=1)

    rng = np.random.default_rng(feat_seq)
    # class means and sub-community offsets on disjoint axes when d_in allows
    mu = _directions(spec.c, spec.d_in, 0, spec.sep, rng)
    nu = _directions(spec.c * spec.m, spec.d_in, spec.c, spec.sub_shift, rng)
    x = mu[cls] + nu[sub] + rng.normal(scale=spec.feat_noise, size=(spec.n, spec.d_in))

    g = build_graph(edges, x, num_nodes=spec.n)
    train, val, test = stratified_masks(cls, spec.train_frac, spec.val_frac, np.random.default_rng(mask_seq))
    return NodeData(
        graph=g,
        labels=cls.copy(),
        labels_clean=cls.copy(),
        train_mask=train,
        val_mask=val,
        test_mask=test,
    )
