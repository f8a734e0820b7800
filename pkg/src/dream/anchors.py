"""Candidate sets, proximity and topology anchor selection, homogeneity scores.

For every labeled target ``t``:

* proximity candidates: other labeled nodes sharing t's observed label;
* topology candidates: every node (labeled or not) within ``d_max`` hops;
* anchors: the ``k`` most similar candidates of each pool, merged as a set;
* homogeneity: ``mean(sim(z_t, z_a) for a in anchors) ** (1 / tau)``.

``sim`` is cosine similarity mapped to [0, 1]; a zero vector scores 0.5
against anything. Ties in similarity go to the lower node index. The target
never appears in its own candidate sets. A target with no anchors scores 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from dream.errors import ConfigError
from dream.graph import Graph, bounded_ball

log = logging.getLogger(__name__)

POOL_PROXIMITY = "proximity"
POOL_TOPOLOGY = "topology"
POOL_MERGED = "merged"  # proximity and topology candidates as one pool
POOL_ALL = "all"  # every node except the target
POOLS = (POOL_PROXIMITY, POOL_TOPOLOGY, POOL_MERGED, POOL_ALL)


def _pad(lists: list[np.ndarray]) -> np.ndarray:
    width = max((len(x) for x in lists), default=0)
    out = np.full((len(lists), max(width, 1)), -1, dtype=np.int64)
    for i, x in enumerate(lists):
        out[i, : len(x)] = x
    return out


@dataclass(frozen=True, eq=False)
class CandidateSets:
    """Per-target candidate index lists, computed once per run."""

    targets: np.ndarray
    cp: tuple[np.ndarray, ...]
    ct: tuple[np.ndarray, ...]
    d_max: int
    num_nodes: int

    def __len__(self) -> int:
        return len(self.targets)

    def position(self, node: int) -> int:
        i = int(np.searchsorted(self.targets, node))
        if i >= len(self.targets) or self.targets[i] != node:
            raise KeyError(node)
        return i

    def pool(self, name: str) -> list[np.ndarray]:
        if name == POOL_PROXIMITY:
            return list(self.cp)
        if name == POOL_TOPOLOGY:
            return list(self.ct)
        if name == POOL_MERGED:
            return [np.union1d(a, b) for a, b in zip(self.cp, self.ct)]
        if name == POOL_ALL:
            everyone = np.arange(self.num_nodes, dtype=np.int64)
            return [everyone[everyone != t] for t in self.targets.tolist()]
        raise ConfigError(f"unknown candidate pool {name!r}")

    @cached_property
    def _padded(self) -> dict[str, np.ndarray]:
        return {}

    def padded(self, name: str) -> np.ndarray:
        """Pool as a (targets x width) index matrix, rows ascending, padded with -1."""
        cache = self._padded
        if name not in cache:
            cache[name] = _pad(self.pool(name))
        return cache[name]


def build_candidates(g: Graph, targets, observed_labels, d_max: int) -> CandidateSets:
    """Precompute both candidate sets for every target.

    ``targets`` are the labeled node ids; ``observed_labels`` aligns with them.
    """
    if d_max < 1:
        raise ConfigError("d_max must be >= 1")
    targets = np.asarray(targets, dtype=np.int64)
    y = np.asarray(observed_labels, dtype=np.int64)
    order = np.argsort(targets, kind="stable")
    targets, y = targets[order], y[order]
    cp, ct = [], []
    for t, yt in zip(targets.tolist(), y.tolist()):
        same = targets[(y == yt) & (targets != t)]
        cp.append(same)
        ct.append(bounded_ball(g, t, d_max)[0])
    for arr in cp + ct:
        arr.setflags(write=False)
    return CandidateSets(targets=targets, cp=tuple(cp), ct=tuple(ct), d_max=d_max, num_nodes=g.num_nodes)


def rescaled_cosine(za, zb) -> float:
    za = np.asarray(za, dtype=np.float64)
    zb = np.asarray(zb, dtype=np.float64)
    na, nb = float(np.dot(za, za)), float(np.dot(zb, zb))
    if na == 0.0 or nb == 0.0:
        return 0.5
    cos = float(np.dot(za, zb)) / np.sqrt(na * nb)
    return (min(1.0, max(-1.0, cos)) + 1.0) / 2.0


def _sims_to(z: np.ndarray, target: int, candidates: np.ndarray) -> np.ndarray:
    zt = z[target]
    zc = z[candidates]
    nt = float(np.dot(zt, zt))
    nc = np.einsum("ij,ij->i", zc, zc)
    dots = zc @ zt
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.clip(dots / np.sqrt(nt * nc), -1.0, 1.0)
    sims = (cos + 1.0) / 2.0
    sims[(nc == 0.0) | (nt == 0.0)] = 0.5
    return sims


def _rank(sims: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    # primary key: similarity descending; secondary: node index ascending
    return np.lexsort((nodes, -sims))


def select_top_k(target: int, candidates, z: np.ndarray, k: int) -> np.ndarray:
    """The ``k`` candidates most similar to ``target``, ordered by (-sim, index)."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if k <= 0 or len(candidates) == 0:
        return np.zeros(0, dtype=np.int64)
    sims = _sims_to(z, target, candidates)
    return candidates[_rank(sims, candidates)[:k]]


@dataclass(frozen=True)
class AnchorSet:
    ap: np.ndarray
    at: np.ndarray

    @property
    def union(self) -> np.ndarray:
        return np.union1d(self.ap, self.at)


def select_anchors(target: int, cands: CandidateSets, z: np.ndarray, k_p: int, k_t: int) -> AnchorSet:
    i = cands.position(target)
    return AnchorSet(
        ap=select_top_k(target, cands.cp[i], z, k_p),
        at=select_top_k(target, cands.ct[i], z, k_t),
    )


def homogeneity(target: int, anchors, z: np.ndarray, tau: float) -> float:
    """Mean rescaled cosine between target and its anchors, raised to 1/tau."""
    if not tau > 0:
        raise ConfigError(f"temperature must be > 0, got {tau}")
    members = anchors.union if isinstance(anchors, AnchorSet) else np.unique(np.asarray(anchors, dtype=np.int64))
    if len(members) == 0:
        return 0.0
    sims = _sims_to(z, target, members)
    total = 0.0
    for s in sims.tolist():  # ascending node order
        total += s
    return (total / len(members)) ** (1.0 / tau)


@dataclass(frozen=True, eq=False)
class HomogeneityScores:
    """Per-target scores from one scoring pass, aligned with ``targets``."""

    targets: np.ndarray
    scores: np.ndarray
    mean_sim: np.ndarray
    anchor_count: np.ndarray
    selected: dict[str, np.ndarray]  # pool name -> (targets x k) indices, -1 padded
    tau: float

    @property
    def empty(self) -> np.ndarray:
        return self.anchor_count == 0

    def anchors_of(self, pos: int, pool: str) -> list[int]:
        row = self.selected.get(pool)
        if row is None:
            return []
        row = row[pos]
        return row[row >= 0].tolist()


def similarity_rows(z: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Rescaled cosine of every target against every node, shape (targets x N)."""
    nsq = np.einsum("ij,ij->i", z, z)
    dots = z[targets] @ z.T
    denom = np.sqrt(nsq[targets][:, None] * nsq[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.clip(dots / denom, -1.0, 1.0)
    sims = (cos + 1.0) / 2.0
    sims[denom == 0.0] = 0.5
    return sims


def _top_k_batched(sims: np.ndarray, pool: np.ndarray, k: int) -> np.ndarray:
    """Row-wise top-k over a padded pool. Pools are ascending, so a stable sort breaks ties by index."""
    rows = np.arange(len(pool))[:, None]
    cand = np.where(pool >= 0, sims[rows, np.maximum(pool, 0)], -np.inf)
    order = np.argsort(-cand, axis=1, kind="stable")[:, :k]
    picked = np.take_along_axis(pool, order, axis=1)
    picked_sims = np.take_along_axis(cand, order, axis=1)
    return np.where(np.isfinite(picked_sims), picked, -1)


def score_all(
    cands: CandidateSets,
    z: np.ndarray,
    k_p: int,
    k_t: int,
    tau: float,
    pools: list[tuple[str, int]] | None = None,
) -> HomogeneityScores:
    """Select anchors and score every target in one batched pass.

    ``pools`` overrides the default ``[(proximity, k_p), (topology, k_t)]``
    with any list of ``(pool name, k)``; the union of all selections forms
    the anchor set.
    """
    if not tau > 0:
        raise ConfigError(f"temperature must be > 0, got {tau}")
    if pools is None:
        pools = [(POOL_PROXIMITY, k_p), (POOL_TOPOLOGY, k_t)]
    targets = cands.targets
    t_count = len(targets)
    sims = similarity_rows(z, targets)
    rows = np.arange(t_count)[:, None]

    selected: dict[str, np.ndarray] = {}
    for name, k in pools:
        if k <= 0:
            continue
        if name == POOL_ALL:
            cand = sims.copy()
            cand[np.arange(t_count), targets] = -np.inf
            order = np.argsort(-cand, axis=1, kind="stable")[:, :k]
            selected[name] = order.astype(np.int64)
        else:
            selected[name] = _top_k_batched(sims, cands.padded(name), k)

    if selected:
        merged = np.sort(np.concatenate(list(selected.values()), axis=1), axis=1)
        keep = merged >= 0
        keep[:, 1:] &= merged[:, 1:] != merged[:, :-1]
        anchor_sims = np.where(keep, sims[rows, np.maximum(merged, 0)], 0.0)
        counts = keep.sum(axis=1)
        totals = anchor_sims.sum(axis=1)
    else:
        counts = np.zeros(t_count, dtype=np.int64)
        totals = np.zeros(t_count)

    mean_sim = np.zeros(t_count)
    nz = counts > 0
    mean_sim[nz] = totals[nz] / counts[nz]
    scores = np.where(nz, mean_sim ** (1.0 / tau), 0.0)
    n_empty = int(t_count - nz.sum())
    if n_empty:
        log.debug("%d target(s) have no anchors; their weight is 0", n_empty)
    return HomogeneityScores(
        targets=targets,
        scores=scores,
        mean_sim=mean_sim,
        anchor_count=counts,
        selected=selected,
        tau=tau,
    )
