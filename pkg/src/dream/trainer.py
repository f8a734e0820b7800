"""Reweighted training loop, ablation variants, evaluation and the noise sweep harness."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from dream import anchors as anc
from dream.data import NodeData, corrupt_dataset
from dream.errors import ConfigError, DataError, DreamError, NumericError
from dream.graph import normalize_adjacency, spmm
from dream.nn import AdamState, ModelParams, adam_step, backward, ce_terms, forward, init_params
from dream.noise import NoiseSpec

log = logging.getLogger(__name__)

VARIANTS = (
    "full",
    "v1_no_topo",
    "v2_no_prox",
    "v3_no_temp",
    "v4_global_pool",
    "v5_union_pool",
    "baseline_unweighted",
)
ABLATION_VARIANTS = VARIANTS

METRICS_HEADER = ["epoch", "loss", "train_acc", "val_acc", "test_acc", "mean_h_clean", "mean_h_noisy", "wall_ms"]
SWEEP_HEADER = ["noise_kind", "rate", "seed", "method", "test_acc_final", "test_acc_bestval"]


@dataclass(frozen=True)
class TrainConfig:
    k_p: int = 15
    k_t: int = 10
    d_max: int = 4
    tau: float = 0.04
    hidden: int = 64
    lr: float = 1e-2
    epochs: int = 500
    seed: int = 0
    variant: str = "full"
    record_time: bool = False

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.k_p < 0 or self.k_t < 0:
            raise ConfigError("k_p and k_t must be non-negative")
        pools = variant_pools(self)
        if self.variant != "baseline_unweighted" and all(k < 1 for _, k in pools):
            raise ConfigError(f"variant {self.variant} selects no anchors with k_p={self.k_p}, k_t={self.k_t}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.d_max < 1:
            raise ConfigError("d_max must be >= 1")
        if self.hidden < 1 or not self.lr > 0:
            raise ConfigError("hidden must be >= 1 and lr > 0")

    @property
    def method(self) -> str:
        return "baseline" if self.variant == "baseline_unweighted" else "dream"

    def to_json(self) -> dict:
        return asdict(self)


def variant_pools(cfg: TrainConfig) -> list[tuple[str, int]]:
    """Candidate pools and per-pool anchor counts used by a variant."""
    v = cfg.variant
    if v == "v1_no_topo":
        return [(anc.POOL_PROXIMITY, cfg.k_p)]
    if v == "v2_no_prox":
        return [(anc.POOL_TOPOLOGY, cfg.k_t)]
    if v == "v4_global_pool":
        return [(anc.POOL_ALL, cfg.k_p + cfg.k_t)]
    if v == "v5_union_pool":
        return [(anc.POOL_MERGED, cfg.k_p + cfg.k_t)]
    if v in ("full", "v3_no_temp", "baseline_unweighted"):
        return [(anc.POOL_PROXIMITY, cfg.k_p), (anc.POOL_TOPOLOGY, cfg.k_t)]
    raise ConfigError(f"unknown variant {v!r}")


def variant_tau(cfg: TrainConfig) -> float:
    return 1.0 if cfg.variant == "v3_no_temp" else cfg.tau


def apply_variant(cfg: TrainConfig, cands: anc.CandidateSets, z: np.ndarray) -> tuple[np.ndarray, anc.HomogeneityScores]:
    """Per-target loss weights for this epoch plus the scores they came from.

    The baseline still scores with the full pools (for diagnostics) but
    trains with unit weights.
    """
    scores = anc.score_all(cands, z, cfg.k_p, cfg.k_t, variant_tau(cfg), pools=variant_pools(cfg))
    if cfg.variant == "baseline_unweighted":
        return np.ones(len(cands)), scores
    return scores.scores, scores


def accuracy(p: np.ndarray, labels: np.ndarray, mask: np.ndarray) -> float:
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        raise DataError("cannot compute accuracy over an empty mask")
    # argmax returns the first maximum, i.e. the lowest class on ties
    return float(np.mean(p[idx].argmax(axis=1) == labels[idx]))


def evaluate(params: ModelParams, data: NodeData, mask, labels=None) -> float:
    """Accuracy of ``params`` on ``mask`` against clean labels (or ``labels`` if given)."""
    g = data.graph
    cache = forward(params, normalize_adjacency(g), g.features)
    return accuracy(cache.p, data.labels_clean if labels is None else labels, np.asarray(mask, dtype=bool))


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    train_acc: float
    val_acc: float | None
    test_acc: float | None
    mean_h_clean: float | None
    mean_h_noisy: float | None
    wall_ms: float | None

    def row(self) -> list[str]:
        return [_fmt(getattr(self, k)) for k in METRICS_HEADER]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def metrics_csv(metrics: list[EpochMetrics]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for m in metrics:
        w.writerow(m.row())
    return buf.getvalue()


class TrainingDiverged(NumericError):
    def __init__(self, msg: str, trace: list[EpochMetrics]):
        super().__init__(msg)
        self.trace = trace


@dataclass
class RunResult:
    config: TrainConfig
    metrics: list[EpochMetrics]
    params: ModelParams
    best_params: ModelParams
    final_test_acc: float | None
    best_epoch: int
    bestval_test_acc: float | None
    clamp_count: int = 0
    empty_targets: int = 0
    final_train_ce: float | None = None  # unweighted mean CE on the train set after the last update

    def summary(self) -> dict:
        last = self.metrics[-1]
        return {
            "method": self.config.method,
            "variant": self.config.variant,
            "epochs": len(self.metrics),
            "final_loss": last.loss,
            "test_acc_final": self.final_test_acc,
            "test_acc_bestval": self.bestval_test_acc,
            "best_epoch": self.best_epoch,
            "mean_h_clean_final": last.mean_h_clean,
            "mean_h_noisy_final": last.mean_h_noisy,
            "final_train_ce": self.final_train_ce,
            "clamp_count": self.clamp_count,
            "empty_anchor_targets": self.empty_targets,
        }


def _mean_or_none(x: np.ndarray) -> float | None:
    return float(np.mean(x)) if len(x) else None


def train(
    data: NodeData,
    cfg: TrainConfig,
    on_epoch: Callable[[int, anc.HomogeneityScores], None] | None = None,
) -> RunResult:
    """Train a two-layer GCN with per-epoch homogeneity reweighting.

    Anchors and scores are recomputed every epoch from that epoch's forward
    pass; candidate sets are computed once. ``on_epoch`` receives each
    epoch's scores (used for anchor dumps).
    """
    cfg.validate()
    data.validate()
    g = data.graph
    x = g.features
    c = data.num_classes
    if c < 2:
        raise DataError("need at least two classes")
    s_idx = data.train_idx
    y_s = data.labels[s_idx]

    params = init_params(g.d_in, cfg.hidden, c, cfg.seed)
    adam = AdamState.zeros_like(params, lr=cfg.lr)
    adj = normalize_adjacency(g)
    ax = spmm(adj, x)
    cands = anc.build_candidates(g, s_idx, y_s, cfg.d_max)

    pool_sizes = [(np.array([len(p) for p in cands.pool(name)]), k) for name, k in variant_pools(cfg)]
    empty = int(np.sum(np.all([(sizes == 0) | (k < 1) for sizes, k in pool_sizes], axis=0)))
    if empty and cfg.variant != "baseline_unweighted":
        log.warning("%d labeled node(s) have no anchor candidates; they get weight 0 every epoch", empty)

    has_val = bool(data.val_mask.any())
    has_test = bool(data.test_mask.any())
    noisy_s = None if data.corrupted_mask is None else data.corrupted_mask[s_idx]

    metrics: list[EpochMetrics] = []
    clamp_total = 0
    best_val, best_epoch, best_test, best_params = -1.0, 0, None, params
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        cache = forward(params, adj, x, ax=ax)
        weights, hs = apply_variant(cfg, cands, cache.z)
        ce, clamped = ce_terms(cache.p, s_idx, y_s)
        clamp_total += clamped
        loss = float(np.dot(weights, ce) / len(s_idx))
        if not math.isfinite(loss):
            raise TrainingDiverged(f"non-finite loss at epoch {epoch}", metrics)
        grads = backward(cache, params, adj, s_idx, y_s, weights)
        try:
            new_params, adam = adam_step(params, grads, adam)
        except NumericError as exc:
            raise TrainingDiverged(f"epoch {epoch}: {exc}", metrics) from exc

        val_acc = accuracy(cache.p, data.labels, data.val_mask) if has_val else None
        test_acc = accuracy(cache.p, data.labels_clean, data.test_mask) if has_test else None
        h_clean = h_noisy = None
        if noisy_s is not None:
            h_clean = _mean_or_none(hs.scores[~noisy_s])
            h_noisy = _mean_or_none(hs.scores[noisy_s])
        metrics.append(
            EpochMetrics(
                epoch=epoch,
                loss=loss,
                train_acc=accuracy(cache.p, data.labels, data.train_mask),
                val_acc=val_acc,
                test_acc=test_acc,
                mean_h_clean=h_clean,
                mean_h_noisy=h_noisy,
                wall_ms=(time.perf_counter() - t0) * 1e3 if cfg.record_time else None,
            )
        )
        if val_acc is not None and val_acc > best_val:
            best_val, best_epoch, best_test, best_params = val_acc, epoch, test_acc, params
        if on_epoch is not None:
            on_epoch(epoch, hs)
        params = new_params

    final_p = forward(params, adj, x, ax=ax).p
    final_ce = float(np.mean(ce_terms(final_p, s_idx, y_s)[0]))
    final_test = accuracy(final_p, data.labels_clean, data.test_mask) if has_test else None
    if not has_val:
        best_epoch, best_test, best_params = len(metrics), final_test, params
    return RunResult(
        config=cfg,
        metrics=metrics,
        params=params,
        best_params=best_params,
        final_test_acc=final_test,
        best_epoch=best_epoch,
        bestval_test_acc=best_test,
        clamp_count=clamp_total,
        empty_targets=int(empty),
        final_train_ce=final_ce,
    )


# ---------------------------------------------------------------------------
# sweep / ablation harness


@dataclass(frozen=True)
class SweepRow:
    noise_kind: str
    rate: float
    seed: int
    method: str
    test_acc_final: float | None
    test_acc_bestval: float | None
    error: str | None = field(default=None, compare=False)

    def row(self) -> list[str]:
        return [
            self.noise_kind,
            repr(float(self.rate)),
            str(self.seed),
            self.method,
            _fmt(self.test_acc_final) if self.error is None else "failed",
            _fmt(self.test_acc_bestval) if self.error is None else "failed",
        ]


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def _run_cell(args) -> SweepRow:
    data, spec, cfg, method = args
    try:
        noisy = corrupt_dataset(data, spec)
        res = train(noisy, cfg)
        return SweepRow(spec.kind, spec.rate, spec.seed, method, res.final_test_acc, res.bestval_test_acc)
    except DreamError as exc:
        log.error("cell (%s, %s, %s, %s) failed: %s", spec.kind, spec.rate, spec.seed, method, exc)
        return SweepRow(spec.kind, spec.rate, spec.seed, method, None, None, error=str(exc))


def _run_cells(cells: list, jobs: int) -> list[SweepRow]:
    if jobs <= 1 or len(cells) <= 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_cell, cells))  # map keeps submission order


def sweep(
    data: NodeData,
    kinds,
    rates,
    seeds,
    cfg: TrainConfig,
    jobs: int = 1,
) -> list[SweepRow]:
    """For each (kind, rate, seed): corrupt clean labels, train DREAM and the baseline.

    Seed ``s`` drives both the label noise and the model initialization.
    Rows are ordered by (kind, rate, seed, method).
    """
    for r in rates:
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"noise rate {r} outside [0, 1]")
    dream_cfg = replace(cfg, variant="full" if cfg.variant == "baseline_unweighted" else cfg.variant)
    cells = []
    for kind in kinds:
        for rate in rates:
            for seed in seeds:
                spec = NoiseSpec(kind, float(rate), int(seed))
                cells.append((data, spec, replace(dream_cfg, seed=int(seed)), "dream"))
                cells.append((data, spec, replace(cfg, variant="baseline_unweighted", seed=int(seed)), "baseline"))
    return _run_cells(cells, jobs)


def ablate(data: NodeData, noise: NoiseSpec, seeds, cfg: TrainConfig, variants=ABLATION_VARIANTS, jobs: int = 1) -> list[SweepRow]:
    """Train every variant for every seed; ``method`` holds the variant name."""
    cells = []
    for seed in seeds:
        spec = replace(noise, seed=int(seed))
        for v in variants:
            cells.append((data, spec, replace(cfg, variant=v, seed=int(seed)), v))
    return _run_cells(cells, jobs)


def aggregate(rows: list[SweepRow], key: str = "test_acc_bestval") -> list[dict]:
    """Mean/std per (kind, rate, method) cell, in first-seen order. Failed runs are skipped."""
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        k = (r.noise_kind, r.rate, r.method)
        groups.setdefault(k, [])
        v = getattr(r, key)
        if r.error is None and v is not None:
            groups[k].append(v)
    out = []
    for (kind, rate, method), vals in groups.items():
        arr = np.asarray(vals)
        out.append(
            {
                "noise_kind": kind,
                "rate": rate,
                "method": method,
                "n": len(vals),
                "mean": float(arr.mean()) if len(arr) else None,
                "std": float(arr.std()) if len(arr) else None,
            }
        )
    return out
