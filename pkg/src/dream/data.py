"""Graph JSON file format and the labeled-graph container consumed by training."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from dream.errors import DataError
from dream.graph import Graph, build_graph
from dream.noise import NoiseSpec, corrupt


@dataclass(frozen=True, eq=False)
class NodeData:
    """A graph plus per-node labels and split masks.

    ``labels`` are the observed (possibly corrupted) labels, ``labels_clean``
    the ground truth. Unlabeled nodes carry -1 in both.
    """

    graph: Graph
    labels: np.ndarray
    labels_clean: np.ndarray
    train_mask: np.ndarray
    val_mask: np.ndarray
    test_mask: np.ndarray
    corrupted_mask: np.ndarray | None = None
    noise: NoiseSpec | None = None

    @property
    def num_classes(self) -> int:
        return int(max(self.labels.max(), self.labels_clean.max())) + 1

    @property
    def train_idx(self) -> np.ndarray:
        return np.flatnonzero(self.train_mask)

    def validate(self) -> None:
        n = self.graph.num_nodes
        for name in ("labels", "labels_clean", "train_mask", "val_mask", "test_mask"):
            if len(getattr(self, name)) != n:
                raise DataError(f"{name} has length {len(getattr(self, name))}, expected {n}")
        if np.any(self.train_mask & self.val_mask) or np.any(self.train_mask & self.test_mask) or np.any(
            self.val_mask & self.test_mask
        ):
            raise DataError("train/val/test masks overlap")
        split = self.train_mask | self.val_mask | self.test_mask
        if np.any(self.labels_clean[split] < 0) or np.any(self.labels[split] < 0):
            raise DataError("every node in a split mask needs a label")
        if not self.train_mask.any():
            raise DataError("train mask is empty")


def corrupt_dataset(data: NodeData, spec: NoiseSpec) -> NodeData:
    """Corrupt train and validation labels; test labels stay clean."""
    idx = np.flatnonzero(data.train_mask | data.val_mask)
    if len(idx) == 0:
        raise DataError("no train/val nodes to corrupt")
    state = corrupt(data.labels_clean[idx], data.num_classes, spec, indices=idx)
    labels = data.labels_clean.copy()
    labels[idx] = state.y_obs
    mask = np.zeros(data.graph.num_nodes, dtype=bool)
    mask[idx] = state.corrupted_mask
    return replace(data, labels=labels, corrupted_mask=mask, noise=spec)


def to_json_obj(data: NodeData, extra: dict | None = None) -> dict:
    g = data.graph
    obj = {
        "num_nodes": g.num_nodes,
        "edges": [list(e) for e in g.edge_list()],
        "features": g.features.tolist(),
        "labels": data.labels.tolist(),
        "train_mask": data.train_mask.tolist(),
        "val_mask": data.val_mask.tolist(),
        "test_mask": data.test_mask.tolist(),
    }
    if data.corrupted_mask is not None:
        obj["labels_clean"] = data.labels_clean.tolist()
        obj["corrupted_mask"] = data.corrupted_mask.tolist()
    if data.noise is not None:
        obj["noise"] = data.noise.to_json()
    if extra:
        obj.update(extra)
    return obj


def dumps(data: NodeData, extra: dict | None = None) -> str:
    return json.dumps(to_json_obj(data, extra), separators=(",", ":"), sort_keys=True) + "\n"


def from_json_obj(obj: dict) -> NodeData:
    try:
        n = int(obj["num_nodes"])
        features = np.asarray(obj["features"], dtype=np.float64)
        edges = obj.get("edges", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed graph JSON: {exc}") from exc
    if features.ndim != 2:
        raise DataError("features must be a 2-D array")
    g = build_graph(np.asarray(edges, dtype=np.int64).reshape(-1, 2), features, num_nodes=n)

    def arr(name, dtype, default):
        v = obj.get(name)
        return np.full(n, default, dtype=dtype) if v is None else np.asarray(v, dtype=dtype)

    labels = arr("labels", np.int64, -1)
    clean = np.asarray(obj["labels_clean"], dtype=np.int64) if "labels_clean" in obj else labels.copy()
    corrupted = np.asarray(obj["corrupted_mask"], dtype=bool) if "corrupted_mask" in obj else None
    noise = None
    if "noise" in obj and obj["noise"] is not None:
        nz = obj["noise"]
        noise = NoiseSpec(kind=nz["kind"], rate=float(nz["rate"]), seed=int(nz["seed"]))
    data = NodeData(
        graph=g,
        labels=labels,
        labels_clean=clean,
        train_mask=arr("train_mask", bool, False),
        val_mask=arr("val_mask", bool, False),
        test_mask=arr("test_mask", bool, False),
        corrupted_mask=corrupted,
        noise=noise,
    )
    if corrupted is not None and len(corrupted) != n:
        raise DataError("corrupted_mask length mismatch")
    data.validate()
    return data


def load(path) -> NodeData:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read graph file {path}: {exc}") from exc
    return from_json_obj(obj)


def save(data: NodeData, path, extra: dict | None = None) -> None:
    Path(path).write_text(dumps(data, extra), encoding="utf-8")
