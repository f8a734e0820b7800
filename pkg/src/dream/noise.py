"""Label corruption: uniform, pair and asymmetric (class-conditional) noise.

Randomness comes from numpy's PCG64 seeded with the 64-bit ``seed``. Every
injector draws one flip decision per labeled node in ascending node order, so
results are reproducible across platforms and numpy versions that keep PCG64
stream compatibility.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dream.errors import ConfigError, DataError

NOISE_KINDS = ("uniform", "pair", "asymmetric")


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "uniform"
    rate: float = 0.30
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ConfigError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigError(f"noise rate must lie in [0, 1], got {self.rate}")

    def to_json(self) -> dict:
        return {"kind": self.kind, "rate": self.rate, "seed": self.seed}


@dataclass(frozen=True, eq=False)
class LabelState:
    """Clean and observed labels over a sorted labeled index set."""

    indices: np.ndarray
    y_clean: np.ndarray
    y_obs: np.ndarray
    corrupted_mask: np.ndarray
    noise_spec: NoiseSpec

    @property
    def corrupted_fraction(self) -> float:
        return float(self.corrupted_mask.mean()) if len(self.corrupted_mask) else 0.0


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _prepare(labels, num_classes: int, p: float, indices):
    if num_classes < 2:
        raise ConfigError(f"label noise needs at least 2 classes, got {num_classes}")
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"noise rate must lie in [0, 1], got {p}")
    y = np.asarray(labels, dtype=np.int64)
    if len(y) < 1:
        raise DataError("labeled set is empty")
    if np.any(y < 0) or np.any(y >= num_classes):
        raise DataError(f"labels must lie in [0, {num_classes})")
    if indices is None:
        indices = np.arange(len(y), dtype=np.int64)
    else:
        indices = np.asarray(indices, dtype=np.int64)
        if len(indices) != len(y) or np.any(np.diff(indices) <= 0):
            raise DataError("indices must be strictly ascending and match labels")
    return y, indices


def _finish(y, y_obs, indices, spec) -> LabelState:
    return LabelState(
        indices=indices,
        y_clean=y.copy(),
        y_obs=y_obs,
        corrupted_mask=y_obs != y,
        noise_spec=spec,
    )


def corrupt_uniform(labels, num_classes: int, p: float, seed: int, indices=None) -> LabelState:
    """With probability ``p`` replace each label by one of the other C-1 classes, uniformly."""
    y, indices = _prepare(labels, num_classes, p, indices)
    rng = make_rng(seed)
    flip = rng.random(len(y)) < p
    r = rng.integers(0, num_classes - 1, size=len(y))
    other = r + (r >= y)  # skip the original class
    return _finish(y, np.where(flip, other, y), indices, NoiseSpec("uniform", p, seed))


def corrupt_pair(labels, num_classes: int, p: float, seed: int, indices=None) -> LabelState:
    """With probability ``p`` map c -> (c + 1) mod C."""
    y, indices = _prepare(labels, num_classes, p, indices)
    rng = make_rng(seed)
    flip = rng.random(len(y)) < p
    return _finish(y, np.where(flip, (y + 1) % num_classes, y), indices, NoiseSpec("pair", p, seed))


def asymmetric_flip_rates(num_classes: int, p: float) -> np.ndarray:
    """Per-class flip probability p * 2(c+1)/(C+1), clipped to [0, 1]."""
    c = np.arange(num_classes, dtype=np.float64)
    return np.clip(p * 2.0 * (c + 1.0) / (num_classes + 1.0), 0.0, 1.0)


def corrupt_asymmetric(labels, num_classes: int, p: float, seed: int, indices=None) -> LabelState:
    """Class-conditional pair noise: higher classes flip more often, always to (c + 1) mod C."""
    y, indices = _prepare(labels, num_classes, p, indices)
    rng = make_rng(seed)
    flip = rng.random(len(y)) < asymmetric_flip_rates(num_classes, p)[y]
    return _finish(y, np.where(flip, (y + 1) % num_classes, y), indices, NoiseSpec("asymmetric", p, seed))


_INJECTORS = {
    "uniform": corrupt_uniform,
    "pair": corrupt_pair,
    "asymmetric": corrupt_asymmetric,
}


def corrupt(labels, num_classes: int, spec: NoiseSpec, indices=None) -> LabelState:
    return _INJECTORS[spec.kind](labels, num_classes, spec.rate, spec.seed, indices=indices)
