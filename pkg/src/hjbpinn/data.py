"""Sampling of collocation, initial-condition, and noisy supervision sets.

All sampling is uniform over the problem box, labels are exact solution
values plus zero-mean noise of configured variance, and every draw comes
from one seeded generator in a fixed order, so a seed pins the dataset
bit-for-bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import truncnorm

from .hjb import HjbProblem

__all__ = ["Dataset", "sample_dataset", "noisy_initial_dataset", "noise_draws"]

_TRUNC_AT = 4.0
_TRUNC_STD = float(truncnorm.std(-_TRUNC_AT, _TRUNC_AT))


def noise_draws(kind: str, variance: float, size: int, rng) -> np.ndarray:
    """Zero-mean draws with exactly the requested variance.

    "uniform" is bounded by construction (half-width sqrt(3 var));
    "truncated_gaussian" clips a standard normal at +-4 sigma and rescales
    so the variance is exact, keeping draws bounded by ~4.01 sqrt(var).
    """
    if variance < 0:
        raise ValueError("noise variance must be nonnegative")
    if variance == 0:
        return np.zeros(size)
    if kind == "uniform":
        half = math.sqrt(3.0 * variance)
        return rng.uniform(-half, half, size)
    if kind == "truncated_gaussian":
        z = truncnorm.rvs(-_TRUNC_AT, _TRUNC_AT, size=size, random_state=rng)
        return z * (math.sqrt(variance) / _TRUNC_STD)
    raise ValueError(f"unknown noise kind {kind!r}")


@dataclass(frozen=True)
class Dataset:
    """Sampled training data with exact noise bookkeeping.

    Supervision labels decompose exactly as sup_y = sup_clean + sup_noise.
    noise_var is the generator's configured per-sample variance; label_bound
    and init_bound are ceil(sup |labels|) over the respective sets.
    """

    colloc_x: np.ndarray
    colloc_t: np.ndarray
    init_x: np.ndarray
    init_values: np.ndarray
    sup_x: np.ndarray
    sup_t: np.ndarray
    sup_y: np.ndarray
    sup_clean: np.ndarray
    sup_noise: np.ndarray
    noise_var: float
    label_bound: float
    init_bound: float
    init_labels: Optional[np.ndarray] = None

    @property
    def space_dim(self) -> int:
        for arr in (self.colloc_x, self.init_x, self.sup_x):
            if arr.size:
                return arr.shape[1]
        raise ValueError("empty dataset has no dimension")

    def _aug(self, name, x, t) -> np.ndarray:
        # (points, n+1) matrices are rebuilt every training step otherwise
        cached = self.__dict__.get(name)
        if cached is None:
            cached = np.concatenate([x, t[:, None]], axis=1)
            object.__setattr__(self, name, cached)
        return cached

    def colloc_aug(self) -> np.ndarray:
        return self._aug("_colloc_aug", self.colloc_x, self.colloc_t)

    def init_aug(self) -> np.ndarray:
        return self._aug("_init_aug", self.init_x, np.zeros(self.n_init))

    def sup_aug(self) -> np.ndarray:
        return self._aug("_sup_aug", self.sup_x, self.sup_t)

    @property
    def n_colloc(self) -> int:
        return self.colloc_x.shape[0]

    @property
    def n_init(self) -> int:
        return self.init_x.shape[0]

    @property
    def n_sup(self) -> int:
        return self.sup_x.shape[0]

    def to_jsonl(self, path):
        """One JSON record per point; floats keep full repr precision."""
        with open(path, "w") as fh:
            meta = {
                "kind": "meta",
                "space_dim": self.space_dim,
                "noise_var": self.noise_var,
                "label_bound": self.label_bound,
                "init_bound": self.init_bound,
                "has_init_labels": self.init_labels is not None,
            }
            fh.write(json.dumps(meta) + "\n")
            for i in range(self.n_colloc):
                fh.write(json.dumps({
                    "kind": "colloc",
                    "x": self.colloc_x[i].tolist(),
                    "t": self.colloc_t[i],
                }) + "\n")
            for i in range(self.n_init):
                rec = {"kind": "init", "x": self.init_x[i].tolist(), "g": self.init_values[i]}
                if self.init_labels is not None:
                    rec["y"] = self.init_labels[i]
                fh.write(json.dumps(rec) + "\n")
            for i in range(self.n_sup):
                fh.write(json.dumps({
                    "kind": "sup",
                    "x": self.sup_x[i].tolist(),
                    "t": self.sup_t[i],
                    "y": self.sup_y[i],
                    "clean": self.sup_clean[i],
                    "noise": self.sup_noise[i],
                }) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "Dataset":
        colloc_x, colloc_t = [], []
        init_x, init_g, init_y = [], [], []
        sup_x, sup_t, sup_y, sup_clean, sup_noise = [], [], [], [], []
        meta = None
        with open(path) as fh:
            for line in fh:
                rec = json.loads(line)
                kind = rec["kind"]
                if kind == "meta":
                    meta = rec
                elif kind == "colloc":
                    colloc_x.append(rec["x"])
                    colloc_t.append(rec["t"])
                elif kind == "init":
                    init_x.append(rec["x"])
                    init_g.append(rec["g"])
                    if "y" in rec:
                        init_y.append(rec["y"])
                elif kind == "sup":
                    sup_x.append(rec["x"])
                    sup_t.append(rec["t"])
                    sup_y.append(rec["y"])
                    sup_clean.append(rec["clean"])
                    sup_noise.append(rec["noise"])
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
        if meta is None:
            raise ValueError("dataset file lacks a meta record")
        n = int(meta["space_dim"])

        def pts(rows):
            return np.asarray(rows, dtype=float).reshape(len(rows), n)

        return cls(
            colloc_x=pts(colloc_x),
            colloc_t=np.asarray(colloc_t, dtype=float),
            init_x=pts(init_x),
            init_values=np.asarray(init_g, dtype=float),
            sup_x=pts(sup_x),
            sup_t=np.asarray(sup_t, dtype=float),
            sup_y=np.asarray(sup_y, dtype=float),
            sup_clean=np.asarray(sup_clean, dtype=float),
            sup_noise=np.asarray(sup_noise, dtype=float),
            noise_var=float(meta["noise_var"]),
            label_bound=float(meta["label_bound"]),
            init_bound=float(meta["init_bound"]),
            init_labels=np.asarray(init_y, dtype=float) if meta["has_init_labels"] else None,
        )


def _uniform_space(problem: HjbProblem, count: int, rng) -> np.ndarray:
    return rng.uniform(problem.lower, problem.upper, (count, problem.space_dim))


def _ceil_bound(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    return float(math.ceil(np.max(np.abs(values))))


def sample_dataset(problem, n_colloc, n_init, n_sup, noise_var=0.0,
                   noise_kind="uniform", seed=0) -> Dataset:
    """Draw the three point sets and noisy supervision labels.

    Supervision labels are exact solution values plus noise; requires the
    problem to carry an exact solution whenever n_sup > 0.  Draw order is
    fixed (collocation x, t; init x; supervision x, t; noise), so equal
    seeds give bit-identical datasets.
    """
    if min(n_colloc, n_init, n_sup) < 0:
        raise ValueError("point counts must be nonnegative")
    if n_sup > 0 and problem.exact is None:
        raise ValueError("supervision labels need a problem with an exact solution")
    rng = np.random.default_rng(seed)
    colloc_x = _uniform_space(problem, n_colloc, rng)
    colloc_t = rng.uniform(0.0, problem.horizon, n_colloc)
    init_x = _uniform_space(problem, n_init, rng)
    init_values = np.asarray(problem.g(init_x), dtype=float).reshape(n_init)
    sup_x = _uniform_space(problem, n_sup, rng)
    sup_t = rng.uniform(0.0, problem.horizon, n_sup)
    noise = noise_draws(noise_kind, noise_var, n_sup, rng)
    if n_sup:
        clean = np.asarray(problem.exact.values(sup_x, sup_t), dtype=float)
    else:
        clean = np.zeros(0)
    y = clean + noise
    return Dataset(
        colloc_x=colloc_x,
        colloc_t=colloc_t,
        init_x=init_x,
        init_values=init_values,
        sup_x=sup_x,
        sup_t=sup_t,
        sup_y=y,
        sup_clean=clean,
        sup_noise=noise,
        noise_var=float(noise_var),
        label_bound=_ceil_bound(y),
        init_bound=_ceil_bound(init_values),
    )


def noisy_initial_dataset(problem, n_init, noise_var=0.0, seed=0,
                          n_colloc=0, noise_kind="uniform") -> Dataset:
    """Dataset for the unsupervised variant: noisy samples of g at t = 0.

    The supervision set is empty; initial points carry labels
    y = g(x) + noise.  Collocation points are included when requested since
    the unsupervised risk still contains the PDE term.
    """
    if min(n_colloc, n_init) < 0:
        raise ValueError("point counts must be nonnegative")
    rng = np.random.default_rng(seed)
    colloc_x = _uniform_space(problem, n_colloc, rng)
    colloc_t = rng.uniform(0.0, problem.horizon, n_colloc)
    init_x = _uniform_space(problem, n_init, rng)
    init_values = np.asarray(problem.g(init_x), dtype=float).reshape(n_init)
    noise = noise_draws(noise_kind, noise_var, n_init, rng)
    labels = init_values + noise
    return Dataset(
        colloc_x=colloc_x,
        colloc_t=colloc_t,
        init_x=init_x,
        init_values=init_values,
        sup_x=np.zeros((0, problem.space_dim)),
        sup_t=np.zeros(0),
        sup_y=np.zeros(0),
        sup_clean=np.zeros(0),
        sup_noise=np.zeros(0),
        noise_var=float(noise_var),
        label_bound=0.0,
        init_bound=_ceil_bound(labels),
        init_labels=labels,
    )
