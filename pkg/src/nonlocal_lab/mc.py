"""Deterministic Monte Carlo plumbing.

Samples are processed in fixed-size batches. Batch j of a run draws from
its own Philox stream keyed by (seed, label, j), so the value of every
sample depends only on (seed, n) and never on scheduling. Per-batch
partial sums are reduced in batch order, which makes results bit-identical
across worker counts.
"""

from __future__ import annotations

import json
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

BATCH_SIZE = 1 << 15

Kernel = Callable[[np.random.Generator, int], tuple[np.ndarray, ...]]


def worker_count(workers: int | None = None) -> int:
    """Requested worker count; NONLOCAL_LAB_THREADS caps the default of 1."""
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get("NONLOCAL_LAB_THREADS", "1")))


def batch_rng(seed: int, label: str, batch: int) -> np.random.Generator:
    """Philox generator for one batch of one labelled run."""
    crc = zlib.crc32(label.encode())
    key = [np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64((crc << 32) | (batch & 0xFFFFFFFF))]
    return np.random.Generator(np.random.Philox(key=key))


def run_batched(
    n: int,
    seed: int,
    label: str,
    kernel: Kernel,
    workers: int | None = None,
) -> tuple[np.ndarray, ...]:
    """Accumulate kernel partials over ceil(n / BATCH_SIZE) batches.

    The kernel receives (rng, count) and must return a tuple of float
    arrays whose shapes do not depend on count. Partials are summed in
    batch order regardless of which worker computed them.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    counts = [min(BATCH_SIZE, n - j * BATCH_SIZE) for j in range((n + BATCH_SIZE - 1) // BATCH_SIZE)]

    def one(j: int) -> tuple[np.ndarray, ...]:
        return kernel(batch_rng(seed, label, j), counts[j])

    nw = worker_count(workers)
    if nw == 1 or len(counts) == 1:
        parts = [one(j) for j in range(len(counts))]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            parts = list(pool.map(one, range(len(counts))))

    acc = [np.array(a, dtype=float, copy=True) for a in parts[0]]
    for part in parts[1:]:
        for a, p in zip(acc, part):
            a += p
    return tuple(acc)


@dataclass(frozen=True)
class McEstimate:
    """Sample mean with its standard error."""

    mean: float
    stderr: float
    n: int
    seed: int

    @classmethod
    def from_sums(cls, s: float, s2: float, n: int, seed: int) -> "McEstimate":
        mean = s / n
        var = max(s2 - n * mean * mean, 0.0) / max(n - 1, 1)
        return cls(float(mean), float(np.sqrt(var / n)), n, seed)

    def sigma_ratio(self, target: float) -> float:
        """(mean - target) in units of the standard error."""
        if self.stderr == 0.0:
            return 0.0 if self.mean == target else float("inf")
        return (self.mean - target) / self.stderr


def _stderr_table(sums: np.ndarray, sumsq: np.ndarray, n: int) -> np.ndarray:
    means = sums / n
    var = np.maximum(sumsq - n * means**2, 0.0) / max(n - 1, 1)
    return np.sqrt(var / n)


@dataclass
class JointTable:
    """Estimated joint outcome probabilities with per-cell standard errors."""

    means: np.ndarray
    stderrs: np.ndarray
    n: int
    seed: int
    labels_a: list
    labels_b: list

    @classmethod
    def from_sums(cls, sums, sumsq, n, seed, labels_a, labels_b) -> "JointTable":
        return cls(sums / n, _stderr_table(np.asarray(sums), np.asarray(sumsq), n), n, seed, list(labels_a), list(labels_b))

    def cell(self, a: int, b: int) -> McEstimate:
        return McEstimate(float(self.means[a, b]), float(self.stderrs[a, b]), self.n, self.seed)

    def marginal_a(self) -> np.ndarray:
        return self.means.sum(axis=1)

    def marginal_b(self) -> np.ndarray:
        return self.means.sum(axis=0)

    def max_sigma(self, oracle: np.ndarray) -> float:
        """Largest |mean - oracle| / stderr over all cells."""
        se = np.where(self.stderrs > 0, self.stderrs, np.inf)
        ratios = np.abs(self.means - np.asarray(oracle)) / se
        exact = (self.stderrs == 0) & (np.abs(self.means - np.asarray(oracle)) > 0)
        if exact.any():
            return float("inf")
        return float(ratios.max())

    def to_json(self) -> str:
        cells = [
            {"a": self.labels_a[i], "b": self.labels_b[j], "mean": float(self.means[i, j]), "stderr": float(self.stderrs[i, j])}
            for i in range(self.means.shape[0])
            for j in range(self.means.shape[1])
        ]
        return json.dumps({"cells": cells, "n": self.n, "seed": self.seed})

    def to_csv(self, oracle: np.ndarray | None = None) -> str:
        lines = ["a,b,mean,stderr,oracle,abs_diff,sigma_ratio"]
        for i in range(self.means.shape[0]):
            for j in range(self.means.shape[1]):
                mean, se = self.means[i, j], self.stderrs[i, j]
                if oracle is None:
                    lines.append(f"{self.labels_a[i]},{self.labels_b[j]},{mean:.12g},{se:.12g},,,")
                else:
                    diff = abs(mean - oracle[i, j])
                    ratio = diff / se if se > 0 else (0.0 if diff == 0 else float("inf"))
                    lines.append(
                        f"{self.labels_a[i]},{self.labels_b[j]},{mean:.12g},{se:.12g},"
                        f"{oracle[i, j]:.12g},{diff:.12g},{ratio:.12g}"
                    )
        return "\n".join(lines) + "\n"
