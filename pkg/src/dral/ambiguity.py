"""L-infinity ambiguity balls of distributions over a finite grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DiscreteDistribution",
    "AmbiguitySet",
    "worst_case_expectation",
    "sample",
    "gaussian_reference",
    "uniform_reference",
    "reference_from_csv",
]


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probability vector over grid indices."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d vector")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    def expectation(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))


@dataclass(frozen=True)
class AmbiguitySet:
    """``{p : ||p_ref - p||_inf <= eta}`` intersected with the simplex."""

    p_ref: DiscreteDistribution
    eta: float

    def __post_init__(self):
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be a finite nonnegative number, got {self.eta}")
        object.__setattr__(self, "eta", float(self.eta))

    def __len__(self):
        return len(self.p_ref)

    def contains(self, p, tol: float = 1e-10) -> bool:
        w = p.weights if isinstance(p, DiscreteDistribution) else np.asarray(p, dtype=float)
        return bool(
            np.all(w >= -tol)
            and abs(w.sum() - 1.0) <= tol
            and np.max(np.abs(w - self.p_ref.weights)) <= self.eta + tol
        )


def worst_case_expectation(amb: AmbiguitySet, values):
    """Solve ``max_{p in amb} sum_i p_i v_i`` exactly.

    The feasible set is a box intersected with the simplex, so the LP is a
    fractional knapsack: start every coordinate at its lower bound and pour
    the remaining mass into the largest values first. Ties go to the lower
    index. Returns ``(value, p_star)``.
    """
    v = np.asarray(values, dtype=float)
    ref = amb.p_ref.weights
    if v.shape != ref.shape:
        raise ValueError(f"values have shape {v.shape}, grid has {ref.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    lower = np.maximum(ref - amb.eta, 0.0)
    room = (ref + amb.eta) - lower
    leftover = 1.0 - lower.sum()
    order = np.argsort(-v, kind="stable")
    cap = room[order]
    filled_before = np.concatenate(([0.0], np.cumsum(cap)[:-1]))
    add = np.clip(leftover - filled_before, 0.0, cap)
    p = lower.copy()
    p[order] += add
    return float(p @ v), DiscreteDistribution(p)


def sample(p: DiscreteDistribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw using a single uniform from ``rng``."""
    cdf = np.cumsum(p.weights)
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))


def gaussian_reference(grid, variance_scale: float) -> DiscreteDistribution:
    """Weights proportional to the N(0, variance_scale I) density at each grid point."""
    if not variance_scale > 0:
        raise ValueError("variance_scale must be positive")
    X = np.asarray(grid, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    logw = -np.einsum("ij,ij->i", X, X) / (2.0 * variance_scale)
    w = np.exp(logw - logw.max())
    return DiscreteDistribution(w / w.sum())


def uniform_reference(n: int) -> DiscreteDistribution:
    return DiscreteDistribution(np.full(n, 1.0 / n))


def reference_from_csv(path, n: int) -> DiscreteDistribution:
    """Read one weight per line (a header line is skipped) and renormalize."""
    rows = []
    with open(Path(path), newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                rows.append(float(row[-1]))
            except ValueError:
                if k == 0:
                    continue
                raise ValueError(f"{path}:{k + 1}: non-numeric weight {row[-1]!r}") from None
    w = np.asarray(rows, dtype=float)
    if w.size != n:
        raise ValueError(f"{path}: expected {n} weights, found {w.size}")
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError(f"{path}: weights must be nonnegative with positive sum")
    return DiscreteDistribution(w / w.sum())
