"""Input-selection rules for active learning on a finite grid.

Every rule returns a grid index. Deterministic rules break ties toward the
lowest index (``np.argmin``/``np.argmax`` semantics); randomized rules draw
from a caller-owned :class:`numpy.random.Generator`.
"""

from __future__ import annotations

import enum

import numpy as np

from .ambiguity import AmbiguitySet, DiscreteDistribution, sample, worst_case_expectation
from .gp import GpState

__all__ = [
    "StrategyKind",
    "worst_case_distribution",
    "feasible_set",
    "select",
    "select_us",
    "select_rs",
    "select_variance_reduction",
    "select_epig",
    "select_dr_random",
    "select_dr_variance_reduction",
    "select_cdr_variance_reduction",
    "expected_lookahead",
    "epig_scores",
]

FEASIBILITY_TOL = 1e-12
_RHO2_CAP = 1.0 - 1e-12


class StrategyKind(str, enum.Enum):
    US = "us"
    RS = "rs"
    VARIANCE_REDUCTION = "variance_reduction"
    EPIG = "epig"
    DR_RANDOM = "dr_random"
    DR_VARIANCE_REDUCTION = "dr_variance_reduction"
    CDR_VARIANCE_REDUCTION = "cdr_variance_reduction"

    @classmethod
    def parse(cls, name) -> "StrategyKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
        for kind in cls:
            if key in (kind.value, kind.name.lower(), kind.value.replace("_", "")):
                return kind
        raise ValueError(f"unknown strategy {name!r}; choose from {[k.value for k in cls]}")

    @property
    def randomized(self) -> bool:
        return self in (StrategyKind.RS, StrategyKind.DR_RANDOM)

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    StrategyKind.US: "US",
    StrategyKind.RS: "RS",
    StrategyKind.VARIANCE_REDUCTION: "Variance reduction",
    StrategyKind.EPIG: "EPIG",
    StrategyKind.DR_RANDOM: "DR random",
    StrategyKind.DR_VARIANCE_REDUCTION: "DR variance reduction",
    StrategyKind.CDR_VARIANCE_REDUCTION: "CDR variance reduction",
}


def worst_case_distribution(state: GpState, amb: AmbiguitySet):
    """``(value, p_t)`` maximizing the expected current posterior variance over ``amb``."""
    return worst_case_expectation(amb, state.var_vector())


def expected_lookahead(state: GpState, weights) -> np.ndarray:
    """Score per candidate j: sum_i w_i * var(i | j observed)."""
    return np.asarray(weights, dtype=float) @ state.lookahead_matrix()


def feasible_set(state: GpState, threshold: float) -> np.ndarray:
    """Boolean mask of candidates whose current variance reaches ``threshold``."""
    return state.var_vector() >= threshold - FEASIBILITY_TOL


def select_us(state: GpState) -> int:
    return int(np.argmax(state.var_vector()))


def select_rs(grid_size: int, rng: np.random.Generator, p: DiscreteDistribution | None = None) -> int:
    if p is None:
        return int(rng.integers(grid_size))
    return sample(p, rng)


def select_variance_reduction(state: GpState) -> int:
    return int(np.argmin(expected_lookahead(state, np.full(state.n, 1.0 / state.n))))


def epig_scores(state: GpState, p: DiscreteDistribution, literal: bool = False) -> np.ndarray:
    """Expected predictive information gain of each candidate for targets drawn from ``p``.

    The default is the Gaussian mutual information -0.5 log(1 - rho^2).
    ``literal=True`` scores E_p[log |rho|] instead, which ranks candidates
    differently once averaged over targets.
    """
    support = np.flatnonzero(p.weights > 0)
    w = p.weights[support]
    C = state.cov_matrix()[support, :]
    s = state.raw_var + state.noise_variance
    rho2 = C * C / (s[support][:, None] * s[None, :])
    if literal:
        with np.errstate(divide="ignore"):
            terms = 0.5 * np.log(rho2)
    else:
        terms = -0.5 * np.log1p(-np.minimum(rho2, _RHO2_CAP))
    return w @ terms


def select_epig(state: GpState, p: DiscreteDistribution, literal: bool = False) -> int:
    return int(np.argmax(epig_scores(state, p, literal)))


def select_dr_random(state: GpState, amb: AmbiguitySet, rng: np.random.Generator) -> int:
    _, p_t = worst_case_distribution(state, amb)
    return sample(p_t, rng)


def select_dr_variance_reduction(state: GpState, amb: AmbiguitySet) -> int:
    _, p_t = worst_case_distribution(state, amb)
    return int(np.argmin(expected_lookahead(state, p_t.weights)))


def select_cdr_variance_reduction(state: GpState, amb: AmbiguitySet) -> int:
    """Greedy lookahead restricted to candidates at least as uncertain as the worst-case average."""
    threshold, p_t = worst_case_distribution(state, amb)
    mask = feasible_set(state, threshold)
    if not mask.any():
        raise AssertionError("feasible set is empty; the max-variance point must always qualify")
    scores = np.where(mask, expected_lookahead(state, p_t.weights), np.inf)
    return int(np.argmin(scores))


def select(
    kind: StrategyKind,
    state: GpState,
    amb: AmbiguitySet,
    rng: np.random.Generator,
    *,
    rs_distribution: DiscreteDistribution | None = None,
    epig_literal: bool = False,
) -> int:
    """Dispatch to the rule for ``kind``. ``amb.p_ref`` is the EPIG target."""
    kind = StrategyKind.parse(kind)
    if kind is StrategyKind.US:
        return select_us(state)
    if kind is StrategyKind.RS:
        return select_rs(state.n, rng, rs_distribution)
    if kind is StrategyKind.VARIANCE_REDUCTION:
        return select_variance_reduction(state)
    if kind is StrategyKind.EPIG:
        return select_epig(state, amb.p_ref, epig_literal)
    if kind is StrategyKind.DR_RANDOM:
        return select_dr_random(state, amb, rng)
    if kind is StrategyKind.DR_VARIANCE_REDUCTION:
        return select_dr_variance_reduction(state, amb)
    return select_cdr_variance_reduction(state, amb)
