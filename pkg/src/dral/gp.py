"""Exact GP regression restricted to a finite candidate grid.

The grid Gram matrix is computed once and shared by every state derived from
the same prior. A state holds the Cholesky factor ``L`` of ``K_t + s2 I`` and
``V = L^{-1} K[obs, :]`` so that

    var(x)      = k(x, x) - ||V[:, x]||^2
    cov(x, x')  = k(x, x') - V[:, x] . V[:, x']
    mean(x)     = V[:, x] . (L^{-1} y)

Appending one observation adds one row to ``L`` and ``V`` (O(t^2 + t n)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, eigh, solve_triangular

from .errors import NumericalError, StateError
from .kernel import KernelSpec, gram

__all__ = [
    "GpState",
    "PriorSample",
    "sample_prior",
    "beta_confidence",
    "fit_hyperparameters",
    "DEFAULT_LENGTHSCALES",
    "DEFAULT_NOISE_VARIANCES",
]

DEFAULT_LENGTHSCALES = np.logspace(-2, 1, 24)
DEFAULT_NOISE_VARIANCES = np.logspace(-6, 0, 16)


class GpState:
    """Posterior of a zero-mean GP over a fixed finite grid.

    Instances are treated as immutable: :meth:`extend` and :meth:`finalize`
    return new states. Use :meth:`prior` or :meth:`build` to construct one.

    Labels may be deferred (``None``) while the design is being extended;
    variance queries work throughout, mean queries raise :class:`StateError`
    until every label is known.
    """

    def __init__(self, kernel, noise_variance, grid, K_grid, indices, labels, chol, V, raw_var, cov=None):
        self.kernel = kernel
        self.noise_variance = float(noise_variance)
        self.grid = grid
        self.K_grid = K_grid
        self.observed_indices = tuple(indices)
        self.labels = tuple(labels)
        self.chol = chol
        self._V = V
        self.raw_var = raw_var
        self._cov = cov
        self._white = None
        self._mean = None

    # -- construction -----------------------------------------------------

    @classmethod
    def prior(cls, kernel: KernelSpec, noise_variance: float, grid, K_grid=None) -> "GpState":
        if not noise_variance > 0:
            raise ValueError(f"noise variance must be positive, got {noise_variance}")
        grid = np.asarray(grid, dtype=float)
        if grid.ndim == 1:
            grid = grid[:, None]
        if K_grid is None:
            K_grid = gram(kernel, grid)
        K_grid.setflags(write=False)
        raw_var = np.diag(K_grid).copy()
        return cls(kernel, noise_variance, grid, K_grid, (), (), np.zeros((0, 0)), np.zeros((0, len(grid))), raw_var)

    @classmethod
    def build(cls, kernel, noise_variance, grid, indices, labels=None, K_grid=None) -> "GpState":
        """Batch construction from scratch with one dense Cholesky."""
        state = cls.prior(kernel, noise_variance, grid, K_grid)
        idx = [state._check_index(i) for i in indices]
        if not idx:
            return state
        if labels is None:
            labels = [None] * len(idx)
        if len(labels) != len(idx):
            raise ValueError("labels and indices differ in length")
        labels = [_check_label(y) for y in labels]
        Kt = state.K_grid[np.ix_(idx, idx)] + state.noise_variance * np.eye(len(idx))
        try:
            L = cholesky(Kt, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"Cholesky of K + s2 I failed: {exc}") from exc
        V = solve_triangular(L, state.K_grid[idx, :], lower=True)
        raw_var = np.diag(state.K_grid) - np.einsum("ij,ij->j", V, V)
        return cls(kernel, noise_variance, state.grid, state.K_grid, idx, labels, L, V, raw_var)

    def extend(self, j: int, y=None) -> "GpState":
        """Append grid point ``j`` with label ``y`` (``None`` defers the label)."""
        j = self._check_index(j)
        y = _check_label(y)
        t = self.t
        l = self._V[:, j]
        d2 = self.raw_var[j] + self.noise_variance
        if not d2 > 0:
            raise NumericalError(f"non-positive pivot {d2} while adding grid point {j}")
        d = math.sqrt(d2)
        L = np.zeros((t + 1, t + 1))
        L[:t, :t] = self.chol
        L[t, :t] = l
        L[t, t] = d
        v = (self.K_grid[j, :] - l @ self._V) / d
        V = np.vstack([self._V, v])
        raw_var = self.raw_var - v * v
        cov = None if self._cov is None else self._cov - np.outer(v, v)
        return GpState(
            self.kernel, self.noise_variance, self.grid, self.K_grid,
            self.observed_indices + (j,), self.labels + (y,), L, V, raw_var, cov,
        )

    def finalize(self, labels) -> "GpState":
        """Supply all labels at once (after a label-free selection loop)."""
        labels = [_check_label(y) for y in labels]
        if len(labels) != self.t or any(y is None for y in labels):
            raise ValueError(f"expected {self.t} finite labels")
        return GpState(
            self.kernel, self.noise_variance, self.grid, self.K_grid,
            self.observed_indices, labels, self.chol, self._V, self.raw_var, self._cov,
        )

    def with_hyperparameters(self, kernel, noise_variance) -> "GpState":
        """Rebuild the same design under new hyperparameters."""
        K_grid = self.K_grid if kernel == self.kernel else None
        labels = self.labels if self.t else None
        return GpState.build(kernel, noise_variance, self.grid, self.observed_indices, labels, K_grid)

    # -- basic properties -------------------------------------------------

    @property
    def t(self) -> int:
        return len(self.observed_indices)

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    @property
    def finalized(self) -> bool:
        return all(y is not None for y in self.labels)

    def _check_index(self, i) -> int:
        i = int(i)
        if not 0 <= i < self.n:
            raise IndexError(f"grid index {i} out of range [0, {self.n})")
        return i

    def _whitened_labels(self) -> np.ndarray:
        if not self.finalized:
            raise StateError("labels not finalized; call finalize() before querying the mean")
        if self._white is None:
            y = np.asarray(self.labels, dtype=float)
            self._white = solve_triangular(self.chol, y, lower=True) if self.t else y
        return self._white

    @property
    def alpha(self) -> np.ndarray:
        """Weights (K + s2 I)^{-1} y."""
        w = self._whitened_labels()
        if self.t == 0:
            return w
        return solve_triangular(self.chol, w, lower=True, trans="T")

    # -- vector queries ---------------------------------------------------

    def mean_vector(self) -> np.ndarray:
        if self._mean is None:
            w = self._whitened_labels()
            self._mean = w @ self._V if self.t else np.zeros(self.n)
        return self._mean

    def var_vector(self) -> np.ndarray:
        """Posterior variances over the grid, clamped at 0."""
        return np.maximum(self.raw_var, 0.0)

    def cov_matrix(self) -> np.ndarray:
        """Full posterior covariance over the grid (cached, propagated by extend)."""
        if self._cov is None:
            self._cov = self.K_grid - self._V.T @ self._V
        return self._cov

    def lookahead_matrix(self) -> np.ndarray:
        """``M[i, j]`` = variance at grid point i after also observing grid point j."""
        C = self.cov_matrix()
        M = self.raw_var[:, None] - C * C / (self.raw_var[None, :] + self.noise_variance)
        return np.maximum(M, 0.0)

    # -- scalar queries ---------------------------------------------------

    def posterior_mean(self, i: int) -> float:
        i = self._check_index(i)
        return float(self.mean_vector()[i])

    def posterior_var(self, i: int) -> float:
        i = self._check_index(i)
        return max(0.0, float(self.raw_var[i]))

    def posterior_cov(self, i: int, j: int) -> float:
        i = self._check_index(i)
        j = self._check_index(j)
        if self._cov is not None:
            return float(self._cov[i, j])
        return float(self.K_grid[i, j] - self._V[:, i] @ self._V[:, j])

    def lookahead_var(self, i: int, j: int) -> float:
        """Variance at ``i`` if ``j`` were observed next; needs no label."""
        c = self.posterior_cov(i, j)
        return max(0.0, float(self.raw_var[i] - c * c / (self.raw_var[j] + self.noise_variance)))

    # -- scalar summaries -------------------------------------------------

    def log_marginal_likelihood(self) -> float:
        if self.t == 0:
            raise StateError("log marginal likelihood needs at least one observation")
        w = self._whitened_labels()
        return float(-0.5 * w @ w - np.log(np.diag(self.chol)).sum() - 0.5 * self.t * math.log(2 * math.pi))

    def information_gain(self) -> float:
        """0.5 log det(I + K_t / s2) of the observed set."""
        if self.t == 0:
            return 0.0
        return float(np.log(np.diag(self.chol)).sum() - 0.5 * self.t * math.log(self.noise_variance))


def _check_label(y):
    if y is None:
        return None
    y = float(y)
    if not math.isfinite(y):
        raise ValueError(f"label must be finite, got {y}")
    return y


@dataclass(frozen=True)
class PriorSample:
    values: np.ndarray
    seed: int


def sample_prior(kernel: KernelSpec, grid, seed: int, K_grid=None) -> PriorSample:
    """Draw f ~ N(0, K_grid) as L z with a seeded standard normal z."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    if len(grid) == 0:
        raise ValueError("empty grid")
    if K_grid is None:
        K_grid = gram(kernel, grid)
    eye = np.eye(len(grid))
    for jitter in (1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
        try:
            L = cholesky(K_grid + jitter * eye, lower=True)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise NumericalError("prior Gram matrix not positive definite even with 1e-6 jitter")
    z = np.random.default_rng(seed).standard_normal(len(grid))
    return PriorSample(values=L @ z, seed=int(seed))


def beta_confidence(grid_size: int, delta: float) -> float:
    """Squared confidence radius 2 log(|X| / delta) for a finite domain."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if grid_size < 1:
        raise ValueError("grid_size must be at least 1")
    return 2.0 * math.log(grid_size / delta)


def fit_hyperparameters(points, y, kernel: KernelSpec, lengthscales=None, noise_variances=None):
    """Grid-search maximum marginal likelihood over (lengthscale, noise variance).

    Each lengthscale costs one eigendecomposition, after which every noise
    level is O(t). Ties go to the smaller lengthscale, then the smaller noise.
    Returns ``(kernel, noise_variance, log_marginal_likelihood)``.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    t = len(y)
    if t < 2:
        raise StateError("hyperparameter fitting needs at least 2 observations")
    ells = DEFAULT_LENGTHSCALES if lengthscales is None else np.sort(np.asarray(lengthscales, dtype=float))
    s2s = DEFAULT_NOISE_VARIANCES if noise_variances is None else np.sort(np.asarray(noise_variances, dtype=float))
    const = 0.5 * t * math.log(2 * math.pi)
    best = (-math.inf, None, None)
    for ell in ells:
        spec = kernel.replace(lengthscale=float(ell))
        lam, Q = eigh(gram(spec, X))
        lam = np.maximum(lam, 0.0)
        proj = (Q.T @ y) ** 2
        for s2 in s2s:
            denom = lam + s2
            lml = -0.5 * np.sum(proj / denom) - 0.5 * np.sum(np.log(denom)) - const
            if lml > best[0]:
                best = (float(lml), spec, float(s2))
    if best[1] is None:
        raise NumericalError("marginal likelihood was not finite anywhere on the search grid")
    return best[1], best[2], best[0]
