"""Stationary and linear covariance functions on R^d."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import UnsupportedError

__all__ = [
    "KernelKind",
    "KernelSpec",
    "eval_kernel",
    "cross",
    "gram",
    "sigma_lipschitz_constant",
]


class KernelKind(str, enum.Enum):
    LINEAR = "linear"
    SE = "se"
    MATERN = "matern"

    @classmethod
    def parse(cls, name: str) -> "KernelKind":
        key = str(name).strip().lower().replace("-", "_")
        aliases = {
            "linear": cls.LINEAR,
            "se": cls.SE,
            "squared_exponential": cls.SE,
            "squaredexponential": cls.SE,
            "rbf": cls.SE,
            "matern": cls.MATERN,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown kernel kind {name!r}") from None


_MATERN_NUS = (1.5, 2.5)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    ``output_scale`` is clamped into (0, 1] so that k(x, x) <= 1 for the
    stationary kernels. ``nu`` is only read for Matern and must be 3/2 or 5/2.
    """

    kind: KernelKind = KernelKind.SE
    lengthscale: float = 0.5
    nu: float = 2.5
    output_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", KernelKind.parse(self.kind) if not isinstance(self.kind, KernelKind) else self.kind)
        if not (self.lengthscale > 0 and math.isfinite(self.lengthscale)):
            raise ValueError(f"lengthscale must be positive, got {self.lengthscale}")
        if self.kind is KernelKind.MATERN and float(self.nu) not in _MATERN_NUS:
            raise UnsupportedError(f"Matern smoothness must be one of {_MATERN_NUS}, got {self.nu}")
        if not self.output_scale > 0:
            raise ValueError(f"output_scale must be positive, got {self.output_scale}")
        object.__setattr__(self, "output_scale", min(float(self.output_scale), 1.0))
        object.__setattr__(self, "lengthscale", float(self.lengthscale))
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def is_stationary(self) -> bool:
        return self.kind is not KernelKind.LINEAR

    def replace(self, **changes) -> "KernelSpec":
        fields = dict(kind=self.kind, lengthscale=self.lengthscale, nu=self.nu, output_scale=self.output_scale)
        fields.update(changes)
        return KernelSpec(**fields)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "lengthscale": self.lengthscale,
            "nu": self.nu,
            "output_scale": self.output_scale,
        }


def _as_2d(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"expected a list of vectors, got array of shape {arr.shape}")
    return arr


def _from_sqdist(spec: KernelSpec, sq: np.ndarray) -> np.ndarray:
    if spec.kind is KernelKind.SE:
        return spec.output_scale * np.exp(-sq / (2.0 * spec.lengthscale**2))
    r = np.sqrt(np.maximum(sq, 0.0)) / spec.lengthscale
    if spec.nu == 1.5:
        a = math.sqrt(3.0) * r
        return spec.output_scale * (1.0 + a) * np.exp(-a)
    a = math.sqrt(5.0) * r
    return spec.output_scale * (1.0 + a + a * a / 3.0) * np.exp(-a)


def cross(spec: KernelSpec, A, B) -> np.ndarray:
    """Matrix of k(a_i, b_j) for the rows of ``A`` and ``B``."""
    A = _as_2d(A)
    B = _as_2d(B)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind is KernelKind.LINEAR:
        return A @ B.T
    return _from_sqdist(spec, cdist(A, B, "sqeuclidean"))


def eval_kernel(spec: KernelSpec, x, z) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if x.ndim != 1 or z.ndim != 1 or x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    return float(cross(spec, x[None, :], z[None, :])[0, 0])


def gram(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric Gram matrix; the lower triangle mirrors the upper one bit for bit."""
    P = _as_2d(points)
    if P.shape[0] == 0:
        raise ValueError("gram of an empty point set")
    K = cross(spec, P, P)
    upper = np.triu(K)
    return upper + np.triu(K, 1).T


def sigma_lipschitz_constant(spec: KernelSpec) -> float:
    """L1-Lipschitz constant of the posterior standard deviation (requires k(x, x) <= 1)."""
    if spec.kind is KernelKind.LINEAR:
        return 1.0
    base = math.sqrt(2.0) / spec.lengthscale
    if spec.kind is KernelKind.SE:
        return base
    if spec.nu <= 1.0:
        raise UnsupportedError("Lipschitz constant needs nu > 1")
    return base * math.sqrt(spec.nu / (spec.nu - 1.0))
