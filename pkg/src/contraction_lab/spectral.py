"""Truncated eigenbasis of the noise covariance and the low/high splitting.

States are plain ``numpy`` arrays of eigenbasis coordinates; the last axis
has length ``d`` and any leading axes are treated as a batch.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LipschitzConstants",
    "SpectralSpace",
    "WeightedGeometry",
    "compute_geometry",
    "eigenvalue_family",
    "project",
    "split_index_for",
    "weighted_norm",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def eigenvalue_family(name: str, d: int, **params) -> np.ndarray:
    """Generate ``d`` eigenvalues from a named family.

    ``"brownian_bridge"`` gives ``(pi k)^-2`` (inverse Dirichlet Laplacian on
    [0, 1]); ``"geometric"`` gives ``rho^k`` with ``rho`` in (0, 1);
    ``"power"`` gives ``scale * k^-p``.
    """
    if d < 1:
        raise ValueError("truncation dimension must be >= 1")
    k = np.arange(1, d + 1, dtype=float)
    if name == "brownian_bridge":
        return (np.pi * k) ** -2
    if name == "geometric":
        rho = float(params.get("rho", 0.5))
        if not 0.0 < rho < 1.0:
            raise ValueError("geometric family needs 0 < rho < 1")
        return rho**k
    if name == "power":
        p = float(params.get("p", 2.0))
        scale = float(params.get("scale", 1.0))
        if p <= 1.0 or scale <= 0.0:
            raise ValueError("power family needs p > 1 and scale > 0")
        return scale * k**-p
    raise ValueError(f"unknown eigenvalue family {name!r}")


@dataclass(frozen=True)
class SpectralSpace:
    """Galerkin truncation ``H^d`` split into ``H^l = span(e_1..e_n)`` and its complement.

    Parameters
    ----------
    eigenvalues : array_like
        ``lambda_1, ..., lambda_d`` of the covariance operator, all >= 0.
    split_index : int
        Dimension ``n`` of the low block, ``1 <= n <= d``. Every low
        eigenvalue must be strictly positive.
    monotone : bool
        If true, the eigenvalues are required to be non-increasing.
    """

    eigenvalues: np.ndarray
    split_index: int
    monotone: bool = True
    _sqrt: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lam = _frozen(self.eigenvalues)
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise ValueError("eigenvalues must be finite and non-negative")
        n = int(self.split_index)
        if not 1 <= n <= lam.size:
            raise ValueError(f"split index {n} outside [1, {lam.size}]")
        if np.any(lam[:n] <= 0):
            raise ValueError("covariance must be strictly positive on the low block")
        if self.monotone and np.any(np.diff(lam) > 0):
            raise ValueError("eigenvalues are declared monotone but increase")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "split_index", n)
        object.__setattr__(self, "_sqrt", _frozen(np.sqrt(lam)))

    @classmethod
    def from_family(cls, name: str, d: int, split_index: int, **params) -> "SpectralSpace":
        return cls(eigenvalue_family(name, d, **params), split_index)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    @property
    def truncation_dim(self) -> int:
        return self.dim

    @property
    def low(self) -> slice:
        return slice(0, self.split_index)

    @property
    def high(self) -> slice:
        return slice(self.split_index, self.dim)

    @property
    def lambda_star(self) -> float:
        """Smallest eigenvalue on the low block."""
        return float(self.eigenvalues[: self.split_index].min())

    @property
    def lambda_sup(self) -> float:
        """Largest eigenvalue on the low block."""
        return float(self.eigenvalues[: self.split_index].max())

    @property
    def lambda_max(self) -> float:
        """Operator norm of the covariance on the truncation."""
        return float(self.eigenvalues.max())

    @property
    def lambda_next(self) -> float:
        """Largest eigenvalue on the high block (0 if the block is empty)."""
        hi = self.eigenvalues[self.split_index :]
        return float(hi.max()) if hi.size else 0.0

    @property
    def trace(self) -> float:
        return float(self.eigenvalues.sum())

    @property
    def sqrt_eigenvalues(self) -> np.ndarray:
        return self._sqrt

    def truncate(self, d: int) -> "SpectralSpace":
        """Restrict to the first ``d`` modes, keeping the same splitting."""
        if d < self.split_index:
            raise ValueError(f"truncation {d} smaller than split index {self.split_index}")
        if d > self.dim:
            raise ValueError(f"cannot extend a {self.dim}-mode space to {d} modes")
        return SpectralSpace(self.eigenvalues[:d], self.split_index, self.monotone)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ValueError(f"vector has {x.shape[-1] if x.ndim else 0} coordinates, space has {self.dim}")
        return x

    def block_norms(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Euclidean norms ``(||x^l||, ||x^h||)`` along the last axis."""
        x = self.check(x)
        n = self.split_index
        return np.linalg.norm(x[..., :n], axis=-1), np.linalg.norm(x[..., n:], axis=-1)

    def embed(self, x) -> np.ndarray:
        """Zero-pad or cut coordinates to this truncation."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.dim,))
        m = min(self.dim, x.shape[-1])
        out[..., :m] = x[..., :m]
        return out


@dataclass(frozen=True)
class LipschitzConstants:
    """Block Lipschitz constants of the non-linearity.

    ``H_l, H_h`` bound the high component of ``b`` by low/high differences,
    ``L_l, L_h`` bound the low component. ``H_h < 1`` is required.
    """

    H_l: float
    H_h: float
    L_l: float
    L_h: float

    def __post_init__(self):
        vals = (self.H_l, self.H_h, self.L_l, self.L_h)
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError("Lipschitz constants must be finite and non-negative")
        if self.H_h >= 1:
            raise ValueError(f"H_h = {self.H_h} >= 1: no contraction on the high block")

    def scaled(self, factor: float) -> "LipschitzConstants":
        return LipschitzConstants(self.H_l * factor, self.H_h * factor, self.L_l * factor, self.L_h * factor)


@dataclass(frozen=True)
class WeightedGeometry:
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha >= 1:
            raise ValueError(f"alpha = {self.alpha} < 1")


def compute_geometry(lip: LipschitzConstants) -> WeightedGeometry:
    """Weight ``alpha = (1+L_h)/(1-H_h)`` and defect ``beta = alpha H_l + L_l - 1``."""
    if lip.H_h >= 1:
        raise ValueError("H_h must be < 1")
    alpha = (1.0 + lip.L_h) / (1.0 - lip.H_h)
    beta = alpha * lip.H_l + lip.L_l - 1.0
    return WeightedGeometry(alpha=alpha, beta=beta)


def weighted_norm(x, space: SpectralSpace, geom: WeightedGeometry | float) -> np.ndarray:
    """``||x^l|| + alpha ||x^h||`` along the last axis."""
    alpha = geom.alpha if isinstance(geom, WeightedGeometry) else float(geom)
    lo, hi = space.block_norms(x)
    out = lo + alpha * hi
    return float(out) if np.ndim(out) == 0 else out


def project(x, space: SpectralSpace, block: str) -> np.ndarray:
    """Orthogonal projection onto the low or high block (complement zeroed)."""
    x = space.check(x)
    out = np.zeros_like(x)
    if block == "low":
        out[..., space.low] = x[..., space.low]
    elif block == "high":
        out[..., space.high] = x[..., space.high]
    else:
        raise ValueError(f"block must be 'low' or 'high', got {block!r}")
    return out


def split_index_for(L: float, eigenvalues) -> int:
    """Smallest ``n`` with ``lambda_{n+1} < 1/(2L)``.

    Raises ``ValueError`` if ``L < 1`` or if no index inside the truncation
    satisfies the condition.
    """
    if L < 1:
        raise ValueError(f"gradient Lipschitz bound L = {L} must be >= 1")
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(np.diff(lam) > 0):
        raise ValueError("eigenvalues must be non-increasing")
    threshold = 1.0 / (2.0 * L)
    # lam[k] is lambda_{k+1}; n = k for the first k >= 1 below threshold
    for k in range(1, lam.size):
        if lam[k] < threshold:
            return k
    raise ValueError(
        f"no lambda_(n+1) < {threshold:g} within {lam.size} modes; increase the truncation"
    )
