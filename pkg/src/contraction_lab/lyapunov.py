"""Quadratic Lyapunov function ``V(x) = 1 + ||x||^2`` and its drift condition ``LV <= C - eta V``.

The dynamics are ``dX = (-X + b(X)) dt + sqrt(2) dW`` with ``W`` a ``G``-Wiener
process, so the generator acting on ``V`` is

    LV(x) = <DV(x), -x + b(x)> + sum_k lambda_k D^2 V(x)[e_k, e_k]
          = 2 <x, -x + b(x)> + 2 trace(G).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .drifts import DriftModel
from .spectral import SpectralSpace, WeightedGeometry

__all__ = [
    "FitReport",
    "GeneratorCheck",
    "LyapunovSpec",
    "SampleSpec",
    "closed_form_constants",
    "derived_quantities",
    "fit_drift_constants",
    "generator_V",
    "mc_generator_check",
    "validate_drift_constants",
]

logger = logging.getLogger(__name__)

C_FLOOR = 1e-12


def _V(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 1.0 + np.sum(x * x, axis=-1)


def generator_V(x, drift: DriftModel, space: SpectralSpace):
    """``LV(x) = 2 <x, -x + b(x)> + 2 trace(G)`` for ``V = 1 + ||x||^2`` (batched over leading axes)."""
    x = space.check(x)
    out = 2.0 * np.sum(x * (drift(x) - x), axis=-1) + 2.0 * space.trace
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LyapunovSpec:
    """Drift condition ``LV <= C - eta V`` for quadratic ``V`` with its derived constants.

    ``theta = sup ||DV|| / V = 1`` and ``R_S`` is the largest weighted distance
    between points with ``V(x) + V(y) < 8 C / eta``. ``empirical`` marks
    constants obtained by sampling rather than by a closed-form bound.
    """

    C: float
    eta: float
    theta: float
    R_S: float
    form: str = "quadratic"
    empirical: bool = False

    def __post_init__(self):
        if self.form != "quadratic":
            raise ValueError(f"only the quadratic Lyapunov function is supported, got {self.form!r}")
        if not (self.C > 0 and self.eta > 0):
            raise ValueError("C and eta must be > 0")

    @classmethod
    def quadratic(cls, C: float, eta: float, geom: WeightedGeometry, space: SpectralSpace,
                  empirical: bool = False) -> "LyapunovSpec":
        theta, R_S = derived_quantities(C, eta, geom, space)
        return cls(C=float(C), eta=float(eta), theta=theta, R_S=R_S, empirical=empirical)

    def value(self, x) -> np.ndarray:
        return _V(x)

    def gradient(self, x) -> np.ndarray:
        return 2.0 * np.asarray(x, dtype=float)

    def in_level_set(self, x, y) -> np.ndarray:
        """Membership of ``(x, y)`` in ``{V(x) + V(y) < 8 C / eta}``."""
        return _V(x) + _V(y) < 8.0 * self.C / self.eta

    def as_dict(self) -> dict:
        return {"form": self.form, "C": self.C, "eta": self.eta, "theta": self.theta,
                "R_S": self.R_S, "empirical": self.empirical}


def derived_quantities(C: float, eta: float, geom: WeightedGeometry | float,
                       space: SpectralSpace | None = None) -> tuple[float, float]:
    """``(theta, R_S)`` for ``V = 1 + ||x||^2``.

    ``theta = max_r 2r / (1 + r^2) = 1``. With ``K = 8C/eta - 2`` the level
    set is ``||x||^2 + ||y||^2 < K``, so ``||x - y|| < sqrt(2K)`` (antipodal
    points) and maximising ``||u^l|| + alpha ||u^h||`` over ``||u||^2 <= 2K``
    gives ``R_S = sqrt(2 (1 + alpha^2) K)``. If the high block is empty the
    weight never enters and ``R_S = sqrt(2K)``.
    """
    alpha = geom.alpha if isinstance(geom, WeightedGeometry) else float(geom)
    K = 8.0 * C / eta - 2.0
    if not K > 0:
        raise ValueError(
            f"8C/eta = {8.0 * C / eta:g} <= 2: V >= 1 makes the level set empty; C is inconsistent with eta"
        )
    has_high = space is None or space.split_index < space.dim
    weight = 1.0 + alpha * alpha if has_high else 1.0
    return 1.0, math.sqrt(2.0 * weight * K)


def closed_form_constants(drift: DriftModel, space: SpectralSpace, eta: float) -> tuple[float, float]:
    """Admissible ``(C, eta)`` for ``b = -G(a x + grad m)`` under the growth pair ``(b0, c0)``.

    The pair bounds ``<G x, grad m(x)> >= -lambda_1 ||x|| (b0 + c0 ||x||)``.

    With ``kappa = max(1, lambda_1)``,
    ``LV <= 2(-(1 - kappa c0) r^2 + kappa b0 r) + 2 trace(G)``, and maximising
    ``LV + eta V`` over ``r = ||x||`` gives
    ``C = 2 trace(G) + eta + (kappa b0)^2 / (2 (1 - kappa c0) - eta)``.
    Requires ``eta < 1 - kappa c0``.
    """
    pot = drift.potential
    if pot is None or pot.growth is None:
        raise ValueError(f"drift {drift.name!r} declares no growth bounds")
    b0, c0 = pot.growth
    kappa = max(1.0, space.lambda_max)
    if not 0 < eta < 1.0 - kappa * c0:
        raise ValueError(f"eta = {eta} outside (0, 1 - c) = (0, {1.0 - kappa * c0:g})")
    A = 2.0 * (1.0 - kappa * c0) - eta
    C = 2.0 * space.trace + eta + (kappa * b0) ** 2 / A
    return float(C), float(eta)


@dataclass(frozen=True)
class SampleSpec:
    """Deterministic sample set: radial shells times directions, plus Gaussian draws.

    Directions are the signed coordinate axes of the first ``axis_modes``
    modes and ``n_directions`` random unit vectors; the Gaussian draws have
    covariance ``scale^2 G / lambda_1``.
    """

    radii: tuple[float, ...] = tuple(np.linspace(0.0, 6.0, 61))
    n_directions: int = 32
    axis_modes: int = 4
    n_gaussian: int = 2000
    scale: float = 3.0
    seed: int = 0

    def points(self, space: SpectralSpace) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        d = space.dim
        axes = np.eye(d)[: min(self.axis_modes, d)]
        dirs = rng.standard_normal((self.n_directions, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = np.concatenate([axes, -axes, dirs])
        shells = np.asarray(self.radii)[:, None, None] * dirs[None]
        gauss = self.scale * space.sqrt_eigenvalues / space.sqrt_eigenvalues[0] * rng.standard_normal((self.n_gaussian, d))
        return np.concatenate([shells.reshape(-1, d), gauss])


@dataclass
class FitReport:
    C: float
    eta: float
    argmax: list
    n_samples: int
    closed_form: tuple[float, float] | None = None
    empirical: bool = True
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"C": self.C, "eta": self.eta, "argmax": self.argmax, "n_samples": self.n_samples,
                "closed_form": self.closed_form, "empirical": self.empirical, "notes": self.notes}


def fit_drift_constants(drift: DriftModel, space: SpectralSpace, eta_target: float,
                        sample_spec: SampleSpec | None = None) -> tuple[float, float, FitReport]:
    """Sample-based ``C = max(LV + eta V)`` at ``eta = eta_target``, plus the closed form when available.

    Raises ``ValueError`` when the drift declares growth bounds and
    ``eta_target`` violates the closed-form precondition.
    """
    if not eta_target > 0:
        raise ValueError("eta_target must be > 0")
    closed = None
    pot = drift.potential
    if pot is not None and pot.growth is not None:
        closed = closed_form_constants(drift, space, eta_target)
    spec = sample_spec or SampleSpec()
    pts = spec.points(space)
    vals = generator_V(pts, drift, space) + eta_target * _V(pts)
    i = int(np.argmax(vals))
    C = max(float(vals[i]), C_FLOOR)
    rep = FitReport(C=C, eta=eta_target, argmax=pts[i].tolist(), n_samples=int(pts.shape[0]), closed_form=closed)
    if closed is not None and closed[0] < C * (1 - 1e-12):
        rep.notes.append("sampled maximum exceeds the closed-form bound")
        logger.warning("sampled C %.6g exceeds closed-form C %.6g", C, closed[0])
    return C, eta_target, rep


def validate_drift_constants(drift: DriftModel, space: SpectralSpace, C: float, eta: float,
                             n: int = 10_000, seed: int = 1, scale: float = 3.0) -> dict:
    """Check ``LV + eta V <= C`` on a fresh sample (use a seed disjoint from the fit)."""
    rng = np.random.default_rng(seed)
    d = space.dim
    half = n // 2
    gauss = scale * space.sqrt_eigenvalues / space.sqrt_eigenvalues[0] * rng.standard_normal((half, d))
    u = rng.standard_normal((n - half, d))
    u *= (rng.uniform(0.0, 2.0 * scale, (n - half, 1)) / np.linalg.norm(u, axis=1, keepdims=True))
    pts = np.concatenate([gauss, u])
    excess = generator_V(pts, drift, space) + eta * _V(pts) - C
    return {"n": n, "max_excess": float(excess.max()), "violations": int(np.sum(excess > 1e-10 * max(1.0, abs(C)))),
            "passed": bool(np.all(excess <= 1e-10 * max(1.0, abs(C))))}


@dataclass
class GeneratorCheck:
    estimate: float
    closed_form: float
    standard_error: float
    h: float
    n_samples: int

    @property
    def z_score(self) -> float:
        return (self.estimate - self.closed_form) / self.standard_error if self.standard_error > 0 else math.inf

    def within(self, k: float = 3.0) -> bool:
        return abs(self.estimate - self.closed_form) <= k * self.standard_error

    def as_dict(self) -> dict:
        return {"estimate": self.estimate, "closed_form": self.closed_form,
                "standard_error": self.standard_error, "z": self.z_score, "h": self.h, "n_samples": self.n_samples}


def mc_generator_check(drift: DriftModel, space: SpectralSpace, x, h: float = 1e-3,
                       n_samples: int = 10_000, seed=0) -> GeneratorCheck:
    """Monte Carlo estimate of ``(E[V(X_h)] - V(x)) / h`` from one Euler step started at ``x``."""
    if not 0 < h <= 1e-3:
        raise ValueError("step h must be in (0, 1e-3]")
    if n_samples < 10_000:
        raise ValueError("at least 10^4 samples are required")
    x = space.check(x)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    noise = rng.standard_normal((space.dim, n_samples)).T * space.sqrt_eigenvalues
    xh = x + (drift(x) - x) * h + math.sqrt(2.0 * h) * noise
    inc = (_V(xh) - _V(x)) / h
    return GeneratorCheck(
        estimate=float(inc.mean()), closed_form=float(generator_V(x, drift, space)),
        standard_error=float(inc.std(ddof=1) / math.sqrt(n_samples)), h=h, n_samples=n_samples,
    )
