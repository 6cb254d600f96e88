"""Concave distance profiles, contraction rates and derived error prefactors.

A profile is built from the weight ``phi(r) = exp(-psi(r))`` with

* ``psi(r) = beta r^2 / (8 lambda_star)`` for the ``large_distance`` variant, and
* ``psi(r) = beta r^2 / (8 lambda_star) + 2 theta (lambda_sup / lambda_star) r``
  for the ``lyapunov`` variant,

via ``Phi(r) = int_0^r phi``, ``1/gamma = int_0^R Phi / phi``,
``g(r) = 1 - (gamma / 2) int_0^r Phi / phi`` and ``f(r) = int_0^r phi g``.
Beyond ``R`` the ``large_distance`` profile grows linearly with slope
``phi(R) / 2`` and the ``lyapunov`` profile is constant.

All integrals are computed with an adaptive composite Simpson rule with a
Richardson error estimate. The inner integrand ``Phi / phi`` is evaluated as
``Phi(s) exp(psi(s) - psi(R))`` and ``gamma`` is kept as a logarithm, so
profiles with ``psi(R)`` in the hundreds or thousands stay finite. Rates are
likewise carried in the log domain.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .spectral import SpectralSpace, WeightedGeometry, weighted_norm

__all__ = [
    "CorollaryBounds",
    "DistanceProfile",
    "QuadratureError",
    "RateReport",
    "build_profile",
    "build_profile_thm2",
    "build_profile_thm3",
    "corollary_bounds",
    "eval_distance",
    "normalize_variant",
    "rate_thm2",
    "rate_synchronous",
    "rate_thm3",
]

RTOL = 1e-10
ATOL = 1e-12
MAX_PANELS = 256

_ALIASES = {
    "large_distance": "large_distance",
    "thm2": "large_distance",
    "lyapunov": "lyapunov",
    "thm3": "lyapunov",
}


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to meet its tolerance at maximal refinement."""


def normalize_variant(name: str) -> str:
    try:
        return _ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown profile variant {name!r}; use 'large_distance' or 'lyapunov'") from None


def chebyshev_grid(R: float, size: int) -> np.ndarray:
    """``size`` Chebyshev-Lobatto nodes on ``[0, R]``, strictly increasing, endpoints exact."""
    if size < 3:
        raise ValueError("grid needs at least 3 nodes")
    j = np.arange(size)
    r = 0.5 * R * (1.0 - np.cos(np.pi * j / (size - 1)))
    r[0], r[-1] = 0.0, R
    return r


def _local_cumulative(values: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Running integral from the left end of each row of equispaced samples.

    Rows hold ``2m+1`` samples with spacing ``h``. Even offsets use composite
    Simpson, odd offsets add the one-step ``(5, 8, -1) / 12`` rule to the
    preceding even point.
    """
    f0, f1, f2 = values[:, 0:-2:2], values[:, 1:-1:2], values[:, 2::2]
    hh = h[:, None]
    panel = hh / 3.0 * (f0 + 4.0 * f1 + f2)
    even = np.concatenate([np.zeros((values.shape[0], 1)), np.cumsum(panel, axis=1)], axis=1)
    odd = even[:, :-1] + hh / 12.0 * (5.0 * f0 + 8.0 * f1 - f2)
    out = np.empty_like(values)
    out[:, 0::2] = even
    out[:, 1::2] = odd
    return out


def _adaptive_intervals(a: np.ndarray, b: np.ndarray, integrand: Callable, label: str) -> np.ndarray:
    """Integrals of ``integrand`` over each ``[a_i, b_i]``.

    ``integrand(t, h, idx)`` receives sample rows ``t`` (shape ``(k, 2m+1)``),
    the spacings ``h`` and the interval indices ``idx`` it is evaluated for.
    Panels double until the Richardson estimate ``|S_2m - S_m| / 15`` is below
    ``max(RTOL |S|, ATOL * total)`` per interval.
    """
    n = a.size
    result = np.zeros(n)
    todo = np.arange(n)
    m = 1
    prev = None

    def simpson(idx, m):
        h = (b[idx] - a[idx]) / (2 * m)
        t = a[idx, None] + h[:, None] * np.arange(2 * m + 1)
        v = integrand(t, h, idx)
        return h / 3.0 * (v[:, 0] + v[:, -1] + 4.0 * v[:, 1:-1:2].sum(axis=1) + 2.0 * v[:, 2:-1:2].sum(axis=1))

    prev = simpson(todo, m)
    while True:
        m *= 2
        cur = simpson(todo, m)
        est = (cur - prev) / 15.0
        result[todo] = cur + est
        total = abs(result.sum())
        ok = np.abs(est) <= np.maximum(RTOL * np.abs(cur), ATOL * total)
        if np.all(ok):
            return result
        if m >= MAX_PANELS:
            worst = float(np.max(np.abs(est[~ok]) / np.maximum(np.abs(cur[~ok]), 1e-300)))
            raise QuadratureError(
                f"{label}: {int((~ok).sum())} intervals unconverged after {m} panels "
                f"(estimated relative error {worst:.3g})"
            )
        todo, prev = todo[~ok], cur[~ok]


@dataclass(frozen=True)
class DistanceProfile:
    """Tabulated concave profile ``f`` on ``[0, R]`` with an analytic tail.

    Attributes
    ----------
    variant : str
        ``"large_distance"`` (linear tail) or ``"lyapunov"`` (constant tail).
    r, f, fprime, fsecond : ndarray
        Nodes and values; ``fprime = phi g`` and ``fsecond`` follows from the
        product rule, ``f'' = -psi' phi g - (gamma / 2) Phi``.
    phi, Phi, g : ndarray
        Weight, its primitive and the correction factor at the nodes.
    log_gamma : float
        ``log gamma``; ``gamma`` itself may underflow.
    """

    variant: str
    R: float
    beta: float
    lambda_star: float
    theta: float
    lambda_sup: float
    log_gamma: float
    r: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    fprime: np.ndarray = field(repr=False)
    fsecond: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    Phi: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    _spline: CubicHermiteSpline = field(repr=False, compare=False)

    @property
    def tail(self) -> str:
        return "linear" if self.variant == "large_distance" else "constant"

    @property
    def gamma(self) -> float:
        return math.exp(self.log_gamma)

    @property
    def drift_weight(self) -> float:
        """Coefficient ``2 theta lambda_sup / lambda_star`` of the linear term in ``psi``."""
        return 2.0 * self.theta * self.lambda_sup / self.lambda_star

    def psi(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return self.beta * r * r / (8.0 * self.lambda_star) + self.drift_weight * r

    def log_phi_R(self) -> float:
        return -float(self.psi(self.R))

    @property
    def phi_R(self) -> float:
        return math.exp(self.log_phi_R())

    @property
    def f_R(self) -> float:
        return float(self.f[-1])

    @property
    def tail_slope(self) -> float:
        return 0.5 * self.phi_R if self.variant == "large_distance" else 0.0

    def __call__(self, r) -> np.ndarray:
        """Evaluate ``f``; exactly linear (or constant) beyond ``R``."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(~np.isfinite(r)):
            raise ValueError("profile evaluated at a negative or non-finite distance")
        inside = np.minimum(r, self.R)
        out = np.where(r >= self.R, self.f_R + self.tail_slope * (r - self.R), self._spline(inside))
        return float(out) if out.ndim == 0 else out

    def derivative(self, r) -> np.ndarray:
        """``f'`` (left derivative at ``R`` for the constant tail)."""
        r = np.asarray(r, dtype=float)
        inside = np.minimum(r, self.R)
        out = np.where(r > self.R, self.tail_slope, self._spline(inside, 1))
        return float(out) if out.ndim == 0 else out

    def ode_residual(self) -> np.ndarray:
        """``4 l* f'' + (beta r + 8 theta l^sup) f' + 2 l* gamma Phi`` at the interior nodes, relative to the largest term."""
        ls = self.lambda_star
        r = self.r[1:-1]
        a = 4.0 * ls * self.fsecond[1:-1]
        b = (self.beta * r + 8.0 * self.theta * self.lambda_sup) * self.fprime[1:-1]
        c = 2.0 * ls * math.exp(self.log_gamma) * self.Phi[1:-1]
        scale = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(c), np.full_like(a, 1e-300)])
        return (a + b + c) / scale

    def as_rows(self) -> list[tuple[float, float, float, float]]:
        return list(zip(self.r.tolist(), self.f.tolist(), self.fprime.tolist(), self.fsecond.tolist()))

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "f", "fprime", "fsecond"])
            for row in self.as_rows():
                w.writerow([repr(v) for v in row])
        return path

    def summary(self) -> dict:
        return {
            "variant": self.variant, "R": self.R, "beta": self.beta,
            "lambda_star": self.lambda_star, "theta": self.theta, "lambda_sup": self.lambda_sup,
            "gamma": self.gamma, "log_gamma": self.log_gamma, "f_R": self.f_R,
            "tail": self.tail, "grid_size": int(self.r.size),
        }


def build_profile(variant: str, beta: float, lambda_star: float, R: float, theta: float = 0.0,
                  lambda_sup: float | None = None, grid_size: int = 1024) -> DistanceProfile:
    variant = normalize_variant(variant)
    lambda_sup = lambda_star if lambda_sup is None else float(lambda_sup)
    if not beta >= 0:
        raise ValueError("beta must be >= 0 for a profile (beta < 0 needs no profile)")
    if not lambda_star > 0 or not R > 0:
        raise ValueError("lambda_star and R must be > 0")
    if variant == "large_distance" and theta != 0:
        raise ValueError("theta only enters the lyapunov variant")
    if theta < 0 or lambda_sup < lambda_star:
        raise ValueError("need theta >= 0 and lambda_sup >= lambda_star")
    if not all(map(math.isfinite, (beta, lambda_star, R, theta, lambda_sup))):
        raise ValueError("profile parameters must be finite")

    quad = beta / (8.0 * lambda_star)
    lin = 2.0 * theta * lambda_sup / lambda_star

    def psi(t):
        return quad * t * t + lin * t

    def dpsi(t):
        return 2.0 * quad * t + lin

    psi_R = float(psi(R))
    r = chebyshev_grid(float(R), grid_size)
    a, b = r[:-1], r[1:]

    # Phi at the nodes
    phi_int = _adaptive_intervals(a, b, lambda t, h, idx: np.exp(-psi(t)), "Phi")
    Phi = np.concatenate([[0.0], np.cumsum(phi_int)])

    def inner(t, h, idx):
        loc = Phi[idx, None] + _local_cumulative(np.exp(-psi(t)), h)
        return loc * np.exp(psi(t) - psi_R)

    # J(r) = int_0^r Phi exp(psi - psi(R)) ;  1/gamma = exp(psi(R)) J(R)
    J = np.concatenate([[0.0], np.cumsum(_adaptive_intervals(a, b, inner, "gamma"))])
    J_R = float(J[-1])
    if not J_R > 0:
        raise QuadratureError("gamma integral vanished")
    log_gamma = -psi_R - math.log(J_R)

    def outer(t, h, idx):
        Jloc = J[idx, None] + _local_cumulative(inner(t, h, idx), h)
        return np.exp(-psi(t)) * (1.0 - 0.5 * Jloc / J_R)

    f = np.concatenate([[0.0], np.cumsum(_adaptive_intervals(a, b, outer, "f"))])
    phi = np.exp(-psi(r))
    g = 1.0 - 0.5 * J / J_R
    g[-1] = 0.5
    fprime = phi * g
    fsecond = -dpsi(r) * fprime - 0.5 * math.exp(log_gamma) * Phi
    spline = CubicHermiteSpline(r, f, fprime)
    return DistanceProfile(
        variant=variant, R=float(R), beta=float(beta), lambda_star=float(lambda_star),
        theta=float(theta), lambda_sup=lambda_sup, log_gamma=log_gamma,
        r=_ro(r), f=_ro(f), fprime=_ro(fprime), fsecond=_ro(fsecond), phi=_ro(phi), Phi=_ro(Phi), g=_ro(g),
        _spline=spline,
    )


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def build_profile_thm2(beta: float, lambda_star: float, R: float, grid_size: int = 1024) -> DistanceProfile:
    """Profile with Gaussian weight and linear tail (large-distance contractivity setting)."""
    return build_profile("large_distance", beta, lambda_star, R, grid_size=grid_size)


def build_profile_thm3(beta: float, lambda_star: float, lambda_sup: float, theta: float, R: float,
                       grid_size: int = 1024) -> DistanceProfile:
    """Profile with the extra exponential weight ``exp(-2 theta (lambda_sup/lambda_star) r)`` and constant tail."""
    return build_profile("lyapunov", beta, lambda_star, R, theta=theta, lambda_sup=lambda_sup,
                         grid_size=grid_size)


# ---------------------------------------------------------------------------
# rates


@dataclass
class RateReport:
    """Contraction rate with every argument of the minimum kept separately.

    ``log_components`` carries the natural logarithms so the minimum is
    meaningful even when every component underflows; ``c`` is
    ``exp(log_c)``. ``origins`` documents the formula behind each number.
    """

    variant: str
    log_components: dict[str, float]
    origins: dict[str, str]
    log_lower_bound: float | None = None
    log_epsilon: float | None = None
    params: dict = field(default_factory=dict)

    @property
    def log_c(self) -> float:
        return min(self.log_components.values())

    @property
    def c(self) -> float:
        return math.exp(self.log_c)

    @property
    def components(self) -> dict[str, float]:
        return {k: math.exp(v) for k, v in self.log_components.items()}

    @property
    def binding(self) -> str:
        return min(self.log_components, key=self.log_components.get)

    @property
    def lower_bound(self) -> float | None:
        return None if self.log_lower_bound is None else math.exp(self.log_lower_bound)

    @property
    def epsilon(self) -> float | None:
        """``min{diffusion, weight} / (2 C)``, formed in the linear domain when representable."""
        if self.log_epsilon is None:
            return None
        comps = self.components
        head = min(comps.get("diffusion", 0.0), comps.get("weight", 0.0))
        C = self.params.get("C")
        if head > 0 and C:
            return head / (2.0 * C)
        return math.exp(self.log_epsilon)

    def as_dict(self) -> dict:
        return {
            "variant": self.variant, "c": self.c, "log_c": self.log_c, "binding": self.binding,
            "components": self.components, "log_components": dict(self.log_components),
            "lower_bound": self.lower_bound, "log_lower_bound": self.log_lower_bound,
            "epsilon": self.epsilon, "log_epsilon": self.log_epsilon,
            "origins": dict(self.origins), "params": dict(self.params),
        }

    def to_json(self, path=None, **extra) -> str:
        text = json.dumps(dict(self.as_dict(), **extra), indent=2, default=_json_default)
        if path is not None:
            Path(path).write_text(text)
        return text


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def rate_thm2(profile: DistanceProfile, M: float, alpha: float) -> RateReport:
    """``c = min{f'(R)(1-M), f'(R)/(2 alpha), 2 lambda_star gamma}`` with ``f'(R) = phi(R)/2``."""
    if profile.variant != "large_distance":
        raise ValueError("rate_thm2 needs a large_distance profile")
    if not 0 <= M < 1:
        raise ValueError(f"contraction factor M = {M} outside [0, 1)")
    if not alpha >= 1:
        raise ValueError("alpha must be >= 1")
    log_fpR = profile.log_phi_R() - math.log(2.0)
    comps = {
        "far_drift": log_fpR + math.log1p(-M),
        "weight": log_fpR - math.log(2.0 * alpha),
        "diffusion": math.log(2.0 * profile.lambda_star) + profile.log_gamma,
    }
    origins = {
        "far_drift": "f'(R) (1 - M)",
        "weight": "f'(R) / (2 alpha)",
        "diffusion": "2 lambda_star gamma",
        "lower_bound": "(1/2) exp(-beta R^2 / (8 lambda_star)) min{beta, 1 - M, 1/(2 alpha)}",
    }
    lb = None
    if profile.beta > 0:
        # built from the same logarithms as the components so ties compare exactly
        lb = min(comps["far_drift"], comps["weight"], log_fpR + math.log(profile.beta))
    rep = RateReport("large_distance", comps, origins, log_lower_bound=lb,
                     params={"M": M, "alpha": alpha, **profile.summary()})
    if lb is not None and lb > rep.log_c + 1e-9:
        raise AssertionError(f"lower bound {lb} exceeds rate {rep.log_c} (log scale)")
    return rep


def rate_thm3(profile: DistanceProfile, alpha: float, C: float, eta: float) -> RateReport:
    """``c = min{lambda_star gamma, phi(R)/(8 alpha), eta/2}`` and ``2 C epsilon = min{lambda_star gamma, phi(R)/(8 alpha)}``."""
    if profile.variant != "lyapunov":
        raise ValueError("rate_thm3 needs a lyapunov profile")
    if not (C > 0 and eta > 0):
        raise ValueError("Lyapunov constants C and eta must be > 0")
    if not alpha >= 1:
        raise ValueError("alpha must be >= 1")
    comps = {
        "diffusion": math.log(profile.lambda_star) + profile.log_gamma,
        "weight": profile.log_phi_R() - math.log(8.0 * alpha),
        "lyapunov": math.log(0.5 * eta),
    }
    log_eps = min(comps["diffusion"], comps["weight"]) - math.log(2.0 * C)
    origins = {
        "diffusion": "lambda_star gamma",
        "weight": "phi(R) / (8 alpha)",
        "lyapunov": "eta / 2",
        "epsilon": "min{lambda_star gamma, phi(R)/(8 alpha)} / (2 C)",
        "lower_bound": "(1/2) min{phi(R) min{beta/2, 1/(4 alpha)}, eta}",
    }
    lb = None
    if profile.beta > 0:
        # (1/2) phi(R) min{beta/2, 1/(4 alpha)} is the weight component or the smaller beta/4 term
        lb = min(comps["weight"], profile.log_phi_R() + math.log(0.25 * profile.beta), comps["lyapunov"])
    rep = RateReport("lyapunov", comps, origins, log_lower_bound=lb, log_epsilon=log_eps,
                     params={"alpha": alpha, "C": C, "eta": eta, **profile.summary()})
    if log_eps + math.log(2.0 * C) < rep.log_c - 1e-12:
        raise AssertionError("2 C epsilon below the rate")
    if lb is not None and lb > rep.log_c + 1e-9:
        raise AssertionError(f"lower bound {lb} exceeds rate {rep.log_c} (log scale)")
    return rep


# ---------------------------------------------------------------------------
# distances and derived bounds


def _lyap_value(lyap, x) -> np.ndarray:
    fn = getattr(lyap, "value", lyap)
    return np.asarray(fn(x), dtype=float)


def eval_distance(profile: DistanceProfile, x, y, geom: WeightedGeometry, space: SpectralSpace,
                  lyap=None, epsilon: float | None = None):
    """``f(||x - y||_alpha)``, multiplied by ``1 + eps V(x) + eps V(y)`` for the lyapunov variant.

    ``lyap`` is a callable ``V`` or an object with a ``value`` method;
    ``epsilon`` defaults to ``lyap.epsilon`` when present.
    """
    x, y = space.check(x), space.check(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    base = profile(np.asarray(weighted_norm(x - y, space, geom)))
    if profile.variant == "large_distance":
        if lyap is not None:
            raise ValueError("large_distance distances take no Lyapunov function")
        return base
    if lyap is None:
        raise ValueError("lyapunov distances need a Lyapunov function")
    eps = epsilon if epsilon is not None else getattr(lyap, "epsilon", None)
    if eps is None:
        raise ValueError("epsilon is required for the lyapunov distance")
    out = base * (1.0 + eps * _lyap_value(lyap, x) + eps * _lyap_value(lyap, y))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class CorollaryBounds:
    """Numeric prefactors of the consequences of a contraction, as functions of ``t``.

    For the ``large_distance`` variant: ``w1(t)`` (Dirac-to-invariant
    ``W^1`` factor) and ``lipschitz(t, g_lip)`` (Lipschitz constant of
    ``p_t g``). For the ``lyapunov`` variant: ``wp(t, K)``,
    ``gradient(t, g_lip, x, y)``, ``bias(t, g_lip, x)``,
    ``covariance(t, h, g_lip, x, C2, eta2)`` and ``variance(t, g_lip, x, C2, eta2)``,
    where ``(C2, eta2)`` are drift constants of ``V^2``.
    """

    variant: str
    c: float
    alpha: float
    profile: DistanceProfile
    epsilon: float | None = None
    lyap: object = None
    C: float | None = None
    eta: float | None = None

    def _decay(self, t):
        return np.exp(-self.c * np.asarray(t, dtype=float))

    def w1(self, t):
        p = self.profile
        return 4.0 * self.alpha * math.exp(p.beta * p.R**2 / (8.0 * p.lambda_star)) * self._decay(t)

    def lipschitz(self, t, g_lip: float = 1.0):
        return math.sqrt(2.0) * self.alpha * g_lip * self._decay(t)

    def _V(self, x):
        return float(_lyap_value(self.lyap, x))

    def wp(self, t, K: float):
        p = self.profile
        pref = 2.0 * math.exp(p.beta / (8.0 * p.lambda_star) + p.drift_weight)
        return pref * max(1.0, K / (self.epsilon * min(1.0, p.R))) * self._decay(t)

    def gradient(self, t, g_lip, x, y):
        e = self.epsilon
        return math.sqrt(2.0) * self.alpha * g_lip * (1.0 + e * self._V(x) + e * self._V(y)) * self._decay(t)

    def bias(self, t, g_lip, x):
        ct = self.c * np.asarray(t, dtype=float)
        # (1 - e^{-ct}) / (ct) -> 1 as ct -> 0 (c may underflow to zero)
        safe = np.where(ct > 0, ct, 1.0)
        frac = np.where(ct > 0, -np.expm1(-ct) / safe, 1.0)
        return frac * g_lip * self.profile.R * (1.0 + self.epsilon * self._V(x) + self.epsilon * self.C / self.eta)

    def _second_moment_factor(self, t, x, C2, eta2):
        return 1.0 + 2.0 * self.epsilon**2 * (C2 / eta2 + np.exp(-eta2 * np.asarray(t, dtype=float)) * self._V(x) ** 2)

    def covariance(self, t, h, g_lip, x, C2, eta2):
        R = self.profile.R
        return 1.5 * R * R * g_lip**2 * self._second_moment_factor(t, x, C2, eta2) * self._decay(h)

    def variance(self, t, g_lip, x, C2, eta2):
        R = self.profile.R
        with np.errstate(divide="ignore"):  # an underflowed rate gives the vacuous bound inf
            lead = 3.0 * R * R / (self.c * np.asarray(t, dtype=float))
        return lead * g_lip**2 * self._second_moment_factor(t, x, C2, eta2)

    def table(self, times, **kw) -> dict[str, list[float]]:
        """Evaluate the variant's prefactors at ``times`` (extra inputs via keywords)."""
        times = np.asarray(times, dtype=float)
        out = {"t": times.tolist()}
        g_lip = kw.get("g_lip", 1.0)
        if self.variant == "large_distance":
            out["w1"] = np.atleast_1d(self.w1(times)).tolist()
            out["lipschitz"] = np.atleast_1d(self.lipschitz(times, g_lip)).tolist()
            return out
        if "K" in kw:
            out["wp"] = np.atleast_1d(self.wp(times, kw["K"])).tolist()
        if "x" in kw:
            x = kw["x"]
            y = kw.get("y", x)
            out["gradient"] = np.atleast_1d(self.gradient(times, g_lip, x, y)).tolist()
            pos = times[times > 0]
            out["bias"] = np.atleast_1d(self.bias(pos, g_lip, x)).tolist()
            if "C2" in kw and "eta2" in kw:
                out["variance"] = np.atleast_1d(self.variance(pos, g_lip, x, kw["C2"], kw["eta2"])).tolist()
        return out


def corollary_bounds(profile: DistanceProfile, geom: WeightedGeometry, rate: RateReport, lyap=None) -> CorollaryBounds:
    if rate.variant != profile.variant:
        raise ValueError("rate and profile variants differ")
    alpha = geom.alpha if isinstance(geom, WeightedGeometry) else float(geom)
    if profile.variant == "lyapunov":
        if lyap is None:
            raise ValueError("lyapunov corollaries need the Lyapunov function")
        return CorollaryBounds("lyapunov", rate.c, alpha, profile, epsilon=rate.epsilon, lyap=lyap,
                               C=rate.params["C"], eta=rate.params["eta"])
    return CorollaryBounds("large_distance", rate.c, alpha, profile)


def rate_synchronous(geom: WeightedGeometry) -> RateReport:
    """``c = min{1/alpha, |beta|}`` for the synchronous coupling when ``beta < 0``."""
    if not geom.beta < 0:
        raise ValueError("the synchronous rate needs beta < 0")
    comps = {"inverse_weight": -math.log(geom.alpha), "defect": math.log(-geom.beta)}
    origins = {"inverse_weight": "1 / alpha", "defect": "|beta|"}
    return RateReport("synchronous", comps, origins, params={"alpha": geom.alpha, "beta": geom.beta})
