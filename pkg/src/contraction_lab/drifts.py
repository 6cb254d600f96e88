"""Non-linearities ``b: H -> H`` and sampling-based checks of their structure constants.

Every drift is evaluated on batches: ``b(x)`` accepts arrays whose last axis
holds eigenbasis coordinates and returns an array of the same shape. The
coordinate count is taken from the input, so a drift built for one truncation
also evaluates the Galerkin-projected drift ``b^d`` on any other.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spectral import (
    LipschitzConstants,
    SpectralSpace,
    WeightedGeometry,
    compute_geometry,
    split_index_for,
)

__all__ = [
    "CheckReport",
    "DriftModel",
    "PathPotential",
    "PotentialSpec",
    "bounded_gradient_large_distance",
    "check_assumption1",
    "check_large_distance",
    "compact_bump",
    "double_well_path_potential",
    "gaussian_bump",
    "lemma_constants",
    "lemma_large_distance",
    "linear_drift",
    "preconditioned_gradient_drift",
    "quadratic_path_potential",
    "sample_pairs",
    "sector_contraction_check",
    "structural_constants",
    "tps_drift",
    "tps_potential",
    "zero_perturbation",
]

Array = np.ndarray


def _pad(v: Array, d: int) -> Array:
    out = np.zeros(d)
    m = min(d, v.size)
    out[:m] = v[:m]
    return out


# smallest large-distance radius handed to the profile builder
MIN_RADIUS = 1e-6


@dataclass(frozen=True)
class PotentialSpec:
    """``U(x) = (a/2)||x||^2 + m(x)`` given through ``grad_m``.

    ``lipschitz`` bounds the Lipschitz constant of ``grad_m``; ``growth``
    is an optional pair ``(b, c)`` with the one-sided growth bound
    ``<G x, grad m(x)> >= -lambda_1 ||x|| (b + c||x||)`` (implied by
    ``||grad m(x)|| <= b + c||x||``);
    ``sup_grad`` an optional bound on ``sup ||grad m||``; ``support_radius``
    an optional radius outside of which ``grad_m`` vanishes.
    """

    a: float
    grad_m: Callable[[Array], Array]
    lipschitz: float
    growth: tuple[float, float] | None = None
    sup_grad: float | None = None
    support_radius: float | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("quadratic coefficient a must be >= 0")
        if self.lipschitz < 0:
            raise ValueError("gradient Lipschitz bound must be >= 0")
        if self.growth is not None:
            b, c = self.growth
            if b < 0 or not 0 <= c < 1:
                raise ValueError("growth bounds need b >= 0 and 0 <= c < 1")

    def gradient(self, x) -> Array:
        x = np.asarray(x, dtype=float)
        return self.a * x + self.grad_m(x)


def zero_perturbation(a: float = 0.0) -> PotentialSpec:
    return PotentialSpec(
        a=a, grad_m=np.zeros_like, lipschitz=0.0, growth=(0.0, 0.0), sup_grad=0.0,
        support_radius=0.0, name="ou", params={"a": a},
    )


def gaussian_bump(a: float, amplitude: float, width: float, center=(0.0,)) -> PotentialSpec:
    """``m(x) = -amplitude * exp(-||x - x0||^2 / (2 width^2))``.

    A positive amplitude is a well at ``x0``, a negative one a hill. The
    gradient is Lipschitz with constant ``|amplitude| / width^2`` (Hessian
    norm at the centre) and bounded by ``|amplitude| e^{-1/2} / width``.
    """
    if width <= 0:
        raise ValueError("bump width must be > 0")
    x0 = np.atleast_1d(np.asarray(center, dtype=float))
    s2 = width * width

    def grad_m(x):
        x = np.asarray(x, dtype=float)
        y = x - _pad(x0, x.shape[-1])
        w = np.exp(-0.5 * np.sum(y * y, axis=-1, keepdims=True) / s2)
        return (amplitude / s2) * w * y

    sup_grad = abs(amplitude) * np.exp(-0.5) / width
    return PotentialSpec(
        a=a, grad_m=grad_m, lipschitz=abs(amplitude) / s2, growth=(sup_grad, 0.0),
        sup_grad=sup_grad, name="gaussian_bump",
        params={"a": a, "amplitude": amplitude, "width": width, "center": x0.tolist()},
    )


def compact_bump(a: float, amplitude: float, radius: float, center=(0.0,)) -> PotentialSpec:
    """``m(x) = -amplitude * (1 - ||x - x0||^2 / radius^2)^3`` inside the ball, 0 outside.

    ``grad_m`` vanishes outside ``||x|| >= ||x0|| + radius``; its Lipschitz
    constant is ``6 |amplitude| / radius^2``.
    """
    if radius <= 0:
        raise ValueError("bump radius must be > 0")
    x0 = np.atleast_1d(np.asarray(center, dtype=float))
    r2 = radius * radius

    def grad_m(x):
        x = np.asarray(x, dtype=float)
        y = x - _pad(x0, x.shape[-1])
        s = np.sum(y * y, axis=-1, keepdims=True) / r2
        w = np.clip(1.0 - s, 0.0, None) ** 2
        return (6.0 * amplitude / r2) * w * y

    # max of (1-s)^2 sqrt(s) is at s = 1/5
    sup_grad = 6.0 * abs(amplitude) * 0.64 * np.sqrt(0.2) / radius
    return PotentialSpec(
        a=a, grad_m=grad_m, lipschitz=6.0 * abs(amplitude) / r2, growth=(sup_grad, 0.0),
        sup_grad=sup_grad, support_radius=float(np.linalg.norm(x0)) + radius, name="compact_bump",
        params={"a": a, "amplitude": amplitude, "radius": radius, "center": x0.tolist()},
    )


# ---------------------------------------------------------------------------
# transition path sampling


@dataclass(frozen=True)
class PathPotential:
    """Scalar potential ``W(x) = (a/2) x^2 + H(x)`` with derivatives up to order three.

    ``dW``, ``d2W`` and ``d3W`` are vectorised callables. The path-space
    potential is ``U(x) = 1/2 int_0^1 Phi(x(s)) ds`` with
    ``Phi = W'^2 + W''``.
    """

    a: float
    W: Callable[[Array], Array]
    dW: Callable[[Array], Array]
    d2W: Callable[[Array], Array]
    d3W: Callable[[Array], Array]
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("path potential needs a > 0")

    def Phi(self, x) -> Array:
        return self.dW(x) ** 2 + self.d2W(x)

    def half_dPhi(self, x) -> Array:
        """``Phi'(x) / 2 = W'(x) W''(x) + W'''(x) / 2``."""
        return self.dW(x) * self.d2W(x) + 0.5 * self.d3W(x)

    def constants(self, extent: float = 50.0, n: int = 200_001) -> tuple[float, float, float]:
        """Grid estimates of ``(L, b, c)`` for ``grad U``.

        ``L = sup |Phi''| / 2`` bounds the Lipschitz constant of ``grad U`` on
        ``L^2``; ``|Phi'/2 - a^2 x| <= b`` gives the growth pair ``(b, a^2)``.
        The grid spans ``[-extent, extent]`` where the perturbation derivatives
        have decayed.
        """
        x = np.linspace(-extent, extent, n)
        h = x[1] - x[0]
        half = self.half_dPhi(x)
        L = float(np.max(np.abs(np.gradient(half, h))))
        b = float(np.max(np.abs(half - self.a**2 * x)))
        return L, b, self.a**2


def quadratic_path_potential(a: float) -> PathPotential:
    return PathPotential(
        a=a,
        W=lambda x: 0.5 * a * np.asarray(x) ** 2,
        dW=lambda x: a * np.asarray(x),
        d2W=lambda x: np.full_like(np.asarray(x, dtype=float), a),
        d3W=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        name="tps_quadratic",
        params={"a": a},
    )


def double_well_path_potential(a: float, barrier: float, width: float) -> PathPotential:
    """``W(x) = (a/2) x^2 + barrier * exp(-x^2 / (2 width^2))``.

    The Gaussian barrier at the origin splits the quadratic well into two
    wells at ``x = +-width sqrt(2 log(barrier / (a width^2)))`` whenever
    ``barrier > a width^2``; all derivatives of the perturbation decay at
    infinity.
    """
    if width <= 0:
        raise ValueError("barrier width must be > 0")
    w2 = width * width

    def e(x):
        return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2 / w2)

    def dW(x):
        x = np.asarray(x, dtype=float)
        return a * x - barrier * x / w2 * e(x)

    def d2W(x):
        x = np.asarray(x, dtype=float)
        return a + barrier * (x * x / w2**2 - 1.0 / w2) * e(x)

    def d3W(x):
        x = np.asarray(x, dtype=float)
        return barrier * (3.0 * x / w2**2 - x**3 / w2**3) * e(x)

    return PathPotential(
        a=a,
        W=lambda x: 0.5 * a * np.asarray(x, dtype=float) ** 2 + barrier * e(x),
        dW=dW, d2W=d2W, d3W=d3W,
        name="tps_doublewell",
        params={"a": a, "barrier": barrier, "width": width},
    )


class _SineQuadrature:
    """Trapezoid synthesis/projection between sine coefficients and path values."""

    def __init__(self, d: int, nodes: int):
        s = np.linspace(0.0, 1.0, nodes)
        k = np.arange(1, d + 1)
        self.basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(s, k))  # (Q, d)
        w = np.full(nodes, 1.0 / (nodes - 1))
        w[0] = w[-1] = 0.5 / (nodes - 1)
        self.weighted = self.basis * w[:, None]

    def synthesize(self, coeffs: Array) -> Array:
        return coeffs @ self.basis.T

    def project(self, values: Array) -> Array:
        return values @ self.weighted


def tps_potential(path_pot: PathPotential, nodes: int | None = None) -> PotentialSpec:
    """Path-space gradient ``grad U`` as a :class:`PotentialSpec` with ``a = 0``.

    ``grad U(x)`` is computed by synthesising ``x(s) = sum_k x_k sqrt(2) sin(pi k s)``
    on a uniform grid, evaluating ``Phi'(x(s)) / 2`` pointwise and projecting
    back onto the sine basis with the trapezoid rule. ``nodes`` defaults to
    ``max(256, 8 d)`` per coordinate count ``d`` seen at evaluation time.
    """
    cache: dict[int, _SineQuadrature] = {}

    def grad(x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        q = nodes if nodes is not None else max(256, 8 * d)
        if q < 4 * d:
            raise ValueError(f"{q} quadrature nodes is too coarse for {d} modes (need >= {4 * d})")
        quad = cache.get(d)
        if quad is None:
            quad = cache.setdefault(d, _SineQuadrature(d, q))
        return quad.project(path_pot.half_dPhi(quad.synthesize(x)))

    # grad U = a^2 x + r(x) with |r| <= b pointwise; the linear part is monotone,
    # so only r enters the one-sided growth bound.
    L, b, _ = path_pot.constants()
    return PotentialSpec(
        a=0.0, grad_m=grad, lipschitz=L, growth=(b, 0.0), sup_grad=None,
        name=path_pot.name, params=dict(path_pot.params, nodes=nodes),
    )


# ---------------------------------------------------------------------------
# drift models


@dataclass(frozen=True)
class DriftModel:
    """Evaluable non-linearity with optional declared structure constants.

    ``declared_large_distance`` is ``(M, R)``: the drift contracts by factor
    ``M`` in the weighted norm for pairs at weighted distance at least ``R``.
    ``large_distance_form`` records whether that holds in norm form or only
    in the one-sided (inner product) form.
    """

    fn: Callable[[Array], Array]
    declared_constants: LipschitzConstants | None = None
    declared_large_distance: tuple[float, float] | None = None
    large_distance_form: str = "norm"
    potential: PotentialSpec | None = None
    name: str = "custom"

    def __call__(self, x) -> Array:
        return self.fn(np.asarray(x, dtype=float))

    @property
    def geometry(self) -> WeightedGeometry:
        if self.declared_constants is None:
            raise ValueError(f"drift {self.name!r} has no declared constants")
        return compute_geometry(self.declared_constants)


def linear_drift(space: SpectralSpace, diag) -> DriftModel:
    """``b(x)_k = diag_k x_k`` (coordinates beyond ``len(diag)`` use the last entry)."""
    diag = np.asarray(diag, dtype=float)

    def fn(x):
        return x * _pad_with_last(diag, x.shape[-1])

    return DriftModel(fn=fn, name="linear")


def _pad_with_last(v: Array, d: int) -> Array:
    if v.size >= d:
        return v[:d]
    return np.concatenate([v, np.full(d - v.size, v[-1] if v.size else 0.0)])


def lemma_constants(space: SpectralSpace, L: float) -> LipschitzConstants:
    """``H_l = H_h = 1/2``, ``L_l = L_h = L`` for the splitting chosen by :func:`split_index_for`.

    Valid (in one-sided form) for ``b = -G grad U`` with ``U = (a/2)||x||^2 + m``
    whenever ``grad m`` is ``L``-Lipschitz, ``L >= 1``.
    """
    n = split_index_for(L, space.eigenvalues)
    if n != space.split_index:
        raise ValueError(f"space is split at n={space.split_index}, the rule gives n={n} for L={L}")
    return LipschitzConstants(H_l=0.5, H_h=0.5, L_l=L, L_h=L)


def structural_constants(space: SpectralSpace, a: float, L: float) -> LipschitzConstants:
    """Norm-form constants of ``b = -G(a x + grad m)`` from the eigenvalues.

    Uses ``||x - y|| <= ||x^l - y^l|| + ||x^h - y^h||`` on the perturbation:
    ``H_l = lambda_{n+1} L``, ``H_h = lambda_{n+1}(a + L)``,
    ``L_l = lambda_1 (a + L)``, ``L_h = lambda_1 L``.
    """
    lam_hi, lam_lo = space.lambda_next, space.lambda_sup
    return LipschitzConstants(H_l=lam_hi * L, H_h=lam_hi * (a + L), L_l=lam_lo * (a + L), L_h=lam_lo * L)


def lemma_large_distance(L: float, support_radius: float) -> tuple[float, float]:
    """``(M, R) = (3/4, 8 L R_m)`` for perturbations whose gradient vanishes outside radius ``R_m``."""
    return 0.75, 8.0 * L * support_radius


def bounded_gradient_large_distance(
    space: SpectralSpace, alpha: float, a: float, sup_grad: float, M: float = 0.75
) -> tuple[float, float]:
    """Radius beyond which ``b = -G(a x + grad m)`` contracts by ``M`` in norm form.

    ``||b(x) - b(y)||_alpha <= a lambda_max ||x - y||_alpha + 2 sqrt(lambda_1^2 + alpha^2 lambda_{n+1}^2) sup||grad m||``,
    so the bound holds for ``||x - y||_alpha >= R`` with
    ``R = 2 sqrt(lambda_1^2 + alpha^2 lambda_{n+1}^2) sup||grad m|| / (M - a lambda_max)``.
    """
    slack = M - a * space.lambda_max
    if not 0 <= M < 1 or slack <= 0:
        raise ValueError(f"need a * lambda_max < M < 1, got a*lambda_max={a * space.lambda_max:g}, M={M}")
    gain = np.hypot(space.lambda_sup, alpha * space.lambda_next)
    R = 2.0 * gain * sup_grad / slack
    # any R > 0 is admissible for a vanishing perturbation; the floor keeps the profile well-conditioned
    return M, float(max(R, MIN_RADIUS))


def preconditioned_gradient_drift(
    space: SpectralSpace,
    potential: PotentialSpec,
    constants: str | LipschitzConstants | None = "lemma",
    large_distance: str | tuple[float, float] | None = "auto",
    M: float = 0.75,
) -> DriftModel:
    """``b(x)_k = -lambda_k (a x_k + grad m(x)_k)``.

    ``constants`` is ``"lemma"`` (``H = 1/2``, ``L`` constants with
    ``L_eff = max(1, L)``, which requires the space to use the matching
    split index), ``"structural"`` (norm-form constants from the eigenvalues),
    an explicit :class:`LipschitzConstants`, or ``None``.

    ``large_distance`` is ``"auto"`` (compact support uses ``(3/4, 8 L R_m)``
    when the lemma constants apply, otherwise the bounded-gradient radius
    with contraction factor ``M``), an explicit ``(M, R)``, or ``None``.
    """
    lam_cache: dict[int, Array] = {}

    def fn(x):
        d = x.shape[-1]
        lam = lam_cache.get(d)
        if lam is None:
            lam = lam_cache.setdefault(d, _eigen_for(space, d))
        return -lam * potential.gradient(x)

    L_eff = max(1.0, potential.lipschitz)
    if constants == "lemma":
        declared = lemma_constants(space, L_eff)
    elif constants == "structural":
        declared = structural_constants(space, potential.a, potential.lipschitz)
    elif constants is None or isinstance(constants, LipschitzConstants):
        declared = constants
    else:
        raise ValueError(f"unknown constants mode {constants!r}")

    form = "norm"
    ld = None
    if large_distance == "auto" and declared is not None:
        alpha = compute_geometry(declared).alpha
        if constants == "lemma" and potential.support_radius is not None:
            ld = lemma_large_distance(L_eff, potential.support_radius)
            form = "one_sided"
            if potential.support_radius == 0.0:
                ld = (0.75, MIN_RADIUS)
        elif potential.sup_grad is not None and potential.a * space.lambda_max < M:
            ld = bounded_gradient_large_distance(space, alpha, potential.a, potential.sup_grad, M)
    elif isinstance(large_distance, tuple):
        ld = (float(large_distance[0]), float(large_distance[1]))
    elif large_distance not in (None, "auto"):
        raise ValueError(f"unknown large_distance mode {large_distance!r}")

    return DriftModel(
        fn=fn, declared_constants=declared, declared_large_distance=ld,
        large_distance_form=form, potential=potential, name=potential.name,
    )


def _eigen_for(space: SpectralSpace, d: int) -> Array:
    if d == space.dim:
        return space.eigenvalues
    if d < space.dim:
        return space.eigenvalues[:d]
    raise ValueError(f"drift built for {space.dim} modes evaluated on {d}")


def tps_drift(space: SpectralSpace, path_pot: PathPotential, nodes: int | None = None,
              constants: str | LipschitzConstants | None = "lemma") -> DriftModel:
    """Transition-path-sampling drift ``b = -G grad U`` on the sine basis of ``L^2([0,1])``."""
    k = np.arange(1, space.dim + 1)
    if not np.allclose(space.eigenvalues, (np.pi * k) ** -2, rtol=1e-12, atol=0):
        raise ValueError("transition path sampling needs the eigenvalues (pi k)^-2")
    pot = tps_potential(path_pot, nodes)
    if nodes is not None and nodes < 4 * space.dim:
        raise ValueError(f"{nodes} quadrature nodes is too coarse for {space.dim} modes")
    return preconditioned_gradient_drift(space, pot, constants=constants, large_distance=None)


# ---------------------------------------------------------------------------
# sampling-based checks


@dataclass
class CheckReport:
    """Outcome of a falsification check over sampled pairs.

    ``max_ratio`` is the largest observed value of LHS / RHS over all
    inequalities; ratios above ``1 + tol`` count as violations.
    """

    name: str
    n_pairs: int
    max_ratio: float
    n_violations: int
    tol: float
    ratios: dict[str, float] = field(default_factory=dict)
    worst_pair: tuple[list, list] | None = None

    @property
    def passed(self) -> bool:
        return self.n_violations == 0

    def as_dict(self) -> dict:
        return {
            "name": self.name, "n_pairs": self.n_pairs, "max_ratio": self.max_ratio,
            "n_violations": self.n_violations, "tol": self.tol, "ratios": self.ratios,
            "passed": self.passed,
        }


def sample_pairs(space: SpectralSpace, samples: int, seed, ball: float = 3.0) -> tuple[Array, Array]:
    """Deterministic mix of test pairs.

    A quarter each of: centred Gaussian draws with covariance ``G`` (scaled
    up by ``ball``), uniform draws in the ball of radius ``ball``, local pairs
    at log-uniform separations around uniform base points, and pairs whose
    difference lies in a single block.
    """
    rng = np.random.default_rng(seed)
    d = space.dim
    q = max(samples // 4, 1)

    def uniform_ball(m):
        v = rng.standard_normal((m, d))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return v * ball * rng.random((m, 1)) ** (1.0 / d)

    gx = ball * space.sqrt_eigenvalues * rng.standard_normal((q, d)) / max(space.sqrt_eigenvalues[0], 1e-300)
    gy = ball * space.sqrt_eigenvalues * rng.standard_normal((q, d)) / max(space.sqrt_eigenvalues[0], 1e-300)
    ux, uy = uniform_ball(q), uniform_ball(q)
    base = uniform_ball(q)
    step = rng.standard_normal((q, d))
    step *= (10.0 ** rng.uniform(-4, 0, (q, 1))) / np.linalg.norm(step, axis=1, keepdims=True)
    bx = uniform_ball(samples - 3 * q)
    dz = rng.standard_normal(bx.shape) * rng.uniform(0.01, ball, (bx.shape[0], 1))
    which = rng.random(bx.shape[0]) < 0.5
    dz[which, space.split_index:] = 0.0
    dz[~which, : space.split_index] = 0.0
    x = np.concatenate([gx, ux, base, bx])
    y = np.concatenate([gy, uy, base + step, bx + dz])
    return x, y


def _ratio(lhs: Array, rhs: Array, atol: float) -> Array:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), np.where(lhs > atol, np.inf, 0.0))
    return r


def _summarise(name, ratios: dict[str, Array], x, y, tol) -> CheckReport:
    stacked = np.vstack(list(ratios.values()))
    per_pair = stacked.max(axis=0)
    worst = int(np.argmax(per_pair))
    return CheckReport(
        name=name, n_pairs=int(x.shape[0]), max_ratio=float(per_pair[worst]),
        n_violations=int(np.sum(per_pair > 1.0 + tol)), tol=tol,
        ratios={k: float(v.max()) for k, v in ratios.items()},
        worst_pair=(x[worst].tolist(), y[worst].tolist()),
    )


def check_assumption1(
    b: DriftModel,
    space: SpectralSpace,
    claimed: LipschitzConstants,
    samples: int = 10_000,
    seed=0,
    form: str = "norm",
    tol: float = 1e-10,
    ball: float = 3.0,
) -> CheckReport:
    """Falsify the block Lipschitz bounds of ``b`` on sampled pairs.

    ``form="norm"`` checks ``||b^h(x)-b^h(y)|| <= H_l||z^l|| + H_h||z^h||`` and
    the analogous low bound, plus the weighted-norm consequence
    ``||b(x)-b(y)||_alpha <= (1+beta)||z^l|| + (1-1/alpha) alpha ||z^h||``.
    ``form="one_sided"`` checks the inner-product versions
    ``<z^h/||z^h||, b(x)-b(y)> <= H_l||z^l|| + H_h||z^h||`` (and low analogue).
    """
    x, y = sample_pairs(space, samples, seed, ball)
    n = space.split_index
    z = x - y
    db = b(x) - b(y)
    zl, zh = np.linalg.norm(z[:, :n], axis=1), np.linalg.norm(z[:, n:], axis=1)
    rhs_h = claimed.H_l * zl + claimed.H_h * zh
    rhs_l = claimed.L_l * zl + claimed.L_h * zh
    atol = 1e-14 * (1.0 + np.abs(db).max())
    ratios = {}
    if form == "norm":
        dbl, dbh = np.linalg.norm(db[:, :n], axis=1), np.linalg.norm(db[:, n:], axis=1)
        ratios["high"] = _ratio(dbh, rhs_h, atol)
        ratios["low"] = _ratio(dbl, rhs_l, atol)
        geom = compute_geometry(claimed)
        lhs_w = dbl + geom.alpha * dbh
        rhs_w = (1.0 + geom.beta) * zl + (1.0 - 1.0 / geom.alpha) * geom.alpha * zh
        ratios["weighted"] = _ratio(lhs_w, rhs_w, atol)
    elif form == "one_sided":
        with np.errstate(divide="ignore", invalid="ignore"):
            ph = np.where(zh > 0, np.sum(z[:, n:] * db[:, n:], axis=1) / np.where(zh > 0, zh, 1.0), 0.0)
            pl = np.where(zl > 0, np.sum(z[:, :n] * db[:, :n], axis=1) / np.where(zl > 0, zl, 1.0), 0.0)
        ratios["high"] = _ratio(ph, rhs_h, atol)
        ratios["low"] = _ratio(pl, rhs_l, atol)
    else:
        raise ValueError(f"unknown form {form!r}")
    return _summarise(f"assumption1[{form}]", ratios, x, y, tol)


def sector_contraction_check(
    b: DriftModel,
    space: SpectralSpace,
    geom: WeightedGeometry | None = None,
    samples: int = 10_000,
    seed=0,
    tol: float = 1e-10,
    ball: float = 3.0,
) -> CheckReport:
    """Check ``||b(x)-b(y)||_alpha <= (1 - 1/(2 alpha)) ||x-y||_alpha`` inside the sector.

    Pairs are pushed into the sector ``(1+beta)||z^l|| <= ||z^h|| / 2`` by
    shrinking the low block of their difference.
    """
    geom = geom or b.geometry
    x, y = sample_pairs(space, samples, seed, ball)
    n = space.split_index
    z = x - y
    zl, zh = np.linalg.norm(z[:, :n], axis=1), np.linalg.norm(z[:, n:], axis=1)
    limit = 0.5 * zh / (1.0 + max(geom.beta, -1.0 + 1e-300))
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.where(zl > limit, limit / np.where(zl > 0, zl, 1.0), 1.0) * rng.random(zl.shape)
    z[:, :n] *= shrink[:, None]
    y = x - z
    db = b(x) - b(y)
    lhs = np.linalg.norm(db[:, :n], axis=1) + geom.alpha * np.linalg.norm(db[:, n:], axis=1)
    zl, zh = np.linalg.norm(z[:, :n], axis=1), np.linalg.norm(z[:, n:], axis=1)
    rhs = (1.0 - 0.5 / geom.alpha) * (zl + geom.alpha * zh)
    atol = 1e-14 * (1.0 + np.abs(db).max())
    return _summarise("sector_contraction", {"sector": _ratio(lhs, rhs, atol)}, x, y, tol)


def check_large_distance(
    b: DriftModel,
    space: SpectralSpace,
    geom: WeightedGeometry,
    M: float,
    R: float,
    samples: int = 10_000,
    seed=0,
    form: str = "norm",
    inner_radius: float | None = None,
    tol: float = 1e-10,
) -> CheckReport:
    """Falsify the large-distance contraction of ``b`` at weighted distance ``>= R``.

    Base points ``x`` are uniform in a ball of radius ``inner_radius``
    (default ``R``), differences have weighted norm uniform in ``[R, 3R]``.
    ``form="one_sided"`` checks
    ``<z^l/||z^l||, db> + alpha <z^h/||z^h||, db> <= M ||z||_alpha``.
    """
    rng = np.random.default_rng(seed)
    d, n = space.dim, space.split_index
    rad = R if inner_radius is None else inner_radius
    v = rng.standard_normal((samples, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x = v * rad * rng.random((samples, 1)) ** (1.0 / d)
    z = rng.standard_normal((samples, d)) * np.where(rng.random((samples, 1)) < 0.3, 1.0, space.sqrt_eigenvalues / space.sqrt_eigenvalues.max())
    zw = np.linalg.norm(z[:, :n], axis=1) + geom.alpha * np.linalg.norm(z[:, n:], axis=1)
    z *= (R * rng.uniform(1.0, 3.0, samples) / zw)[:, None]
    y = x - z
    db = b(x) - b(y)
    zl, zh = np.linalg.norm(z[:, :n], axis=1), np.linalg.norm(z[:, n:], axis=1)
    zw = zl + geom.alpha * zh
    if form == "norm":
        lhs = np.linalg.norm(db[:, :n], axis=1) + geom.alpha * np.linalg.norm(db[:, n:], axis=1)
    elif form == "one_sided":
        with np.errstate(divide="ignore", invalid="ignore"):
            pl = np.where(zl > 0, np.sum(z[:, :n] * db[:, :n], axis=1) / np.where(zl > 0, zl, 1.0), 0.0)
            ph = np.where(zh > 0, np.sum(z[:, n:] * db[:, n:], axis=1) / np.where(zh > 0, zh, 1.0), 0.0)
        lhs = pl + geom.alpha * ph
    else:
        raise ValueError(f"unknown form {form!r}")
    atol = 1e-14 * (1.0 + np.abs(db).max())
    return _summarise(f"large_distance[{form}]", {"far": _ratio(lhs, M * zw, atol)}, x, y, tol)
