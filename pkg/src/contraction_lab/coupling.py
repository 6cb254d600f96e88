"""Euler-Maruyama simulation of coupled pairs on a Galerkin truncation.

Three couplings are provided:

* ``synchronous``: both copies use the same noise increment;
* ``switching``: reflection of the low-block noise (in the ``G^{-1/2}``
  geometry) mixed with synchronous coupling according to the sector of
  ``z = X - Y``; the high block is always synchronous;
* ``reflection_fd``: classical reflection coupling of a non-degenerate
  finite-dimensional diffusion ``dS = a(S) dt + sigma dB``.

The ensemble simulator advances blocks of trajectories as arrays of shape
``(n, d)``. Block ``j`` draws its increments for step ``k`` from the Philox
counter addressed by ``(seed, stream, j, k)`` (see :mod:`.rng`), so results do
not depend on threading or block scheduling.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .drifts import DriftModel
from .rng import NOISE_PRIMARY, NOISE_SECONDARY, StreamFactory
from .spectral import SpectralSpace, WeightedGeometry

__all__ = [
    "BROADIE_GLASSERMAN",
    "CouplingConfig",
    "CouplingState",
    "EnsembleRecord",
    "SimulationError",
    "TrajectoryRecord",
    "rc_mixing",
    "reflection_direction",
    "reflection_operator",
    "simulate_ensemble",
    "simulate_pair",
    "simulate_reflection_fd",
    "step_reflection_fd",
    "step_switching",
    "step_synchronous",
]

logger = logging.getLogger(__name__)

KINDS = ("synchronous", "switching", "reflection_fd")
#: discrete-monitoring barrier shift coefficient, ``-zeta(1/2)/sqrt(2 pi)``
BROADIE_GLASSERMAN = 0.5826


class SimulationError(RuntimeError):
    """A trajectory produced non-finite values."""


@dataclass(frozen=True)
class CouplingConfig:
    """Integrator and coupling parameters.

    ``delta`` is the sector regularisation width of the switching coupling;
    ``None`` resolves to ``1e-6 * R`` of the active distance profile.
    ``merge_tol`` is the weighted distance below which ``Y`` is set to ``X``.
    ``barrier_correction`` shifts the coalescence level of the
    ``reflection_fd`` coupling by ``0.5826 * 2 sqrt(dt)`` (in ``sigma^{-1}``
    coordinates) and of the switching coupling's low-block meeting by
    ``0.5826 * 2 sqrt(2 dt)`` (in ``G^{-1/2}`` coordinates) to correct for
    discrete monitoring. ``snap_low_block`` enables the low-block meeting
    rule of the switching coupling.
    """

    kind: str = "switching"
    dt: float = 1e-3
    T: float = 1.0
    delta: float | None = None
    merge_tol: float = 1e-9
    seed: int = 0
    record_stride: int = 1
    chunk_size: int = 1024
    workers: int = 1
    barrier_correction: bool = True
    snap_low_block: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coupling kind {self.kind!r}; choose from {KINDS}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.T >= 0:
            raise ValueError("T must be >= 0")
        if self.T > 0 and self.dt > self.T * (1 + 1e-12):
            raise ValueError("dt must not exceed T")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be > 0")
        if not self.merge_tol >= 0:
            raise ValueError("merge_tol must be >= 0")
        if self.record_stride < 1 or self.chunk_size < 1 or self.workers < 1:
            raise ValueError("record_stride, chunk_size and workers must be >= 1")

    @property
    def n_steps(self) -> int:
        n = int(round(self.T / self.dt))
        if abs(n * self.dt - self.T) > 1e-9 * max(self.T, self.dt):
            raise ValueError(f"T = {self.T} is not an integer multiple of dt = {self.dt}")
        return n

    def resolved_delta(self, profile=None) -> float:
        if self.delta is not None:
            return self.delta
        if profile is None:
            raise ValueError("switching coupling needs delta or a distance profile to derive it from")
        return 1e-6 * profile.R

    def with_(self, **kw) -> "CouplingConfig":
        return replace(self, **kw)


@dataclass
class CouplingState:
    X: np.ndarray
    Y: np.ndarray
    t: float = 0.0
    coalesced: bool = False


# ---------------------------------------------------------------------------
# coupling ingredients


def _batched_norms(z: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.norm(z[..., :n], axis=-1), np.linalg.norm(z[..., n:], axis=-1)


def rc_mixing(z, geom: WeightedGeometry, space: SpectralSpace, delta: float):
    """Mixing weights ``(rc, sc)`` with ``rc^2 + sc^2 = 1``.

    ``rc = h1(rho) h2(r)`` for ``rho = ||z^h|| / ((beta + 1) ||z^l||)`` and
    ``r = ||z||_alpha``; ``h1`` ramps from 1 at ``rho = 2`` to 0 at
    ``rho = 4``, ``h2`` from 0 at ``r = delta/2`` to 1 at ``r = delta``.
    """
    z = np.asarray(z, dtype=float)
    zl, zh = _batched_norms(z, space.split_index)
    denom = (geom.beta + 1.0) * zl
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(denom > 0, zh / np.where(denom > 0, denom, 1.0), np.inf)
    h1 = np.clip(0.5 * (4.0 - rho), 0.0, 1.0)
    r = zl + geom.alpha * zh
    h2 = np.clip((r - 0.5 * delta) / (0.5 * delta), 0.0, 1.0)
    rc = h1 * h2
    sc = np.sqrt(1.0 - rc * rc)
    if rc.ndim == 0:
        return float(rc), float(sc)
    return rc, sc


def reflection_direction(z_l, space: SpectralSpace) -> np.ndarray:
    """Unit vector ``G^{-1/2} z^l / ||G^{-1/2} z^l||`` (``e_1`` when ``z^l = 0``).

    Accepts low-block or full-length vectors (the high part is ignored) and
    returns an array of the same length with zero high block.
    """
    z_l = np.asarray(z_l, dtype=float)
    n = space.split_index
    out = np.zeros_like(z_l)
    w = z_l[..., :n] / space.sqrt_eigenvalues[:n]
    norm = np.linalg.norm(w, axis=-1, keepdims=True)
    safe = norm > 0
    out[..., :n] = np.where(safe, w / np.where(safe, norm, 1.0), 0.0)
    out[..., 0] = np.where(safe[..., 0], out[..., 0], 1.0)
    return out


def reflection_operator(e, space: SpectralSpace) -> np.ndarray:
    """Matrix of ``O = G^{1/2} (I - 2 e e^T) G^{-1/2}`` on the low block (``n x n``)."""
    n = space.split_index
    e = np.asarray(e, dtype=float)[:n]
    s = space.sqrt_eigenvalues[:n]
    return np.eye(n) - 2.0 * np.outer(s * e, e / s)


def _apply_reflection(w: np.ndarray, e: np.ndarray, sqrt_l: np.ndarray) -> np.ndarray:
    """``O w`` for low-block batches ``w`` and unit directions ``e`` (same shape)."""
    proj = np.sum(e * w / sqrt_l, axis=-1, keepdims=True)
    return w - 2.0 * sqrt_l * e * proj


def _drift_increment(X: np.ndarray, drift: Callable, dt: float) -> np.ndarray:
    return (drift(X) - X) * dt


def _switching_update(X, Y, drift, space, geom, delta, dt, xi1, xi2, snap_shift=None, sqrt2=math.sqrt(2.0)):
    """One switching-coupling step for batches; returns ``(X_new, Y_new, rc)``.

    With ``snap_shift`` set, a pair whose low-block difference crosses the
    reflection hyperplane during the step (signed ``G^{-1/2}`` distance along
    ``e`` at most ``snap_shift * rc``) gets ``Y^l <- X^l``: the discrete
    counterpart of the low blocks meeting, which the Euler grid would
    otherwise step over.
    """
    n = space.split_index
    sqrt_l = space.sqrt_eigenvalues[:n]
    z = X - Y
    rc, sc = rc_mixing(z, geom, space, delta)
    rc, sc = np.atleast_1d(rc)[..., None], np.atleast_1d(sc)[..., None]
    e = reflection_direction(z, space)[..., :n]
    refl = rc * xi1[..., :n]  # R xi1 lives in the low block
    shared = xi2.copy()
    shared[..., :n] *= sc
    noise_x = shared.copy()
    noise_x[..., :n] += refl
    noise_y = shared
    noise_y[..., :n] += _apply_reflection(refl, e, sqrt_l)
    Xn = X + _drift_increment(X, drift, dt) + sqrt2 * noise_x
    Yn = Y + _drift_increment(Y, drift, dt) + sqrt2 * noise_y
    if snap_shift is not None:
        along = np.sum(e * (Xn[..., :n] - Yn[..., :n]) / sqrt_l, axis=-1)
        snap = (rc[..., 0] > 0) & (along <= snap_shift * rc[..., 0])
        if np.any(snap):
            Yn[snap, :n] = Xn[snap, :n]
    return Xn, Yn, rc[..., 0]


def _snap_shift(config: "CouplingConfig") -> float | None:
    """Barrier level for low-block meeting: ``0.5826 * 2 sqrt(2 dt)`` per unit ``rc`` (or 0)."""
    if not config.snap_low_block:
        return None
    return BROADIE_GLASSERMAN * 2.0 * math.sqrt(2.0 * config.dt) if config.barrier_correction else 0.0


def _synchronous_update(X, Y, drift, dt, xi, sqrt2=math.sqrt(2.0)):
    Xn = X + _drift_increment(X, drift, dt) + sqrt2 * xi
    Yn = Y + _drift_increment(Y, drift, dt) + sqrt2 * xi
    return Xn, Yn


def _weighted(z: np.ndarray, space: SpectralSpace, alpha: float) -> np.ndarray:
    zl, zh = _batched_norms(z, space.split_index)
    return zl + alpha * zh


def _merge(X, Y, r, merge_tol):
    hit = r < merge_tol
    if np.any(hit):
        Y = Y.copy()
        Y[hit] = X[hit]
    return Y, hit


def _check_finite(*arrays, t: float):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise SimulationError(f"non-finite state at t = {t:g}; reduce dt or check the drift")


def step_switching(state: CouplingState, drift: DriftModel, space: SpectralSpace, geom: WeightedGeometry,
                   config: CouplingConfig, rng: np.random.Generator, profile=None) -> CouplingState:
    """Advance a single pair by one switching-coupling step."""
    if state.coalesced:
        raise ValueError("pair already coalesced")
    lam_dt = np.sqrt(space.eigenvalues * config.dt)
    xi1 = rng.standard_normal(space.dim) * lam_dt
    xi2 = rng.standard_normal(space.dim) * lam_dt
    X, Y, _ = _switching_update(state.X[None], state.Y[None], drift, space, geom,
                                config.resolved_delta(profile), config.dt, xi1[None], xi2[None],
                                _snap_shift(config))
    return _finish_step(X[0], Y[0], state.t + config.dt, space, geom.alpha, config.merge_tol)


def step_synchronous(state: CouplingState, drift: DriftModel, space: SpectralSpace, config: CouplingConfig,
                     rng: np.random.Generator, geom: WeightedGeometry | None = None) -> CouplingState:
    """Advance a single pair by one synchronous step (shared increment)."""
    if state.coalesced:
        raise ValueError("pair already coalesced")
    xi = rng.standard_normal(space.dim) * np.sqrt(space.eigenvalues * config.dt)
    X, Y = _synchronous_update(state.X, state.Y, drift, config.dt, xi)
    alpha = geom.alpha if geom is not None else 1.0
    return _finish_step(X, Y, state.t + config.dt, space, alpha, config.merge_tol)


def _finish_step(X, Y, t, space, alpha, merge_tol) -> CouplingState:
    _check_finite(X, Y, t=t)
    r = float(_weighted(X - Y, space, alpha))
    if r < merge_tol:
        return CouplingState(X, X.copy(), t, True)
    return CouplingState(X, Y, t, False)


def _check_sigma(sigma) -> tuple[np.ndarray, np.ndarray]:
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be square")
    cond = np.linalg.cond(sigma)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError("sigma is singular or ill-conditioned")
    return sigma, np.linalg.inv(sigma)


def _reflection_fd_update(X, Y, drift_fd, sigma, sigma_inv, dt, xi, threshold):
    """Batched reflection step; returns ``(X_new, Y_new, merged)``."""
    u = (X - Y) @ sigma_inv.T
    nu = np.linalg.norm(u, axis=-1, keepdims=True)
    uhat = u / np.where(nu > 0, nu, 1.0)
    refl = xi - 2.0 * uhat * np.sum(uhat * xi, axis=-1, keepdims=True)
    Xn = X + drift_fd(X) * dt + xi @ sigma.T
    Yn = Y + drift_fd(Y) * dt + refl @ sigma.T
    un = (Xn - Yn) @ sigma_inv.T
    along = np.sum(un * uhat, axis=-1)
    merged = (along <= threshold) | (np.linalg.norm(un, axis=-1) < threshold) | (nu[..., 0] == 0)
    return Xn, Yn, merged


def step_reflection_fd(state: CouplingState, drift_fd: Callable, sigma, config: CouplingConfig,
                       rng: np.random.Generator) -> CouplingState:
    """One step of ``dS = a(S) dt + sigma (I - 2 u u^T) dB`` against ``dR = a(R) dt + sigma dB``.

    ``u = sigma^{-1}(R - S) / ||sigma^{-1}(R - S)||``; the pair merges when the
    difference crosses the reflection hyperplane or falls below the
    (optionally corrected) merge level.
    """
    if state.coalesced:
        raise ValueError("pair already coalesced")
    sigma, sigma_inv = _check_sigma(sigma)
    xi = rng.standard_normal(sigma.shape[0]) * math.sqrt(config.dt)
    X, Y, merged = _reflection_fd_update(state.X[None], state.Y[None], drift_fd, sigma, sigma_inv,
                                         config.dt, xi[None], _fd_threshold(config))
    X, Y = X[0], Y[0]
    t = state.t + config.dt
    _check_finite(X, Y, t=t)
    if merged[0]:
        return CouplingState(X, X.copy(), t, True)
    return CouplingState(X, Y, t, False)


def _fd_threshold(config: CouplingConfig) -> float:
    shift = BROADIE_GLASSERMAN * 2.0 * math.sqrt(config.dt) if config.barrier_correction else 0.0
    return max(config.merge_tol, shift)


# ---------------------------------------------------------------------------
# records


@dataclass
class TrajectoryRecord:
    """Sampled observables of one coupled pair.

    ``r`` is ``||X - Y||_alpha`` (Euclidean for ``reflection_fd``); ``f_r``
    and ``Q`` are present when a profile (and a Lyapunov function with its
    ``epsilon``) is attached.
    """

    t: np.ndarray
    r: np.ndarray
    rc: np.ndarray
    f_r: np.ndarray | None = None
    Q: np.ndarray | None = None
    coalesced_at: float | None = None
    X_final: np.ndarray | None = None
    Y_final: np.ndarray | None = None

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "r", "f_r", "Q", "rc"])
            for i in range(self.t.size):
                w.writerow([
                    repr(float(self.t[i])), repr(float(self.r[i])),
                    "" if self.f_r is None else repr(float(self.f_r[i])),
                    "" if self.Q is None else repr(float(self.Q[i])),
                    repr(float(self.rc[i])),
                ])
        return path


@dataclass
class EnsembleRecord:
    """Observables of ``N`` independent pairs at the recorded times (arrays of shape ``(n_t, N)``)."""

    t: np.ndarray
    r: np.ndarray
    rc: np.ndarray
    f_r: np.ndarray | None
    Q: np.ndarray | None
    coalesced: np.ndarray
    X_final: np.ndarray
    Y_final: np.ndarray
    config: CouplingConfig
    meta: dict = field(default_factory=dict)

    @property
    def n_pairs(self) -> int:
        return int(self.r.shape[1])

    def trajectory(self, i: int) -> TrajectoryRecord:
        where = np.flatnonzero(self.r[:, i] == 0.0)
        return TrajectoryRecord(
            t=self.t, r=self.r[:, i], rc=self.rc[:, i],
            f_r=None if self.f_r is None else self.f_r[:, i],
            Q=None if self.Q is None else self.Q[:, i],
            coalesced_at=float(self.t[where[0]]) if where.size and self.r[0, i] > 0 else None,
            X_final=self.X_final[i], Y_final=self.Y_final[i],
        )


# ---------------------------------------------------------------------------
# ensemble engine


def _as_batch(v, n: int, d: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        if v.size != d:
            raise ValueError(f"initial state has {v.size} coordinates, expected {d}")
        return np.broadcast_to(v, (n, d)).copy()
    if v.shape != (n, d):
        raise ValueError(f"initial states have shape {v.shape}, expected {(n, d)}")
    return v.copy()


def _observe(X, Y, space, alpha, profile, lyap, epsilon):
    r = _weighted(X - Y, space, alpha)
    f_r = profile(r) if profile is not None else None
    Q = None
    if f_r is not None and lyap is not None and epsilon is not None:
        Q = f_r * (1.0 + epsilon * lyap.value(X) + epsilon * lyap.value(Y))
    return r, f_r, Q


def _record_steps(n_steps: int, stride: int) -> np.ndarray:
    steps = np.arange(0, n_steps + 1, stride)
    if steps[-1] != n_steps:
        steps = np.append(steps, n_steps)
    return steps


def _run_chunk(chunk: int, X: np.ndarray, Y: np.ndarray, drift, space, geom, config, profile, lyap, epsilon,
               streams: StreamFactory, delta: float):
    n, d = X.shape
    n_steps = config.n_steps
    rec_steps = _record_steps(n_steps, config.record_stride)
    m = rec_steps.size
    r_out, rc_out = np.empty((m, n)), np.zeros((m, n))
    f_out = np.empty((m, n)) if profile is not None else None
    q_out = np.empty((m, n)) if (profile is not None and lyap is not None and epsilon is not None) else None
    alpha = geom.alpha
    lam_dt = np.sqrt(space.eigenvalues * config.dt)
    snap = _snap_shift(config)
    coalesced = _weighted(X - Y, space, alpha) < config.merge_tol
    Y[coalesced] = X[coalesced]
    j = 0
    rc = np.zeros(n)
    for k in range(n_steps + 1):
        if j < m and rec_steps[j] == k:
            r, f_r, Q = _observe(X, Y, space, alpha, profile, lyap, epsilon)
            r_out[j] = r
            rc_out[j] = rc
            if f_out is not None:
                f_out[j] = f_r
            if q_out is not None:
                q_out[j] = Q
            j += 1
        if k == n_steps:
            break
        xi2 = streams.normals(NOISE_SECONDARY, chunk, k, d, n) * lam_dt
        if config.kind == "switching":
            xi1 = streams.normals(NOISE_PRIMARY, chunk, k, d, n) * lam_dt
            X, Y, rc = _switching_update(X, Y, drift, space, geom, delta, config.dt, xi1, xi2, snap)
        else:
            X, Y = _synchronous_update(X, Y, drift, config.dt, xi2)
        rc = np.where(coalesced, 0.0, rc) if config.kind == "switching" else rc
        Y, hit = _merge(X, Y, _weighted(X - Y, space, alpha), config.merge_tol)
        Y[coalesced] = X[coalesced]
        coalesced |= hit
        if (k + 1) % 64 == 0 or k + 1 == n_steps:
            _check_finite(X, Y, t=(k + 1) * config.dt)
    return r_out, rc_out, f_out, q_out, coalesced, X, Y


def _chunks(N: int, size: int):
    return [(j, slice(j * size, min(N, (j + 1) * size))) for j in range((N + size - 1) // size)]


def simulate_ensemble(x0, y0, drift: DriftModel, space: SpectralSpace, geom: WeightedGeometry,
                      config: CouplingConfig, n_pairs: int, profile=None, lyap=None,
                      epsilon: float | None = None) -> EnsembleRecord:
    """Simulate ``n_pairs`` coupled pairs from ``(x0, y0)`` (single states or ``(n_pairs, d)`` arrays)."""
    if config.kind == "reflection_fd":
        raise ValueError("use simulate_reflection_fd for the finite-dimensional reflection coupling")
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    d = space.dim
    X0, Y0 = _as_batch(x0, n_pairs, d), _as_batch(y0, n_pairs, d)
    delta = config.resolved_delta(profile) if config.kind == "switching" else 0.0
    streams = StreamFactory(config.seed)
    parts = _chunks(n_pairs, config.chunk_size)

    def run(part):
        j, sl = part
        return _run_chunk(j, X0[sl].copy(), Y0[sl].copy(), drift, space, geom, config, profile, lyap,
                          epsilon, streams, delta)

    if config.workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run, parts))
    else:
        results = [run(p) for p in parts]

    def cat(i, axis=1):
        if results[0][i] is None:
            return None
        return np.concatenate([res[i] for res in results], axis=axis)

    steps = _record_steps(config.n_steps, config.record_stride)
    return EnsembleRecord(
        t=steps * config.dt, r=cat(0), rc=cat(1), f_r=cat(2), Q=cat(3), coalesced=cat(4, 0),
        X_final=cat(5, 0), Y_final=cat(6, 0), config=config,
        meta={"delta": delta, "alpha": geom.alpha, "beta": geom.beta, "d": d, "n": space.split_index},
    )


def simulate_pair(x0, y0, drift: DriftModel, space: SpectralSpace, geom: WeightedGeometry, profile,
                  config: CouplingConfig, lyap=None, epsilon: float | None = None) -> TrajectoryRecord:
    """Single coupled pair; deterministic given ``config.seed``."""
    ens = simulate_ensemble(x0, y0, drift, space, geom, config, 1, profile=profile, lyap=lyap, epsilon=epsilon)
    return ens.trajectory(0)


def simulate_reflection_fd(x0, y0, drift_fd: Callable, sigma, config: CouplingConfig, n_pairs: int = 1) -> dict:
    """Ensemble of classical reflection couplings; returns times, distances and coupling times.

    Coupling times are ``inf`` for pairs that have not met by ``T``.
    """
    sigma, sigma_inv = _check_sigma(sigma)
    d = sigma.shape[0]
    X, Y = _as_batch(x0, n_pairs, d), _as_batch(y0, n_pairs, d)
    streams = StreamFactory(config.seed)
    thr = _fd_threshold(config)
    n_steps = config.n_steps
    rec = _record_steps(n_steps, config.record_stride)
    dist = np.empty((rec.size, n_pairs))
    tau = np.full(n_pairs, np.inf)
    tau[np.all(X == Y, axis=1)] = 0.0
    j = 0
    for chunk, sl in _chunks(n_pairs, config.chunk_size):
        Xc, Yc = X[sl].copy(), Y[sl].copy()
        done = tau[sl] == 0.0
        j = 0
        for k in range(n_steps + 1):
            if j < rec.size and rec[j] == k:
                dist[j, sl] = np.linalg.norm(Xc - Yc, axis=1)
                j += 1
            if k == n_steps:
                break
            xi = streams.normals(NOISE_SECONDARY, chunk, k, d, Xc.shape[0]) * math.sqrt(config.dt)
            Xn, Yn, merged = _reflection_fd_update(Xc, Yc, drift_fd, sigma, sigma_inv, config.dt, xi, thr)
            Yn[done] = Xn[done]
            new = merged & ~done
            Yn[new] = Xn[new]
            idx = np.flatnonzero(new) + sl.start
            tau[idx] = (k + 1) * config.dt
            done |= merged
            Xc, Yc = Xn, Yn
        _check_finite(Xc, Yc, t=config.T)
    return {"t": rec * config.dt, "distance": dist, "coupling_time": tau}
