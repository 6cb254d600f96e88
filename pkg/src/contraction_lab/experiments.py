"""Composition of the building blocks into reproducible contraction experiments.

An experiment builds the truncated space, the drift, the weighted geometry,
the distance profile and the theoretical rate from an
:class:`~contraction_lab.config.ExperimentConfig`, simulates an ensemble of
coupled pairs and compares the fitted exponential decay of the ensemble mean
of ``f(r_t)`` (or ``Q_t``) with the theoretical rate.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .coupling import EnsembleRecord, simulate_ensemble
from .distance import (
    DistanceProfile,
    RateReport,
    build_profile,
    normalize_variant,
    rate_synchronous,
    rate_thm2,
    rate_thm3,
)
from .drifts import (
    DriftModel,
    compact_bump,
    double_well_path_potential,
    gaussian_bump,
    preconditioned_gradient_drift,
    quadratic_path_potential,
    tps_drift,
    zero_perturbation,
)
from .lyapunov import LyapunovSpec, closed_form_constants, fit_drift_constants, validate_drift_constants
from .spectral import SpectralSpace, WeightedGeometry, eigenvalue_family, split_index_for

__all__ = [
    "DecayEstimate",
    "ExperimentSetup",
    "build_setup",
    "empirical_w1_marginal",
    "estimate_decay",
    "run_contraction_experiment",
    "run_dimension_sweep",
    "write_experiment_outputs",
]

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# decay estimation


@dataclass
class DecayEstimate:
    """Least-squares decay rate of an ensemble-mean series.

    ``se`` is the Monte Carlo standard error (delta method on the
    per-trajectory values) when those are supplied, otherwise the OLS
    standard error from the regression residuals; both are reported.
    """

    c_hat: float
    se: float
    se_mc: float | None
    se_ols: float
    window: tuple[float, float]
    times: np.ndarray = field(repr=False)
    means: np.ndarray = field(repr=False)
    n_points: int = 0

    def as_dict(self) -> dict:
        return {"c_hat": self.c_hat, "se": self.se, "se_mc": self.se_mc, "se_ols": self.se_ols,
                "window": list(self.window), "n_points": self.n_points}


def estimate_decay(times, means, window: tuple[float, float], per_trajectory=None) -> DecayEstimate:
    """Fit ``log mean_t = a - c t`` on ``window`` (absolute times, inclusive).

    Parameters
    ----------
    times, means : array_like
        Reporting grid and ensemble means on it.
    window : (float, float)
        Regression window ``[t_lo, t_hi]``.
    per_trajectory : array_like, optional
        Values of shape ``(len(times), N)`` whose column means are ``means``.
        Enables the Monte Carlo standard error: the slope is a linear
        functional ``sum_t w_t log m_t`` of the log-means, linearised as
        ``(1/N) sum_i y_i`` with ``y_i = sum_t w_t v_{t,i} / m_t``.
    """
    t = np.asarray(times, dtype=float)
    m = np.asarray(means, dtype=float)
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if sel.sum() < 2:
        raise ValueError("regression window holds fewer than two reporting times")
    tw, mw = t[sel], m[sel]
    if np.any(~(mw > 0)):
        raise ValueError("non-positive ensemble mean inside the regression window; use a shorter horizon")
    y = np.log(mw)
    tc = tw - tw.mean()
    sxx = float(np.sum(tc * tc))
    slope = float(np.sum(tc * y) / sxx)
    resid = y - (y.mean() + slope * tc)
    k = tw.size
    se_ols = float(math.sqrt(np.sum(resid**2) / (k - 2) / sxx)) if k > 2 else 0.0
    se_mc = None
    if per_trajectory is not None:
        v = np.asarray(per_trajectory, dtype=float)[sel]
        N = v.shape[1]
        if N > 1:
            w = tc / sxx
            yi = np.sum((w / mw)[:, None] * v, axis=0)
            se_mc = float(yi.std(ddof=1) / math.sqrt(N))
        else:
            se_mc = 0.0
    se = se_mc if se_mc is not None and se_mc > 0 else se_ols
    return DecayEstimate(c_hat=-slope, se=se, se_mc=se_mc, se_ols=se_ols, window=(float(window[0]), float(window[1])),
                         times=t, means=m, n_points=int(k))


def empirical_w1_marginal(samples_a, samples_b) -> float:
    """Exact ``W^1`` between two equal-size empirical measures on the line."""
    a = np.sort(np.asarray(samples_a, dtype=float).ravel())
    b = np.sort(np.asarray(samples_b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample set")
    if a.size != b.size:
        raise ValueError("sample sets must have equal length")
    return float(np.mean(np.abs(a - b)))


# ---------------------------------------------------------------------------
# setup


@dataclass
class ExperimentSetup:
    space: SpectralSpace
    drift: DriftModel
    geom: WeightedGeometry
    variant: str
    profile: DistanceProfile | None = None
    rate: RateReport | None = None
    lyap: LyapunovSpec | None = None
    M: float | None = None
    R: float | None = None
    notes: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "d": self.space.dim, "n": self.space.split_index, "alpha": self.geom.alpha, "beta": self.geom.beta,
            "variant": self.variant, "M": self.M, "R": self.R, "drift": self.drift.name,
            "lambda_star": self.space.lambda_star, "lambda_sup": self.space.lambda_sup,
            "trace": self.space.trace,
            "lyapunov": None if self.lyap is None else self.lyap.as_dict(), "notes": list(self.notes),
        }


def _eigenvalues(cfg: ExperimentConfig, d: int) -> np.ndarray:
    s = cfg.space
    if s.family == "explicit":
        lam = np.asarray(s.eigenvalues, dtype=float)
        if d > lam.size:
            raise ValueError(f"only {lam.size} explicit eigenvalues for d = {d}")
        return lam[:d]
    return eigenvalue_family(s.family, d, rho=s.rho, p=s.p, scale=s.scale)


def _potential(cfg: ExperimentConfig):
    dr = cfg.drift
    if dr.preset == "ou":
        return zero_perturbation(dr.a)
    if dr.preset == "gaussian_bump":
        return gaussian_bump(dr.a, dr.amplitude, dr.width, dr.center)
    if dr.preset == "compact_bump":
        return compact_bump(dr.a, dr.amplitude, dr.radius, dr.center)
    raise ValueError(f"preset {dr.preset!r} is not a plain potential")


def build_setup(cfg: ExperimentConfig, d: int | None = None) -> ExperimentSetup:
    """Space, drift, geometry, profile and theoretical rate for ``cfg`` at truncation ``d``."""
    d = cfg.space.d if d is None else int(d)
    lam = _eigenvalues(cfg, d)
    dr = cfg.drift
    if dr.preset.startswith("tps"):
        path_pot = (quadratic_path_potential(dr.a) if dr.preset == "tps_quadratic"
                    else double_well_path_potential(dr.a, dr.barrier, dr.width))
        L_eff = max(1.0, path_pot.constants()[0])
        n = split_index_for(L_eff, lam) if cfg.space.split == "auto" else int(cfg.space.split)
        space = SpectralSpace(lam, n)
        drift = tps_drift(space, path_pot, nodes=dr.nodes, constants=dr.constants)
    else:
        pot = _potential(cfg)
        n = split_index_for(max(1.0, pot.lipschitz), lam) if cfg.space.split == "auto" else int(cfg.space.split)
        if n > d:
            raise ValueError(f"truncation d = {d} is below the split index n = {n}")
        space = SpectralSpace(lam, n)
        ld = dr.large_distance if not isinstance(dr.large_distance, tuple) else tuple(dr.large_distance)
        drift = preconditioned_gradient_drift(space, pot, constants=dr.constants, large_distance=ld, M=dr.M)
    geom = drift.geometry
    variant = normalize_variant(cfg.theory.variant)
    setup = ExperimentSetup(space=space, drift=drift, geom=geom, variant=variant)
    if geom.beta < 0:
        setup.variant = "synchronous"
        setup.rate = rate_synchronous(geom)
        return setup
    if variant == "large_distance":
        if drift.declared_large_distance is None:
            raise ValueError("drift declares no large-distance contraction (M, R); set [drift] large_distance")
        M, R = drift.declared_large_distance
        setup.profile = build_profile("large_distance", geom.beta, space.lambda_star, R, grid_size=cfg.theory.grid_size)
        setup.rate = rate_thm2(setup.profile, M, geom.alpha)
        setup.M, setup.R = M, R
        return setup
    ly = cfg.lyapunov
    if ly.constants == "closed_form":
        C, eta = closed_form_constants(drift, space, ly.eta)
        empirical = False
    else:
        C, eta, rep = fit_drift_constants(drift, space, ly.eta)
        empirical = True
        check = validate_drift_constants(drift, space, C, eta, seed=ly.seed + 1)
        if not check["passed"]:
            raise ValueError(f"fitted Lyapunov constant C = {C:g} fails validation: {check}")
        setup.notes.append("empirical constants")
    lyap = LyapunovSpec.quadratic(C, eta, geom, space, empirical=empirical)
    setup.profile = build_profile("lyapunov", geom.beta, space.lambda_star, lyap.R_S, theta=lyap.theta,
                                  lambda_sup=space.lambda_sup, grid_size=cfg.theory.grid_size)
    setup.rate = rate_thm3(setup.profile, geom.alpha, C, eta)
    setup.lyap = lyap
    setup.R = lyap.R_S
    return setup


def _initial_states(cfg: ExperimentConfig, space: SpectralSpace) -> tuple[np.ndarray, np.ndarray]:
    return space.embed(np.asarray(cfg.experiment.x0, dtype=float)), space.embed(np.asarray(cfg.experiment.y0, dtype=float))


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ContractionReport:
    name: str
    setup: ExperimentSetup
    record: EnsembleRecord | None
    times: np.ndarray
    means: np.ndarray
    ses: np.ndarray
    quantity: str
    estimate: DecayEstimate | None
    passed: bool
    pathwise: dict | None = None
    checks: dict = field(default_factory=dict)

    @property
    def c_theory(self) -> float:
        return self.setup.rate.c

    def as_dict(self) -> dict:
        return {
            "name": self.name, "quantity": self.quantity, "passed": self.passed,
            "c_theory": self.c_theory, "log_c_theory": self.setup.rate.log_c,
            "rate": self.setup.rate.as_dict(), "setup": self.setup.summary(),
            "estimate": None if self.estimate is None else self.estimate.as_dict(),
            "pathwise": self.pathwise, "checks": self.checks,
            "initial": {"mean": float(self.means[0]) if self.means.size else None},
            "coupling": _coupling_dict(self.record.config) if self.record is not None else None,
        }


def _coupling_dict(c) -> dict:
    return {"kind": c.kind, "dt": c.dt, "T": c.T, "delta": c.delta, "merge_tol": c.merge_tol,
            "seed": c.seed, "record_stride": c.record_stride}


def run_contraction_experiment(cfg: ExperimentConfig, d: int | None = None,
                               setup: ExperimentSetup | None = None) -> ContractionReport:
    """Simulate the ensemble and compare the fitted decay with the theoretical rate.

    ``beta < 0`` setups (synchronous coupling) additionally check the
    pathwise bound ``r_t <= r_0 exp(-c t) (1 + 10 dt)`` for every pair.
    PASS requires ``c_hat >= c_theory - 2 SE - dt_bias_budget``.
    """
    setup = setup or build_setup(cfg, d)
    space, geom = setup.space, setup.geom
    x0, y0 = _initial_states(cfg, space)
    coupling = cfg.coupling
    if setup.variant == "synchronous" and coupling.kind != "synchronous":
        coupling = coupling.with_(kind="synchronous")
    epsilon = setup.rate.epsilon if setup.variant == "lyapunov" else None
    N = cfg.experiment.n_pairs
    name = cfg.experiment.name
    if coupling.T == 0:
        rec = simulate_ensemble(x0, y0, setup.drift, space, geom, coupling, N, profile=setup.profile,
                                lyap=setup.lyap, epsilon=epsilon)
        vals, q = _series(rec, setup)
        return ContractionReport(name, setup, rec, rec.t, vals.mean(axis=1), np.zeros(rec.t.size), q, None, True)
    rec = simulate_ensemble(x0, y0, setup.drift, space, geom, coupling, N, profile=setup.profile,
                            lyap=setup.lyap, epsilon=epsilon)
    vals, quantity = _series(rec, setup)
    means = vals.mean(axis=1)
    ses = vals.std(axis=1, ddof=1) / math.sqrt(N) if N > 1 else np.zeros(means.size)
    lo, hi = cfg.experiment.window
    est = estimate_decay(rec.t, means, (lo * coupling.T, hi * coupling.T), per_trajectory=vals)
    c_th = setup.rate.c
    passed = est.c_hat >= c_th - 2.0 * est.se - cfg.experiment.dt_bias_budget
    pathwise = None
    if setup.variant == "synchronous":
        bound = rec.r[0][None, :] * np.exp(-c_th * rec.t)[:, None] * (1.0 + 10.0 * coupling.dt)
        ok = np.all(rec.r <= bound, axis=0)
        pathwise = {"fraction_ok": float(ok.mean()), "n_violating": int((~ok).sum()),
                    "max_ratio": float(np.max(rec.r / np.where(bound > 0, bound, 1.0)))}
        passed = passed and bool(ok.all())
    return ContractionReport(name, setup, rec, rec.t, means, ses, quantity, est, bool(passed), pathwise)


def _series(rec: EnsembleRecord, setup: ExperimentSetup) -> tuple[np.ndarray, str]:
    if setup.variant == "synchronous":
        return rec.r, "r"
    if setup.variant == "lyapunov":
        return rec.Q, "Q"
    return rec.f_r, "f_r"


@dataclass
class SweepReport:
    dims: list[int]
    reports: list[ContractionReport]
    theory_identical: bool
    mutually_consistent: bool
    max_z: float

    @property
    def passed(self) -> bool:
        return self.theory_identical and self.mutually_consistent

    def as_dict(self) -> dict:
        return {
            "dims": self.dims, "passed": self.passed, "theory_identical": self.theory_identical,
            "mutually_consistent": self.mutually_consistent, "max_pairwise_z": self.max_z,
            "entries": [{"d": d, "c_theory": r.c_theory, "log_c_theory": r.setup.rate.log_c,
                         "c_hat": r.estimate.c_hat if r.estimate else None,
                         "se": r.estimate.se if r.estimate else None, "passed": r.passed}
                        for d, r in zip(self.dims, self.reports)],
        }


def run_dimension_sweep(cfg: ExperimentConfig, dims=None) -> SweepReport:
    """Repeat the experiment for every truncation in ``dims`` with shared seeds.

    The theoretical rate must be bit-identical across ``d``; fitted rates
    must agree pairwise within ``3 sqrt(SE_i^2 + SE_j^2)``.
    """
    dims = [int(k) for k in (dims if dims is not None else cfg.experiment.dims)]
    reports = []
    for d in dims:
        setup = build_setup(cfg, d)
        if d < setup.space.split_index:
            raise ValueError(f"truncation {d} below split index {setup.space.split_index}")
        reports.append(run_contraction_experiment(cfg, setup=setup))
    logs = [r.setup.rate.log_c for r in reports]
    identical = all(v == logs[0] for v in logs)
    max_z = 0.0
    for i in range(len(reports)):
        for j in range(i + 1, len(reports)):
            a, b = reports[i].estimate, reports[j].estimate
            if a is None or b is None:
                continue
            s = math.hypot(a.se, b.se)
            max_z = max(max_z, abs(a.c_hat - b.c_hat) / s if s > 0 else (0.0 if a.c_hat == b.c_hat else math.inf))
    return SweepReport(dims, reports, identical, max_z <= 3.0, max_z)


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    return repr(float(v))


def write_experiment_outputs(report: ContractionReport, out_dir, tag: str | None = None) -> dict[str, Path]:
    """JSON report, per-time CSV and long-format CSV; byte-identical for identical inputs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tag = tag or report.name
    paths = {"json": out / f"{tag}.json", "series": out / f"{tag}_series.csv", "long": out / f"{tag}_long.csv"}
    paths["json"].write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True, default=_json_default))
    with paths["series"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", f"mean_{report.quantity}", "se"])
        for t, m, s in zip(report.times, report.means, report.ses):
            w.writerow([_fmt(t), _fmt(m), _fmt(s)])
    with paths["long"].open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["experiment", "d", "t", "quantity", "value"])
        d = report.setup.space.dim
        c = report.c_theory
        for t, m, s in zip(report.times, report.means, report.ses):
            w.writerow([tag, d, _fmt(t), f"mean_{report.quantity}", _fmt(m)])
            w.writerow([tag, d, _fmt(t), "se", _fmt(s)])
            w.writerow([tag, d, _fmt(t), "theory_envelope", _fmt(report.means[0] * math.exp(-c * t))])
    if report.setup.profile is not None:
        paths["profile"] = report.setup.profile.to_csv(out / f"{tag}_profile.csv")
    return paths


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o).__name__)
