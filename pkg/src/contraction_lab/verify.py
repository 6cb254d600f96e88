"""Invariant suites run by the ``verify`` subcommand.

Each check returns a JSON-serialisable dict with a boolean ``passed``; the
suite passes when every check does.
"""
from __future__ import annotations

import math

import numpy as np

from .config import ExperimentConfig
from .coupling import rc_mixing, reflection_direction, reflection_operator
from .drifts import check_assumption1, check_large_distance, sector_contraction_check
from .experiments import build_setup
from .lyapunov import generator_V, mc_generator_check, validate_drift_constants
from .spectral import weighted_norm

__all__ = ["check_profile", "run_verification"]


def check_profile(profile, tol: float = 1e-6) -> dict:
    """Monotonicity, concavity, derivative band, sandwich and ODE residual at the grid nodes."""
    r, f, fp, fs = profile.r, profile.f, profile.fprime, profile.fsecond
    inner = slice(1, -1)
    band = profile.g[inner]
    slack = 1e-12
    out = {
        "f0": float(f[0]),
        # f' = phi g underflows to zero once psi exceeds ~745, so strict
        # increase is only representable as non-decrease with f' >= 0
        "increasing": bool(np.all(np.diff(f) >= 0) and np.all(fp >= 0) and fp[0] > 0),
        "concave": bool(np.all(fs[inner] <= slack * np.maximum(1.0, np.abs(fp[inner])))),
        "band": bool(np.all((band >= 0.5 - slack) & (band <= 1.0 + slack))),
        "sandwich": bool(np.all(f >= 0.5 * profile.Phi * (1 - slack)) and np.all(f <= profile.Phi * (1 + slack))
                         and np.all(profile.Phi <= r * (1 + slack) + 1e-300)),
        "ode_residual": float(np.max(np.abs(profile.ode_residual()))),
        "g_R": float(profile.g[-1]),
    }
    out["passed"] = bool(out["increasing"] and out["concave"] and out["band"] and out["sandwich"]
                         and out["ode_residual"] < tol and out["f0"] == 0.0 and out["g_R"] == 0.5)
    return out


def _norm_equivalence(space, geom, seed, n=1000) -> dict:
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, space.dim)) * rng.uniform(0.01, 10.0, (n, 1))
    wn = weighted_norm(x, space, geom)
    e = np.linalg.norm(x, axis=1)
    ok = np.all(e <= wn * (1 + 1e-15)) and np.all(wn <= math.sqrt(2.0) * geom.alpha * e * (1 + 1e-15))
    return {"n": n, "passed": bool(ok)}


def _isometry(space, seed, n=100) -> dict:
    rng = np.random.default_rng(seed)
    k = space.split_index
    G = np.diag(space.eigenvalues[:k])
    worst = 0.0
    for _ in range(n):
        e = reflection_direction(np.concatenate([rng.standard_normal(k), np.zeros(space.dim - k)]), space)
        O = reflection_operator(e, space)
        worst = max(worst, float(np.max(np.abs(O @ G @ O.T - G))))
    return {"n": n, "max_abs_error": worst, "passed": worst <= 1e-12}


def _mixing(space, geom, delta, seed, n=2000) -> dict:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, space.dim)) * 10.0 ** rng.uniform(-8, 1, (n, 1))
    rc, sc = rc_mixing(z, geom, space, delta)
    err = float(np.max(np.abs(rc * rc + sc * sc - 1.0)))
    return {"n": n, "max_identity_error": err, "passed": bool(err <= 4e-16 and np.all((rc >= 0) & (rc <= 1)))}


def run_verification(cfg: ExperimentConfig, samples: int = 10_000, seed: int = 0) -> dict:
    """Run the invariant suites for the configured setup."""
    setup = build_setup(cfg)
    space, drift, geom = setup.space, setup.drift, setup.geom
    checks: dict[str, dict] = {}
    checks["norm_equivalence"] = _norm_equivalence(space, geom, seed)
    lam_next, pot = space.lambda_next, drift.potential
    form = "norm"
    if cfg.drift.constants == "lemma" and pot is not None and lam_next * (pot.a + pot.lipschitz) > 0.5:
        form = "one_sided"
    checks["assumption1"] = check_assumption1(drift, space, drift.declared_constants, samples, seed, form=form).as_dict()
    checks["sector_contraction"] = sector_contraction_check(drift, space, geom, samples, seed).as_dict()
    if drift.declared_large_distance is not None:
        M, R = drift.declared_large_distance
        inner = pot.support_radius if pot is not None and pot.support_radius else None
        checks["large_distance"] = check_large_distance(drift, space, geom, M, R, samples, seed,
                                                        form=drift.large_distance_form, inner_radius=inner).as_dict()
    checks["reflection_isometry"] = _isometry(space, seed)
    delta = cfg.coupling.resolved_delta(setup.profile) if setup.profile is not None else 1e-6
    checks["mixing_identity"] = _mixing(space, geom, delta, seed)
    if setup.profile is not None:
        checks["profile"] = check_profile(setup.profile)
    gc = mc_generator_check(drift, space, np.zeros(space.dim), 1e-3, 10_000, seed)
    checks["generator_mc"] = dict(gc.as_dict(), passed=gc.within(3.0))
    if setup.lyap is not None:
        checks["lyapunov_validation"] = validate_drift_constants(drift, space, setup.lyap.C, setup.lyap.eta,
                                                                 seed=seed + 1)
    return {"passed": all(c["passed"] for c in checks.values()), "checks": checks, "setup": setup.summary(),
            "generator_at_origin": float(generator_V(np.zeros(space.dim), drift, space))}
