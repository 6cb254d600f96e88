"""Command-line front end: ``contraction-lab <subcommand> [--config FILE] [overrides]``.

Exit codes: 0 when every check passes, 1 when any fails, 2 on configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config, validate
from .coupling import simulate_pair
from .distance import corollary_bounds
from .experiments import (
    build_setup,
    run_contraction_experiment,
    run_dimension_sweep,
    write_experiment_outputs,
)

logger = logging.getLogger("contraction_lab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_default))


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(type(o).__name__)


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.command == "tps" and not args.config:
        from dataclasses import replace
        from .config import LyapunovSection, TheorySection
        cfg = replace(cfg, drift=replace(cfg.drift, preset="tps_doublewell", a=1.0, barrier=1.0, width=0.8),
                      theory=TheorySection(variant="lyapunov"), lyapunov=LyapunovSection())
    cfg = cfg.with_overrides(seed=args.seed, out=args.out, dt=args.dt, ensemble=args.ensemble,
                             **({"T": args.T} if getattr(args, "T", None) is not None else {}))
    validate(cfg)
    return cfg


def cmd_rates(cfg: ExperimentConfig, args) -> int:
    setup = build_setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {"rate": setup.rate.as_dict(), "setup": setup.summary()}
    if setup.profile is not None:
        setup.profile.to_csv(out / "profile.csv")
        report["profile"] = setup.profile.summary()
        cb = corollary_bounds(setup.profile, setup.geom, setup.rate, lyap=setup.lyap)
        times = np.linspace(0.0, cfg.coupling.T, 11)
        x = np.zeros(setup.space.dim)
        kw = {"x": x} if setup.lyap is not None else {}
        report["corollaries"] = cb.table(times, **kw)
    _dump(report, out / "rates.json")
    print(json.dumps({"c": setup.rate.c, "log_c": setup.rate.log_c, "binding": setup.rate.binding}))
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig, args) -> int:
    setup = build_setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    x0 = setup.space.embed(np.asarray(cfg.experiment.x0))
    y0 = setup.space.embed(np.asarray(cfg.experiment.y0))
    coupling = cfg.coupling.with_(kind="synchronous") if setup.variant == "synchronous" else cfg.coupling
    eps = setup.rate.epsilon if setup.variant == "lyapunov" else None
    rec = simulate_pair(x0, y0, setup.drift, setup.space, setup.geom, setup.profile, coupling,
                        lyap=setup.lyap, epsilon=eps)
    path = rec.to_csv(out / "pair.csv")
    print(json.dumps({"csv": str(path), "r_final": float(rec.r[-1]), "coalesced_at": rec.coalesced_at}))
    return EXIT_OK


def cmd_contract(cfg: ExperimentConfig, args) -> int:
    report = run_contraction_experiment(cfg)
    paths = write_experiment_outputs(report, cfg.out, tag=cfg.experiment.name)
    est = report.estimate
    line = {"passed": report.passed, "c_theory": report.c_theory,
            "c_hat": est.c_hat if est else None, "se": est.se if est else None, "json": str(paths["json"])}
    print(json.dumps(line))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    dims = [int(v) for v in args.dims.split(",")] if args.dims else None
    sweep = run_dimension_sweep(cfg, dims)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    for d, rep in zip(sweep.dims, sweep.reports):
        write_experiment_outputs(rep, out, tag=f"{cfg.experiment.name}_d{d}")
    _dump(sweep.as_dict(), out / f"{cfg.experiment.name}_sweep.json")
    print(json.dumps({"passed": sweep.passed, "max_pairwise_z": sweep.max_z}))
    return EXIT_OK if sweep.passed else EXIT_FAIL


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    from .verify import run_verification

    rep = run_verification(cfg, samples=args.samples, seed=cfg.coupling.seed)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _dump(rep, out / "verify.json")
    for name, c in rep["checks"].items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}")
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_tps(cfg: ExperimentConfig, args) -> int:
    from .drifts import quadratic_path_potential, tps_drift
    from .coupling import simulate_ensemble
    from .verify import run_verification

    setup = build_setup(cfg)
    space = setup.space
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.coupling.seed)
    xs = rng.standard_normal((100, space.dim))
    quad = tps_drift(space, quadratic_path_potential(cfg.drift.a))
    exact = -space.eigenvalues * cfg.drift.a**2 * xs
    quad_err = float(np.max(np.abs(quad(xs) - exact)))
    checks = {"quadratic_closed_form": {"max_abs_error": quad_err, "passed": quad_err <= 1e-8}}
    checks.update(run_verification(cfg, samples=args.samples, seed=cfg.coupling.seed)["checks"])
    # sample paths of the target chain started from the zero path
    n_paths = min(cfg.experiment.n_pairs, 64)
    rec = simulate_ensemble(np.zeros(space.dim), np.zeros(space.dim), setup.drift, space, setup.geom,
                            cfg.coupling.with_(kind="synchronous"), n_paths)
    s = np.linspace(0.0, 1.0, 101)
    basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(s, np.arange(1, space.dim + 1)))
    paths = rec.X_final @ basis.T
    with (out / "tps_paths.csv").open("w") as fh:
        fh.write("path,s,x\n")
        for i in range(n_paths):
            for sj, v in zip(s, paths[i]):
                fh.write(f"{i},{float(sj)!r},{float(v)!r}\n")
    _dump({"checks": checks, "setup": setup.summary(), "rate": setup.rate.as_dict()}, out / "tps.json")
    for name, c in checks.items():
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name}")
    return EXIT_OK if all(c["passed"] for c in checks.values()) else EXIT_FAIL


COMMANDS = {
    "rates": (cmd_rates, "build the distance profile and rate report (JSON + profile CSV)"),
    "simulate": (cmd_simulate, "simulate a single coupled pair (CSV)"),
    "contract": (cmd_contract, "ensemble contraction experiment (JSON + CSV)"),
    "sweep-dim": (cmd_sweep, "repeat the experiment over truncation dimensions"),
    "verify": (cmd_verify, "run the invariant suites"),
    "tps": (cmd_tps, "transition path sampling demo"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contraction-lab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=str, help="experiment TOML file (defaults if omitted)")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=str)
        p.add_argument("--dt", type=float)
        p.add_argument("--ensemble", type=int, help="number of coupled pairs")
        p.add_argument("--T", type=float, help="time horizon")
        if name == "sweep-dim":
            p.add_argument("--dims", type=str, help="comma-separated truncation dimensions")
        if name in ("verify", "tps"):
            p.add_argument("--samples", type=int, default=10_000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handler = COMMANDS[args.command][0]
    try:
        return handler(cfg, args)
    except (ConfigError, ValueError) as exc:  # inconsistent parameters surface when the setup is built
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
