"""Experiment configuration: TOML schema, defaults and validation.

See ``docs/config.md`` for the full schema. Every table is optional; missing
keys take the defaults of the dataclasses below. Unknown keys are rejected so
typos surface as configuration errors (CLI exit code 2).
"""
from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .coupling import KINDS, CouplingConfig
from .distance import normalize_variant

__all__ = [
    "ConfigError",
    "DriftSection",
    "ExperimentConfig",
    "ExperimentSection",
    "LyapunovSection",
    "SpaceSection",
    "TheorySection",
    "load_config",
    "parse_config",
]

DRIFT_PRESETS = ("ou", "gaussian_bump", "compact_bump", "tps_quadratic", "tps_doublewell")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass(frozen=True)
class SpaceSection:
    family: str = "brownian_bridge"
    d: int = 16
    split: int | str = "auto"
    rho: float = 0.5
    p: float = 2.0
    scale: float = 1.0
    eigenvalues: tuple[float, ...] | None = None


@dataclass(frozen=True)
class DriftSection:
    preset: str = "gaussian_bump"
    a: float = 1.0
    amplitude: float = 1.0
    width: float = 1.0
    radius: float = 1.0
    barrier: float = 2.0
    center: tuple[float, ...] = (0.0,)
    constants: str = "lemma"
    M: float = 0.75
    large_distance: str | tuple[float, float] = "auto"
    nodes: int | None = None


@dataclass(frozen=True)
class TheorySection:
    variant: str = "large_distance"
    grid_size: int = 1024


@dataclass(frozen=True)
class LyapunovSection:
    eta: float = 0.9
    constants: str = "closed_form"
    seed: int = 0


@dataclass(frozen=True)
class ExperimentSection:
    name: str = "experiment"
    n_pairs: int = 2000
    x0: tuple[float, ...] = (1.0, 0.5)
    y0: tuple[float, ...] = (-1.0, -0.5)
    window: tuple[float, float] = (0.2, 0.8)
    dt_bias_budget: float = 0.0
    dims: tuple[int, ...] = (8, 16, 32)


@dataclass(frozen=True)
class ExperimentConfig:
    space: SpaceSection = field(default_factory=SpaceSection)
    drift: DriftSection = field(default_factory=DriftSection)
    theory: TheorySection = field(default_factory=TheorySection)
    lyapunov: LyapunovSection | None = None
    coupling: CouplingConfig = field(default_factory=lambda: CouplingConfig(T=20.0, record_stride=50))
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    out: str = "out"

    def with_overrides(self, seed=None, out=None, dt=None, ensemble=None, **coupling_kw) -> "ExperimentConfig":
        """Apply CLI-style overrides and re-validate."""
        cfg = self
        ckw = dict(coupling_kw)
        if seed is not None:
            ckw["seed"] = int(seed)
        if dt is not None:
            ckw["dt"] = float(dt)
        if ckw:
            try:
                cfg = replace(cfg, coupling=replace(cfg.coupling, **ckw))
            except (TypeError, ValueError) as exc:
                raise ConfigError(str(exc)) from exc
        if ensemble is not None:
            cfg = replace(cfg, experiment=replace(cfg.experiment, n_pairs=int(ensemble)))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        validate(cfg)
        return cfg

    def as_dict(self) -> dict:
        return asdict(self)


def _section(cls, raw: dict | None, name: str):
    raw = dict(raw or {})
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"[{name}] unknown keys: {sorted(unknown)}")
    for k, v in list(raw.items()):
        if isinstance(v, list):
            raw[k] = tuple(v)
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def parse_config(data: dict) -> ExperimentConfig:
    """Build and validate an :class:`ExperimentConfig` from a parsed TOML mapping."""
    allowed = {"space", "drift", "theory", "lyapunov", "coupling", "experiment", "output"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown tables: {sorted(unknown)}")
    coupling_raw = dict(data.get("coupling", {}))
    coupling_raw.setdefault("T", 20.0)
    coupling_raw.setdefault("record_stride", 50)
    output = dict(data.get("output", {}))
    if set(output) - {"dir"}:
        raise ConfigError(f"[output] unknown keys: {sorted(set(output) - {'dir'})}")
    cfg = ExperimentConfig(
        space=_section(SpaceSection, data.get("space"), "space"),
        drift=_section(DriftSection, data.get("drift"), "drift"),
        theory=_section(TheorySection, data.get("theory"), "theory"),
        lyapunov=_section(LyapunovSection, data["lyapunov"], "lyapunov") if "lyapunov" in data else None,
        coupling=_section(CouplingConfig, coupling_raw, "coupling"),
        experiment=_section(ExperimentSection, data.get("experiment"), "experiment"),
        out=str(output.get("dir", "out")),
    )
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)


def validate(cfg: ExperimentConfig) -> None:
    """Cross-field checks; raises :class:`ConfigError`."""
    s, d, th, ex = cfg.space, cfg.drift, cfg.theory, cfg.experiment
    if s.family not in ("brownian_bridge", "geometric", "power", "explicit"):
        raise ConfigError(f"[space] unknown family {s.family!r}")
    if s.family == "explicit" and not s.eigenvalues:
        raise ConfigError("[space] family 'explicit' needs an eigenvalues list")
    if s.d < 1:
        raise ConfigError("[space] d must be >= 1")
    if not (s.split == "auto" or (isinstance(s.split, int) and 1 <= s.split <= s.d)):
        raise ConfigError("[space] split must be 'auto' or an integer in [1, d]")
    if d.preset not in DRIFT_PRESETS:
        raise ConfigError(f"[drift] unknown preset {d.preset!r}; choose from {DRIFT_PRESETS}")
    if d.preset.startswith("tps") and s.family != "brownian_bridge":
        raise ConfigError("[drift] transition path sampling presets need the brownian_bridge family")
    if d.constants not in ("lemma", "structural"):
        raise ConfigError("[drift] constants must be 'lemma' or 'structural'")
    if not 0 <= d.M < 1:
        raise ConfigError("[drift] M must be in [0, 1)")
    if isinstance(d.large_distance, tuple) and len(d.large_distance) != 2:
        raise ConfigError("[drift] large_distance must be 'auto' or [M, R]")
    try:
        variant = normalize_variant(th.variant)
    except ValueError as exc:
        raise ConfigError(f"[theory] {exc}") from exc
    if variant == "lyapunov" and cfg.lyapunov is None:
        raise ConfigError("[theory] the lyapunov variant needs a [lyapunov] table")
    if cfg.lyapunov is not None:
        if not cfg.lyapunov.eta > 0:
            raise ConfigError("[lyapunov] eta must be > 0")
        if cfg.lyapunov.constants not in ("closed_form", "fitted"):
            raise ConfigError("[lyapunov] constants must be 'closed_form' or 'fitted'")
    if th.grid_size < 3:
        raise ConfigError("[theory] grid_size must be >= 3")
    if cfg.coupling.kind not in KINDS or cfg.coupling.kind == "reflection_fd":
        raise ConfigError("[coupling] experiments use kind 'switching' or 'synchronous'")
    try:
        cfg.coupling.n_steps
    except ValueError as exc:
        raise ConfigError(f"[coupling] {exc}") from exc
    if ex.n_pairs < 1:
        raise ConfigError("[experiment] n_pairs must be >= 1")
    lo, hi = ex.window
    if not 0 <= lo < hi <= 1:
        raise ConfigError("[experiment] window must satisfy 0 <= lo < hi <= 1 (fractions of T)")
    if not ex.dims or any(k < 1 for k in ex.dims):
        raise ConfigError("[experiment] dims must be a non-empty list of positive integers")
    if len(ex.x0) > s.d or len(ex.y0) > s.d:
        raise ConfigError("[experiment] initial states have more coordinates than d")
