"""Experiment configuration: one TOML file per run, a few CLI overrides.

Parse errors always name the offending key or entry.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import tomli

from .errors import ConfigError
from .ising import IsingModel, model_from_dict
from .schedule import Schedule, schedule_from_dict

KINDS = ("verify-mapping", "adiabatic-residual", "gap-scan", "delta-condition", "dichotomy")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    output_dir: str
    threads: int
    taus: tuple
    steps: int | None
    store_points: int
    levels: int
    family: str
    model: IsingModel | None
    schedule: Schedule | None
    raw: dict = field(repr=False, default_factory=dict)

    def section(self, name: str) -> dict:
        block = self.raw.get(name, {})
        if not isinstance(block, dict):
            raise ConfigError(f"{name}: expected a table")
        return block


def _load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}")


def _model_from_config(raw: dict, base_dir: str) -> IsingModel | None:
    block = raw.get("model")
    if block is None:
        return None
    if not isinstance(block, dict):
        raise ConfigError("model: expected a table")
    if "file" in block:
        path = os.path.join(base_dir, block["file"])
        if not os.path.exists(path):
            raise ConfigError(f"model.file: referenced file does not exist: {path}")
        data = _load_toml(path)
        data = data.get("model", data)
        return model_from_dict(data, where=f"model({block['file']})")
    return model_from_dict(block, where="model")


def _taus_from_config(raw: dict) -> tuple:
    taus = raw.get("taus", [])
    if not isinstance(taus, list):
        raise ConfigError("taus: expected a list of numbers")
    out = []
    for k, t in enumerate(taus):
        try:
            t = float(t)
        except (TypeError, ValueError):
            raise ConfigError(f"taus[{k}]: expected a number, got {t!r}")
        if t <= 0:
            raise ConfigError(f"taus[{k}]: must be strictly positive, got {t}")
        out.append(t)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError("taus: must be strictly increasing")
    return tuple(out)


def load_config(path: str, kind: str, out: str | None = None, threads: int | None = None,
                seed: int | None = None) -> ExperimentConfig:
    """Read and validate a config file for the given experiment kind.

    `out`, `threads` and `seed` override the file's values when given.
    """
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    raw = _load_toml(path)
    file_kind = raw.get("kind")
    if file_kind is not None and file_kind != kind:
        raise ConfigError(f"kind: config file says {file_kind!r} but the command ran {kind!r}")

    base_dir = os.path.dirname(os.path.abspath(path))
    model = _model_from_config(raw, base_dir)
    schedule = None
    if "schedule" in raw:
        schedule = schedule_from_dict(raw["schedule"], where="schedule")

    family = raw.get("family", "glauber")
    if family not in ("glauber", "metropolis"):
        raise ConfigError(f"family: expected 'glauber' or 'metropolis', got {family!r}")

    steps = raw.get("steps")
    if steps is not None:
        steps = int(steps)
        if steps <= 0:
            steps = None  # 0 means "use the default policy"

    cfg = ExperimentConfig(
        kind=kind,
        seed=int(seed if seed is not None else raw.get("seed", 0)),
        output_dir=str(out if out is not None else raw.get("output_dir", "out")),
        threads=int(threads if threads is not None else raw.get("threads", 1)),
        taus=_taus_from_config(raw),
        steps=steps,
        store_points=int(raw.get("store_points", 201)),
        levels=int(raw.get("levels", 3)),
        family=family,
        model=model,
        schedule=schedule,
        raw=raw,
    )
    _validate_kind(cfg)
    return cfg


def _validate_kind(cfg: ExperimentConfig) -> None:
    def need_model():
        if cfg.model is None:
            raise ConfigError(f"{cfg.kind}: requires a [model] table")

    def need_schedule():
        if cfg.schedule is None:
            raise ConfigError(f"{cfg.kind}: requires a [schedule] table")

    if cfg.kind == "verify-mapping":
        need_model()
        need_schedule()
    elif cfg.kind == "adiabatic-residual":
        need_model()
        need_schedule()
        if not cfg.taus:
            raise ConfigError("adiabatic-residual: taus must be a nonempty list")
    elif cfg.kind == "gap-scan":
        block = cfg.section("gap_scan")
        for key in ("betas", "n_list"):
            if key not in block:
                raise ConfigError(f"gap_scan.{key}: missing required key")
        if len(block["n_list"]) < 3 or len(block["betas"]) < 5:
            raise ConfigError("gap_scan: need at least 3 sizes and 5 betas for the fit")
    elif cfg.kind == "delta-condition":
        need_schedule()
        block = cfg.section("delta")
        for key in ("p", "c", "a", "n_spins", "horizon"):
            if key not in block:
                raise ConfigError(f"delta.{key}: missing required key")
    elif cfg.kind == "dichotomy":
        need_model()
        block = cfg.section("dichotomy")
        if not cfg.taus:
            raise ConfigError("dichotomy: taus (the horizon list) must be nonempty")
        schedules = block.get("schedules")
        if not isinstance(schedules, dict) or len(schedules) < 2:
            raise ConfigError("dichotomy.schedules: need at least two named schedule tables")
        for name, sub in schedules.items():
            if not isinstance(sub, dict):
                raise ConfigError(f"dichotomy.schedules.{name}: expected a table")
            schedule_from_dict(sub, where=f"dichotomy.schedules.{name}")
