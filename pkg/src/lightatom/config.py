"""Config files and presets.

Configs are YAML documents (JSON is accepted too, being a YAML subset)::

    schema: lightatom/1
    baseline: pre_loss
    config:
      g1: 1.0
      ...
      input_a: {kind: coherent, alpha_mag: 10.0, alpha_phase: 1.5707963267948966}
    sweep:
      axis: T
      start: 0.0
      stop: 1.0
      points: 101
      scale: linear
      outputs: [delta_phi, sql]

Unknown keys anywhere are errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .gaussian_core import InputSpec
from .interferometer import InterferometerConfig, raman_gain
from .sensitivity import BASELINES

SCHEMA = "lightatom/1"
TOP_LEVEL_KEYS = {"schema", "description", "baseline", "config", "sweep", "report"}
CONFIG_KEYS = {"g1", "g2", "theta1", "theta2", "phi", "T", "gamma_tau", "input_a", "input_b"}
INPUT_KEYS = {"kind", "alpha_mag", "alpha_phase", "r", "theta_s"}
SWEEP_KEYS = {"axis", "start", "stop", "points", "scale", "outputs", "optimize"}
AXES = ("g", "phi", "T", "gamma_tau", "r", "alpha_mag", "n_ph_target")
OUTPUTS = ("delta_phi", "sql", "hl", "lcc", "n_ph", "var_X", "slope")
N_PH_CONVENTION = "n_ph_target back-solves input_a.alpha_mag at fixed g1 and r (vacuum atomic input)"


class ConfigError(ValueError):
    pass


def _check_keys(data: dict, allowed: set, where: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown field(s) in {where}: {', '.join(sorted(unknown))}")


def parse_input(data: dict | None, where: str) -> InputSpec:
    if data is None:
        return InputSpec()
    _check_keys(data, INPUT_KEYS, where)
    try:
        return InputSpec(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(data: dict) -> InterferometerConfig:
    _check_keys(data, CONFIG_KEYS, "config")
    kwargs = {k: v for k, v in data.items() if k not in ("input_a", "input_b")}
    try:
        return InterferometerConfig(
            input_a=parse_input(data.get("input_a"), "config.input_a"),
            input_b=parse_input(data.get("input_b"), "config.input_b"),
            **kwargs,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"config: {exc}") from exc


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    points: int
    base: InterferometerConfig
    scale: str = "linear"
    outputs: tuple[str, ...] = ("delta_phi", "sql", "hl")
    optimize: tuple[str, ...] = ()

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"scale must be linear or log, got {self.scale!r}")
        if int(self.points) < 1:
            raise ConfigError("points must be >= 1")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise ConfigError("log scale requires positive start and stop")
        bad = set(self.outputs) - set(OUTPUTS)
        if bad or not self.outputs:
            raise ConfigError(f"outputs must be a non-empty subset of {OUTPUTS}")
        if self.axis == "n_ph_target" and self.base.input_b.kind != "vacuum":
            raise ConfigError("n_ph_target requires a vacuum atomic input")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.start)])
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


def parse_sweep(data: dict, base: InterferometerConfig) -> SweepSpec:
    _check_keys(data, SWEEP_KEYS, "sweep")
    for key in ("axis", "start", "stop", "points"):
        if key not in data:
            raise ConfigError(f"sweep.{key} is required")
    return SweepSpec(
        axis=data["axis"], start=float(data["start"]), stop=float(data["stop"]),
        points=int(data["points"]), base=base, scale=data.get("scale", "linear"),
        outputs=tuple(data.get("outputs", ("delta_phi", "sql", "hl"))),
        optimize=tuple(data.get("optimize", ())),
    )


@dataclass
class Document:
    config: InterferometerConfig
    baseline: str = "pre_loss"
    sweep: dict | None = None
    name: str = ""
    description: str = ""
    raw: dict = field(default_factory=dict)

    def sweep_spec(self, **overrides) -> SweepSpec:
        data = dict(self.sweep or {})
        data.update({k: v for k, v in overrides.items() if v is not None})
        return parse_sweep(data, self.config)


def load_document(data: dict, name: str = "") -> Document:
    _check_keys(data, TOP_LEVEL_KEYS, "document")
    schema = data.get("schema")
    if schema != SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r}; expected {SCHEMA!r}")
    baseline = data.get("baseline", "pre_loss")
    if baseline not in BASELINES:
        raise ConfigError(f"unknown baseline {baseline!r}; expected one of {sorted(BASELINES)}")
    if "config" not in data:
        raise ConfigError("document has no config section")
    doc = Document(parse_config(data["config"]), baseline, data.get("sweep"), name,
                   data.get("description", ""), data)
    if doc.sweep is not None:
        doc.sweep_spec()
    return doc


def load_text(text: str, name: str = "") -> Document:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return load_document(data or {}, name)


def load_path(path: str | Path) -> Document:
    path = Path(path)
    return load_text(path.read_text(), name=path.stem)


def preset_names() -> list[str]:
    files = resources.files("lightatom").joinpath("presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".yaml"))


def load_preset(name: str) -> Document:
    if name not in preset_names():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    text = resources.files("lightatom").joinpath("presets", f"{name}.yaml").read_text()
    return load_text(text, name=name)


def dump_document(config: InterferometerConfig, baseline: str = "pre_loss", **extra) -> dict:
    out = {"schema": SCHEMA, "baseline": baseline, "config": config.as_dict()}
    out.update(extra)
    return out


def alpha_for_probe_number(n_ph: float, g: float, r: float) -> float:
    """|alpha| giving ``n_ph`` quanta after RP1 for vacuum atomic input."""
    G = raman_gain(g)
    n_in = (n_ph - G) / (1.0 + G)
    n_alpha = n_in - math.sinh(r) ** 2
    if n_alpha < 0:
        raise ValueError(f"n_ph={n_ph:g} is below the squeezing/noise floor at g={g:g}, r={r:g}")
    return math.sqrt(n_alpha)


def config_at(spec: SweepSpec, value: float) -> InterferometerConfig:
    """Base config with the swept parameter set to ``value``."""
    base = spec.base
    a = base.input_a
    if spec.axis == "g":
        return base.with_(g1=value, g2=value)
    if spec.axis in ("phi", "T", "gamma_tau"):
        return base.with_(**{spec.axis: value})
    if spec.axis == "r":
        return base.with_(input_a=InputSpec(a.kind, a.alpha_mag, a.alpha_phase, value, a.theta_s))
    if spec.axis == "alpha_mag":
        return base.with_(input_a=InputSpec(a.kind, value, a.alpha_phase, a.r, a.theta_s))
    alpha = alpha_for_probe_number(value, base.g1, a.r)
    kind = "coherent" if a.kind == "vacuum" else a.kind
    return base.with_(input_a=InputSpec(kind, alpha, a.alpha_phase, a.r, a.theta_s))
