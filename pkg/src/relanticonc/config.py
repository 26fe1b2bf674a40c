"""Run configuration: a YAML mapping merged with command-line flags (flags win)."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .bounds import DEFAULT_CONSTANTS
from .distributions import DistributionSpec
from .errors import ConfigError
from .lcd import CoefficientVector
from .rng import make_rng

COMMANDS = ("lcd", "estimate", "bounds", "levelset", "sodin", "stress", "verify", "report")
FORMATS = ("json", "csv")
INPUT_KEYS = ("vector", "alpha_file", "beta_file", "scenario", "inputs", "trace")
OPTION_KEYS = ("gamma", "cap", "tol", "method", "samples", "ci", "limit", "theorem", "epsilon", "lcd_value", "t0", "nu", "b", "a", "ell",
               "density", "resolution", "theta", "catalog", "n", "restarts", "steps", "quick")
DEFAULT_TOLERANCES = {"ci_level": 0.99, "lcd_tol": 1e-9, "quad_epsabs": 1e-10}


def default_workers() -> int:
    return os.cpu_count() or 1


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    dist: dict | None = None
    constants: dict = field(default_factory=dict)
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "json"
    workers: int = field(default_factory=default_workers)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", key="command")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}", key="format")
        for name in ("inputs", "constants", "tolerances", "options"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigError("expected a mapping", key=name)
        bad = set(self.constants) - set(DEFAULT_CONSTANTS) - {"gamma"}
        if bad:
            raise ConfigError("unknown constant", key=f"constants.{sorted(bad)[0]}")
        for name, allowed in (("inputs", INPUT_KEYS), ("options", OPTION_KEYS)):
            bad = set(getattr(self, name)) - set(allowed)
            if bad:
                raise ConfigError("unknown key", key=f"{name}.{sorted(bad)[0]}")
        bad = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if bad:
            raise ConfigError("unknown tolerance", key=f"tolerances.{sorted(bad)[0]}")
        try:
            self.seed = int(self.seed)
            self.workers = int(self.workers)
        except (TypeError, ValueError):
            raise ConfigError("seed and workers must be integers", key="seed") from None
        if self.workers < 1:
            raise ConfigError("must be at least 1", key="workers")
        if self.dist is not None:
            DistributionSpec.from_config(self.dist, key="dist")  # validate early

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("top level must be a mapping")
        known = {f.name for f in dataclasses.fields(cls)}
        for k in data:
            if k not in known:
                raise ConfigError("unknown key", key=str(k))
        if "command" not in data:
            raise ConfigError("missing", key="command")
        return cls(**data)

    @property
    def spec(self) -> DistributionSpec | None:
        return None if self.dist is None else DistributionSpec.from_config(self.dist, key="dist")

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def effective(self) -> dict:
        """The config with defaults resolved, as echoed into every report."""
        out = dataclasses.asdict(self)
        out["constants"] = {**DEFAULT_CONSTANTS, **self.constants}
        out["tolerances"] = {**DEFAULT_TOLERANCES, **self.tolerances}
        if self.dist is not None:
            out["dist"] = self.spec.to_config()
        out.pop("workers")  # parallelism never changes results, so it stays out of reports
        return out


def load_yaml(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", key="config") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML in {path}: {str(exc).splitlines()[0]}", key="config") from None
    return {} if data is None else data


def merge(file_cfg: dict, overrides: dict) -> dict:
    """Shallow-merge for scalars, one level deep for mappings; ``None`` overrides are skipped."""
    out = dict(file_cfg)
    for k, v in overrides.items():
        if v is None:
            continue
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = {**out[k], **v}
        else:
            out[k] = v
    return out


def load_dist(value, key: str = "dist") -> dict:
    """A distribution given inline (``rademacher``, ``laplace:b=1``), as a YAML file path, or as a mapping."""
    if isinstance(value, dict):
        return DistributionSpec.from_config(value, key=key).to_config()
    text = str(value)
    if text.endswith((".yaml", ".yml", ".json")) or os.path.sep in text:
        data = load_yaml(text)
        if isinstance(data, dict) and "dist" in data and "family" not in data:
            data = data["dist"]
        return DistributionSpec.from_config(data, key=key).to_config()
    return DistributionSpec.from_config(text, key=key).to_config()


def read_vector(path, key: str = "vector") -> CoefficientVector:
    """One real per line; blank lines and '#' comments are ignored."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", key=key) from None
    vals = []
    for i, line in enumerate(lines, 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        try:
            vals.append(float(s))
        except ValueError:
            raise ConfigError(f"line {i} is not a number: {s!r}", key=key) from None
    if not vals:
        raise ConfigError(f"{path} holds no numbers", key=key)
    return CoefficientVector.of(vals)


def load_catalog() -> dict:
    """The built-in scenario catalog shipped with the package."""
    text = resources.files("relanticonc").joinpath("data/catalog.yaml").read_text()
    return yaml.safe_load(text)


def resolve_vector(value, n: int, key: str) -> np.ndarray:
    """Catalog vector syntax: a list, ``ones``, or ``{random: normal|sign, seed: s}``."""
    if isinstance(value, list):
        v = np.asarray(value, dtype=float)
    elif value == "ones":
        v = np.ones(n)
    elif value == "arange":
        v = np.arange(1, n + 1, dtype=float)
    elif isinstance(value, dict) and "random" in value:
        rng = make_rng(int(value.get("seed", 0)))
        kind = value["random"]
        if kind == "normal":
            v = rng.normal(size=n)
        elif kind == "sign":
            v = rng.choice([-1.0, 1.0], size=n)
        else:
            raise ConfigError(f"unknown random vector kind {kind!r}", key=f"{key}.random")
    else:
        raise ConfigError(f"cannot read vector {value!r}", key=key)
    if v.size != n:
        raise ConfigError(f"expected {n} entries, got {v.size}", key=key)
    return v
