"""Campaign configuration: a flat INI file with one section per concern."""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from blockeq.ensemble import EntryLaw, Model, VarianceProfile, build_profile
from blockeq.errors import ConfigError

MODES = ("state", "trace", "typicality")

# section -> key -> default (None = required)
SCHEMA: dict[str, dict[str, str | None]] = {
    "ensemble": {
        "model": None,
        "lambda": None,
        "delta": "",
        "D": None,
        "entry_law": "complex_gaussian",
        "seed_base": "0",
    },
    "experiment": {
        "name": "run",
        "mode": "trace",
        "trials": "1",
        "pairs": "offdiag",
        "initial": "",
        "threads": "0",
    },
    "grid": {
        "start": "0",
        "stop": "20",
        "points": "200",
        "spacing": "linear",
    },
    "tolerances": {
        "typicality_max": "5",
        "sup_gap": "0.01",
        "spectrum_bound": "2.2",
        "spectrum_min_N": "1200",
        "failure_rate": "0.05",
        "degeneracy_tol": "0",
        "late_fraction": "0.5",
        "peak_window": "0.5,2.0",
        "peak_factor": "2.0",
        "series_tol": "1e-14",
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: Model
    lam: float
    delta: float | None
    D: int
    entry_law: EntryLaw
    seed_base: int
    name: str
    mode: str
    trials: int
    pairs: tuple[tuple[int, int], ...]
    threads: int
    grid_start: float
    grid_stop: float
    grid_points: int
    grid_spacing: str
    tolerances: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def profile(self) -> VarianceProfile:
        return build_profile(self.model, self.lam, self.D, self.delta)

    @property
    def size(self) -> int:
        return 2 if self.model is Model.TWO else 3

    def times(self) -> np.ndarray:
        if self.grid_spacing == "log":
            return np.geomspace(self.grid_start, self.grid_stop, self.grid_points)
        return np.linspace(self.grid_start, self.grid_stop, self.grid_points)

    def tol(self, key: str) -> float:
        return float(self.tolerances[key])

    def peak_window(self) -> tuple[float, float]:
        lo, hi = (float(v) for v in str(self.tolerances["peak_window"]).split(","))
        return lo, hi

    def with_overrides(self, overrides) -> "ExperimentConfig":
        raw = {s: dict(v) for s, v in self.raw.items()}
        apply_overrides(raw, overrides)
        return from_mapping(raw)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        for section in SCHEMA:
            parser[section] = self.raw[section]
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def parse_pairs(text: str, size: int) -> tuple[tuple[int, int], ...]:
    text = text.strip()
    if text in ("all", "offdiag"):
        return tuple(
            (a, b) for a in range(1, size + 1) for b in range(1, size + 1) if text == "all" or a != b
        )
    pairs = []
    for chunk in text.replace(";", " ").split():
        try:
            a, b = (int(v) for v in chunk.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse pair {chunk!r}; expected mu,nu") from None
        if not (1 <= a <= size and 1 <= b <= size):
            raise ConfigError(f"pair {chunk} outside a {size}-block model")
        pairs.append((a, b))
    if not pairs:
        raise ConfigError("no pairs given")
    return tuple(pairs)


def apply_overrides(raw: dict, overrides) -> None:
    """Apply ``section.key=value`` (or bare ``key=value`` if unambiguous) overrides in place."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if "." in key:
            section, name = key.split(".", 1)
        else:
            owners = [s for s, keys in SCHEMA.items() if key in keys]
            if len(owners) != 1:
                raise ConfigError(f"unknown or ambiguous key {key!r}")
            section, name = owners[0], key
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise ConfigError(f"unknown key {section}.{name}")
        raw.setdefault(section, {})[name] = value


def from_mapping(raw: dict) -> ExperimentConfig:
    filled: dict[str, dict[str, str]] = {}
    for section, values in raw.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key in values:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
    for section, keys in SCHEMA.items():
        filled[section] = {}
        for key, default in keys.items():
            value = raw.get(section, {}).get(key, default)
            if value is None:
                raise ConfigError(f"missing required key {section}.{key}")
            filled[section][key] = str(value)

    ens, exp, grid = filled["ensemble"], filled["experiment"], filled["grid"]
    try:
        model = Model(ens["model"])
        size = 2 if model is Model.TWO else 3
        mode = exp["mode"].strip()
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        pairs = parse_pairs(exp["pairs"], size)
        initial = exp["initial"].strip()
        if initial:
            # state campaigns start in one macro space; keep only pairs leaving it
            mu0 = int(initial)
            if exp["pairs"].strip() in ("all", "offdiag"):
                pairs = parse_pairs("all", size)
            pairs = tuple(p for p in pairs if p[0] == mu0)
            if not pairs:
                raise ConfigError(f"no pairs start from initial macro space {mu0}")
        cfg = ExperimentConfig(
            model=model,
            lam=float(ens["lambda"]),
            delta=float(ens["delta"]) if ens["delta"].strip() else None,
            D=int(ens["D"]),
            entry_law=EntryLaw.parse(ens["entry_law"]),
            seed_base=int(ens["seed_base"]),
            name=exp["name"],
            mode=mode,
            trials=int(exp["trials"]),
            pairs=pairs,
            threads=int(exp["threads"]),
            grid_start=float(grid["start"]),
            grid_stop=float(grid["stop"]),
            grid_points=int(grid["points"]),
            grid_spacing=grid["spacing"].strip(),
            tolerances=dict(filled["tolerances"]),
            raw=filled,
        )
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc

    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    if cfg.grid_points < 1:
        raise ConfigError("grid needs at least one point")
    if cfg.grid_spacing not in ("linear", "log"):
        raise ConfigError("grid spacing must be linear or log")
    if cfg.grid_spacing == "log" and cfg.grid_start <= 0:
        raise ConfigError("log spacing needs a positive start")
    if cfg.grid_points > 1 and cfg.grid_stop <= cfg.grid_start:
        raise ConfigError("grid stop must exceed start")
    for key in SCHEMA["tolerances"]:
        if key != "peak_window":
            try:
                float(cfg.tolerances[key])
            except ValueError:
                raise ConfigError(f"tolerance {key} is not a number") from None
    return cfg


def read_ini(text: str) -> dict:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    return {s: dict(parser[s]) for s in parser.sections()}


def load_config(path=None, text: str | None = None, overrides=()) -> ExperimentConfig:
    if text is None:
        if path is None:
            raise ConfigError("no config given")
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    raw = read_ini(text)
    apply_overrides(raw, overrides)
    return from_mapping(raw)


def bundled_config(name: str) -> str:
    """Text of a config shipped with the package (``fig1``, ``fig2``, ``acceptance_*``)."""
    fname = name if name.endswith(".ini") else f"{name}.ini"
    try:
        return resources.files("blockeq.configs").joinpath(fname).read_text()
    except FileNotFoundError:
        raise ConfigError(f"no bundled config named {name!r}") from None


def bundled_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("blockeq.configs").iterdir() if p.name.endswith(".ini"))


__all__ = [
    "ExperimentConfig",
    "SCHEMA",
    "apply_overrides",
    "bundled_config",
    "bundled_names",
    "from_mapping",
    "load_config",
    "parse_pairs",
    "read_ini",
]
