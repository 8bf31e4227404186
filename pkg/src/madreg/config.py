"""Simulation run configuration: a flat TOML file plus command-line overrides."""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from madreg.design import DesignKind
from madreg.distributions import ErrorDistribution
from madreg.errors import ConfigError
from madreg.estimators import SILVERMAN
from madreg.l1fit import DEFAULT_TOL

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


@dataclass(frozen=True)
class RunConfig:
    p: tuple[int, ...] = (4, 8, 16, 32)
    k: tuple[int, ...] = (2, 4, 8, 16)
    errors: tuple[str, ...] = ("normal", "laplace")
    designs: tuple[str, ...] = ("normal", "anova")
    replicates: int = 1000
    base_seed: int = 0
    bandwidth: str | float = SILVERMAN
    tol: float = DEFAULT_TOL
    output_dir: str = "simulation-output"
    threads: int = 1


_KEYS = {f.name for f in fields(RunConfig)}


def _int_list(name, value) -> tuple[int, ...]:
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{name}: expected a nonempty list of integers, got {value!r}")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{name}: expected integers, got {v!r}")
        out.append(v)
    if len(set(out)) != len(out):
        raise ConfigError(f"{name}: duplicate values in {out}")
    return tuple(out)


def _token_list(name, value, enum_cls) -> tuple[str, ...]:
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{name}: expected a nonempty list of names, got {value!r}")
    try:
        out = tuple(enum_cls.from_token(v).value for v in value)
    except (ValueError, AttributeError) as exc:
        raise ConfigError(f"{name}: {exc}") from None
    if len(set(out)) != len(out):
        raise ConfigError(f"{name}: duplicate values in {list(out)}")
    return out


def _positive_int(name, value, minimum=1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name}: expected an integer >= {minimum}, got {value!r}")
    return value


def validate(raw: dict) -> RunConfig:
    """Build a RunConfig from a mapping, rejecting unknown keys and bad values."""
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    cfg = {}
    if "p" in raw:
        cfg["p"] = _int_list("p", raw["p"])
        if min(cfg["p"]) < 1:
            raise ConfigError("p: values must be >= 1")
    if "k" in raw:
        cfg["k"] = _int_list("k", raw["k"])
        if min(cfg["k"]) < 2:
            raise ConfigError("k: values must be >= 2 so that n > p")
    if "errors" in raw:
        cfg["errors"] = _token_list("errors", raw["errors"], ErrorDistribution)
    if "designs" in raw:
        cfg["designs"] = _token_list("designs", raw["designs"], DesignKind)
    if "replicates" in raw:
        cfg["replicates"] = _positive_int("replicates", raw["replicates"])
    if "base_seed" in raw:
        cfg["base_seed"] = _positive_int("base_seed", raw["base_seed"], minimum=0)
    if "threads" in raw:
        cfg["threads"] = _positive_int("threads", raw["threads"])
    if "bandwidth" in raw:
        bw = raw["bandwidth"]
        if isinstance(bw, str):
            if bw.lower() == SILVERMAN:
                bw = SILVERMAN
            else:
                try:
                    bw = float(bw)
                except ValueError:
                    raise ConfigError(f"bandwidth: expected 'silverman' or a positive number, got {bw!r}") from None
        if not isinstance(bw, str) and (isinstance(bw, bool) or not isinstance(bw, (int, float)) or not bw > 0):
            raise ConfigError(f"bandwidth: expected 'silverman' or a positive number, got {bw!r}")
        cfg["bandwidth"] = bw if isinstance(bw, str) else float(bw)
    if "tol" in raw:
        tol = raw["tol"]
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
            raise ConfigError(f"tol: expected a positive number, got {tol!r}")
        cfg["tol"] = float(tol)
    if "output_dir" in raw:
        if not isinstance(raw["output_dir"], str) or not raw["output_dir"]:
            raise ConfigError("output_dir: expected a nonempty string")
        cfg["output_dir"] = raw["output_dir"]
    return RunConfig(**cfg)


def load(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None


def merge(base: RunConfig, overrides: dict) -> RunConfig:
    """Apply non-None overrides on top of ``base``; overrides win."""
    given = {k: v for k, v in overrides.items() if v is not None}
    checked = validate(given)
    return replace(base, **{k: getattr(checked, k) for k in given})


def _toml_value(value) -> str:
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def to_toml(cfg: RunConfig) -> str:
    """Serialize so that ``validate(tomllib.loads(to_toml(cfg))) == cfg``."""
    return "".join(f"{f.name} = {_toml_value(getattr(cfg, f.name))}\n" for f in fields(RunConfig))


def parse_toml(text: str) -> dict:
    return tomllib.loads(text)
