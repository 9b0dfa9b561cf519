"""Run configuration: flat key = value files plus CLI overrides.

The format is line-oriented INI: optional [section] headers group keys
for humans, but all keys live in one flat namespace (later duplicates
win, command-line overrides win over the file).  Every key a command
does not understand is an error, and validation reports the complete
list of problems instead of stopping at the first.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from .holder import holder_exponent

__all__ = ["RunConfig", "ConfigError", "parse_config", "COMMANDS", "command_keys"]

COMMANDS = ("solve", "holder", "ineq", "t0probe", "kernel")

_IMPLICIT_SECTION = "chslab-toplevel"


class ConfigError(Exception):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))

    def report(self) -> str:
        return "\n".join(f"config error: {e}" for e in self.errors)


@dataclass(frozen=True)
class RunConfig:
    """Effective settings for one command invocation (unused fields None)."""

    command: str
    out: str
    # grid
    n: int | None = None
    length: float | None = None
    # system parameters
    b: float | None = None
    kappa: float | None = None
    alpha: float | None = None
    c_s: float | None = None
    # initial data
    kind: str | None = None
    amplitude: float | None = None
    width: float | None = None
    rho_amplitude: float | None = None
    normalize: bool | None = None
    # indices and horizons
    s: float | None = None
    r: float | None = None
    sigma: float | None = None
    j: float | None = None
    k: float | None = None
    s1: float | None = None
    s2: float | None = None
    t_end: float | None = None
    horizon: float | None = None
    cfl: float | None = None
    seam: str | None = None
    # holder experiment
    cases: tuple | None = None
    h: float | None = None
    base_kind: str | None = None
    direction_kind: str | None = None
    delta_max: float | None = None
    delta_min: float | None = None
    delta_count: int | None = None
    base_amplitude: float | None = None
    rho_trivial: bool | None = None
    # inequality probes
    probe: str | None = None
    ensemble: int | None = None
    gamma: float | None = None
    mollifier_n: int | None = None
    ratios_csv: bool | None = None
    # kernel scan
    eta_max: float | None = None
    eta_points: int | None = None
    # orchestration
    seed: int | None = None
    parallelism: int | None = None


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_cases(text: str) -> tuple:
    out = []
    for token in text.split():
        try:
            s_str, r_str = token.split(":")
            out.append((float(s_str), float(r_str)))
        except ValueError:
            raise ValueError(f"expected s:r pairs, got token {token!r}") from None
    if not out:
        raise ValueError("empty case list")
    return tuple(out)


# key -> (RunConfig attribute, parser)
_PARSERS = {
    "N": ("n", int),
    "L": ("length", float),
    "b": ("b", float),
    "kappa": ("kappa", float),
    "alpha": ("alpha", float),
    "c_s": ("c_s", float),
    "kind": ("kind", str),
    "amplitude": ("amplitude", float),
    "width": ("width", float),
    "rho_amplitude": ("rho_amplitude", float),
    "normalize": ("normalize", _parse_bool),
    "s": ("s", float),
    "r": ("r", float),
    "sigma": ("sigma", float),
    "j": ("j", float),
    "k": ("k", float),
    "s1": ("s1", float),
    "s2": ("s2", float),
    "t_end": ("t_end", float),
    "T": ("horizon", float),
    "cfl": ("cfl", float),
    "seam": ("seam", str),
    "cases": ("cases", _parse_cases),
    "h": ("h", float),
    "base_kind": ("base_kind", str),
    "direction_kind": ("direction_kind", str),
    "delta_max": ("delta_max", float),
    "delta_min": ("delta_min", float),
    "delta_count": ("delta_count", int),
    "base_amplitude": ("base_amplitude", float),
    "rho_trivial": ("rho_trivial", _parse_bool),
    "probe": ("probe", str),
    "ensemble": ("ensemble", int),
    "gamma": ("gamma", float),
    "mollifier_N": ("mollifier_n", int),
    "ratios_csv": ("ratios_csv", _parse_bool),
    "eta_max": ("eta_max", float),
    "eta_points": ("eta_points", int),
    "seed": ("seed", int),
    "parallelism": ("parallelism", int),
}

_COMMON = {
    "N": 256, "L": 64.0, "seed": 0, "parallelism": 1,
}
_PHYSICS = {
    "b": 2.0, "kappa": 1.0, "alpha": 0.0, "c_s": 1.0,
}
_DATA = {
    "kind": "gaussian", "amplitude": 1.0, "width": 0.0, "rho_amplitude": 0.3,
}

DEFAULTS = {
    "solve": {**_COMMON, **_PHYSICS, **_DATA,
              "s": 4.0, "t_end": 1.0, "cfl": 0.3, "seam": "warn"},
    "holder": {**_COMMON, **_PHYSICS,
               "cases": ((4.0, 1.0), (4.0, 2.0), (4.0, 3.5), (3.75, 1.0)),
               "h": 2.0, "base_kind": "gaussian-bump",
               "direction_kind": "high-mode", "delta_max": 1e-2,
               "delta_min": 1e-5, "delta_count": 7, "T": 0.5,
               "base_amplitude": 0.5, "rho_trivial": False, "cfl": 0.3},
    "ineq": {**_COMMON, "L": 2.0 * math.pi, "probe": "all", "ensemble": 200,
             "gamma": 0.6, "amplitude": 1.0, "mollifier_N": 1024,
             "ratios_csv": False, "r": 2.0, "s": 2.5, "sigma": 1.0,
             "j": 1.0, "k": 1.0, "s1": 0.0, "s2": 3.0},
    "t0probe": {**_COMMON, **_PHYSICS, **_DATA,
                "s": 4.0, "normalize": False, "cfl": 0.3},
    "kernel": {"r": 0.0, "j": 1.0, "k": 1.0, "eta_max": 1e4, "eta_points": 52,
               "parallelism": 1, "seed": 0},
}

_PROBES = ("all", "algebra", "kato-ponce", "mollifier", "calderon",
           "product-low", "product-negative", "interpolation")
_KINDS = ("gaussian", "sech2", "random", "zero")
_SEAMS = ("warn", "error", "ignore")


def command_keys(command: str) -> tuple:
    return tuple(DEFAULTS[command])


def _validate(cfg: RunConfig, errors: list):
    def check(cond, msg):
        if not cond:
            errors.append(msg)

    if cfg.n is not None:
        check(cfg.n >= 8 and (cfg.n & (cfg.n - 1)) == 0,
              f"N must be a power of two >= 8, got {cfg.n}")
    if cfg.length is not None:
        check(cfg.length > 0, f"L must be positive, got {cfg.length}")
    if cfg.b is not None:
        check(cfg.b != 1.0, "b = 1 is excluded (the system requires b != 1)")
    if cfg.c_s is not None:
        check(cfg.c_s > 0, f"c_s must be positive, got {cfg.c_s}")
    if cfg.gamma is not None:
        check(cfg.gamma > 0.5, f"gamma must exceed 1/2, got {cfg.gamma}")
    if cfg.ensemble is not None:
        check(cfg.ensemble >= 1, f"ensemble must be positive, got {cfg.ensemble}")
    if cfg.parallelism is not None:
        check(cfg.parallelism >= 1,
              f"parallelism must be positive, got {cfg.parallelism}")
    if cfg.kind is not None:
        check(cfg.kind in _KINDS, f"kind must be one of {_KINDS}, got {cfg.kind!r}")
    if cfg.seam is not None:
        check(cfg.seam in _SEAMS, f"seam must be one of {_SEAMS}, got {cfg.seam!r}")
    if cfg.probe is not None:
        check(cfg.probe in _PROBES,
              f"probe must be one of {_PROBES}, got {cfg.probe!r}")
    if cfg.cfl is not None:
        check(cfg.cfl > 0, f"cfl must be positive, got {cfg.cfl}")
    if cfg.amplitude is not None:
        check(cfg.amplitude >= 0, f"amplitude must be nonnegative, got {cfg.amplitude}")

    if cfg.command == "solve":
        check(cfg.t_end > 0, f"t_end must be positive, got {cfg.t_end}")
    if cfg.command == "holder":
        check(cfg.delta_count >= 4, "delta_count must be at least 4")
        check(0 < cfg.delta_min < cfg.delta_max,
              "need 0 < delta_min < delta_max")
        if cfg.delta_min > 0 < cfg.delta_max:
            check(cfg.delta_max / cfg.delta_min >= 100,
                  "delta ladder must span at least two decades")
        check(cfg.h > 0, f"h must be positive, got {cfg.h}")
        check(cfg.horizon is None or cfg.horizon > 0,
              "T must be positive when given")
        if cfg.cases:
            for s, r in cfg.cases:
                try:
                    holder_exponent(s, r, rho_trivial=bool(cfg.rho_trivial))
                except ValueError as exc:
                    errors.append(f"case {s:g}:{r:g} invalid: {exc}")
    if cfg.command == "ineq":
        check(cfg.mollifier_n >= 8 and (cfg.mollifier_n & (cfg.mollifier_n - 1)) == 0,
              f"mollifier_N must be a power of two >= 8, got {cfg.mollifier_n}")
        if cfg.s1 is not None and cfg.s2 is not None:
            check(cfg.s1 < cfg.s2, f"need s1 < s2, got {cfg.s1}, {cfg.s2}")
    if cfg.command == "kernel":
        check(cfg.eta_points >= 10, "eta_points must be at least 10")
        check(cfg.eta_max > 10, "eta_max must exceed 10")
    if cfg.command == "t0probe":
        check(cfg.s is not None and cfg.s > 2.0,
              "s must exceed 2 so the ledger norms make sense")


def parse_config(text: str, command: str, out: str,
                 overrides: dict | None = None) -> RunConfig:
    """Merge defaults, file text, and override pairs into a RunConfig.

    Raises ConfigError carrying every problem found: unknown keys, bad
    values, and constraint violations are all collected in one pass.
    """
    if command not in COMMANDS:
        raise ConfigError([f"unknown command {command!r}; choose from {COMMANDS}"])
    errors: list = []
    allowed = set(command_keys(command))

    raw: dict = {}
    stripped = text.lstrip()
    body = text if stripped.startswith("[") else f"[{_IMPLICIT_SECTION}]\n{text}"
    parser = configparser.ConfigParser(interpolation=None, strict=False)
    parser.optionxform = str  # keys are case-sensitive (N, L, T)
    try:
        parser.read_string(body)
    except configparser.Error as exc:
        raise ConfigError([f"cannot parse config text: {exc}"]) from None
    for section in parser.sections():
        raw.update(parser.items(section))

    if overrides:
        raw.update({str(k): str(v) for k, v in overrides.items()})

    values = dict(DEFAULTS[command])
    for key, text_val in raw.items():
        if key not in _PARSERS:
            errors.append(f"unknown key {key!r}")
            continue
        if key not in allowed:
            errors.append(f"key {key!r} does not apply to command {command!r}")
            continue
        _, fn = _PARSERS[key]
        try:
            values[key] = fn(text_val)
        except (ValueError, TypeError) as exc:
            errors.append(f"key {key!r}: {exc}")

    kwargs = {"command": command, "out": out}
    for key, val in values.items():
        attr, _ = _PARSERS[key]
        kwargs[attr] = val
    cfg = RunConfig(**kwargs)
    # validate even when some keys failed to parse (those fall back to
    # defaults here) so one run reports every problem at once
    _validate(cfg, errors)
    if errors:
        raise ConfigError(errors)
    return cfg


def effective_items(cfg: RunConfig):
    """(config key, value) pairs for every key the command accepts."""
    attr_of = {key: attr for key, (attr, _) in _PARSERS.items()}
    for key in sorted(command_keys(cfg.command)):
        yield key, getattr(cfg, attr_of[key])
