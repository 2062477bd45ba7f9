"""Run configuration: flat ``key = value`` files overridden by command-line flags."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if text.startswith("linspace(") and text.endswith(")"):
        parts = [p.strip() for p in text[len("linspace("):-1].split(",")]
        if len(parts) != 3:
            raise ConfigError(f"linspace needs start, stop, count: {text!r}")
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise ConfigError("linspace count must be >= 1")
        if n == 1:
            return (lo,)
        return tuple(lo + (hi - lo) * i / (n - 1) for i in range(n))
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())


@dataclass
class RunConfig:
    # model
    g: float = 2.0
    epsilon: float = 0.0
    k_B: float = 1.0
    beta: float | None = None
    temperature: float | None = None
    # reservoir
    mass: float = 1.0
    f_width: float = 1.0
    f_amplitude: float = 1.0
    test_function: str = "gaussian"
    eta: float = 0.05
    n_radial: int = 20001
    p_max: float | None = None
    # mean-field point (generator-check, evolve, flow, sl-converge, finite-n)
    x: float = 0.2
    y: float = 0.1
    # sweeps
    t_grid: tuple[float, ...] = field(default_factory=lambda: _floats("linspace(0.05, 2.0, 50)"))
    g_grid: tuple[float, ...] = (2.0,)
    x_grid: tuple[float, ...] = (-0.6, -0.3, 0.0, 0.3, 0.6)
    y_grid: tuple[float, ...] = (0.02, 0.05, 0.1, 0.15, 0.2)
    n_list: tuple[int, ...] = (2, 4, 6, 8, 10)
    lambda_ladder: tuple[float, ...] = (0.5, 0.2, 0.1, 0.05)
    time: float = 10.0
    t_eval: float = 1.0
    t_max: float = 2.0
    dt: float = 0.01
    threshold: float = 1e-8
    # outputs
    output: str | None = None
    plot: str | None = None

    _POSITIVE = ("g", "k_B", "mass", "f_width", "f_amplitude", "time", "t_eval", "t_max",
                 "dt", "threshold")

    def validate(self) -> RunConfig:
        for name in self._POSITIVE:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")
        if self.beta is not None and self.temperature is not None:
            raise ConfigError("give either beta or temperature, not both")
        for name in ("beta", "temperature", "p_max"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v!r}")
        if not (math.isfinite(self.eta) and self.eta >= 0):
            raise ConfigError(f"eta must be nonnegative, got {self.eta!r}")
        if self.test_function not in ("gaussian", "pwave"):
            raise ConfigError(f"test_function must be gaussian or pwave, got {self.test_function!r}")
        if self.n_radial < 3:
            raise ConfigError("n_radial must be >= 3")
        if not math.isfinite(self.epsilon):
            raise ConfigError("epsilon must be finite")
        if not (-1 <= self.x <= 1) or self.y < 0:
            raise ConfigError(f"point (x={self.x}, y={self.y}) out of range")
        for name in ("t_grid", "g_grid", "lambda_ladder"):
            vals = getattr(self, name)
            if not vals or any(not (math.isfinite(v) and v > 0) for v in vals):
                raise ConfigError(f"{name} must be a nonempty list of positive numbers")
        if not self.x_grid or not self.y_grid:
            raise ConfigError("x_grid and y_grid must be nonempty")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigError("n_list must contain positive integers")
        ladder = self.lambda_ladder
        if any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError("lambda_ladder must be strictly descending")
        return self

    def resolved_beta(self) -> float:
        if self.beta is not None:
            return self.beta
        if self.temperature is not None:
            return 1.0 / (self.k_B * self.temperature)
        return 1.0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def header(self) -> str:
        """One comment line recording the resolved configuration."""
        items = []
        for k, v in self.as_dict().items():
            if isinstance(v, tuple):
                v = ",".join(repr(e) for e in v)
            items.append(f"{k}={v}")
        return "# config: " + " ".join(items)


_PARSERS = {
    "t_grid": _floats, "g_grid": _floats, "x_grid": _floats, "y_grid": _floats,
    "lambda_ladder": _floats, "n_list": _ints,
    "n_radial": int, "test_function": str, "output": str, "plot": str,
}
_OPTIONAL = {"beta", "temperature", "p_max", "output", "plot"}
KEYS = tuple(f.name for f in fields(RunConfig))


def parse_value(key: str, text: str):
    if key not in KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    text = text.strip()
    if key in _OPTIONAL and text.lower() in ("", "none"):
        return None
    try:
        return _PARSERS.get(key, float)(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r} ({exc})") from None


def read_config_file(path: str | Path) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = parse_value(key, val)
    return values


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    merged = {**file_values, **{k: v for k, v in overrides.items() if v is not None}}
    unknown = set(merged) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**merged).validate()
