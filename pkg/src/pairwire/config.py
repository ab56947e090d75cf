"""Run configuration: a flat ``key = value`` file plus command-line overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    out = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if tok:
            out.append(math.inf if tok.lower() in ("inf", "infinity", "dirichlet") else float(tok))
    return out


@dataclass
class RunConfig:
    d: float = 1.0
    alpha: list[float] = field(default_factory=lambda: [0.0, 1.0])
    L: list[float] = field(default_factory=lambda: [20.0, 40.0, 80.0])
    m: int = 10
    beta: float = 1.0
    rho: list[float] = field(default_factory=lambda: [0.5, 2.0])
    # "critical": rho values are multiples of the critical density; "absolute": pairs per length
    rho_units: str = "critical"
    k: int = 30
    n_max: int = 3
    tol: float = 1e-8
    tail_rtol: float = 1e-8
    window: float = 1.0
    preconditioner: str = "amg"
    seed: int = 0
    threads: int = 1
    out: str = "-"

    def validate(self) -> "RunConfig":
        for name in ("alpha", "L", "rho"):
            if not getattr(self, name):
                raise ConfigError(f"{name} list must be nonempty")
        if not self.d > 0:
            raise ConfigError(f"d must be positive, got {self.d}")
        if any(not a >= 0 for a in self.alpha):
            raise ConfigError(f"alpha values must be >= 0, got {self.alpha}")
        if any(not x > self.d for x in self.L):
            raise ConfigError(f"all L must exceed d={self.d}, got {self.L}")
        if self.m < 2:
            raise ConfigError(f"m must be >= 2, got {self.m}")
        if not self.beta > 0 or any(not r > 0 for r in self.rho):
            raise ConfigError("beta and rho values must be positive")
        if self.rho_units not in ("critical", "absolute"):
            raise ConfigError(f"rho_units must be 'critical' or 'absolute', got {self.rho_units!r}")
        if self.k < 1 or self.n_max < 0 or self.threads < 1:
            raise ConfigError("k and threads must be >= 1, n_max >= 0")
        if not self.tol > 0 or not self.tail_rtol > 0 or not self.window > 0:
            raise ConfigError("tol, tail_rtol and window must be positive")
        if self.preconditioner not in ("amg", "jacobi", "none"):
            raise ConfigError(f"unknown preconditioner {self.preconditioner!r}")
        return self

    def set(self, key: str, raw: str) -> None:
        fields = {f.name: f for f in dataclasses.fields(self)}
        if key not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        current = getattr(self, key)
        try:
            if isinstance(current, list):
                value = _floats(raw)
            elif isinstance(current, bool):
                value = raw.strip().lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = _floats(raw)[0]
            else:
                value = raw.strip()
        except (ValueError, IndexError) as err:
            raise ConfigError(f"bad value for {key}: {raw!r}") from err
        setattr(self, key, value)


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    cfg = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg.set(key, value)
    for key, value in (overrides or {}).items():
        cfg.set(key, value)
    return cfg.validate()
