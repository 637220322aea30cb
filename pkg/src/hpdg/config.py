"""Study configuration files: ``key = value`` lines with ``#`` comments."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

from .assembly import METHOD_ALPHA
from .basis import MAX_DEGREE
from .material import Material

KEYS = ("method", "degree", "levels", "beta", "gamma", "superpenalty_d",
        "lambda", "mu", "case", "tol", "out_dir")
CASES = ("paper", "linear", "custom")
MAX_LEVEL = 10


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class StudyConfig:
    method: str = "sipg"
    degree: int = 1
    levels: tuple[int, ...] = (1, 2, 3, 4, 5)
    beta: float = 125.0
    gamma: float = 0.0
    superpenalty_d: int = 1
    lame_lambda: float = 0.03
    lame_mu: float = 0.035
    case: str = "paper"
    tol: float = 1e-10
    out_dir: str = "out"

    @property
    def alpha(self) -> int:
        return METHOD_ALPHA[self.method]

    @property
    def material(self) -> Material:
        return Material(self.lame_lambda, self.lame_mu)

    def echo(self) -> list[tuple[str, str]]:
        """Config as ``(key, value)`` pairs in file syntax."""
        return [
            ("method", self.method), ("degree", str(self.degree)),
            ("levels", ",".join(map(str, self.levels))), ("beta", repr(self.beta)),
            ("gamma", repr(self.gamma)), ("superpenalty_d", str(self.superpenalty_d)),
            ("lambda", repr(self.lame_lambda)), ("mu", repr(self.lame_mu)),
            ("case", self.case), ("tol", repr(self.tol)), ("out_dir", self.out_dir),
        ]


def _int(v):
    if not v.strip().lstrip("+-").isdigit():
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


def _float(v):
    x = float(v)
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"expected a finite number, got {v!r}")
    return x


def _levels(v):
    parts = [p.strip() for p in v.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty level list")
    return tuple(_int(p) for p in parts)


_CONVERT = {
    "method": str.lower, "degree": _int, "levels": _levels, "beta": _float, "gamma": _float,
    "superpenalty_d": _int, "lambda": _float, "mu": _float, "case": str, "tol": _float,
    "out_dir": str,
}


def _convert(key, raw, line=None):
    if key not in _CONVERT:
        hint = " (alpha is selected by method)" if key == "alpha" else ""
        raise ConfigError(f"unknown key{hint}", line, key)
    try:
        return _CONVERT[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(str(exc), line, key) from None


def read_entries(text: str) -> dict:
    """Raw ``key -> (value, line)`` entries; later lines win."""
    entries = {}
    for n, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", n)
        key, raw = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError("missing key", n)
        entries[key] = (_convert(key, raw, n), n)
    return entries


def build_config(values: dict, lines: Optional[dict] = None) -> StudyConfig:
    """Validate converted values and fill defaults.

    ``superpenalty_d`` defaults to 3 for iipg/nipg and 1 for sipg.
    """
    lines = lines or {}

    def fail(key, msg):
        raise ConfigError(msg, lines.get(key), key)

    method = values.get("method", "sipg")
    if method not in METHOD_ALPHA:
        fail("method", f"must be one of {sorted(METHOD_ALPHA)}, got {method!r}")
    d = values.get("superpenalty_d", 1 if method == "sipg" else 3)
    cfg = StudyConfig(
        method=method,
        degree=values.get("degree", 1),
        levels=tuple(values.get("levels", (1, 2, 3, 4, 5))),
        beta=values.get("beta", 125.0),
        gamma=values.get("gamma", 0.0),
        superpenalty_d=d,
        lame_lambda=values.get("lambda", 0.03),
        lame_mu=values.get("mu", 0.035),
        case=values.get("case", "paper"),
        tol=values.get("tol", 1e-10),
        out_dir=values.get("out_dir", "out"),
    )
    if not 1 <= cfg.degree <= MAX_DEGREE:
        fail("degree", f"must be in 1..{MAX_DEGREE}")
    if any(l < 1 or l > MAX_LEVEL for l in cfg.levels):
        fail("levels", f"levels must lie in 1..{MAX_LEVEL}")
    if any(b <= a for a, b in zip(cfg.levels, cfg.levels[1:])):
        fail("levels", "levels must be strictly increasing")
    if not cfg.beta > 0:
        fail("beta", "must be positive")
    if not cfg.gamma >= 0:
        fail("gamma", "must be non-negative")
    if cfg.superpenalty_d < 1:
        fail("superpenalty_d", "must be >= 1")
    if not cfg.lame_lambda >= 0:
        fail("lambda", "must be non-negative")
    if not cfg.lame_mu > 0:
        fail("mu", "must be positive")
    if cfg.case not in CASES:
        fail("case", f"must be one of {CASES}")
    if not 0 < cfg.tol < 1:
        fail("tol", "must lie in (0, 1)")
    if method == "sipg" and cfg.superpenalty_d > 1:
        warnings.warn("superpenalisation with sipg: the symmetric method is adjoint consistent "
                      "and does not need it", stacklevel=2)
    return cfg


def parse_config(text: str, overrides: Optional[dict] = None) -> StudyConfig:
    """Parse config text; ``overrides`` (already converted) replace file values."""
    entries = read_entries(text)
    values = {k: v for k, (v, _) in entries.items()}
    lines = {k: n for k, (_, n) in entries.items()}
    for key, val in (overrides or {}).items():
        if key not in _CONVERT:
            raise ConfigError("unknown key", None, key)
        values[key] = val
        lines.pop(key, None)
    return build_config(values, lines)
