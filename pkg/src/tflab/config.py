"""Flat ``key = value`` experiment configuration shared by every subcommand."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigurationError

EXPERIMENT_COMMANDS = ("scaling", "single-freq", "norm")


def _int_list(text: str) -> tuple:
    text = text.strip()
    return tuple(int(v) for v in text.split(",") if v.strip()) if text else ()


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "none") else int(text)


def _k_range(text: str):
    text = text.strip()
    if text.lower() in ("", "none"):
        return None
    a, b = text.split(":")
    return (int(a), int(b))


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    L: int = 14
    q: float = 1.5
    r: float = 3.0
    s: float | None = None
    eps: float = 0.0
    mode: str = "composition"
    M: int = 8
    k_range: tuple | None = None  # inclusive (lo, hi); written "lo:hi"
    Ns: tuple = (4, 8, 16, 32)
    trials: int = 20
    seed: int | None = None
    out: str = "-"
    input: str = ""
    lam: float | None = None
    freqs: tuple = ()
    Jmax: int = 10
    operator: str = "composition"
    method: str = "lq"
    N: int = 8
    Ls: tuple = (8, 10, 12, 14)

    def serialize(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "k_range" and v is not None:
                lines.append(f"k_range = {v[0]}:{v[1]}")
            else:
                lines.append(f"{f.name} = {_fmt(v)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        # where results land does not change them, so the output path is not hashed
        text = replace(self, out="-").serialize()
        return hashlib.sha256(text.encode()).hexdigest()

    def header(self, version: str) -> str:
        return f"# tflab {version} seed={self.seed} config={self.digest()}"

    @property
    def n(self) -> int:
        return 2**self.L


PARSERS = {
    "L": int, "q": float, "r": float, "s": _opt_float, "eps": float, "mode": str.strip,
    "M": int, "k_range": _k_range, "Ns": _int_list, "trials": int, "seed": _opt_int,
    "out": str.strip, "input": str.strip, "lam": _opt_float, "freqs": _int_list,
    "Jmax": int, "operator": str.strip, "method": str.strip, "N": int, "Ls": _int_list,
}
KEYS = tuple(PARSERS)


def convert(key: str, text: str):
    if key not in PARSERS:
        raise ConfigurationError(f"unknown configuration key {key!r}", key=key)
    try:
        return PARSERS[key](str(text))
    except ValueError as exc:
        raise ConfigurationError(f"bad value {text!r} for {key}: {exc}", key=key) from None


def parse(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'", key=line)
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = convert(key, value)
    return replace(base or ExperimentConfig(), **values)


def load(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc.strerror}", key="config") from None
    return parse(text, base)


def override(cfg: ExperimentConfig, flags: dict) -> ExperimentConfig:
    """Apply ``--key value`` flags (strings) on top of cfg."""
    return replace(cfg, **{k: convert(k, v) for k, v in flags.items() if v is not None})
