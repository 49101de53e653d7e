"""Experiment configuration: flat ``key = value`` files plus CLI overrides."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field, fields

CAMPAIGNS = ("sample", "thm1", "clt", "ratios", "identities")
FORMATS = ("csv", "json", "both")
OUT_ENV = "CUE_SPECTRA_OUT"

_DEFAULT_N = {"sample": [8], "thm1": [64], "clt": [256], "ratios": [3], "identities": [16]}
# fields that change no computed value are left out of the hash
_UNHASHED = {"workers", "out_dir", "format"}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ExperimentConfig:
    campaign: str
    n: list[int] = field(default_factory=list)
    l: float | None = None
    l_rule: str | None = None
    c: list[float] | None = None
    k_moment: list[int] | None = None
    z: float | None = None
    samples: int = 1000
    seed: int = 0
    workers: int = 1
    out_dir: str = ""
    format: str = "csv"

    def __post_init__(self):
        if not self.n and self.campaign in _DEFAULT_N:
            self.n = list(_DEFAULT_N[self.campaign])
        if not self.out_dir:
            self.out_dir = os.environ.get(OUT_ENV, "results")
        if self.campaign == "thm1":
            if self.c is None:
                self.c = [0.25, 0.5, 1.0]
            if self.k_moment is None:
                self.k_moment = [1]
            if self.z is None:
                self.z = 1.0
        if self.campaign == "clt" and self.l is None and self.l_rule is None:
            self.l_rule = "sqrt"

    def validate(self) -> "ExperimentConfig":
        if self.campaign not in CAMPAIGNS:
            raise ConfigError("campaign", f"must be one of {', '.join(CAMPAIGNS)}, got {self.campaign!r}")
        if not self.n:
            raise ConfigError("n", "at least one matrix size is required")
        for n in self.n:
            if not isinstance(n, int) or n < 1:
                raise ConfigError("n", f"matrix sizes must be positive integers, got {n!r}")
        if not isinstance(self.samples, int) or self.samples < 1:
            raise ConfigError("samples", f"must be a positive integer, got {self.samples!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed!r}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("workers", f"must be a positive integer, got {self.workers!r}")
        if self.format not in FORMATS:
            raise ConfigError("format", f"must be one of {', '.join(FORMATS)}, got {self.format!r}")
        if self.c is not None:
            for c in self.c:
                if not 0 < c <= 1:
                    raise ConfigError("c", f"values must lie in (0, 1], got {c}")
        if self.k_moment is not None:
            for k in self.k_moment:
                if not isinstance(k, int) or k < 1:
                    raise ConfigError("k", f"moment orders must be positive integers, got {k!r}")
        if self.l_rule is not None and self.l_rule != "sqrt":
            raise ConfigError("l_rule", f"only 'sqrt' is supported, got {self.l_rule!r}")
        if self.l is not None and self.l_rule is not None:
            raise ConfigError("l", "give either l or l_rule, not both")
        if self.campaign == "clt":
            for n in self.n:
                l = self.l_for(n)
                if not 1 < l < n / 2:
                    raise ConfigError("l", f"need 1 < L < N/2, got L={l} at N={n}")
            if self.samples < 100:
                raise ConfigError("samples", "the clt campaign needs at least 100 samples")
        if self.campaign == "thm1":
            for n in self.n:
                z0 = 1.0 - 1.0 / n
                if not z0 <= self.z <= 1.0:
                    raise ConfigError("z", f"must lie in [1 - 1/N, 1] = [{z0}, 1] at N={n}, got {self.z}")
            if self.samples < 100:
                raise ConfigError("samples", "the thm1 campaign needs at least 100 samples")
        if self.campaign == "ratios":
            if self.samples < 1000:
                raise ConfigError("samples", "the ratios campaign needs at least 1000 samples")
        return self

    def l_for(self, n: int) -> float:
        if self.l is not None:
            return self.l
        return int(math.ceil(math.sqrt(n)))

    def canonical(self) -> dict:
        return {k: v for k, v in sorted(asdict(self).items()) if k not in _UNHASHED}

    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _parse_list(value: str, kind, name: str):
    try:
        return [kind(item.strip()) for item in value.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(name, f"cannot parse {value!r} as a list of {kind.__name__}") from None


def _parse_scalar(value: str, kind, name: str):
    try:
        return kind(value.strip())
    except ValueError:
        raise ConfigError(name, f"cannot parse {value!r} as {kind.__name__}") from None


_KEYS = {
    "campaign": ("campaign", str, False),
    "n": ("n", int, True),
    "l": ("l", float, False),
    "l_rule": ("l_rule", str, False),
    "c": ("c", float, True),
    "k": ("k_moment", int, True),
    "k_moment": ("k_moment", int, True),
    "z": ("z", float, False),
    "samples": ("samples", int, False),
    "seed": ("seed", int, False),
    "workers": ("workers", int, False),
    "out": ("out_dir", str, False),
    "out_dir": ("out_dir", str, False),
    "format": ("format", str, False),
}


def parse_pairs(pairs: dict[str, str]) -> dict:
    """Convert raw string values (from a file or CLI) to typed config fields."""
    out = {}
    for key, raw in pairs.items():
        if key not in _KEYS:
            raise ConfigError(key, "unknown configuration key")
        name, kind, is_list = _KEYS[key]
        out[name] = _parse_list(raw, kind, key) if is_list else _parse_scalar(raw, kind, key)
    return out


def read_config_file(path: str) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}", "expected 'key = value'")
            key, value = line.split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


def build_config(campaign: str | None, file_pairs: dict[str, str] | None = None,
                 overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Merge file values and overrides (overrides win) into a validated config."""
    merged = dict(file_pairs or {})
    overrides = overrides or {}
    # an explicit L on the command line replaces a rule from the file, and vice versa
    if "l" in overrides:
        merged.pop("l_rule", None)
    if "l_rule" in overrides:
        merged.pop("l", None)
    merged.update(overrides)
    if campaign is not None:
        merged["campaign"] = campaign
    typed = parse_pairs(merged)
    if "campaign" not in typed:
        raise ConfigError("campaign", "no campaign given")
    known = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(**{k: v for k, v in typed.items() if k in known}).validate()
