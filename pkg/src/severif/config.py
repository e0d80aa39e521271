"""Flat key=value run configuration; CLI flags override file values."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .crypto import CryptoParams
from .interp import StepCosts

ENV_VAR = "SE_VERIF_CONFIG"

_HEADER = """\
# severif run configuration (key = value; '#' comments).
#
# Step costs: the operational semantics charges cycles per rule. The rule
# annotations in the source material render ambiguously; this tool reads them
# as enc=1, bop=2, cmov=2, seq=1. Change the cost_* keys for an alternate
# reading - every checker picks the table up from here.
"""


@dataclass(frozen=True)
class RunConfig:
    n: int = 4
    s: int = 2
    rounds: int = 4
    r_max: int = 8
    seed: int = 0
    key_seed: int = 1
    salt_seed: int = 0
    cost_enc: int = 1
    cost_bop: int = 2
    cost_cmov: int = 2
    cost_seq: int = 1
    cache_lines: int = 2
    trials: int = 32
    horizon: int = 0      # 0: per-variant default (4x worst-case latency)
    json_output: bool = False

    def __post_init__(self):
        if min(self.n, self.s, self.rounds, self.r_max) < 1:
            raise ValueError("widths, rounds and register-file size must be >= 1")
        if min(self.cost_enc, self.cost_bop, self.cost_cmov) < 1 or self.cost_seq < 0:
            raise ValueError("costs must be >= 1 (seq >= 0)")

    def crypto_params(self) -> CryptoParams:
        return CryptoParams(self.n, self.s, self.rounds)

    def step_costs(self) -> StepCosts:
        return StepCosts(self.cost_enc, self.cost_bop, self.cost_cmov, self.cost_seq)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config(text: str) -> dict:
    """Flat key=value lines into a field dict; unknown keys are an error."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_TYPES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key == "json_output":
            values[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            values[key] = int(value, 0)
    return values


def dump_config(config: RunConfig) -> str:
    lines = [_HEADER]
    for f in fields(RunConfig):
        lines.append(f"{f.name} = {getattr(config, f.name)}")
    return "\n".join(lines) + "\n"


def load_config(path: str | None = None) -> RunConfig:
    """Resolve the config: explicit path, else $SE_VERIF_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return RunConfig()
    text = Path(path).read_text(encoding="utf-8")
    return RunConfig(**parse_config(text))
