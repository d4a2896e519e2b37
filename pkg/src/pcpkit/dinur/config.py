"""Pipeline parameters and their versioned text form."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction
from math import isqrt

from ..errors import FormatError, ParameterError
from ..exactmath import parse_rat, rat_str

CONFIG_HEADER = "pcpconfig v1"


@dataclass(frozen=True)
class PipelineConfig:
    q0: int = 3
    l: int = 6
    t: int = 1
    d: int = 4                 # cloud expander degree used by regularize
    nice_degree: int = 6       # padded degree before the expander and loops are added
    W: int = 2
    m0: int = 8
    b: int = 1
    L: int = 2 ** 20
    epsilon0: Fraction = Fraction(1, 100)
    nice_lambda: Fraction = Fraction(9, 10)
    tester_max_bits: int = 1   # largest alphabet for alphabet reduction is 2**tester_max_bits
    tester_samples: int = 32   # sampled tester random strings per block
    seed: int = 0
    expander_budget: int = 400
    val_budget: int = 1 << 22
    power_budget: int = 1 << 21
    reduce_budget: int = 1 << 20
    rounds_cap: int = 4
    lambda_cap: int = 64

    def __post_init__(self):
        object.__setattr__(self, "epsilon0", Fraction(self.epsilon0))
        object.__setattr__(self, "nice_lambda", Fraction(self.nice_lambda))
        r = isqrt(self.t)
        if self.t < 1 or r * r != self.t:
            raise ParameterError(f"t must be a perfect square >= 1, got {self.t}")
        if self.l < 2:
            raise ParameterError("l must be at least 2")
        if not 0 < self.epsilon0 < 1:
            raise ParameterError("epsilon0 must lie strictly between 0 and 1")
        if self.q0 < 3:
            raise ParameterError("q0 must be at least 3")
        if self.d < 1 or self.nice_degree < 1 or self.W < 2 or self.m0 < 1 or self.b < 1:
            raise ParameterError("degrees, W, m0 and b must be positive (W >= 2)")
        for name in ("expander_budget", "val_budget", "power_budget", "reduce_budget",
                     "rounds_cap", "tester_samples", "lambda_cap", "L"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")

    @property
    def delta(self) -> Fraction:
        return Fraction(1, 1000 * self.W)

    def with_(self, **kw) -> PipelineConfig:
        return replace(self, **kw)

    def to_json(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, Fraction):
                out[k] = rat_str(v)
        return out


def dumps_config(cfg: PipelineConfig) -> str:
    lines = [CONFIG_HEADER]
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {rat_str(v) if isinstance(v, Fraction) else v}")
    return "\n".join(lines) + "\n"


def loads_config(text: str) -> PipelineConfig:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != CONFIG_HEADER:
        raise FormatError(f"config must start with '{CONFIG_HEADER}'")
    known = {f.name: f.type for f in fields(PipelineConfig)}
    kw = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise FormatError(f"expected 'key = value', got {ln!r}")
        key, val = (s.strip() for s in ln.split("=", 1))
        if key not in known:
            raise FormatError(f"unknown config key {key!r}")
        try:
            kw[key] = parse_rat(val) if known[key] == "Fraction" else int(val)
        except ValueError as exc:
            raise FormatError(f"bad value for {key}: {val!r}") from exc
    return PipelineConfig(**kw)
