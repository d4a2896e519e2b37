"""Exact binomial facts, the second-moment bound, and measured probabilities."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, isqrt
from typing import Callable, Sequence

import numpy as np
from scipy.stats import beta

from ..errors import DomainError, ParameterError


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Child generator for a named position in the experiment tree.

    Every consumer of randomness derives its generator from the run seed and
    a fixed integer path, so runs are reproducible and order-independent.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path)))


@dataclass(frozen=True)
class BinomDist:
    t: int
    probabilities: tuple

    @classmethod
    def fair(cls, t: int) -> BinomDist:
        if t < 0:
            raise ParameterError("t must be nonnegative")
        return cls(t, tuple(Fraction(comb(t, k), 2 ** t) for k in range(t + 1)))

    def __getitem__(self, k: int) -> Fraction:
        return self.probabilities[k] if 0 <= k <= self.t else Fraction(0)


def binom_statdist(t: int, shift: int, sign: int = 1) -> Fraction:
    """sum_k |Pr[S_t = k] - Pr[S_{t + sign*shift} = k]| for fair-coin binomials."""
    r = isqrt(t)
    if t < 1 or r * r != t:
        raise ParameterError(f"t must be a positive perfect square, got {t}")
    if not 0 <= shift < r:
        raise ParameterError(f"shift must lie in [0, {r}), got {shift}")
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1")
    a, b = BinomDist.fair(t), BinomDist.fair(t + sign * shift)
    return sum((abs(a[k] - b[k]) for k in range(max(a.t, b.t) + 1)), Fraction(0))


def second_moment_bound(values: Sequence) -> tuple[Fraction, Fraction]:
    """(Pr[V > 0], E[V]^2 / E[V^2]) for the uniform distribution on ``values``."""
    vals = [Fraction(v) for v in values]
    if not vals:
        raise ParameterError("need at least one value")
    if any(v < 0 for v in vals):
        raise DomainError("values must be nonnegative")
    second = sum(v * v for v in vals)
    if second == 0:
        raise DomainError("all values are zero; the ratio is undefined")
    n = len(vals)
    lhs = Fraction(sum(1 for v in vals if v > 0), n)
    mean = sum(vals) / n
    return lhs, mean * mean / (second / n)


def clopper_pearson(hits: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    if n <= 0:
        raise ParameterError("need at least one sample")
    alpha = 1 - confidence
    lo = 0.0 if hits == 0 else float(beta.ppf(alpha / 2, hits, n - hits + 1))
    hi = 1.0 if hits == n else float(beta.ppf(1 - alpha / 2, hits + 1, n - hits))
    return lo, hi


@dataclass(frozen=True)
class Probability:
    value: Fraction | float
    method: str                  # "exact" or "sampled"
    interval: tuple | None = None
    samples: int = 0

    def to_json(self) -> dict:
        out = {"method": self.method}
        if isinstance(self.value, Fraction):
            out["value"] = f"{self.value.numerator}/{self.value.denominator}"
        else:
            out["estimate"] = self.value
            out["ci99"] = list(self.interval)
            out["samples"] = self.samples
        return out


def enumerate_or_sample(space: int, evaluator: Callable[[int], bool], budget: int,
                        rng: np.random.Generator, samples: int = 4000) -> Probability:
    """Pr_w[evaluator(w)] for w uniform in range(space)."""
    if space <= 0:
        raise ParameterError("empty randomness space")
    if space <= budget:
        hits = sum(1 for w in range(space) if evaluator(w))
        return Probability(Fraction(hits, space), "exact")
    ws = rng.integers(0, space, size=samples) if space < 2 ** 63 else [
        int.from_bytes(rng.bytes((space.bit_length() + 7) // 8), "little") % space for _ in range(samples)]
    hits = sum(1 for w in ws if evaluator(int(w)))
    return Probability(hits / samples, "sampled", clopper_pearson(hits, samples), samples)
