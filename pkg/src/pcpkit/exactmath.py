"""Exact rational arithmetic, certified square roots and vector norms.

Rationals are ``fractions.Fraction`` values (always in lowest terms with a
positive denominator).  Square roots are never taken in floating point:
``cert_sqrt`` returns a rational upper approximation ``v`` with
``0 <= v*v - r <= 1/L``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Iterable, Sequence

from .errors import DomainError, ParameterError, ShapeError

Rat = Fraction

DEFAULT_L = 2 ** 20


def as_rat(x) -> Fraction:
    """Coerce ints, Fractions and "num/den" strings to a Fraction.

    Floats are refused: they would smuggle binary rounding into exact code.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rat(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def rat_str(x: Fraction) -> str:
    x = as_rat(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rat(s: str) -> Fraction:
    s = s.strip()
    try:
        if "/" in s:
            num, den = s.split("/")
            return Fraction(int(num), int(den))
        return Fraction(int(s))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {s!r}") from exc


@dataclass(frozen=True)
class RatVec:
    entries: tuple

    def __init__(self, entries: Iterable):
        vals = tuple(as_rat(e) for e in entries)
        if not vals:
            raise ShapeError("RatVec needs at least one entry")
        object.__setattr__(self, "entries", vals)

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __add__(self, other: RatVec) -> RatVec:
        _same_dim(self, other)
        return RatVec(a + b for a, b in zip(self, other))

    def __sub__(self, other: RatVec) -> RatVec:
        _same_dim(self, other)
        return RatVec(a - b for a, b in zip(self, other))

    def scale(self, c) -> RatVec:
        c = as_rat(c)
        return RatVec(c * a for a in self)

    @classmethod
    def uniform(cls, n: int) -> RatVec:
        """The vector (1/n, ..., 1/n)."""
        return cls([Fraction(1, n)] * n)


def _same_dim(x, y):
    if len(x) != len(y):
        raise ShapeError(f"dimension mismatch: {len(x)} vs {len(y)}")


@dataclass(frozen=True)
class CertSqrt:
    value: Fraction
    input: Fraction
    L: int

    def error(self) -> Fraction:
        return self.value * self.value - self.input


def _grid_exponent(r: Fraction, L: int) -> int:
    # smallest p with grid step h = 2^-p satisfying 2*B*h + h*h <= 1/L,
    # where B >= sqrt(r); then the least grid point above sqrt(r) is close enough.
    # Cleared of denominators: L * (2*B*2^p + 1) <= 4^p.
    bound = 1
    while bound * bound * r.denominator < r.numerator:
        bound *= 2
    p = max(0, (L.bit_length() + bound.bit_length()) // 2 - 2)
    while L * (2 * bound * (1 << p) + 1) > (1 << (2 * p)):
        p += 1
    return p


def cert_sqrt(r, L: int = DEFAULT_L, normalize: bool = False) -> CertSqrt:
    """Least dyadic grid value v with 0 <= v^2 - r <= 1/L, found by bisection.

    With ``normalize=True`` the largest square factor found by trial division
    is pulled out first, so that sqrt(c^2 e / (d^2 f)) = (c/d) sqrt(e/f).
    """
    r = as_rat(r)
    if not isinstance(L, int) or isinstance(L, bool):
        raise ParameterError("L must be an integer")
    if L < 2:
        raise ParameterError(f"L must be at least 2, got {L}")
    if r < 0:
        raise DomainError(f"square root of negative rational {r}")
    if normalize:
        factor, rest = square_factor(r)
        if factor != 1:
            # scale the precision so the recombined value keeps the 1/L contract
            inner_L = max(2, -(-L * factor.numerator ** 2 // factor.denominator ** 2))
            inner = cert_sqrt(rest, inner_L)
            return CertSqrt(factor * inner.value, r, L)
    if r == 0:
        return CertSqrt(Fraction(0), r, L)
    p = _grid_exponent(r, L)
    a, b = r.numerator, r.denominator
    target = a << (2 * p)
    # least k with k^2 * b >= a * 4^p, searched by halving [lo, hi]
    lo, hi = 0, 1
    while hi * hi * b < target:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid * mid * b >= target:
            hi = mid
        else:
            lo = mid
    return CertSqrt(Fraction(hi, 1 << p), r, L)


_SMALL_PRIMES = None


def _primes(limit: int = 1000):
    global _SMALL_PRIMES
    if _SMALL_PRIMES is None:
        sieve = bytearray([1]) * (limit + 1)
        sieve[0:2] = b"\x00\x00"
        for i in range(2, int(limit ** 0.5) + 1):
            if sieve[i]:
                sieve[i * i::i] = bytearray(len(sieve[i * i::i]))
        _SMALL_PRIMES = [i for i, ok in enumerate(sieve) if ok]
    return _SMALL_PRIMES


def _split_square(n: int) -> tuple[int, int]:
    """n = c^2 * e with e free of small square factors (trial division only)."""
    c, e = 1, n
    for p in _primes():
        pp = p * p
        if pp > e:
            break
        while e % pp == 0:
            e //= pp
            c *= p
    s = isqrt(e)
    if s * s == e:
        c, e = c * s, 1
    return c, e


def square_factor(r) -> tuple[Fraction, Fraction]:
    """Write r = (c/d)^2 * (e/f) pulling out the square part found by trial division."""
    r = as_rat(r)
    if r == 0:
        return Fraction(1), r
    c, e = _split_square(r.numerator)
    d, f = _split_square(r.denominator)
    return Fraction(c, d), Fraction(e, f)


def inner(x: Sequence, y: Sequence) -> Fraction:
    _same_dim(x, y)
    return sum((as_rat(a) * as_rat(b) for a, b in zip(x, y)), Fraction(0))


def norm(x: Sequence, L: int = DEFAULT_L) -> CertSqrt:
    return cert_sqrt(inner(x, x), L)


def norm_squared(x: Sequence) -> Fraction:
    return inner(x, x)
