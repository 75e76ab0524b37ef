"""Closed-form constants and thresholds.

Every evaluator here is a pure function. Quantities that can be exact are
returned as integers or Fractions; the rest are floats computed with mpmath
at elevated precision and rounded once at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

EXACT_DIGIT_LIMIT = 10**6
_DPS = 40


@dataclass(frozen=True)
class PsiTerms:
    c: int
    p: float
    terms: tuple[float, float, float]
    assumption_ok: bool

    @property
    def value(self) -> float:
        return max(self.terms)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "c": self.c,
            "terms": list(self.terms),
            "psi": self.value,
            "assumption_ok": self.assumption_ok,
        }


def psi_terms(p: float, c: int) -> PsiTerms:
    """The three competing lower bounds on ``n``; ``assumption_ok`` flags ``p < 1 - (c-2)/(3*2^(c-2))``."""
    if c < 3:
        raise ValueError("c must be at least 3")
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    with mpmath.workdps(_DPS):
        P = mpmath.mpf(p)
        t1 = (2**c - 1) * (c - 1) * mpmath.log(4) / mpmath.log(1 / P) + (2**c - 2)
        inner = 180 * (c - 2) * mpmath.mpf(2) ** (3 * (c - 2))
        inner /= mpmath.sqrt(2 * mpmath.pi) * (3 - mpmath.mpf(1) / 2 ** (c - 2))
        t2 = mpmath.e**2 * inner**2
        t3 = mpmath.mpf(6 * 2 ** (c + 1) * (c - 1))
        ok = P < 1 - mpmath.mpf(c - 2) / (3 * 2 ** (c - 2))
        return PsiTerms(c, float(p), (float(t1), float(t2), float(t3)), bool(ok))


def psi(p: float, c: int) -> float:
    return psi_terms(p, c).value


def as_fraction(x) -> Fraction:
    """Rational view of ``x``; floats snap to the nearest fraction with a small denominator."""
    return Fraction(x).limit_denominator(10**12) if isinstance(x, float) else Fraction(x)


def gamma(k: int, eps) -> Fraction:
    """Maximum chain length ``5 * 4^(k-1) / eps`` (exact for rational ``eps``)."""
    if k < 2:
        raise ValueError("k must be at least 2")
    e = as_fraction(eps)
    if not 0 < e <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return Fraction(5 * 4 ** (k - 1)) / e


_LOG10E = math.log10(math.e)
_FLOAT_CAP = 300.0


@dataclass(frozen=True)
class BigCount:
    """A nonnegative integer, or a lower bound on its size once it is too large to hold.

    The magnitude is ``10^10^...^top`` with ``height`` tens, kept with the
    smallest height for which ``top`` fits comfortably in a float. ``value``
    is ``None`` exactly when the integer was not materialised; the tower is
    then a lower bound.
    """

    value: int | None
    height: int
    top: float

    @classmethod
    def of(cls, v: int) -> "BigCount":
        return cls(v, 1, _int_log10(v) if v > 0 else float("-inf"))

    @classmethod
    def from_tower(cls, height: int, top: float) -> "BigCount":
        while height > 1 and top < _FLOAT_CAP:
            top = 10.0**top
            height -= 1
        return cls(None, height, top)

    @property
    def log10(self) -> float:
        t = self.top
        for _ in range(self.height - 1):
            if t > _FLOAT_CAP:
                return float("inf")
            t = 10.0**t
        return t

    @property
    def digits(self) -> int | None:
        if self.value is not None:
            return len(str(self.value))
        if self.height == 1:
            return int(math.floor(self.top)) + 1
        return None

    def magnitude_key(self) -> tuple[int, float]:
        """Sort key that orders counts by size."""
        return (self.height, self.top)

    def to_dict(self) -> dict:
        out = {"digits": self.digits, "tower_height": self.height, "tower_top": self.top}
        if self.value is not None and len(str(self.value)) <= 10_000:
            out["value"] = str(self.value)
        return out


def _int_log10(v: int) -> float:
    bits = v.bit_length()
    if bits < 1000:
        return math.log10(v)
    shift = bits - 60
    return math.log10(v >> shift) + shift * math.log10(2)


def _log10_factorial(v: int) -> float:
    with mpmath.workdps(30):
        return float(mpmath.loggamma(mpmath.mpf(v) + 1) / mpmath.log(10))


def phi_step(prev: BigCount) -> BigCount:
    """One recurrence step ``phi(m-1) = ((phi(m)+2)! + 1)(phi(m)+1)``."""
    if prev.value is not None:
        v = prev.value
        lg = _log10_factorial(v + 2) + _int_log10(v + 1)
        if lg < EXACT_DIGIT_LIMIT:
            return BigCount.of((math.factorial(v + 2) + 1) * (v + 1))
        return BigCount.from_tower(1, lg)
    # x! >= (x/e)^x, so log10(x!) >= x (log10 x - log10 e).
    if prev.height == 1:
        t = prev.top
        if t < _FLOAT_CAP:
            return BigCount.from_tower(1, 10.0**t * (t - _LOG10E))
        return BigCount.from_tower(2, t + math.log10(t - _LOG10E))
    # log10 log10 of the next value exceeds log10 of this one.
    return BigCount.from_tower(prev.height + 1, prev.top)


def chain_length(k: int, eps) -> int:
    return math.ceil(gamma(k, eps))


def phi_chain(k: int | None, eps, depth_cap: int, *, gamma_override: int | None = None) -> list[BigCount]:
    """``[phi(g), phi(g-1), ...]`` starting at ``phi(g) = 1`` for up to ``depth_cap`` steps.

    The chain ends at ``phi(1)``; ``phi(0) = phi(1) + 1`` is appended when the
    whole chain fits inside ``depth_cap``. ``gamma_override`` replaces the
    chain length ``g`` for small diagnostic runs.
    """
    g = gamma_override if gamma_override is not None else chain_length(k, eps)
    out = [BigCount.of(1)]
    steps = min(depth_cap, g - 1)
    for _ in range(steps):
        out.append(phi_step(out[-1]))
    if depth_cap >= g and g >= 1:
        last = out[-1]
        out.append(BigCount.of(last.value + 1) if last.value is not None else last)
    return out


@dataclass(frozen=True)
class CConstant:
    value: BigCount
    astronomical: bool
    chain_length: int
    steps_materialised: int

    def to_dict(self) -> dict:
        return {
            "c": self.value.to_dict(),
            "astronomical": self.astronomical,
            "chain_length": self.chain_length,
            "steps_materialised": self.steps_materialised,
        }


def c_of_k_eps(k: int | None, eps, depth_cap: int, *, gamma_override: int | None = None) -> CConstant:
    """Subset size ``5 phi(0)/eps + 1``, or a digit-count lower bound when the chain is cut short."""
    g = gamma_override if gamma_override is not None else chain_length(k, eps)
    chain = phi_chain(k, eps, depth_cap, gamma_override=gamma_override)
    e = as_fraction(eps)
    complete = depth_cap >= g
    last = chain[-1]
    if complete and last.value is not None:
        v = Fraction(5 * last.value) / e + 1
        val = BigCount.of(math.ceil(v))
        return CConstant(val, False, g, len(chain) - 1)
    # The unfinished chain only grows from here, so its last entry bounds c from below.
    return CConstant(last if last.value is None else BigCount(None, 1, last.top), True, g, len(chain) - 1)


def chernoff_samples(p_single: float, delta_fail: float) -> int:
    """Smallest ``m`` with ``exp(-2 m (p - 1/2)^2) <= delta_fail``."""
    if not p_single > 0.5:
        raise ValueError("p_single must exceed 1/2")
    if not 0 < delta_fail <= 1:
        raise ValueError("delta_fail must lie in (0, 1]")
    if delta_fail == 1:
        return 0
    with mpmath.workdps(_DPS):
        m = mpmath.log(1 / mpmath.mpf(delta_fail)) / (2 * (mpmath.mpf(p_single) - mpmath.mpf(1) / 2) ** 2)
        return int(mpmath.ceil(m))


def majority_confidence(m: int, frac: float) -> float:
    """``1 - exp(-2 m (f - 1/2)^2)`` floored at zero."""
    if m <= 0:
        return 0.0
    return max(0.0, 1.0 - math.exp(-2.0 * m * (frac - 0.5) ** 2))


def delta_concentration(alpha: float, beta: float, n: int) -> float:
    """Degree-concentration width ``5 exp(1/(12a(1-a)n) + 1/(12b(1-b)n)) / sqrt(2 pi a(1-a) b(1-b) n)``."""
    if not (0 < alpha < 1 and 0 < beta < 1):
        raise ValueError("alpha and beta must lie in (0, 1)")
    with mpmath.workdps(_DPS):
        a, b, N = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(n)
        ex = 1 / (12 * a * (1 - a) * N) + 1 / (12 * b * (1 - b) * N)
        return float(5 * mpmath.exp(ex) / mpmath.sqrt(2 * mpmath.pi * a * (1 - a) * b * (1 - b) * N))


def k_constant(A: float) -> float:
    """``K_A = 2 sqrt(A exp(A^(1/3)/2))``."""
    if not A > 1:
        raise ValueError("A must exceed 1")
    with mpmath.workdps(_DPS):
        a = mpmath.mpf(A)
        return float(2 * mpmath.sqrt(a * mpmath.exp(mpmath.cbrt(a) / 2)))


def a_for_k4() -> float:
    """The ``A`` at which ``K_A = 4``: ``216 W(2^(2/3)/6)^3``."""
    with mpmath.workdps(_DPS):
        w = mpmath.lambertw(mpmath.cbrt(4) / 6).real
        return float(216 * w**3)
