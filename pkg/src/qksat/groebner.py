"""Buchberger's algorithm over the Gaussian rationals Q(i), grevlex order.

Polynomials are sparse maps from exponent tuples to :class:`GaussianRational`
coefficients. The implementation favours clarity: normal pair selection,
the coprime-leading-monomial criterion and the Gebauer-Moeller chain
criterion, and full inter-reduction at the end.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence


class GaussianRational:
    """``(re + i*im) / den`` with integer parts, ``den > 0`` and no common factor."""

    __slots__ = ("re", "im", "den")

    def __init__(self, re: int = 0, im: int = 0, den: int = 1):
        if den == 0:
            raise ZeroDivisionError("zero denominator")
        if den < 0:
            re, im, den = -re, -im, -den
        g = math.gcd(math.gcd(re, im), den)
        if g > 1:
            re, im, den = re // g, im // g, den // g
        self.re, self.im, self.den = re, im, den

    @classmethod
    def from_complex(cls, z: complex, bits: int = 48) -> "GaussianRational":
        """Round ``z`` to the nearest Gaussian rational with denominator ``2**bits``."""
        z = complex(z)
        scale = 1 << bits
        return cls(round(z.real * scale), round(z.imag * scale), scale)

    def __bool__(self) -> bool:
        return self.re != 0 or self.im != 0

    def __add__(self, o: "GaussianRational") -> "GaussianRational":
        if self.den == o.den:
            return GaussianRational(self.re + o.re, self.im + o.im, self.den)
        return GaussianRational(self.re * o.den + o.re * self.den, self.im * o.den + o.im * self.den, self.den * o.den)

    def __sub__(self, o: "GaussianRational") -> "GaussianRational":
        if self.den == o.den:
            return GaussianRational(self.re - o.re, self.im - o.im, self.den)
        return GaussianRational(self.re * o.den - o.re * self.den, self.im * o.den - o.im * self.den, self.den * o.den)

    def __mul__(self, o: "GaussianRational") -> "GaussianRational":
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re, self.den * o.den
        )

    def __neg__(self) -> "GaussianRational":
        return GaussianRational(-self.re, -self.im, self.den)

    def inverse(self) -> "GaussianRational":
        norm = self.re * self.re + self.im * self.im
        if norm == 0:
            raise ZeroDivisionError("inverse of zero")
        return GaussianRational(self.re * self.den, -self.im * self.den, norm)

    def __truediv__(self, o: "GaussianRational") -> "GaussianRational":
        return self * o.inverse()

    def __eq__(self, o) -> bool:
        if isinstance(o, int):
            o = GaussianRational(o)
        if not isinstance(o, GaussianRational):
            return NotImplemented
        return self.re == o.re and self.im == o.im and self.den == o.den

    def __hash__(self) -> int:
        return hash((self.re, self.im, self.den))

    def __complex__(self) -> complex:
        return complex(self.re / self.den, self.im / self.den)

    def __repr__(self) -> str:
        if self.im == 0:
            body = f"{self.re}"
        elif self.re == 0:
            body = f"{self.im}i"
        else:
            body = f"({self.re}{'+' if self.im > 0 else '-'}{abs(self.im)}i)"
        return body if self.den == 1 else f"{body}/{self.den}"


ZERO = GaussianRational(0)
ONE = GaussianRational(1)

Monomial = tuple  # exponent vector


def grevlex_key(m: Monomial) -> tuple:
    """Sort key: larger key means larger monomial in graded reverse lex order."""
    return (sum(m), tuple(-e for e in reversed(m)))


def _divides(a: Monomial, b: Monomial) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def _sub(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x - y for x, y in zip(a, b))


def _add(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


class Polynomial:
    """Sparse polynomial in ``nvars`` variables with Gaussian-rational coefficients."""

    __slots__ = ("nvars", "terms", "_lm")

    def __init__(self, nvars: int, terms: Mapping[Monomial, GaussianRational] | None = None):
        self.nvars = nvars
        self.terms = {tuple(m): c for m, c in (terms or {}).items() if c}
        for m in self.terms:
            if len(m) != nvars:
                raise ValueError(f"monomial {m} has wrong length for {nvars} variables")
        self._lm = None

    @classmethod
    def constant(cls, nvars: int, c: GaussianRational) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        m = [0] * nvars
        m[i] = 1
        return cls(nvars, {tuple(m): ONE})

    def is_zero(self) -> bool:
        return not self.terms

    def lm(self) -> Monomial:
        if self._lm is None:
            if not self.terms:
                raise ValueError("zero polynomial has no leading monomial")
            self._lm = max(self.terms, key=grevlex_key)
        return self._lm

    def lc(self) -> GaussianRational:
        return self.terms[self.lm()]

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def is_constant(self) -> bool:
        return len(self.terms) == 1 and sum(next(iter(self.terms))) == 0

    def monic(self) -> "Polynomial":
        inv = self.lc().inverse()
        p = Polynomial(self.nvars)
        p.terms = {m: c * inv for m, c in self.terms.items()}
        p._lm = self._lm
        return p

    def __add__(self, o: "Polynomial") -> "Polynomial":
        out = dict(self.terms)
        for m, c in o.terms.items():
            v = out.get(m)
            v = c if v is None else v + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        p = Polynomial(self.nvars)
        p.terms = out
        return p

    def __neg__(self) -> "Polynomial":
        p = Polynomial(self.nvars)
        p.terms = {m: -c for m, c in self.terms.items()}
        return p

    def __sub__(self, o: "Polynomial") -> "Polynomial":
        return self + (-o)

    def __mul__(self, o: "Polynomial") -> "Polynomial":
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in o.terms.items():
                m = _add(m1, m2)
                v = out.get(m)
                v = c1 * c2 if v is None else v + c1 * c2
                out[m] = v
        return Polynomial(self.nvars, out)

    def __eq__(self, o) -> bool:
        return isinstance(o, Polynomial) and self.nvars == o.nvars and self.terms == o.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def evaluate(self, point: Sequence[complex]) -> complex:
        total = 0j
        for m, c in self.terms.items():
            t = complex(c)
            for x, e in zip(point, m):
                if e:
                    t *= complex(x) ** e
            total += t
        return total

    def format(self, names: Sequence[str] | None = None) -> str:
        names = names or [f"v{i}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms, key=grevlex_key, reverse=True):
            mono = "*".join(n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e)
            c = self.terms[m]
            parts.append(f"{c!r}*{mono}" if mono else f"{c!r}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial({self.format()})"


def reduce_full(p: Polynomial, basis: Sequence[Polynomial]) -> Polynomial:
    """Remainder of ``p`` on full division by monic ``basis`` (grevlex)."""
    work = dict(p.terms)
    heap = [(_neg_key(m), m) for m in work]
    heapq.heapify(heap)
    rem: dict = {}
    lms = [(g.lm(), g) for g in basis]
    while heap:
        _, m = heapq.heappop(heap)
        c = work.get(m)
        if c is None:
            continue
        for lm, g in lms:
            if _divides(lm, m):
                shift = _sub(m, lm)
                del work[m]
                for mg, cg in g.terms.items():
                    if mg == lm:
                        continue
                    mm = _add(mg, shift)
                    old = work.get(mm)
                    if old is None:
                        work[mm] = -(c * cg)
                        heapq.heappush(heap, (_neg_key(mm), mm))
                    else:
                        v = old - c * cg
                        if v:
                            work[mm] = v
                        else:
                            del work[mm]
                break
        else:
            rem[m] = c
            del work[m]
    out = Polynomial(p.nvars)
    out.terms = rem
    return out


def _neg_key(m: Monomial) -> tuple:
    d, rest = grevlex_key(m)
    return (-d, tuple(-x for x in rest))


def s_polynomial(f: Polynomial, g: Polynomial) -> Polynomial:
    """S-polynomial of two monic polynomials."""
    lf, lg = f.lm(), g.lm()
    L = _lcm(lf, lg)
    a, b = _sub(L, lf), _sub(L, lg)
    out: dict = {}
    for m, c in f.terms.items():
        out[_add(m, a)] = c
    for m, c in g.terms.items():
        mm = _add(m, b)
        v = out.get(mm)
        v = -c if v is None else v - c
        if v:
            out[mm] = v
        else:
            out.pop(mm, None)
    p = Polynomial(f.nvars)
    p.terms = out
    return p


class BudgetExceeded(Exception):
    """Raised when the S-pair or time budget runs out."""


@dataclass
class GroebnerResult:
    basis: list
    complete: bool
    spairs: int
    seconds: float

    @property
    def is_unit(self) -> bool:
        """True when the ideal is the whole ring (reduced basis ``{1}``)."""
        return self.complete and len(self.basis) == 1 and self.basis[0].is_constant()


def groebner(
    polys: Iterable[Polynomial],
    *,
    max_spairs: int = 1_000_000,
    time_limit: float | None = None,
) -> GroebnerResult:
    """Reduced Groebner basis of the ideal generated by ``polys`` (grevlex).

    Stops early with the basis ``{1}`` as soon as a nonzero constant appears.
    On running out of S-pairs or time the result has ``complete=False``.
    """
    t0 = time.monotonic()
    gens = [p.monic() for p in polys if not p.is_zero()]
    if not gens:
        return GroebnerResult([], True, 0, 0.0)
    nvars = gens[0].nvars
    G: list[Polynomial] = []
    pairs: list = []
    counter = 0
    processed = 0

    def unit() -> GroebnerResult:
        return GroebnerResult([Polynomial.constant(nvars, ONE)], True, processed, time.monotonic() - t0)

    active: list[bool] = []

    def add_to_basis(h: Polynomial) -> None:
        # Gebauer-Moeller update (Becker-Weispfenning, UPDATE)
        nonlocal counter, pairs
        lh = h.lm()
        j = len(G)
        C = [(i, _lcm(G[i].lm(), lh)) for i in range(len(G)) if active[i]]
        D: list = []
        while C:
            i, L = C.pop(0)
            coprime = all(a == 0 or b == 0 for a, b in zip(G[i].lm(), lh))
            if coprime or not any(_divides(L2, L) for _, L2 in C + D):
                D.append((i, L))
        E = [(i, L) for i, L in D if not all(a == 0 or b == 0 for a, b in zip(G[i].lm(), lh))]
        kept = []
        for item in pairs:
            a, b, L = item[2], item[3], item[4]
            if (
                _divides(lh, L)
                and _lcm(G[a].lm(), lh) != L
                and _lcm(lh, G[b].lm()) != L
            ):
                continue
            kept.append(item)
        for i, L in E:
            counter += 1
            kept.append((grevlex_key(L), counter, i, j, L))
        heapq.heapify(kept)
        pairs = kept
        for i in range(len(G)):
            if active[i] and _divides(lh, G[i].lm()):
                active[i] = False
        G.append(h)
        active.append(True)

    def reducers() -> list[Polynomial]:
        return [g for g, a in zip(G, active) if a]

    for p in gens:
        h = reduce_full(p, reducers())
        if h.is_zero():
            continue
        h = h.monic()
        if h.is_constant():
            return unit()
        add_to_basis(h)

    while pairs:
        if processed >= max_spairs or (time_limit is not None and time.monotonic() - t0 > time_limit):
            return GroebnerResult(_interreduce(reducers()), False, processed, time.monotonic() - t0)
        _, _, i, j, _ = heapq.heappop(pairs)
        processed += 1
        s = s_polynomial(G[i], G[j])
        h = reduce_full(s, reducers())
        if h.is_zero():
            continue
        h = h.monic()
        if h.is_constant():
            return unit()
        add_to_basis(h)
    return GroebnerResult(_interreduce(reducers()), True, processed, time.monotonic() - t0)


def _interreduce(G: list[Polynomial]) -> list[Polynomial]:
    """Minimal, fully reduced, monic basis sorted by leading monomial."""
    G = [g.monic() for g in G]
    minimal = []
    for i, g in enumerate(G):
        lg = g.lm()
        redundant = False
        for j, h in enumerate(G):
            if i == j:
                continue
            lh = h.lm()
            if _divides(lh, lg) and (lh != lg or j < i):
                redundant = True
                break
        if not redundant:
            minimal.append(g)
    out = []
    for i, g in enumerate(minimal):
        others = minimal[:i] + minimal[i + 1 :]
        r = reduce_full(g, others)
        out.append(r.monic())
    out.sort(key=lambda p: grevlex_key(p.lm()))
    return out
