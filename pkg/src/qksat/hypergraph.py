"""Uniform hypergraphs, shadows and the density inequalities they satisfy.

Edge densities are exact ``Fraction`` values. Irrational quantities such as
``theta ** (1/c)`` enter comparisons through a rational interval whose width
is about ``1e-30``, so a verdict never depends on float rounding.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import mpmath
import numpy as np

from .bounds import as_fraction, delta_concentration, k_constant
from .linalg import rng_from

ROOT_PAD = Fraction(1, 10**30)


@dataclass(frozen=True)
class Hypergraph:
    n: int
    k: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not 0 <= self.k <= self.n:
            raise ValueError("edge size must lie in [0, n]")
        edges = frozenset(tuple(sorted(e)) for e in self.edges)
        for e in edges:
            if len(e) != self.k or len(set(e)) != self.k:
                raise ValueError(f"edge {e} does not have {self.k} distinct vertices")
            if e and (e[0] < 0 or e[-1] >= self.n):
                raise ValueError(f"edge {e} leaves the vertex range")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def complete(cls, n: int, k: int) -> "Hypergraph":
        return cls(n, k, frozenset(itertools.combinations(range(n), k)))

    @classmethod
    def random(cls, n: int, k: int, p: float, seed=None) -> "Hypergraph":
        """Each ``k``-subset independently with probability ``p``."""
        rng = rng_from(seed)
        all_edges = list(itertools.combinations(range(n), k))
        keep = rng.random(len(all_edges)) < p
        return cls(n, k, frozenset(e for e, b in zip(all_edges, keep) if b))

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def density(self) -> Fraction:
        return Fraction(len(self.edges), math.comb(self.n, self.k))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for e in self.edges:
            deg[list(e)] += 1
        return deg

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)


def binom_real(x, c: int):
    """``x (x-1) ... (x-c+1) / c!`` for any real or rational ``x``."""
    out = 1 if isinstance(x, (int, Fraction)) else 1.0
    for i in range(c):
        out = out * (x - i)
    if isinstance(out, (int, Fraction)):
        return Fraction(out, math.factorial(c))
    return out / math.factorial(c)


class Interval(NamedTuple):
    """Closed rational interval ``[lo, hi]``."""

    lo: Fraction
    hi: Fraction

    @classmethod
    def point(cls, x) -> "Interval":
        x = Fraction(x)
        return cls(x, x)

    def __add__(self, o):
        o = o if isinstance(o, Interval) else Interval.point(o)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    def __sub__(self, o):
        o = o if isinstance(o, Interval) else Interval.point(o)
        return Interval(self.lo - o.hi, self.hi - o.lo)

    def __mul__(self, o):
        o = o if isinstance(o, Interval) else Interval.point(o)
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval(min(p), max(p))

    def __truediv__(self, o):
        o = o if isinstance(o, Interval) else Interval.point(o)
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("interval divisor contains zero")
        return self * Interval(1 / o.hi, 1 / o.lo)

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2


def _exact_root(q: Fraction, c: int) -> Fraction | None:
    def iroot(v: int) -> int | None:
        r = round(v ** (1.0 / c)) if v < 2**1000 else int(mpmath.root(v, c))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**c == v:
                return cand
        return None

    a, b = iroot(q.numerator), iroot(q.denominator)
    return Fraction(a, b) if a is not None and b is not None else None


def root_interval(q, c: int) -> Interval:
    """Rational enclosure of ``q ** (1/c)``; a point when the root is rational."""
    q = as_fraction(q)
    if q < 0:
        raise ValueError("negative radicand")
    exact = _exact_root(q, c)
    if exact is not None:
        return Interval.point(exact)
    with mpmath.workdps(50):
        r = mpmath.root(mpmath.mpf(q.numerator) / q.denominator, c)
        mid = Fraction(mpmath.nstr(r, 45, strip_zeros=False))
    return Interval(max(Fraction(0), mid - ROOT_PAD), mid + ROOT_PAD)


def _binom_iv(y: Interval, c: int) -> Interval:
    out = Interval.point(1)
    for i in range(c):
        out = out * (y - i)
    return out / math.factorial(c)


class BinomScaling(NamedTuple):
    alpha: Fraction | None
    holds: bool


def check_binom_scaling(theta, x, c: int) -> BinomScaling:
    """Solve ``theta C(x,c) = C(y,c) + alpha C(y,c-1)`` at ``y = theta^(1/c) x``.

    ``holds`` means ``alpha`` is certainly in ``[0, 1)`` and
    ``theta C(x,c) <= C(y+1, c)``. ``alpha`` is the midpoint of its
    enclosure, or ``None`` when ``C(y, c-1)`` cannot be separated from zero.
    """
    theta, x = as_fraction(theta), as_fraction(x)
    if not 0 <= theta <= 1:
        raise ValueError("theta must lie in [0, 1]")
    if x < c:
        raise ValueError("x must be at least c")
    y = root_interval(theta, c) * x
    lhs = theta * binom_real(x, c)
    try:
        a = (Interval.point(lhs) - _binom_iv(y, c)) / _binom_iv(y, c - 1)
    except ZeroDivisionError:
        return BinomScaling(None, False)
    upper = _binom_iv(y + 1, c)
    ok = a.lo >= 0 and a.hi < 1 and lhs <= upper.lo
    return BinomScaling(a.mid if a.lo != a.hi else a.lo, bool(ok))


def binom_scaling_grid(cs=(2, 3, 4, 5), x_max: int = 40, theta_steps: int = 20):
    """Yield ``(theta, x, c, result)`` over ``theta = j/theta_steps`` and integer ``x`` in ``[c, x_max]``."""
    for c in cs:
        for j in range(1, theta_steps + 1):
            th = Fraction(j, theta_steps)
            for x in range(c, x_max + 1):
                yield th, x, c, check_binom_scaling(th, x, c)


def shadow(G: Hypergraph, k: int) -> Hypergraph:
    if k > G.k:
        raise ValueError("shadow size exceeds edge size")
    out = set()
    for e in G.edges:
        out.update(itertools.combinations(e, k))
    return Hypergraph(G.n, k, frozenset(out))


@dataclass(frozen=True)
class DensityReport:
    theta: Fraction
    bound: float
    satisfied: bool

    def to_dict(self) -> dict:
        return {
            "theta": float(self.theta),
            "theta_exact": f"{self.theta.numerator}/{self.theta.denominator}",
            "bound": self.bound,
            "satisfied": self.satisfied,
        }


def shadow_bound_interval(theta: Fraction, l: int, n: int, k: int) -> Interval:
    """Enclosure of ``max(0, theta^(1/l) - 2/n)^k``.

    A negative base means the bound is vacuous, so it is clamped at zero.
    """
    base = root_interval(theta, l) - Fraction(2, n)
    lo, hi = max(base.lo, Fraction(0)), max(base.hi, Fraction(0))
    return Interval(lo**k, hi**k)


def check_shadow_density(G: Hypergraph, k: int) -> DensityReport:
    if not k <= G.k <= G.n:
        raise ValueError("need k <= l <= n")
    th_k = shadow(G, k).density
    b = shadow_bound_interval(G.density, G.k, G.n, k)
    return DensityReport(th_k, float(b.mid), th_k >= b.hi)


def partial_shadow(G: Hypergraph, k: int, omega, chooser: str = "adversarial-min", seed=None) -> Hypergraph:
    """Union over edges of ``floor(omega C(l,k))`` chosen ``k``-subsets.

    ``adversarial-min`` walks edges in sorted order and reuses already chosen
    subsets first, filling up lexicographically; ``random`` picks uniformly.
    """
    if k > G.k:
        raise ValueError("shadow size exceeds edge size")
    omega = as_fraction(omega)
    size = math.floor(omega * math.comb(G.k, k))
    chosen: set = set()
    if size == 0:
        return Hypergraph(G.n, k, frozenset())
    if chooser == "random":
        rng = rng_from(seed)
        for e in sorted(G.edges):
            subs = list(itertools.combinations(e, k))
            pick = rng.choice(len(subs), size=size, replace=False)
            chosen.update(subs[i] for i in pick)
    elif chooser == "adversarial-min":
        for e in sorted(G.edges):
            subs = list(itertools.combinations(e, k))
            old = [s for s in subs if s in chosen]
            new = [s for s in subs if s not in chosen]
            chosen.update((old + new)[:size])
    else:
        raise ValueError(f"unknown chooser {chooser!r}")
    return Hypergraph(G.n, k, frozenset(chosen))


@dataclass(frozen=True)
class PartialShape:
    n: int
    c: int
    l: int
    k: int
    delta: Fraction
    eps: Fraction


def partial_shadow_shape(n: int, l: int, k: int) -> PartialShape | None:
    """The ``c`` with ``l = n/2^c + delta``, ``-3 <= delta < -1`` and ``k = l/2 + eps``, ``-1/2 <= eps <= 0``."""
    eps = k - Fraction(l, 2)
    if not -Fraction(1, 2) <= eps <= 0:
        return None
    c = 0
    # delta in [-3, -1) means n / 2^c lies in (l + 1, l + 3]
    while Fraction(n, 2**c) > l + 1:
        delta = l - Fraction(n, 2**c)
        if -3 <= delta < -1:
            return PartialShape(n, c, l, k, delta, eps)
        c += 1
    return None


def partial_shadow_admissible(shape: PartialShape, theta, A: float) -> bool:
    """Both lower bounds on ``n`` required by the partial-shadow density inequality."""
    theta = float(theta)
    if theta <= 0 or not A > 1:
        return False
    if shape.n < 3 * 2**shape.c:
        return False
    need = 3 * 2 ** (shape.c + 1) * (0.5 + (A ** (1 / 3) / 4 - math.log(theta)) / math.log(A))
    return shape.n >= need


def check_partial_shadow_density(G: Hypergraph, A: float, k: int | None = None) -> DensityReport:
    """Adversarial partial ``(k, 1/2)``-shadow density against ``theta / K_A``."""
    k = G.k // 2 if k is None else k
    shape = partial_shadow_shape(G.n, G.k, k)
    if shape is None:
        raise ValueError(f"(n={G.n}, l={G.k}, k={k}) is not an admissible shape")
    theta = G.density
    if not partial_shadow_admissible(shape, theta, A):
        raise ValueError("n is too small for this density and A")
    th = partial_shadow(G, k, Fraction(1, 2)).density
    with mpmath.workdps(40):
        bound = mpmath.mpf(theta.numerator) / theta.denominator / mpmath.mpf(k_constant(A))
        ok = mpmath.mpf(th.numerator) / th.denominator >= bound
    return DensityReport(th, float(bound), bool(ok))


class OddFamily:
    """Index tables for the odd-edge construction on ``n`` vertices.

    Subsets of size ``h = (n-1)/2`` are numbered lexicographically.
    ``incidence[i, j]`` is set when subset ``j`` lies in the complement of
    subset ``i``, i.e. when choosing option 2 for ``i`` adds ``j``.
    """

    def __init__(self, n: int):
        if n % 2 == 0 or n < 3:
            raise ValueError("n must be odd and at least 3")
        self.n = n
        self.h = (n - 1) // 2
        self.subsets = list(itertools.combinations(range(n), self.h))
        index = {s: i for i, s in enumerate(self.subsets)}
        N = len(self.subsets)
        self.incidence = np.zeros((N, N), dtype=np.int32)
        for i, s in enumerate(self.subsets):
            comp = [v for v in range(n) if v not in s]
            for t in itertools.combinations(comp, self.h):
                self.incidence[i, index[t]] = 1

    def __len__(self) -> int:
        return len(self.subsets)

    def covered(self, option2: np.ndarray) -> np.ndarray:
        """Edge indicator for a batch of configurations ``(T, N)`` of option-2 flags."""
        option2 = np.atleast_2d(option2).astype(bool)
        return ~option2 | ((option2.astype(np.int32) @ self.incidence) > 0)

    def densities(self, option2: np.ndarray) -> list[Fraction]:
        counts = self.covered(option2).sum(axis=1)
        return [Fraction(int(c), len(self)) for c in counts]


def odd_construction(n: int, choices) -> DensityReport:
    """Build the odd-edge hypergraph; ``choices`` maps each ``(n-1)/2``-subset to option 1 or 2.

    ``choices`` may be a dict keyed by sorted tuples or a sequence in
    lexicographic subset order.
    """
    fam = OddFamily(n)
    if isinstance(choices, dict):
        seq = [choices[s] for s in fam.subsets]
    else:
        seq = list(choices)
    if len(seq) != len(fam) or any(v not in (1, 2) for v in seq):
        raise ValueError("every subset needs exactly one choice in {1, 2}")
    theta = fam.densities(np.array(seq) == 2)[0]
    return DensityReport(theta, 0.5, theta >= Fraction(1, 2))


def odd_construction_graph(n: int, choices) -> Hypergraph:
    fam = OddFamily(n)
    seq = [choices[s] for s in fam.subsets] if isinstance(choices, dict) else list(choices)
    cov = fam.covered(np.array(seq) == 2)[0]
    return Hypergraph(n, fam.h, frozenset(s for s, b in zip(fam.subsets, cov) if b))


def odd_exhaustive(n: int = 5) -> tuple[Fraction, tuple[int, ...]]:
    """Minimum density over every configuration, with one minimising choice vector."""
    fam = OddFamily(n)
    N = len(fam)
    if N > 20:
        raise ValueError("exhaustive enumeration is limited to n <= 5")
    codes = np.arange(2**N, dtype=np.int64)
    option2 = ((codes[:, None] >> np.arange(N)) & 1).astype(bool)
    counts = fam.covered(option2).sum(axis=1)
    best = int(np.argmin(counts))
    return Fraction(int(counts[best]), N), tuple(int(b) + 1 for b in option2[best])


def odd_random(n: int, trials: int, seed=None) -> list[Fraction]:
    fam = OddFamily(n)
    rng = rng_from(seed)
    out: list[Fraction] = []
    for start in range(0, trials, 2048):
        t = min(2048, trials - start)
        out.extend(fam.densities(rng.random((t, len(fam))) < rng.random((t, 1))))
    return out


@dataclass(frozen=True)
class ThresholdHypergraph:
    """All ``k``-subsets meeting a fixed block ``B = {0..b-1}`` in at least ``t`` vertices.

    Degrees and density are exact hypergeometric sums, so ``n`` can be far
    beyond explicit enumeration.
    """

    n: int
    k: int
    b: int
    t: int

    def _count(self, b: int, rest: int, k: int, t: int) -> int:
        return sum(math.comb(b, i) * math.comb(rest, k - i) for i in range(max(t, 0), min(b, k) + 1))

    @property
    def num_edges(self) -> int:
        return self._count(self.b, self.n - self.b, self.k, self.t)

    @property
    def density(self) -> Fraction:
        return Fraction(self.num_edges, math.comb(self.n, self.k))

    def degrees(self) -> np.ndarray:
        inside = self._count(self.b - 1, self.n - self.b, self.k - 1, self.t - 1)
        outside = self._count(self.b, self.n - self.b - 1, self.k - 1, self.t)
        return np.array([inside] * self.b + [outside] * (self.n - self.b), dtype=object)


@dataclass(frozen=True)
class TailEstimate:
    tail: float
    alpha: float
    sigma: float
    trials: int
    threshold: float

    @property
    def ok(self) -> bool:
        return self.tail <= self.alpha + 3 * self.sigma

    def to_dict(self) -> dict:
        return {
            "tail": self.tail,
            "alpha": self.alpha,
            "sigma": self.sigma,
            "trials": self.trials,
            "threshold": self.threshold,
            "ok": self.ok,
        }


def degree_threshold(theta: float, alpha: float, beta: float, n: int) -> float:
    return min(delta_concentration(alpha, beta, n), (1 - theta) * (1 - alpha))


def degree_concentration(G, alpha: float, trials: int, seed=None) -> TailEstimate:
    """Empirical ``Pr[|theta - tau| >= min(Delta, (1-theta)(1-alpha))]`` over uniform vertex draws.

    ``G`` is any object with ``n``, ``k``, an exact ``density`` and
    ``degrees()``, such as :class:`Hypergraph` or :class:`ThresholdHypergraph`.
    """
    n, k = G.n, G.k
    if not 0 < k < n:
        raise ValueError("need 0 < k < n")
    theta = G.density
    thr = degree_threshold(float(theta), alpha, k / n, n)
    denom = math.comb(n - 1, k - 1)
    gaps = np.array([float(abs(theta - Fraction(int(d), denom))) for d in G.degrees()])
    # a vertex whose degree matches the density exactly never deviates, even when thr is 0
    bad = (gaps >= thr) & (gaps > 0)
    rng = rng_from(seed)
    draws = rng.integers(0, n, size=trials)
    tail = float(bad[draws].mean()) if trials else 0.0
    sigma = math.sqrt(alpha * (1 - alpha) / trials) if trials else 0.0
    return TailEstimate(tail, alpha, sigma, trials, thr)


def degree_concentration_random(n: int, k: int, p: float, alpha: float, trials: int, seed=None) -> TailEstimate:
    """Tail estimate for fresh random hypergraphs, one vertex per draw.

    Each ``k``-subset is an edge with probability ``p``. For a fixed vertex
    its degree and the number of remaining edges are independent binomials,
    which samples ``(theta, tau)`` exactly without listing ``C(n, k)`` subsets.
    """
    rng = rng_from(seed)
    total, through = math.comb(n, k), math.comb(n - 1, k - 1)
    if total >= 2**63:
        raise ValueError("C(n, k) exceeds the sampler's integer range")
    deg = rng.binomial(through, p, size=trials)
    rest = rng.binomial(total - through, p, size=trials)
    bad = 0
    thr_min = math.inf
    for d, r in zip(deg.tolist(), rest.tolist()):
        theta = Fraction(d + r, total)
        thr = degree_threshold(float(theta), alpha, k / n, n)
        thr_min = min(thr_min, thr)
        gap = float(abs(theta - Fraction(d, through)))
        bad += gap >= thr and gap > 0
    sigma = math.sqrt(alpha * (1 - alpha) / trials) if trials else 0.0
    return TailEstimate(bad / trials if trials else 0.0, alpha, sigma, trials, thr_min)
