"""Stage-by-stage replay of the support-hypergraph argument on a small state.

Qubits ``x_1, x_2, ...`` are picked at random. Stage 1 splits the remaining
qubits in half in every way and records, per split, a side whose reduced
support holds a vector that is product between ``x_1`` and that side. Each
later stage keeps the edges through the newly picked qubit, splits them in
half again and repeats the test on the witness states found so far. The
trace records every hypergraph, its density and the edge-size bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .hypergraph import Hypergraph
from .linalg import rng_from
from .subspace import FOUND, INDETERMINATE, contains_product, ordered_support

MAX_N = 9
MAX_C = 4

COMPLETE = "complete"
MISSED = "missed"
EXHAUSTED = "exhausted"
ABORTED = "aborted"


class WalkthroughAborted(RuntimeError):
    pass


@dataclass
class Stage:
    index: int
    picked: int
    parity: str
    edge_size: int
    parent_size: int | None
    graph: Hypergraph
    density: Fraction
    min_edge_fraction: Fraction | None
    size_bounds_ok: bool

    @property
    def density_ok(self) -> bool:
        if self.index == 1:
            return self.density >= Fraction(1, 2)
        return self.min_edge_fraction is None or self.min_edge_fraction >= Fraction(1, 2)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "picked": self.picked,
            "parity": self.parity,
            "edge_size": self.edge_size,
            "parent_size": self.parent_size,
            "edges": [list(e) for e in sorted(self.graph.edges)],
            "density": float(self.density),
            "density_exact": f"{self.density.numerator}/{self.density.denominator}",
            "min_edge_fraction": None if self.min_edge_fraction is None else float(self.min_edge_fraction),
            "min_edge_fraction_exact": None if self.min_edge_fraction is None else str(self.min_edge_fraction),
            "density_ok": self.density_ok,
            "size_bounds_ok": self.size_bounds_ok,
        }

    @classmethod
    def from_dict(cls, d: dict, n: int) -> "Stage":
        mfe = d["min_edge_fraction"]
        return cls(
            d["index"],
            d["picked"],
            d["parity"],
            d["edge_size"],
            d["parent_size"],
            Hypergraph(n, d["edge_size"], frozenset(tuple(e) for e in d["edges"])),
            Fraction(d["density_exact"]),
            None if mfe is None else Fraction(d["min_edge_fraction_exact"]),
            d["size_bounds_ok"],
        )


@dataclass
class WalkthroughTrace:
    n: int
    c: int
    picked: list[int] = field(default_factory=list)
    stages: list[Stage] = field(default_factory=list)
    final_subset: list[int] | None = None
    final_verdict: str | None = None
    status: str = ""
    reason: str = ""
    checks: int = 0
    ties: str = "both"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "picked": self.picked,
            "stages": [s.to_dict() for s in self.stages],
            "final_subset": self.final_subset,
            "final_verdict": self.final_verdict,
            "status": self.status,
            "reason": self.reason,
            "checks": self.checks,
            "ties": self.ties,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WalkthroughTrace":
        return cls(
            d["n"],
            d["c"],
            list(d["picked"]),
            [Stage.from_dict(s, d["n"]) for s in d["stages"]],
            d["final_subset"],
            d["final_verdict"],
            d["status"],
            d["reason"],
            d["checks"],
            d["ties"],
        )


def size_bounds(n: int, i: int, k_i: int, l_next: int | None) -> bool:
    """``n/2^i > k_i >= n/2^i + 1/2^(i-1) - 2`` and the matching bounds on ``l_(i+1)``."""
    a = Fraction(n, 2**i)
    ok = a > k_i >= a + Fraction(1, 2 ** (i - 1)) - 2
    if l_next is not None:
        ok = ok and a - 1 > l_next >= a + Fraction(1, 2 ** (i - 1)) - 3
    return bool(ok)


def _top_vector(psi: np.ndarray, m: int, keep_pos: list[int]) -> np.ndarray:
    """Leading vector of the support of ``psi`` reduced to the positions ``keep_pos``."""
    return ordered_support(psi, m, keep_pos).basis[:, 0]


class _Tester:
    def __init__(self, trace: WalkthroughTrace, seed):
        self.trace = trace
        self.rng = rng_from(seed)

    def branch(self, psi: np.ndarray, m: int, x_pos: int, S_pos: list[int]):
        """Product across ``x`` versus ``S`` inside the reduced support; ``None`` when absent."""
        self.trace.checks += 1
        L = ordered_support(psi, m, [x_pos] + S_pos)
        res = contains_product(L, (2, 2 ** len(S_pos)), seed=int(self.rng.integers(2**32)))
        if res.status == INDETERMINATE:
            raise WalkthroughAborted(f"indeterminate containment test (residual {res.residual:.3g})")
        return res.state[1] if res.status == FOUND else None


def _split(tester: _Tester, psi, qubits: list[int], x: int, edge_size: int, odd: bool, edges: dict, ties: str):
    """Apply the dichotomy to ``psi`` over ``qubits`` (which include ``x``) and add edges.

    Even case: each unordered half-split adds its passing sides. Odd case:
    each subset ``X`` of size ``edge_size`` adds ``X`` if it passes and every
    ``edge_size``-subset of the complement if that side passes. With
    ``ties="first"`` the second side is only tried when the first fails.
    """
    m = len(qubits)
    pos = {q: i for i, q in enumerate(qubits)}
    rest = [q for q in qubits if q != x]
    if odd:
        splits = itertools.combinations(rest, edge_size)
    else:
        splits = (X for X in itertools.combinations(rest, edge_size) if rest[0] in X)
    for X in splits:
        Y = [q for q in rest if q not in X]
        w1 = tester.branch(psi, m, pos[x], [pos[q] for q in X])
        if w1 is not None:
            edges.setdefault(tuple(X), w1)
            if ties == "first":
                continue
        w2 = tester.branch(psi, m, pos[x], [pos[q] for q in Y])
        if w1 is None and w2 is None:
            raise WalkthroughAborted(f"neither side of the split {list(X)} | {Y} passed")
        if w2 is None:
            continue
        if not odd:
            edges.setdefault(tuple(Y), w2)
            continue
        for Z in itertools.combinations(Y, edge_size):
            if tuple(Z) not in edges:
                edges[tuple(Z)] = _top_vector(w2, len(Y), [Y.index(q) for q in Z])


def walkthrough(psi, c: int, seed=None, *, n: int | None = None, ties: str = "both") -> WalkthroughTrace:
    """Replay the stages for ``psi`` and the subset size ``c``.

    ``ties="both"`` adds every side that passes; ``"first"`` adds only the
    first passing side of each split, which gives the smallest hypergraphs.
    """
    if ties not in ("both", "first"):
        raise ValueError("ties must be 'both' or 'first'")
    psi = np.asarray(psi, dtype=complex).ravel()
    n = int(round(math.log2(psi.size))) if n is None else n
    if 2**n != psi.size:
        raise ValueError("state length is not a power of two")
    if n > MAX_N or c > MAX_C or c < 2:
        raise ValueError(f"walkthrough needs n <= {MAX_N} and 2 <= c <= {MAX_C}")
    psi = psi / np.linalg.norm(psi)
    trace = WalkthroughTrace(n, c, ties=ties)
    tester = _Tester(trace, seed)
    rng = tester.rng
    remaining = list(range(n))

    def pick() -> int:
        q = remaining.pop(int(rng.integers(len(remaining))))
        trace.picked.append(q)
        return q

    try:
        x = pick()
        odd = (n - 1) % 2 == 1
        k = (n - 1) // 2 if not odd else n // 2 - 1
        if k < 1:
            trace.status, trace.reason = EXHAUSTED, "edge size dropped to zero"
            return trace
        witnesses: dict = {}
        _split(tester, psi, list(range(n)), x, k, odd, witnesses, ties)
        G = Hypergraph(n, k, frozenset(witnesses))
        dens = Fraction(len(G), math.comb(len(remaining), k))
        trace.stages.append(
            Stage(1, x, "odd" if odd else "even", k, None, G, dens, None, size_bounds(n, 1, k, None))
        )
        for i in range(2, c):
            x = pick()
            l = k - 1
            parents = {E: w for E, w in witnesses.items() if x in E}
            if l < 1 or not parents:
                trace.status = EXHAUSTED if l < 1 else MISSED
                trace.reason = "edge size dropped to zero" if l < 1 else f"qubit {x} lies in no edge"
                return trace
            odd = l % 2 == 1
            k = l // 2 if not odd else (l - 1) // 2
            if k < 1:
                trace.status, trace.reason = EXHAUSTED, "edge size dropped to zero"
                return trace
            new: dict = {}
            for E, w in parents.items():
                _split(tester, w, list(E), x, k, odd, new, ties)
            witnesses = new
            G = Hypergraph(n, k, frozenset(new))
            dens = Fraction(len(G), math.comb(len(remaining), k))
            worst = min(
                Fraction(sum(1 for X in itertools.combinations([q for q in E if q != x], k) if X in new),
                         math.comb(l, k))
                for E in parents
            )
            prev = trace.stages[-1]
            prev_ok = size_bounds(n, i - 1, prev.edge_size, l)
            trace.stages[-1].size_bounds_ok = prev_ok
            trace.stages.append(
                Stage(i, x, "odd" if odd else "even", k, l, G, dens, worst, size_bounds(n, i, k, None))
            )
        x_last = pick()
        C = sorted(trace.picked)
        trace.final_subset = C
        L = ordered_support(psi, n, C)
        res = contains_product(L, seed=int(rng.integers(2**32)))
        trace.final_verdict = res.status
        hit = any(x_last in E for E in witnesses)
        if hit:
            trace.status = COMPLETE
        else:
            trace.status, trace.reason = MISSED, f"qubit {x_last} lies in no edge of the last stage"
    except WalkthroughAborted as err:
        trace.status, trace.reason = ABORTED, str(err)
    return trace
