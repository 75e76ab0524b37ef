"""Seeded verification sweeps shared by the CLI and the acceptance tests.

Each suite returns a list of :class:`Row` values, one per parameter cell,
with the number of trials run and the number that violated the checked
property. A suite passes when every row has zero failures.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import assignment as asg
from . import bounds, hypergraph as hg
from .instance import gen_far, gen_random, gen_satisfiable, restrict
from .linalg import Subspace, haar_state, random_subspace, rng_from, tensor
from .solver import INDETERMINATE, SAT, check_product
from .subspace import (
    FINITE,
    P1,
    ces_complement_check,
    prodcount_grid,
    prodcount_points,
    prop_c2_census,
    random_ces,
    suppsprod_dichotomy,
)
from .tester import EPS_FAR, SATISFIABLE, TesterConfig, run_tester

CSV_HEADER = ["suite", "check", "params", "trials", "failures", "detail", "seconds"]


@dataclass
class Row:
    suite: str
    check: str
    params: str
    trials: int
    failures: int
    detail: str = ""
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_dict(self, timings: bool = False) -> dict:
        return {
            "suite": self.suite,
            "check": self.check,
            "params": self.params,
            "trials": self.trials,
            "failures": self.failures,
            "detail": self.detail,
            "seconds": round(self.seconds, 3) if timings else "",
        }


def _params(**kw) -> str:
    return ";".join(f"{k}={v}" for k, v in kw.items())


def _scaled(count: int, scale: float) -> int:
    return max(1, int(round(count * scale)))


class _Clock:
    def __init__(self):
        self.t0 = time.perf_counter()

    def lap(self) -> float:
        t, self.t0 = self.t0, time.perf_counter()
        return self.t0 - t


def block_product_state(n: int, rng) -> np.ndarray:
    """Tensor product of Haar states on random blocks of at most three qubits, qubits shuffled."""
    order = rng.permutation(n)
    blocks, i = [], 0
    while i < n:
        b = int(rng.integers(1, min(3, n - i) + 1))
        blocks.append(order[i : i + b])
        i += b
    psi = tensor(*(haar_state(len(b), rng) for b in blocks)).reshape((2,) * n)
    placed = np.concatenate(blocks)
    return np.transpose(psi, np.argsort(placed)).ravel()


# ---------------------------------------------------------------------------
# subspace analysis


def c2_suite(seed=0, *, states: int = 500, ns=range(4, 9), scale: float = 1.0) -> list[Row]:
    """At most one partner qubit whose pair support holds no product state."""
    rng = rng_from(seed)
    clock = _Clock()
    trials = failures = indet = worst = 0
    for _ in range(_scaled(states, scale)):
        n = int(rng.choice(list(ns)))
        psi = haar_state(n, rng)
        x1 = int(rng.integers(n))
        cen = prop_c2_census(psi, n, x1, seed=int(rng.integers(2**32)))
        trials += 1
        indet += len(cen.indeterminate)
        worst = max(worst, len(cen.bad))
        # an undecided partner could be a second bad one
        failures += len(cen.bad) + len(cen.indeterminate) > 1
    detail = f"max_bad={worst};indeterminate={indet}"
    return [Row("subspace", "pair-census", _params(ns=f"{min(ns)}..{max(ns)}"), trials, failures, detail, clock.lap())]


def dichotomy_suite(seed=0, *, trials: int = 200, max_n: int = 8, scale: float = 1.0) -> list[Row]:
    """One side of every split ``{x} | S1 | S2`` holds a product across ``x``."""
    rng = rng_from(seed)
    clock = _Clock()
    count = failures = undecided = 0
    for t in range(_scaled(trials, scale)):
        n = int(rng.integers(3, max_n + 1))
        psi = haar_state(n, rng) if t % 2 == 0 else block_product_state(n, rng)
        x = int(rng.integers(n))
        others = [q for q in range(n) if q != x]
        rng.shuffle(others)
        cut = int(rng.integers(0, n))
        d = suppsprod_dichotomy(psi, n, x, others[:cut], others[cut:], seed=int(rng.integers(2**32)))
        count += 1
        if not d.holds:
            failures += 1
            undecided += not d.determinate
    detail = f"undecided_failures={undecided}"
    return [Row("subspace", "support-dichotomy", _params(max_n=max_n), count, failures, detail, clock.lap())]


def ces_suite(seed=0, *, per_m: int = 200, ms=(2, 3, 4, 5), scale: float = 1.0) -> list[Row]:
    """The complement of a completely entangled subspace holds a product state."""
    rng = rng_from(seed)
    rows = []
    clock = _Clock()
    for m in ms:
        failures = 0
        count = _scaled(per_m, scale)
        for _ in range(count):
            L, _ = random_ces(m, rng)
            res = ces_complement_check(L, m, seed=int(rng.integers(2**32)))
            failures += not res.found
        rows.append(Row("subspace", "ces-complement", _params(m=m), count, failures, "", clock.lap()))
    return rows


def _points_match(exact, grid, tol: float) -> bool:
    if len(exact) != len(grid):
        return False
    return all(any(p.distance(g) < tol for g in grid) for p in exact)


def prodcount_suite(
    seed=0, *, m2: int = 500, m3: int = 200, resolution: float = 1e-3, scale: float = 1.0
) -> list[Row]:
    """Projection-count bounds for two and three qubits; three qubits cross-checked on a Bloch grid."""
    rng = rng_from(seed)
    rows = []
    clock = _Clock()
    count = _scaled(m2, scale)
    failures, largest = 0, 0
    for _ in range(count):
        L = random_subspace(4, int(rng.integers(1, 4)), rng)
        r = prodcount_points(L, seed=int(rng.integers(2**32)))
        ok = r.kind == P1 or (r.kind == FINITE and len(r.points) <= 2)
        failures += not ok
        if r.kind == FINITE:
            largest = max(largest, len(r.points))
    rows.append(Row("subspace", "prodcount-bound", _params(m=2), count, failures, f"max_points={largest}", clock.lap()))

    tight = Subspace.span(np.array([[1, 0, 0, 0], [0, 0, 0, 1]], dtype=complex).T)
    r = prodcount_points(tight)
    ok = r.kind == FINITE and len(r.points) == 2
    rows.append(Row("subspace", "prodcount-tight", "span=00,11", 1, int(not ok), f"points={len(r.points)}", clock.lap()))

    # dimension 5 is the generic finite case in C^8; 6 and up give all of P^1
    dims = [2, 3, 4, 5, 5, 5, 6, 7]
    count = _scaled(m3, scale)
    failures = disagreements = largest = 0
    for _ in range(count):
        L = random_subspace(8, int(rng.choice(dims)), rng)
        s = int(rng.integers(2**32))
        r = prodcount_points(L, seed=s)
        g = prodcount_grid(L, resolution=resolution, seed=s)
        bound_ok = r.kind == P1 or (r.kind == FINITE and len(r.points) <= 6)
        if r.kind == P1:
            agree = g.everywhere
        elif r.kind == FINITE:
            agree = not g.everywhere and _points_match(r.points, g.points, 10 * resolution)
        else:
            agree = False
        failures += not (bound_ok and agree)
        disagreements += not agree
        if r.kind == FINITE:
            largest = max(largest, len(r.points))
    detail = f"max_points={largest};grid_disagreements={disagreements}"
    rows.append(Row("subspace", "prodcount-bound", _params(m=3, resolution=resolution), count, failures, detail, clock.lap()))
    return rows


# ---------------------------------------------------------------------------
# hypergraph sweeps


def appendix_suite(seed=0, *, max_n: int = 10, scale: float = 1.0) -> list[Row]:
    rng = rng_from(seed)
    rows: list[Row] = []
    clock = _Clock()

    cells: dict = {}
    for theta, x, c, res in hg.binom_scaling_grid():
        cell = cells.setdefault(c, [0, []])
        cell[0] += 1
        if not res.holds:
            cell[1].append(f"({float(theta):g},{x})")
    seconds = clock.lap()
    for c, (trials, bad) in sorted(cells.items()):
        detail = "fails_at=" + " ".join(bad[:8]) + (" ..." if len(bad) > 8 else "") if bad else ""
        rows.append(Row("appendix", "binomial-scaling", _params(c=c, theta_step=0.05, x_max=40), trials, len(bad), detail, seconds / len(cells)))

    per_cell = _scaled(50, scale)
    for n in range(2, max_n + 1):
        for l in range(1, min(5, n) + 1):
            trials = failures = 0
            margin = math.inf
            for _ in range(per_cell):
                G = hg.Hypergraph.random(n, l, float(rng.random()), seed=int(rng.integers(2**32)))
                for k in range(1, l + 1):
                    rep = hg.check_shadow_density(G, k)
                    trials += 1
                    failures += not rep.satisfied
                    margin = min(margin, float(rep.theta) - rep.bound)
            rows.append(Row("appendix", "shadow-density", _params(n=n, l=l), trials, failures, f"min_margin={margin:.6g}", clock.lap()))

    theta, _ = hg.odd_exhaustive(5)
    rows.append(Row("appendix", "odd-construction", _params(n=5, mode="exhaustive"), 2 ** 10, int(theta < Fraction(1, 2)), f"min_theta={theta}", clock.lap()))
    for n in (7, 9):
        count = _scaled(10_000, scale)
        vals = hg.odd_random(n, count, seed=int(rng.integers(2**32)))
        low = min(vals)
        bad = sum(v < Fraction(1, 2) for v in vals)
        rows.append(Row("appendix", "odd-construction", _params(n=n, mode="random"), count, bad, f"min_theta={low}", clock.lap()))

    for n in (40, 60):
        for alpha in (0.2, 0.3, 0.5):
            count = _scaled(10_000, scale)
            est = hg.degree_concentration_random(n, n // 2, 0.5, alpha, count, seed=int(rng.integers(2**32)))
            detail = f"tail={est.tail:.6g};limit={est.alpha + 3 * est.sigma:.6g}"
            rows.append(Row("appendix", "degree-concentration", _params(n=n, k=n // 2, p=0.5, alpha=alpha), count, int(not est.ok), detail, clock.lap()))
    return rows


# ---------------------------------------------------------------------------
# closed-form constants

PSI_REFERENCE = (34.0, 390170.1694962831889, 192.0)


def bounds_suite(seed=0, **_) -> list[Row]:
    clock = _Clock()
    rows = []
    terms = bounds.psi_terms(0.5, 3).terms
    rel = max(abs(a - b) / abs(b) for a, b in zip(terms, PSI_REFERENCE))
    rows.append(Row("bounds", "psi-terms", _params(p=0.5, c=3), 3, int(rel > 1e-12), f"max_rel_err={rel:.3g}", clock.lap()))
    g = bounds.gamma(3, Fraction(1, 2))
    rows.append(Row("bounds", "chain-length", _params(k=3, eps=0.5), 1, int(g != 160), f"gamma={g}", clock.lap()))
    step = bounds.phi_step(bounds.BigCount.of(1)).value
    rows.append(Row("bounds", "phi-step", "phi=1", 1, int(step != 14), f"next={step}", clock.lap()))
    m = bounds.chernoff_samples(0.75, 0.01)
    rows.append(Row("bounds", "hoeffding-samples", _params(p_single=0.75, delta_fail=0.01), 1, int(m != 37), f"m={m}", clock.lap()))
    return rows


# ---------------------------------------------------------------------------
# solver agreement

SOLVER_FAMILIES = ("random", "product-basis", "all-identity", "dense-local-block")


def _agreement_instance(family: str, k: int, c: int, rng):
    n = 6
    s = int(rng.integers(2**32))
    if family == "random":
        inst = gen_random(n, k, s, density=float(rng.uniform(0.2, 0.8)))
    elif family == "product-basis":
        w = np.zeros((n, 2))
        w[np.arange(n), rng.integers(0, 2, n)] = 1
        inst, _ = gen_satisfiable(n, k, s, witness=w)
    else:
        inst, _ = gen_far(n, k, s, family)
    subset = sorted(int(q) for q in rng.choice(n, size=c, replace=False))
    return restrict(inst, subset)


def solver_suite(
    seed=0, *, count: int = 100, max_attempts: int = 400, time_limit: float = 10.0, scale: float = 1.0
) -> list[Row]:
    """Both backends on random restrictions until ``count`` pairs are determinate.

    The exact route gets ``time_limit`` seconds per instance; running out
    makes that pair indeterminate and it is skipped.
    """
    rng = rng_from(seed)
    clock = _Clock()
    target = _scaled(count, scale)
    det = disagree = attempts = sat = 0
    while det < target and attempts < max_attempts:
        fam = SOLVER_FAMILIES[attempts % len(SOLVER_FAMILIES)]
        attempts += 1
        k = int(rng.integers(2, 4))
        c = int(rng.integers(k, 5))
        local = _agreement_instance(fam, k, c, rng)
        v = check_product(local, "both", seed=int(rng.integers(2**32)), time_limit=time_limit)
        if v.details["exact"] == INDETERMINATE or v.details["numeric"] == INDETERMINATE:
            continue
        det += 1
        sat += v.details["exact"] == SAT
        disagree += v.details["exact"] != v.details["numeric"]
    # running out of attempts before reaching the target counts as failing
    failures = disagree + max(0, target - det)
    detail = f"determinate={det};attempts={attempts};sat={sat};disagreements={disagree}"
    return [Row("solver", "backend-agreement", _params(k="2..3", c="k..4"), det, failures, detail, clock.lap())]


# ---------------------------------------------------------------------------
# assignment calculus


def assignment_suite(seed=0, *, count: int = 50, max_n: int = 12, scale: float = 1.0) -> list[Row]:
    """Bad-qubit census on certified far instances and heavy-step decreases along chains."""
    rng = rng_from(seed)
    clock = _Clock()
    k = 2
    trials = failures = 0
    chains = steps = chain_fail = 0
    low = math.inf
    for t in range(_scaled(count, scale)):
        n = int(rng.integers(6, min(max_n, asg.MAX_N) + 1))
        fam = "all-identity" if t % 2 == 0 else "dense-local-block"
        inst, cert = gen_far(n, k, int(rng.integers(2**32)), fam)
        eps = cert.eps
        limit = eps * n / 5
        assigns = [asg.ProductAssignment.empty()]
        # one qubit alone meets no 2-local constraint, so any single-qubit state is a local solution
        q = int(rng.integers(n))
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assigns.append(asg.ProductAssignment.build(inst, {q: v / np.linalg.norm(v)}))
        for a in assigns:
            census = asg.bad_census(inst, a, eps)
            trials += 1
            failures += not census > limit
            low = min(low, census - float(limit))
        rec = asg.grow_chain(inst, eps, min(bounds.chain_length(k, eps), n), seed=int(rng.integers(2**32)))
        chains += 1
        steps += len(rec)
        chain_fail += len(rec.decrease_violations())
    rows = [
        Row("assignment", "bad-census", _params(k=k, max_n=max_n), trials, failures, f"min_excess={low:.6g}", 0.0),
        Row("assignment", "chain-decrease", _params(k=k, max_n=max_n), steps, chain_fail, f"chains={chains}", 0.0),
    ]
    sec = clock.lap()
    for r in rows:
        r.seconds = sec / 2
    return rows


# ---------------------------------------------------------------------------
# end-to-end tester


def tester_suite(seed=0, *, runs: int = 50, n: int = 60, k: int = 3, c: int = 4, m: int = 37, jobs: int = 1, scale: float = 1.0) -> list[Row]:
    """Seeded tester runs on planted-product and all-identity instances."""
    root = np.random.SeedSequence(seed)
    clock = _Clock()
    count = _scaled(runs, scale)
    sat_ss, far_ss = root.spawn(2)
    hits = confident = 0
    for ss in sat_ss.spawn(count):
        inst_seed, test_seed = (int(v) for v in ss.generate_state(2))
        inst, _ = gen_satisfiable(n, k, inst_seed, mode="product")
        rep = run_tester(inst, TesterConfig(c=c, m=m, seed=test_seed), jobs=jobs)
        good = rep.majority == SATISFIABLE and rep.confidence >= 0.99
        hits += good
        confident += rep.confidence >= 0.99
    # at most 10% of the planted runs may miss
    allowed = count - math.ceil(0.9 * count)
    rows = [
        Row("tester", "planted-product", _params(n=n, k=k, c=c, m=m), count, max(0, count - hits - allowed), f"satisfiable={hits}", clock.lap())
    ]
    far_hits = 0
    for ss in far_ss.spawn(count):
        inst_seed, test_seed = (int(v) for v in ss.generate_state(2))
        inst, _ = gen_far(n, k, inst_seed, "all-identity")
        rep = run_tester(inst, TesterConfig(c=c, m=m, seed=test_seed), jobs=jobs)
        far_hits += rep.majority == EPS_FAR
    rows.append(Row("tester", "all-identity", _params(n=n, k=k, c=c, m=m), count, count - far_hits, f"eps_far={far_hits}", clock.lap()))
    return rows


SUITES = {
    "c2": c2_suite,
    "dichotomy": dichotomy_suite,
    "ces": ces_suite,
    "prodcount": prodcount_suite,
    "appendix": appendix_suite,
    "bounds": bounds_suite,
    "solver": solver_suite,
    "assignment": assignment_suite,
    "tester": tester_suite,
}

GROUPS = {
    "subspace": ("c2", "dichotomy", "ces", "prodcount"),
    "all": tuple(SUITES),
}


def suite_names(name: str) -> tuple[str, ...]:
    if name in SUITES:
        return (name,)
    if name in GROUPS:
        return GROUPS[name]
    raise ValueError(f"unknown suite {name!r}")


def run_suite(name: str, seed=0, *, max_n: int | None = None, scale: float = 1.0, jobs: int = 1) -> list[Row]:
    """Run one suite or group; ``max_n`` caps qubit counts where a suite has one."""
    rows: list[Row] = []
    for sub in suite_names(name):
        fn = SUITES[sub]
        kw: dict = {"scale": scale}
        if max_n is not None and sub in ("appendix", "dichotomy", "assignment"):
            kw["max_n"] = max_n
        if sub == "tester":
            kw["jobs"] = jobs
        rows.extend(fn(seed, **kw))
    return rows
