"""Product states inside subspaces.

The central routine is :func:`contains_product`, which decides whether a
subspace ``L`` of ``C^{d_0} x ... x C^{d_{m-1}}`` contains a product vector.
It combines exact shortcuts (Schmidt test for one-dimensional ``L``,
dimension counting and a matrix-pencil solve for two-factor spaces) with a
batched alternating minimisation of ``||(I - P_L) phi||^2`` over product
``phi``.

Verdicts are three-valued. A minimum residual below ``TAU_SAT`` means a
product state was found, above ``TAU_UNSAT`` means none exists (to numerical
confidence), and anything in between is reported as indeterminate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.spatial import cKDTree

from .linalg import Subspace, random_subspace, rng_from, state_matrix

TAU_SAT = 1e-9
TAU_UNSAT = 1e-6
RESTARTS = 50
ORACLE_RESTARTS = 200
MAX_SWEEPS = 400

FOUND = "found"
ABSENT = "absent"
INDETERMINATE = "indeterminate"

# elements of the batched contraction tensor processed at once
_CHUNK_ELEMS = 4_000_000


@dataclass
class ProductSearchResult:
    """Outcome of a product-state search.

    ``state`` holds the best product found (one unit vector per factor) even
    when the verdict is not ``found``; ``residual`` is its squared distance
    to the subspace.
    """

    status: str
    state: list | None
    residual: float
    method: str = "numeric"

    @property
    def found(self) -> bool:
        return self.status == FOUND

    @property
    def determinate(self) -> bool:
        return self.status != INDETERMINATE

    def vector(self) -> np.ndarray:
        if self.state is None:
            raise ValueError("no candidate state")
        out = np.ones(1, dtype=complex)
        for f in self.state:
            out = np.kron(out, f)
        return out


def classify_residual(res: float, tau_sat: float = TAU_SAT, tau_unsat: float = TAU_UNSAT) -> str:
    if res < tau_sat:
        return FOUND
    if res > tau_unsat:
        return ABSENT
    return INDETERMINATE


def _product_vector(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = np.ones(1, dtype=complex)
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=complex).ravel())
    return out


def subspace_residual(L: Subspace, factors: Sequence[np.ndarray]) -> float:
    """Squared distance of a normalised product vector to ``L``."""
    v = _product_vector(factors)
    v = v / np.linalg.norm(v)
    return L.distance(v) ** 2


def _default_dims(L: Subspace) -> tuple[int, ...]:
    return (2,) * L.n_qubits


# ---------------------------------------------------------------------------
# batched alternating optimisation


def alternating_search(
    T: np.ndarray,
    dims: Sequence[int],
    maximize: bool,
    restarts: int,
    rng,
    *,
    max_sweeps: int = MAX_SWEEPS,
    stop_below: float = TAU_SAT * 1e-3,
    init: np.ndarray | None = None,
) -> tuple[list[np.ndarray], float]:
    """Optimise ``||T phi||^2`` over unit product vectors ``phi``.

    ``T`` has shape ``(r, prod(dims))``. When ``maximize`` the rows of ``T``
    are assumed orthonormal and the reported value is ``1 - ||T phi||^2``;
    otherwise it is ``||T phi||^2`` itself. Each step fixes all factors but
    one and jumps to the extreme eigenvector of the induced Hermitian form,
    so the value is monotone along every restart. Returns the best factors and
    their value.
    """
    rng = rng_from(rng)
    dims = tuple(int(d) for d in dims)
    r = T.shape[0]
    D = int(np.prod(dims))
    T = np.ascontiguousarray(T).reshape((r,) + dims)
    chunk = max(1, _CHUNK_ELEMS // max(1, r * D))
    best_val, best_f = np.inf, None
    done = 0
    while done < restarts:
        R = min(chunk, restarts - done)
        if init is not None and done == 0:
            f0 = [np.asarray(init[j], dtype=complex).reshape(1, -1) for j in range(len(dims))]
            fr = [_rand_factors(rng, R - 1, d) for d in dims] if R > 1 else None
            factors = [np.vstack([f0[j], fr[j]]) if fr else f0[j] for j in range(len(dims))]
        else:
            factors = [_rand_factors(rng, R, d) for d in dims]
        done += R
        vals, factors = _sweep_until_converged(T, dims, factors, maximize, max_sweeps, stop_below)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_f = [factors[j][i].copy() for j in range(len(dims))]
        if best_val < stop_below:
            break
    return best_f, best_val


def _rand_factors(rng, R: int, d: int) -> np.ndarray:
    f = rng.standard_normal((R, d)) + 1j * rng.standard_normal((R, d))
    return f / np.linalg.norm(f, axis=1, keepdims=True)


def _extreme_eig(q: np.ndarray, maximize: bool) -> tuple[np.ndarray, np.ndarray]:
    """Extreme eigenpair of each Hermitian matrix in a batch.

    Batched ``eigh`` carries a large per-matrix overhead, so the 2 x 2 case
    uses the closed form.
    """
    if q.shape[-1] != 2:
        w, v = np.linalg.eigh(q)
        pick = -1 if maximize else 0
        return w[:, pick].real, v[:, :, pick]
    a, d = q[:, 0, 0].real, q[:, 1, 1].real
    b = q[:, 0, 1]
    mid = (a + d) / 2
    rad = np.sqrt(((a - d) / 2) ** 2 + np.abs(b) ** 2)
    lam = mid + rad if maximize else mid - rad
    v1 = np.stack([b, lam - a], axis=1)
    v2 = np.stack([lam - d, np.conj(b)], axis=1)
    n1 = np.linalg.norm(v1, axis=1)
    n2 = np.linalg.norm(v2, axis=1)
    v = np.where((n1 >= n2)[:, None], v1, v2)
    nv = np.maximum(n1, n2)
    flat = nv < 1e-300
    v[flat] = np.array([1.0, 0.0])
    nv[flat] = 1.0
    return lam, v / nv[:, None]


def _one_sweep(T, dims, factors, maximize):
    m = len(dims)
    R = factors[0].shape[0]
    left = np.broadcast_to(T[None], (R,) + T.shape)
    val = None
    for i in range(m):
        a = left
        for j in range(m - 1, i, -1):
            nd = a.ndim
            a = np.einsum(a, list(range(nd)), factors[j], [0, nd - 1], list(range(nd - 1)))
        q = np.einsum("Rra,Rrb->Rab", a.conj(), a)
        val, factors[i] = _extreme_eig(q, maximize)
        nd = left.ndim
        left = np.einsum(left, list(range(nd)), factors[i], [0, 2], [0, 1] + list(range(3, nd)))
    val = np.clip(val, 0.0, None)
    return (np.clip(1.0 - val, 0.0, None) if maximize else val), factors


def _sweep_until_converged(T, dims, factors, maximize, max_sweeps, stop_below):
    R = factors[0].shape[0]
    vals = np.full(R, np.inf)
    active = np.arange(R)
    for _ in range(max_sweeps):
        sub = [f[active] for f in factors]
        new, sub = _one_sweep(T, dims, sub, maximize)
        for j in range(len(dims)):
            factors[j][active] = sub[j]
        prev = vals[active]
        vals[active] = new
        if np.min(vals) < stop_below:
            break
        moving = (prev - new) > 1e-9 * new + 1e-15
        active = active[moving]
        if active.size == 0:
            break
    return vals, factors


def _accurate(L: Subspace, factors: list[np.ndarray]) -> float:
    return subspace_residual(L, factors)


# ---------------------------------------------------------------------------
# exact shortcuts


def _schmidt_path(L: Subspace, dims, tau_sat, tau_unsat) -> ProductSearchResult | None:
    v = L.basis[:, 0]
    t = v.reshape(dims)
    worst = 0.0
    factors = []
    for i in range(len(dims)):
        mat = np.moveaxis(t, i, 0).reshape(dims[i], -1)
        u, s, _ = np.linalg.svd(mat, full_matrices=False)
        tail = float(np.sum(s[1:] ** 2) / np.sum(s**2))
        worst = max(worst, tail)
        factors.append(u[:, 0])
    if worst > tau_unsat:
        # the best product is at least this far away
        return ProductSearchResult(ABSENT, factors, worst, "schmidt")
    res = _accurate(L, factors)
    if worst < tau_sat and res < tau_sat:
        return ProductSearchResult(FOUND, factors, res, "schmidt")
    return None


def _pencil_path(L: Subspace, dims, tau_sat) -> ProductSearchResult | None:
    """Two factors ``C^{d0} x C^{D}``: search ``a x b`` with ``N(a) b = 0``."""
    d0, D = dims
    comp = L.complement()
    q = comp.dim
    Ct = comp.basis.conj().T.reshape(q, d0, D)
    if q < D:
        # N(e_0) is q x D with q < D, so it has a kernel
        _, _, vh = np.linalg.svd(Ct[:, 0, :])
        b = vh[-1].conj()
        a = np.zeros(d0, dtype=complex)
        a[0] = 1.0
        res = _accurate(L, [a, b])
        if res < tau_sat:
            return ProductSearchResult(FOUND, [a, b], res, "dimension-count")
        return None
    if q == D and d0 == 2:
        N0, N1 = Ct[:, 0, :], Ct[:, 1, :]
        try:
            w, vr = scipy.linalg.eig(N0, -N1)
        except (np.linalg.LinAlgError, ValueError):
            return None
        best = None
        for idx in range(len(w)):
            lam = w[idx]
            if np.isfinite(lam):
                a = np.array([1.0, lam], dtype=complex)
            else:
                a = np.array([0.0, 1.0], dtype=complex)
            a /= np.linalg.norm(a)
            b = vr[:, idx]
            if not np.all(np.isfinite(b)) or np.linalg.norm(b) == 0:
                continue
            b = b / np.linalg.norm(b)
            res = _accurate(L, [a, b])
            if best is None or res < best.residual:
                best = ProductSearchResult(FOUND, [a, b], res, "pencil")
        if best is not None and best.residual < tau_sat:
            return best
    return None


def contains_product(
    L: Subspace,
    dims: Sequence[int] | None = None,
    *,
    restarts: int = RESTARTS,
    seed=0,
    tau_sat: float = TAU_SAT,
    tau_unsat: float = TAU_UNSAT,
    exact: bool = True,
    max_sweeps: int = MAX_SWEEPS,
) -> ProductSearchResult:
    """Decide whether ``L`` contains a product vector over the factors ``dims``.

    ``dims`` defaults to qubits. Set ``exact=False`` to force the numerical
    search (used to cross-check the shortcuts).
    """
    dims = tuple(_default_dims(L) if dims is None else dims)
    if int(np.prod(dims)) != L.ambient_dim:
        raise ValueError(f"factor dims {dims} do not match ambient dimension {L.ambient_dim}")
    if len(dims) > 12:
        raise ValueError("at most 12 factors supported")
    if L.dim == 0:
        return ProductSearchResult(ABSENT, None, 1.0, "empty")
    if L.dim == L.ambient_dim or len(dims) == 1:
        f = [np.eye(d, dtype=complex)[0] for d in dims]
        if len(dims) == 1:
            f = [L.basis[:, 0]]
        return ProductSearchResult(FOUND, f, _accurate(L, f), "trivial")
    if exact:
        if L.dim == 1:
            hit = _schmidt_path(L, dims, tau_sat, tau_unsat)
            if hit is not None:
                return hit
        if len(dims) == 2:
            hit = _pencil_path(L, dims, tau_sat)
            if hit is not None:
                return hit
    comp_dim = L.ambient_dim - L.dim
    if L.dim <= comp_dim:
        T, maximize = L.basis.conj().T, True
    else:
        T, maximize = L.complement().basis.conj().T, False
    factors, _ = alternating_search(
        T, dims, maximize, restarts, seed, max_sweeps=max_sweeps, stop_below=tau_sat * 1e-3
    )
    res = _accurate(L, factors)
    return ProductSearchResult(classify_residual(res, tau_sat, tau_unsat), factors, res, "numeric")


# ---------------------------------------------------------------------------
# supports of reduced states


def ordered_support(psi, n: int, qubits: Sequence[int], tol: float = 1e-10) -> Subspace:
    """Support of the reduced density on ``qubits``, factors in the given order."""
    qubits = [int(q) for q in qubits]
    if len(set(qubits)) != len(qubits):
        raise ValueError("repeated qubit")
    psi = np.asarray(psi, dtype=complex).ravel()
    rest = [q for q in range(n) if q not in qubits]
    t = psi.reshape((2,) * n).transpose(qubits + rest).reshape(2 ** len(qubits), -1)
    u, s, _ = np.linalg.svd(t, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return Subspace.zero(2 ** len(qubits), tol)
    r = int(np.sum(s**2 > tol * s[0] ** 2))
    return Subspace(2 ** len(qubits), u[:, :r], tol)


def ces_complement_check(L: Subspace, m: int | None = None, **kw) -> ProductSearchResult:
    """Search the orthogonal complement of ``L`` in ``C^2 x C^m`` for a product vector."""
    m = L.ambient_dim // 2 if m is None else m
    if 2 * m != L.ambient_dim:
        raise ValueError("L must live in C^2 x C^m")
    return contains_product(L.complement(), (2, m), **kw)


def random_ces(m: int, rng=None, *, max_tries: int = 1000, **kw) -> tuple[Subspace, ProductSearchResult]:
    """Random subspace of ``C^2 x C^m`` verified to contain no product vector.

    The dimension is drawn uniformly from ``1..m-1``; draws whose search is not
    a determinate ``absent`` are discarded.
    """
    rng = rng_from(rng)
    if m < 2:
        raise ValueError("need m >= 2")
    for _ in range(max_tries):
        d = int(rng.integers(1, m))
        L = random_subspace(2 * m, d, rng)
        res = contains_product(L, (2, m), seed=int(rng.integers(2**32)), **kw)
        if res.status == ABSENT:
            return L, res
    raise RuntimeError("no completely entangled subspace found")


@dataclass
class Dichotomy:
    claim1: bool | None
    claim2: bool | None
    result1: ProductSearchResult
    result2: ProductSearchResult

    @property
    def holds(self) -> bool:
        return bool(self.claim1) or bool(self.claim2)

    @property
    def determinate(self) -> bool:
        return self.claim1 is not None and self.claim2 is not None


def _claim(res: ProductSearchResult) -> bool | None:
    return None if res.status == INDETERMINATE else res.found


def suppsprod_dichotomy(psi, n: int, x: int, S1: Iterable[int], S2: Iterable[int], **kw) -> Dichotomy:
    """Check both branches of the support dichotomy for a split ``{x} | S1 | S2``.

    Claim 1: the support of the state reduced to ``{x} u S1`` contains a
    vector that is product across ``x`` versus ``S1``. Claim 2 is the same
    with ``S2``.
    """
    S1 = sorted(int(q) for q in S1)
    S2 = sorted(int(q) for q in S2)
    x = int(x)
    if sorted([x] + S1 + S2) != list(range(n)):
        raise ValueError("x, S1 and S2 must partition the qubits")
    if n > 12:
        raise ValueError("n must be at most 12")

    def branch(S):
        L = ordered_support(psi, n, [x] + S)
        return contains_product(L, (2, 2 ** len(S)), **kw)

    r1, r2 = branch(S1), branch(S2)
    return Dichotomy(_claim(r1), _claim(r2), r1, r2)


@dataclass
class PairCensus:
    bad: list[int] = field(default_factory=list)
    indeterminate: list[int] = field(default_factory=list)


def prop_c2_census(psi, n: int, x1: int, **kw) -> PairCensus:
    """Partners ``x2`` whose two-qubit reduced support holds no product state."""
    if n > 12:
        raise ValueError("n must be at most 12")
    out = PairCensus()
    for x2 in range(n):
        if x2 == x1:
            continue
        L = ordered_support(psi, n, [x1, x2])
        res = contains_product(L, (2, 2), **kw)
        if res.status == ABSENT:
            out.bad.append(x2)
        elif res.status == INDETERMINATE:
            out.indeterminate.append(x2)
    return out


# ---------------------------------------------------------------------------
# first-factor projections of product states


class ProjectivePoint:
    """A point of the projective line, scaled so its larger coordinate is 1."""

    __slots__ = ("a", "b")
    __hash__ = None

    def __init__(self, a, b):
        a, b = complex(a), complex(b)
        if a == 0 and b == 0:
            raise ValueError("(0, 0) is not a projective point")
        if abs(a) >= abs(b):
            a, b = 1.0 + 0j, b / a
        else:
            a, b = a / b, 1.0 + 0j
        self.a, self.b = a, b

    @classmethod
    def from_vector(cls, v) -> "ProjectivePoint":
        v = np.asarray(v, dtype=complex).ravel()
        return cls(v[0], v[1])

    def vector(self) -> np.ndarray:
        v = np.array([self.a, self.b], dtype=complex)
        return v / np.linalg.norm(v)

    def distance(self, other: "ProjectivePoint") -> float:
        """Chordal distance ``|det[u, v]|`` of unit representatives."""
        u, v = self.vector(), other.vector()
        return float(abs(u[0] * v[1] - u[1] * v[0]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjectivePoint):
            return NotImplemented
        return self.distance(other) <= 1e-8

    def __repr__(self) -> str:
        return f"[{self.a:.6g} : {self.b:.6g}]"


P1 = "P1"
FINITE = "finite"


@dataclass
class ProdcountResult:
    """``kind`` is ``"P1"``, ``"finite"`` or ``"indeterminate"``.

    For the finite kind ``points`` lists each point once and ``lifts`` holds a
    product state in ``L`` over each point.
    """

    kind: str
    points: list = field(default_factory=list)
    lifts: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    eliminant: np.ndarray | None = None
    note: str = ""

    @property
    def size(self) -> float:
        return math.inf if self.kind == P1 else len(self.points)


_ZERO_POLY = 1e-10
_AMBIGUOUS_POLY = 1e-7


def _poly_coeffs(fn, degree: int) -> np.ndarray:
    """Coefficients (lowest first) of a polynomial of degree <= ``degree`` by DFT interpolation."""
    N = degree + 1
    ts = np.exp(2j * np.pi * np.arange(N) / N)
    vals = np.array([fn(t) for t in ts], dtype=complex)
    return np.fft.fft(vals) / N


def _roots(coeffs_low_first: np.ndarray) -> tuple[np.ndarray, bool]:
    """Finite roots and whether a root sits at infinity (degree drop)."""
    c = np.array(coeffs_low_first, dtype=complex)
    scale = np.max(np.abs(c))
    nz = np.nonzero(np.abs(c) > 1e-9 * scale)[0]
    top = int(nz[-1])
    at_inf = top < len(c) - 1
    if top == 0:
        return np.zeros(0, dtype=complex), at_inf
    return np.roots(c[: top + 1][::-1]), at_inf


def _pencil(L: Subspace, m: int):
    comp = L.complement()
    q = comp.dim
    Ct = comp.basis.conj().T.reshape(q, 2, 2 ** (m - 1))
    return q, Ct[:, 0, :], Ct[:, 1, :]


def _rank_generic(N0, N1, rng) -> int:
    t = complex(rng.standard_normal(), rng.standard_normal())
    s = np.linalg.svd(N0 + t * N1, compute_uv=False)
    if s.size == 0:
        return 0
    return int(np.sum(s > 1e-9 * max(1.0, s[0])))


def _two_qubit_product_in(K: np.ndarray) -> list[np.ndarray] | None:
    """Product vector ``b x c`` in the column span of ``K`` (subspace of C^2 x C^2)."""
    if K.shape[1] == 0:
        return None
    if K.shape[1] == 1:
        u, s, vh = np.linalg.svd(K[:, 0].reshape(2, 2))
        return [u[:, 0], vh[0]]
    # restrict to a 2-dim slice and solve det(x K0 + K1) = 0 as a pencil
    K0, K1 = K[:, 0].reshape(2, 2), K[:, 1].reshape(2, 2)
    c = _poly_coeffs(lambda t: np.linalg.det(K0 + t * K1), 2)
    roots, at_inf = _roots(c)
    cands = [K0 + t * K1 for t in roots] + ([K1] if at_inf or roots.size == 0 else [])
    best, best_s = None, np.inf
    for M in cands:
        u, s, vh = np.linalg.svd(M)
        if s[1] / max(s[0], 1e-300) < best_s:
            best_s = s[1] / max(s[0], 1e-300)
            best = [u[:, 0], vh[0]]
    return best


def _lift(L: Subspace, N0, N1, a: np.ndarray, m: int):
    """Complete ``a`` to a product state in ``L``; returns factors and residual."""
    N = a[0] * N0 + a[1] * N1
    _, s, vh = np.linalg.svd(N)
    if m == 2:
        b = vh[-1].conj()
        f = [a, b]
        return f, subspace_residual(L, f)
    s_full = np.zeros(4)
    s_full[: s.size] = s
    kdim = int(np.sum(s_full < 1e-6))
    kdim = max(kdim, 1)
    K = vh[-kdim:].conj().T
    bc = _two_qubit_product_in(K)
    f = [a] + bc
    return f, subspace_residual(L, f)


def _polish(L: Subspace, f: list[np.ndarray], sweeps: int = 30) -> tuple[list[np.ndarray], float]:
    comp = L.complement()
    init = [np.asarray(x, dtype=complex) for x in f]
    g, _ = alternating_search(
        comp.basis.conj().T, (2,) * len(f), False, 1, 0, max_sweeps=sweeps, stop_below=0.0, init=init
    )
    return g, subspace_residual(L, g)


def prodcount_points(L: Subspace, *, lift_tol: float = 1e-8, seed=0) -> ProdcountResult:
    """First-factor projections of the product states in ``L`` for 2 or 3 qubits.

    Writes a product as ``a x w`` and the complement of ``L`` as a matrix
    pencil ``N(a) = a_0 N_0 + a_1 N_1`` acting on ``w``. The projection is
    all of P^1 when the kernel of ``N(a)`` contains a product for generic
    ``a``; otherwise the candidates are the roots of an eliminant polynomial
    in the chart ``a = (1, t)``, plus the point at infinity, each verified by
    lifting to a product state in ``L``.
    """
    m = L.n_qubits
    if m not in (2, 3):
        raise ValueError("prodcount_points handles 2 or 3 qubits; use prodcount_grid beyond")
    rng = rng_from(seed)
    if L.dim == 0:
        return ProdcountResult(FINITE, note="zero subspace")
    q, N0, N1 = _pencil(L, m)
    D = 2 ** (m - 1)
    rank = _rank_generic(N0, N1, rng)
    # a kernel of dimension >= 2 inside C^2 x C^2, or any kernel in C^2, holds a product
    if (m == 2 and rank < 2) or (m == 3 and rank <= 2):
        return ProdcountResult(P1, note=f"generic rank {rank}")
    if rank == D:
        G = rng.standard_normal((D, q)) + 1j * rng.standard_normal((D, q))
        fn = lambda t: np.linalg.det(G @ (N0 + t * N1))  # noqa: E731
        degree = D
    else:  # m == 3 and rank == 3: kernel generically a line, spanned by cofactors
        G = rng.standard_normal((3, q)) + 1j * rng.standard_normal((3, q))

        def fn(t):
            M = G @ (N0 + t * N1)
            k = np.array([(-1) ** j * np.linalg.det(np.delete(M, j, axis=1)) for j in range(4)])
            return k[0] * k[3] - k[1] * k[2]

        degree = 6
    # normalise G so the eliminant has unit-scale coefficients
    coeffs = _poly_coeffs(fn, degree)
    scale = np.linalg.norm(G, 2) ** (degree if rank == D else 6)
    coeffs_n = coeffs / max(scale, 1e-300)
    cmax = float(np.max(np.abs(coeffs_n)))
    if cmax < _ZERO_POLY:
        return ProdcountResult(P1, eliminant=coeffs_n, note="eliminant vanishes identically")
    if cmax < _AMBIGUOUS_POLY:
        return ProdcountResult(INDETERMINATE, eliminant=coeffs_n, note="eliminant ill-conditioned")
    roots, _ = _roots(coeffs_n)
    cands = [np.array([1.0, t], dtype=complex) for t in roots] + [np.array([0.0, 1.0], dtype=complex)]
    out = ProdcountResult(FINITE, eliminant=coeffs_n)
    lifted = []
    for a in cands:
        a = a / np.linalg.norm(a)
        f, res = _lift(L, N0, N1, a, m)
        if res > lift_tol and res < 1e-3:
            f, res = _polish(L, f)
        if res <= lift_tol:
            lifted.append((res, f))
    # the squared residual grows quadratically off a zero, so a lift with
    # residual r only pins its point down to about sqrt(r)
    for res, f in sorted(lifted, key=lambda t: t[0]):
        p = ProjectivePoint.from_vector(f[0])
        if any(p.distance(o) < max(1e-6, 100 * np.sqrt(res)) for o in out.points):
            continue
        out.points.append(p)
        out.lifts.append(f)
        out.residuals.append(res)
    return out


def fibonacci_sphere(count: int) -> np.ndarray:
    """Unit spinors ``(cos(th/2), e^{i ph} sin(th/2))`` on a Fibonacci Bloch grid."""
    i = np.arange(count) + 0.5
    z = 1 - 2 * i / count
    th = np.arccos(z)
    ph = np.pi * (1 + 5**0.5) * i
    return np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=1)


def _bloch(th, ph):
    return np.stack([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)], axis=-1)


def _gap(Q: np.ndarray, a: np.ndarray, m: int, rng, init=None, restarts: int = 6, sweeps: int = 60):
    """Min over unit products ``w`` of ``||N(a) w||^2`` for each row of ``a``.

    Returns the values and the minimising factors of ``w`` (``None`` when
    ``m == 2``, where the minimum is a singular value). ``init`` warm-starts
    the inner alternating minimisation; with ``init`` given, ``restarts``
    counts the extra random starts run beside it.
    """
    Na = np.einsum("qi...,Bi->Bq...", Q, a)
    B = a.shape[0]
    if m == 2:
        s = np.linalg.svd(Na, compute_uv=False)
        return s[:, -1] ** 2, None
    rest = m - 1
    best = np.full(B, np.inf)
    best_f = [np.zeros((B, 2), dtype=complex) for _ in range(rest)]
    starts = [None] * restarts if init is None else [init] + [None] * restarts
    for start in starts:
        fs = [f.copy() for f in start] if start is not None else [_rand_factors(rng, B, 2) for _ in range(rest)]
        val = None
        for _ in range(sweeps):
            for i in range(rest):
                t = Na
                # descending order leaves the axes of lower factors in place
                for j in range(rest - 1, -1, -1):
                    if j == i:
                        continue
                    nd = t.ndim
                    t = np.einsum(t, list(range(nd)), fs[j], [0, 2 + j], [x for x in range(nd) if x != 2 + j])
                qf = np.einsum("Bra,Brb->Bab", t.conj(), t)
                val, fs[i] = _extreme_eig(qf, False)
                val = np.clip(val, 0, None)
        better = val < best
        best = np.where(better, val, best)
        for j in range(rest):
            best_f[j][better] = fs[j][better]
    return best, best_f


@dataclass
class GridEstimate:
    """Zeros of the first-factor gap function found by a refined Bloch grid."""

    everywhere: bool
    points: list
    max_gap: float
    grid_size: int


def prodcount_grid(
    L: Subspace, *, grid: int = 2000, resolution: float = 1e-3, zero_tol: float = 1e-7, seed=0
) -> GridEstimate:
    """Approximate first-factor projections by scanning a Bloch-sphere grid.

    The gap ``g(a) = min_w ||(I - P_L)(a x w)||^2`` vanishes exactly on the
    projection set. Grid minima are refined by local optimisation until the
    step falls below ``resolution``; refined zeros are clustered at that scale.
    Works for any number of qubits (the inner minimisation is numerical).
    """
    rng = rng_from(seed)
    m = L.n_qubits
    comp = L.complement()
    if comp.dim == 0:
        return GridEstimate(True, [], 0.0, grid)
    if L.dim == 0:
        return GridEstimate(False, [], 1.0, grid)
    Q = comp.basis.conj().T.reshape((comp.dim,) + (2,) * m)
    pts = fibonacci_sphere(grid)
    g, _ = _gap(Q, pts, m, rng)
    slow = np.nonzero(g >= zero_tol)[0]
    if 0 < slow.size <= grid // 20:
        # slow inner convergence is common when the projection is everything
        g[slow] = np.minimum(g[slow], _gap(Q, pts[slow], m, rng, restarts=12, sweeps=400)[0])
    if np.max(g) < zero_tol:
        return GridEstimate(True, [], float(np.max(g)), grid)
    # candidate basins: the lowest grid values plus every grid local minimum
    xyz = np.stack(
        [
            2 * (pts[:, 0].conj() * pts[:, 1]).real,
            2 * (pts[:, 0].conj() * pts[:, 1]).imag,
            np.abs(pts[:, 0]) ** 2 - np.abs(pts[:, 1]) ** 2,
        ],
        axis=1,
    )
    spacing = np.sqrt(4 * np.pi / grid)
    # a wide neighbourhood merges the basins of zeros a few spacings apart
    nbrs = cKDTree(xyz).query_ball_point(xyz, 1.5 * spacing)
    local_min = [i for i in range(grid) if g[i] <= np.min(g[nbrs[i]])]
    seeds = sorted(set(local_min) | set(np.argsort(g)[:24].tolist()), key=lambda i: g[i])
    th = np.arccos(np.clip(xyz[seeds, 2], -1, 1))
    ph = np.arctan2(xyz[seeds, 1], xyz[seeds, 0])
    th, ph, val = _refine(Q, m, th, ph, spacing, resolution, rng)
    found: list[ProjectivePoint] = []
    _collect(found, th, ph, val, zero_tol, resolution)
    # zeros closer than a couple of grid spacings share a basin; restart from
    # a ring around each zero with that zero divided out
    for _ in range(4):
        if not found:
            break
        known = np.array([p.vector() for p in found])
        rth, rph = _ring(known, 1.5 * spacing)
        rth, rph, rval = _refine(Q, m, rth, rph, spacing / 2, resolution, rng, avoid=known, rho=spacing / 4)
        before = len(found)
        _collect(found, rth, rph, rval, zero_tol, resolution)
        if len(found) == before:
            break
    return GridEstimate(False, found, float(np.max(g)), grid)


def _collect(found: list, th, ph, val, zero_tol: float, resolution: float) -> None:
    for i in np.argsort(val):
        if val[i] >= zero_tol:
            break
        p = ProjectivePoint.from_vector(_bloch(th[i], ph[i]))
        if not any(p.distance(o) < 10 * resolution for o in found):
            found.append(p)


def _ring(points: np.ndarray, radius: float, count: int = 6):
    """Bloch angles of ``count`` points at arc ``radius`` around each of ``points``."""
    z = np.abs(points[:, 0]) ** 2 - np.abs(points[:, 1]) ** 2
    c = points[:, 0].conj() * points[:, 1]
    th0 = np.arccos(np.clip(z, -1, 1))
    ph0 = np.arctan2(2 * c.imag, 2 * c.real)
    ang = 2 * np.pi * np.arange(count) / count
    sin_t = np.maximum(np.abs(np.sin(th0)), 1e-3)
    th = th0[:, None] + radius * np.cos(ang)[None, :]
    ph = ph0[:, None] + radius * np.sin(ang)[None, :] / sin_t[:, None]
    return th.ravel(), ph.ravel()


def _deflation(a: np.ndarray, avoid: np.ndarray | None, rho: float) -> np.ndarray:
    """``prod_r (1 + (rho / d(a, r))^2)``: blows up at known zeros, tends to 1 away from them."""
    if avoid is None:
        return np.ones(a.shape[0])
    d = np.abs(a[:, None, 0] * avoid[None, :, 1] - a[:, None, 1] * avoid[None, :, 0])
    return np.prod(1 + (rho / np.maximum(d, 1e-12)) ** 2, axis=1)


def _refine(
    Q, m, th, ph, step, resolution, rng, final_step: float = 1e-6, sweeps: int = 6, fresh: int = 2, avoid=None, rho=0.0
):
    """Batched compass search on the Bloch sphere from every seed at once.

    The step halves when no neighbour improves and stops at ``final_step``,
    well below ``resolution``, so that refined zeros have a tiny gap. The
    inner minimisation is warm-started from the current point's factors,
    with ``fresh`` random starts beside it: near a crossing of two inner
    branches a lone warm start keeps following the wrong one and walks the
    search into a neighbouring zero. With ``avoid`` the search minimises the
    gap times ``_deflation``; the returned values are the plain gaps.
    """
    th, ph = np.array(th, dtype=float), np.array(ph, dtype=float)
    K = th.size
    val, inner = _gap(Q, _bloch(th, ph), m, rng)
    val = val * _deflation(_bloch(th, ph), avoid, rho)
    h = np.full(K, float(step))
    moves = np.array([(1, 0), (-1, 0), (0, 1), (0, -1)], dtype=float)
    for _ in range(4000):
        idx = np.nonzero(h > final_step)[0]
        if idx.size == 0:
            break
        # the azimuthal step is scaled so moves have roughly equal arc length
        sin_t = np.maximum(np.abs(np.sin(th[idx])), 1e-3)
        cth = th[idx, None] + moves[None, :, 0] * h[idx, None]
        cph = ph[idx, None] + moves[None, :, 1] * h[idx, None] / sin_t[:, None]
        warm = None if inner is None else [np.repeat(f[idx], 4, axis=0) for f in inner]
        cand = _bloch(cth.ravel(), cph.ravel())
        cv, cf = _gap(Q, cand, m, rng, init=warm, restarts=fresh, sweeps=sweeps)
        cv = (cv * _deflation(cand, avoid, rho)).reshape(idx.size, 4)
        j = np.argmin(cv, axis=1)
        best = cv[np.arange(idx.size), j]
        better = best < val[idx]
        up = idx[better]
        th[up] = cth[better, j[better]]
        ph[up] = cph[better, j[better]]
        val[up] = best[better]
        if inner is not None:
            flat = (np.nonzero(better)[0] * 4 + j[better])
            for f, g in zip(inner, cf):
                f[up] = g[flat]
        h[idx[~better]] /= 2
    return th, ph, val / _deflation(_bloch(th, ph), avoid, rho)
