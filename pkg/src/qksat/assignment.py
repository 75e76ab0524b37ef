"""Local assignments and how far they can be extended.

An assignment fixes a product subspace on a set of qubits ``S``. For a set
of further qubits ``T`` the compatible extensions form the space
``L_S(T)``: states ``v`` on ``T`` such that ``Pi_s (v x phi_S) = 0`` for every
constraint ``s`` containing all of ``T`` and otherwise inside ``S``, and
every ``phi_S`` in the assignment. Dimension drops of these spaces drive the
heavy / conflicting classification and the chain bookkeeping.

Heaviness minimises over subspaces ``V`` of ``L_S(x)``, a continuum. Here the
minimum runs over a finite menu (the whole space, eigen-directions of the
induced one-qubit forms, a 12-point Bloch grid), so the computed minimum is
an upper bound on the true one and ``heavy`` may be reported where a finer
search would say ``not-bad``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .instance import QSatInstance
from .linalg import Subspace, kernel_intersection, rng_from
from .subspace import fibonacci_sphere

CONFLICTING = "conflicting"
HEAVY = "heavy"
NOT_BAD = "not-bad"

MAX_N = 14
MAX_K = 3
ASSIGN_TOL = 1e-9
_BLOCH_MENU = 12


def _check_size(inst: QSatInstance) -> None:
    if inst.n > MAX_N or inst.k > MAX_K:
        raise ValueError(f"extension calculus is limited to n <= {MAX_N}, k <= {MAX_K}")


@dataclass(frozen=True, eq=False)
class ProductAssignment:
    """Qubits ``S`` (sorted) and one single-qubit subspace per qubit."""

    S: tuple[int, ...]
    P: tuple[Subspace, ...]

    def __post_init__(self):
        if len(self.S) != len(self.P):
            raise ValueError("one subspace per assigned qubit is required")
        if list(self.S) != sorted(set(self.S)):
            raise ValueError("assigned qubits must be sorted and distinct")
        for V in self.P:
            if V.ambient_dim != 2 or V.dim == 0:
                raise ValueError("each assigned subspace must be a nonzero subspace of C^2")

    @classmethod
    def empty(cls) -> "ProductAssignment":
        return cls((), ())

    @classmethod
    def build(cls, inst: QSatInstance, mapping: dict, *, tol: float = ASSIGN_TOL) -> "ProductAssignment":
        """From ``{qubit: Subspace or vector}``; raises unless every state solves the restriction to ``S``."""
        S = tuple(sorted(mapping))
        P = []
        for q in S:
            V = mapping[q]
            P.append(V if isinstance(V, Subspace) else Subspace.span(np.asarray(V, dtype=complex).reshape(2, -1)))
        a = cls(S, tuple(P))
        viol = a.violation(inst)
        if viol > tol:
            raise ValueError(f"not a local solution on S (violation {viol:.3g})")
        return a

    def basis_of(self, q: int) -> np.ndarray:
        return self.P[self.S.index(q)].basis

    def extend(self, x: int, V: Subspace) -> "ProductAssignment":
        if x in self.S:
            raise ValueError(f"qubit {x} is already assigned")
        items = sorted(list(zip(self.S, self.P)) + [(x, V)], key=lambda t: t[0])
        return ProductAssignment(tuple(q for q, _ in items), tuple(v for _, v in items))

    def violation(self, inst: QSatInstance) -> float:
        """Largest ``||Pi_s (x)_{q in s} P_q||`` over constraints inside ``S``."""
        worst = 0.0
        Sset = set(self.S)
        for s, M in inst.projectors.items():
            if not set(s) <= Sset:
                continue
            rows = _contract(M, s, (), self)
            worst = max(worst, float(np.linalg.norm(rows, 2)) if rows.size else 0.0)
        return worst

    def to_dict(self) -> dict:
        return {
            "S": list(self.S),
            "P": [[[[float(z.real), float(z.imag)] for z in col] for col in V.basis.T] for V in self.P],
        }


def _contract(M: np.ndarray, s: tuple[int, ...], target: tuple[int, ...], assign: ProductAssignment) -> np.ndarray:
    """Rows of ``Pi_s (v x phi)`` as a matrix acting on ``v`` over the target qubits.

    Every non-target leg of ``s`` is contracted with each basis vector of its
    assigned subspace; the choices become extra rows.
    """
    k = len(s)
    A = M.reshape((2**k,) + (2,) * k)
    extra = []
    for pos, q in enumerate(s):
        if q in target:
            continue
        B = assign.basis_of(q)
        A = np.moveaxis(np.tensordot(A, B, axes=([1 + pos], [0])), -1, 1 + pos)
        extra.append(1 + pos)
    tgt_axes = [1 + p for p, q in enumerate(s) if q in target]
    A = A.transpose([0] + extra + tgt_axes)
    return A.reshape(-1, 2 ** len(tgt_axes))


def l_space(
    inst: QSatInstance,
    assign: ProductAssignment,
    target: Iterable[int],
    sigma: frozenset | set = frozenset(),
) -> Subspace:
    """States on ``target`` compatible with ``assign``, ignoring constraints listed in ``sigma``."""
    target = tuple(sorted(target))
    j = len(target)
    if not 1 <= j <= inst.k - 1:
        raise ValueError(f"target size must lie in [1, k-1], got {j}")
    if set(target) & set(assign.S):
        raise ValueError("target must avoid the assigned qubits")
    rows = []
    for T in itertools.combinations(assign.S, inst.k - j):
        s = tuple(sorted(target + T))
        if s in sigma:
            continue
        M = inst.projectors.get(s)
        if M is None:
            continue
        rows.append(_contract(M, s, target, assign))
    return kernel_intersection(rows, 2**j, ASSIGN_TOL) if rows else Subspace.full(2**j)


def _targets(n: int, avoid: Iterable[int], j: int):
    free = [q for q in range(n) if q not in set(avoid)]
    return itertools.combinations(free, j)


def l_dims(inst: QSatInstance, assign: ProductAssignment, avoid: Iterable[int] = (), sigma=frozenset()) -> dict:
    """``{target: dim L(target)}`` over all targets of size ``1..k-1`` avoiding ``S`` and ``avoid``."""
    avoid = set(avoid) | set(assign.S)
    return {
        t: l_space(inst, assign, t, sigma).dim
        for j in range(1, inst.k)
        for t in _targets(inst.n, avoid, j)
    }


def w_value(inst: QSatInstance, assign: ProductAssignment) -> int:
    """``sum_j |L_j| n^(k-j-1)`` summed over every target avoiding ``S``."""
    n, k = inst.n, inst.k
    return sum(d * n ** (k - len(t) - 1) for t, d in l_dims(inst, assign).items())


def delta(
    inst: QSatInstance,
    assign: ProductAssignment,
    x: int,
    V: Subspace,
    *,
    base: dict | None = None,
    per_j: bool = False,
):
    """Weighted dimension drop ``sum_j n^(k-j-1) sum_T (|L_S(T)| - |L_{S+x}(T)|)``.

    ``base`` may carry precomputed ``l_dims(inst, assign)``. With ``per_j`` the
    unweighted per-size drops are returned as well.
    """
    _check_size(inst)
    if V.dim == 0:
        raise ValueError("V must be nonzero")
    n, k = inst.n, inst.k
    base = l_dims(inst, assign) if base is None else base
    ext = assign.extend(x, V)
    drops = [0] * k
    for j in range(1, k):
        for t in _targets(n, set(assign.S) | {x}, j):
            drops[j] += base[t] - l_space(inst, ext, t).dim
    total = sum(drops[j] * n ** (k - j - 1) for j in range(1, k))
    return (total, drops[1:]) if per_j else total


def _induced_forms(inst: QSatInstance, assign: ProductAssignment, x: int) -> list[np.ndarray]:
    """One-qubit forms on ``x`` from each constraint through ``x``: assigned legs contracted, the rest traced."""
    forms = []
    for s, M in inst.projectors.items():
        if x not in s:
            continue
        free = tuple(q for q in s if q not in assign.S)
        R = _contract(M, s, free, assign)
        p = free.index(x)
        R = R.reshape((R.shape[0],) + (2,) * len(free))
        R = np.moveaxis(R, 1 + p, 1).reshape(R.shape[0], 2, -1)
        forms.append(np.einsum("rai,rbi->ab", R.conj(), R))
    return forms


def candidate_menu(inst: QSatInstance, assign: ProductAssignment, x: int, L: Subspace | None = None) -> list[Subspace]:
    """Finite set of subspaces ``V`` of ``L_S(x)`` over which heaviness is minimised."""
    L = l_space(inst, assign, (x,)) if L is None else L
    if L.dim == 0:
        return []
    if L.dim == 1:
        return [L]
    vecs = []
    for Q in _induced_forms(inst, assign, x):
        _, U = np.linalg.eigh((Q + Q.conj().T) / 2)
        vecs.extend(U.T)
    vecs.extend(fibonacci_sphere(_BLOCH_MENU))
    menu = [L]
    for v in vecs:
        v = v / np.linalg.norm(v)
        if all(abs(abs(np.vdot(w.basis[:, 0], v)) - 1) > 1e-9 for w in menu[1:]):
            menu.append(Subspace(2, v.reshape(2, 1)))
    return menu


@dataclass(frozen=True)
class Classification:
    kind: str
    delta_min: float | None
    best: Subspace | None
    threshold: float


def heavy_threshold(inst: QSatInstance, eps) -> float:
    return float(eps) * inst.n ** (inst.k - 1) / 5


def classify(inst: QSatInstance, assign: ProductAssignment, x: int, eps, *, base: dict | None = None) -> Classification:
    _check_size(inst)
    thr = heavy_threshold(inst, eps)
    L = l_space(inst, assign, (x,))
    if L.dim == 0:
        return Classification(CONFLICTING, None, None, thr)
    base = l_dims(inst, assign) if base is None else base
    best, best_d = None, math.inf
    for V in candidate_menu(inst, assign, x, L):
        d = delta(inst, assign, x, V, base=base)
        if d < best_d:
            best, best_d = V, d
    return Classification(HEAVY if best_d > thr else NOT_BAD, best_d, best, thr)


def classify_all(inst: QSatInstance, assign: ProductAssignment, eps) -> dict[int, Classification]:
    base = l_dims(inst, assign)
    return {x: classify(inst, assign, x, eps, base=base) for x in range(inst.n) if x not in assign.S}


def bad_census(inst: QSatInstance, assign: ProductAssignment, eps) -> int:
    """Number of heavy or conflicting qubits outside ``S``."""
    return sum(c.kind != NOT_BAD for c in classify_all(inst, assign, eps).values())


@dataclass
class ChainRecord:
    qubits: list[int] = field(default_factory=list)
    subspaces: list[Subspace] = field(default_factory=list)
    W_values: list[int] = field(default_factory=list)
    classifications: list[str] = field(default_factory=list)
    deltas: list[float] = field(default_factory=list)
    threshold: float = 0.0
    stop_reason: str = ""

    def __len__(self) -> int:
        return len(self.qubits)

    def decrease_violations(self) -> list[int]:
        """Steps where ``W`` failed to drop by more than the heaviness threshold."""
        return [
            i
            for i, c in enumerate(self.classifications)
            if c == HEAVY and not self.W_values[i] - self.W_values[i + 1] > self.threshold
        ]

    def to_dict(self) -> dict:
        return {
            "qubits": self.qubits,
            "subspaces": [[[[float(z.real), float(z.imag)] for z in col] for col in V.basis.T] for V in self.subspaces],
            "W": self.W_values,
            "classifications": self.classifications,
            "deltas": self.deltas,
            "threshold": self.threshold,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainRecord":
        return cls(
            list(d["qubits"]),
            [_subspace_from_json(cols) for cols in d["subspaces"]],
            list(d["W"]),
            list(d["classifications"]),
            list(d["deltas"]),
            d["threshold"],
            d["stop_reason"],
        )


def _subspace_from_json(cols) -> Subspace:
    basis = np.array([[complex(re, im) for re, im in col] for col in cols]).T
    return Subspace(2, basis)


def grow_chain(inst: QSatInstance, eps, max_len: int, seed=None) -> ChainRecord:
    """Extend from the empty assignment through heavy qubits, picking the delta-minimising ``V`` each time.

    The heavy qubit to extend through is drawn uniformly with ``seed``.
    Growth stops when some qubit conflicts, at ``max_len``, or when no
    qubit is heavy.
    """
    _check_size(inst)
    rng = rng_from(seed)
    assign = ProductAssignment.empty()
    rec = ChainRecord(threshold=heavy_threshold(inst, eps))
    rec.W_values.append(w_value(inst, assign))
    while True:
        cls = classify_all(inst, assign, eps)
        if any(c.kind == CONFLICTING for c in cls.values()):
            rec.stop_reason = "conflict"
            break
        if len(rec) >= max_len:
            rec.stop_reason = "max-length"
            break
        heavy = sorted(x for x, c in cls.items() if c.kind == HEAVY)
        if not heavy:
            rec.stop_reason = "no-heavy"
            break
        x = heavy[int(rng.integers(len(heavy)))]
        c = cls[x]
        assign = assign.extend(x, c.best)
        rec.qubits.append(x)
        rec.subspaces.append(c.best)
        rec.classifications.append(HEAVY)
        rec.deltas.append(float(c.delta_min))
        rec.W_values.append(w_value(inst, assign))
    return rec


def w0_bound(n: int, k: int) -> int:
    return 2 ** (k - 1) * n ** (k - 1)


@dataclass
class ReplayReport:
    """Outcome of building the removal set ``Sigma`` by the two-step extension process."""

    not_bad: list[int]
    sigma_size: int
    sigma_step1: int
    sigma_step2: int
    limit: Fraction
    residual: float
    drift: list[int]

    @property
    def sigma_small(self) -> bool:
        return self.sigma_size < self.limit

    def to_dict(self) -> dict:
        return {
            "not_bad": self.not_bad,
            "sigma_size": self.sigma_size,
            "sigma_step1": self.sigma_step1,
            "sigma_step2": self.sigma_step2,
            "limit": float(self.limit),
            "sigma_small": self.sigma_small,
            "residual": self.residual,
            "drift": self.drift,
        }


def enoughbad_replay(inst: QSatInstance, assign: ProductAssignment, eps) -> ReplayReport:
    """Replay the removal-set construction and audit it.

    Step one extends through the not-bad qubits in increasing order with a
    delta-minimising ``V`` (relative to the original assignment). Whenever a
    target's space shrinks, every constraint through that target, the new
    qubit and otherwise inside the current assignment joins ``Sigma``. Step
    two removes every constraint touching a qubit left out. ``drift`` lists
    not-bad qubits whose relaxed one-qubit space stopped matching the
    original one; ``residual`` is the energy of the resulting product state
    over constraints outside ``Sigma``.
    """
    _check_size(inst)
    n, k = inst.n, inst.k
    cls = classify_all(inst, assign, eps)
    X_nb = sorted(x for x, c in cls.items() if c.kind == NOT_BAD)
    sigma: set = set()
    drift = []
    cur = assign
    for x in X_nb:
        L0 = l_space(inst, assign, (x,))
        if not l_space(inst, cur, (x,), sigma).equals(L0, 1e-7):
            drift.append(x)
        V = cls[x].best
        before = l_dims(inst, cur, avoid=(x,), sigma=sigma)
        ext = cur.extend(x, V)
        for t, d in before.items():
            if l_space(inst, ext, t, sigma).dim < d:
                rest = [q for q in cur.S]
                for T in itertools.combinations(rest, k - len(t) - 1):
                    sigma.add(tuple(sorted(t + (x,) + T)))
        cur = ext
    step1 = len(sigma)
    keep = set(cur.S)
    for s in itertools.combinations(range(n), k):
        if not set(s) <= keep:
            sigma.add(s)
    factors = np.tile(np.array([1.0, 0.0], dtype=complex), (n, 1))
    for q, V in zip(cur.S, cur.P):
        factors[q] = V.basis[:, 0]
    res = 0.0
    for s, M in inst.projectors.items():
        if s in sigma:
            continue
        phi = factors[s[0]]
        for q in s[1:]:
            phi = np.kron(phi, factors[q])
        res += float(np.linalg.norm(M @ phi) ** 2)
    return ReplayReport(X_nb, len(sigma), step1, len(sigma) - step1, Fraction(eps) * n**k, res, drift)
