"""Product-state satisfiability of small instances.

Two independent routes decide whether a local instance on ``c`` qubits has
a product state annihilated by every projector:

* :func:`solve_exact` writes the question as a polynomial system over the
  Gaussian rationals and runs Buchberger's algorithm; the instance is
  unsatisfiable exactly when the reduced Groebner basis is ``{1}``.
* :func:`solve_numeric` minimises ``sum_s <phi|Pi_s|phi>`` over product
  states by alternating single-qubit eigen-steps from random restarts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .groebner import GaussianRational, Polynomial, groebner, ONE
from .instance import QSatInstance
from .linalg import rng_from
from .subspace import RESTARTS, TAU_SAT, TAU_UNSAT, _extreme_eig

SAT = "SAT"
UNSAT = "UNSAT"
INDETERMINATE = "INDETERMINATE"

DEFAULT_BITS = 48
DEFAULT_MAX_SPAIRS = 1_000_000
# range-vector entries below this are eigensolver noise and become exact zeros
SNAP_TOL = 1e-12


@dataclass
class SolverVerdict:
    verdict: str
    backend: str
    witness: np.ndarray | None = None
    residual: float | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"verdict": self.verdict, "backend": self.backend, "residual": self.residual}
        if self.witness is not None:
            out["witness"] = [[[float(z.real), float(z.imag)] for z in f] for f in self.witness]
        if self.details:
            out["details"] = self.details
        return out


@dataclass
class PolySystem:
    """Polynomial system whose common zeros are the product solutions.

    Variables come in blocks of four per qubit ``i``: ``x_i0, x_i1, y_i0,
    y_i1`` at indices ``4i .. 4i+3``. ``ranks`` maps each subset to the number
    of constraint vectors it contributed.
    """

    c: int
    equations: list
    ranks: dict
    bits: int = DEFAULT_BITS

    @property
    def num_vars(self) -> int:
        return 4 * self.c

    def var_names(self) -> list[str]:
        return [f"{v}{i}{b}" for i in range(self.c) for v, b in (("x", 0), ("x", 1), ("y", 0), ("y", 1))]

    def format(self) -> list[str]:
        names = self.var_names()
        return [p.format(names) for p in self.equations]


def rank_vectors(P: np.ndarray) -> np.ndarray:
    """Orthonormal spanning vectors of the range of a projector (columns)."""
    w, v = np.linalg.eigh((P + P.conj().T) / 2)
    return v[:, w > 0.5]


def build_system(local: QSatInstance, bits: int = DEFAULT_BITS) -> PolySystem:
    """Constraint ``<a|phi_s> = 0`` per range vector plus one nondegeneracy equation per qubit.

    Nondegeneracy ``(x_i0 y_i0 - 1)(x_i1 y_i1 - 1) = 0`` forces at least one of
    ``x_i0, x_i1`` to be invertible, i.e. ``phi_i != 0``. Coefficients are
    rounded to ``bits`` binary digits after entries below ``SNAP_TOL`` are
    dropped.
    """
    c, k = local.n, local.k
    nv = 4 * c
    eqs: list[Polynomial] = []
    ranks = {}
    for s, P in sorted(local.projectors.items()):
        A = rank_vectors(P)
        ranks[s] = A.shape[1]
        for j in range(A.shape[1]):
            a = A[:, j]
            terms = {}
            for idx, bits_s in enumerate(itertools.product((0, 1), repeat=k)):
                if abs(a[idx]) < SNAP_TOL:
                    continue
                coeff = GaussianRational.from_complex(np.conj(a[idx]), bits)
                if not coeff:
                    continue
                m = [0] * nv
                for q, b in zip(s, bits_s):
                    m[4 * q + b] += 1
                terms[tuple(m)] = coeff
            eqs.append(Polynomial(nv, terms))
    for i in range(c):
        x0, x1, y0, y1 = (Polynomial.variable(nv, 4 * i + t) for t in range(4))
        one = Polynomial.constant(nv, ONE)
        eqs.append((x0 * y0 - one) * (x1 * y1 - one))
    return PolySystem(c, eqs, ranks, bits)


def solve_exact(
    system: PolySystem,
    *,
    max_spairs: int = DEFAULT_MAX_SPAIRS,
    time_limit: float | None = None,
) -> SolverVerdict:
    """UNSAT iff the reduced Groebner basis is ``{1}``; INDETERMINATE on budget exhaustion."""
    if system.c > 4:
        raise ValueError("the exact backend is limited to c <= 4")
    eqs = [p for p in system.equations if not p.is_zero()]
    res = groebner(eqs, max_spairs=max_spairs, time_limit=time_limit)
    details = {"spairs": res.spairs, "basis_size": len(res.basis)}
    if not res.complete:
        return SolverVerdict(INDETERMINATE, "exact", details=details | {"reason": "budget exceeded"})
    return SolverVerdict(UNSAT if res.is_unit else SAT, "exact", details=details)


def _local_tables(local: QSatInstance):
    """Projectors regrouped per qubit, with that qubit moved to the front."""
    c, k = local.n, local.k
    keys = sorted(local.projectors)
    per_qubit = []
    for i in range(c):
        mats, others = [], []
        for s in keys:
            if i not in s:
                continue
            p = s.index(i)
            order = [p] + [t for t in range(k) if t != p]
            M = local.projectors[s].reshape((2,) * (2 * k))
            M = M.transpose(order + [k + t for t in order])
            mats.append(M.reshape(2, 2 ** (k - 1), 2, 2 ** (k - 1)))
            others.append([s[t] for t in order[1:]])
        if mats:
            per_qubit.append((np.stack(mats), np.array(others, dtype=int).reshape(len(mats), k - 1)))
        else:
            per_qubit.append(None)
    all_mats = np.stack([local.projectors[s] for s in keys]) if keys else None
    return per_qubit, all_mats, np.array(keys, dtype=int).reshape(len(keys), k)


def _kron_rows(f: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """``f`` is ``(R, c, 2)``; returns ``(R, S, 2^len)`` products over the qubits in ``idx`` rows."""
    R = f.shape[0]
    S = idx.shape[0]
    out = np.ones((R, S, 1), dtype=complex)
    for t in range(idx.shape[1]):
        nxt = f[:, idx[:, t], :]
        out = (out[:, :, :, None] * nxt[:, :, None, :]).reshape(R, S, -1)
    return out


def _energy(f: np.ndarray, all_mats, keys) -> np.ndarray:
    if all_mats is None:
        return np.zeros(f.shape[0])
    v = _kron_rows(f, keys)
    return np.einsum("Rsa,sab,Rsb->R", v.conj(), all_mats, v).real.clip(0, None)


def numeric_search(
    local: QSatInstance,
    *,
    restarts: int = RESTARTS,
    seed=0,
    max_sweeps: int = 500,
    stop_below: float = 1e-24,
    trajectory: bool = False,
):
    """Alternating minimisation of the local energy over product states.

    Returns ``(factors, energy, trajectories)`` where ``trajectories`` holds the
    energy of every restart after each sweep when requested.
    """
    rng = rng_from(seed)
    c = local.n
    per_qubit, all_mats, keys = _local_tables(local)
    f = rng.standard_normal((restarts, c, 2)) + 1j * rng.standard_normal((restarts, c, 2))
    f /= np.linalg.norm(f, axis=2, keepdims=True)
    e = _energy(f, all_mats, keys)
    traj = [e.copy()] if trajectory else None
    active = np.arange(restarts)
    for _ in range(max_sweeps):
        if active.size == 0 or e.min() < stop_below:
            break
        fa = f[active]
        for i in range(c):
            tab = per_qubit[i]
            if tab is None:
                continue
            mats, others = tab
            w = _kron_rows(fa, others)
            M = np.einsum("Rsb,sabcd,Rsd->Rac", w.conj(), mats, w)
            _, vec = _extreme_eig((M + np.conj(np.swapaxes(M, 1, 2))) / 2, False)
            fa[:, i, :] = vec
        f[active] = fa
        new = _energy(fa, all_mats, keys)
        prev = e[active]
        e[active] = new
        if trajectory:
            traj.append(e.copy())
        active = active[(prev - new) > 1e-12 * new + 1e-30]
    best = int(np.argmin(e))
    return f[best], float(e[best]), (np.array(traj) if trajectory else None)


def solve_numeric(
    local: QSatInstance,
    *,
    restarts: int = RESTARTS,
    seed=0,
    tau_sat: float = TAU_SAT,
    tau_unsat: float = TAU_UNSAT,
    max_sweeps: int = 500,
) -> SolverVerdict:
    """SAT if the minimal energy is below ``tau_sat``, UNSAT above ``tau_unsat``."""
    if local.n > 12:
        raise ValueError("the numeric backend is limited to c <= 12")
    if not local.projectors:
        w = np.tile(np.array([1.0, 0.0], dtype=complex), (local.n, 1))
        return SolverVerdict(SAT, "numeric", w, 0.0)
    f, e, _ = numeric_search(local, restarts=restarts, seed=seed, max_sweeps=max_sweeps)
    e = local.product_residual(f)
    if e < tau_sat:
        verdict = SAT
    elif e > tau_unsat:
        verdict = UNSAT
    else:
        verdict = INDETERMINATE
    return SolverVerdict(verdict, "numeric", _canonical_phase(f), e)


def _canonical_phase(f: np.ndarray) -> np.ndarray:
    """Scale each factor so its larger-magnitude coordinate is real positive."""
    out = np.array(f, dtype=complex)
    for i in range(out.shape[0]):
        j = int(np.argmax(np.abs(out[i])))
        out[i] *= np.conj(out[i, j]) / abs(out[i, j])
    return out


def check_product(
    local: QSatInstance,
    backend: str = "numeric",
    *,
    restarts: int = RESTARTS,
    seed=0,
    tau_sat: float = TAU_SAT,
    tau_unsat: float = TAU_UNSAT,
    max_spairs: int = DEFAULT_MAX_SPAIRS,
    time_limit: float | None = None,
) -> SolverVerdict:
    """Run one backend, or both with disagreement reporting (``backend="both"``)."""
    if backend == "numeric":
        return solve_numeric(local, restarts=restarts, seed=seed, tau_sat=tau_sat, tau_unsat=tau_unsat)
    if backend == "exact":
        return solve_exact(build_system(local), max_spairs=max_spairs, time_limit=time_limit)
    if backend != "both":
        raise ValueError(f"unknown backend {backend!r}")
    num = solve_numeric(local, restarts=restarts, seed=seed, tau_sat=tau_sat, tau_unsat=tau_unsat)
    ex = solve_exact(build_system(local), max_spairs=max_spairs, time_limit=time_limit)
    details = {"exact": ex.verdict, "numeric": num.verdict}
    if ex.verdict == INDETERMINATE:
        verdict = num.verdict
    elif num.verdict == INDETERMINATE:
        verdict = ex.verdict
    elif ex.verdict == num.verdict:
        verdict = ex.verdict
    else:
        verdict = INDETERMINATE
        details["disagreement"] = True
    witness = num.witness if verdict == SAT and num.verdict == SAT else None
    return SolverVerdict(verdict, "both", witness, num.residual, details)
