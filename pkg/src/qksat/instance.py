"""Quantum k-SAT instances, restrictions, generators and JSON I/O."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .linalg import kernel, random_state, rng_from, state_matrix

PROJECTOR_TOL = 1e-10
WITNESS_TOL = 1e-9

SAT_PRODUCT = "satisfiable-by-product"
SAT_ENTANGLED = "satisfiable-entangled"
EPS_FAR = "eps-far"
CERT_KINDS = (SAT_PRODUCT, SAT_ENTANGLED, EPS_FAR)


def _canon_subset(s: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(int(q) for q in s))


class QSatInstance:
    """``n`` qubits and a projector on some of the ``k``-subsets of ``range(n)``.

    Subsets missing from ``projectors`` carry the zero projector. Each stored
    matrix acts on the qubits of its subset in increasing order, the lowest
    index being the most significant factor.
    """

    __slots__ = ("n", "k", "_proj")

    def __init__(self, n: int, k: int, projectors: Mapping | None = None, *, validate: bool = True):
        if k < 1 or n < 0:
            raise ValueError(f"bad shape n={n}, k={k}")
        self.n = int(n)
        self.k = int(k)
        proj: dict[tuple[int, ...], np.ndarray] = {}
        d = 2**k
        for s, m in (projectors or {}).items():
            key = _canon_subset(s)
            if len(key) != k or len(set(key)) != k:
                raise ValueError(f"subset {s} is not a {k}-subset")
            if key[0] < 0 or key[-1] >= n:
                raise ValueError(f"subset {s} out of range for n={n}")
            if key in proj:
                raise ValueError(f"duplicate subset {key}")
            m = np.asarray(m, dtype=complex)
            if m.shape != (d, d):
                raise ValueError(f"projector on {key} has shape {m.shape}, expected {(d, d)}")
            proj[key] = m
        if validate and proj:
            _validate_projectors(np.stack(list(proj.values())), list(proj))
        for m in proj.values():
            m.setflags(write=False)
        self._proj = proj

    @property
    def projectors(self) -> Mapping[tuple[int, ...], np.ndarray]:
        return self._proj

    def __len__(self) -> int:
        return len(self._proj)

    def __repr__(self) -> str:
        return f"QSatInstance(n={self.n}, k={self.k}, projectors={len(self._proj)})"

    def projector(self, subset) -> np.ndarray:
        """Projector on ``subset``; zero if absent."""
        key = _canon_subset(subset)
        m = self._proj.get(key)
        if m is None:
            return np.zeros((2**self.k, 2**self.k), dtype=complex)
        return m

    def nontrivial(self, tol: float = 0.5) -> dict[tuple[int, ...], np.ndarray]:
        """Stored projectors with nonzero rank (trace above ``tol``)."""
        return {s: m for s, m in self._proj.items() if np.trace(m).real > tol}

    def equals(self, other: "QSatInstance", tol: float = 1e-12) -> bool:
        if (self.n, self.k) != (other.n, other.k):
            return False
        a, b = self.nontrivial(), other.nontrivial()
        if set(a) != set(b):
            return False
        return all(np.abs(a[s] - b[s]).max() <= tol for s in a)

    def residual(self, psi) -> float:
        """``sum_s ||Pi_s psi||^2`` for a full ``2^n`` state vector."""
        psi = np.asarray(psi, dtype=complex).ravel()
        total = 0.0
        for s, m in self._proj.items():
            mat = state_matrix(psi, self.n, s)
            total += float(np.linalg.norm(m @ mat) ** 2)
        return total

    def product_residual(self, factors: Sequence) -> float:
        """``sum_s ||Pi_s phi_s||^2`` for a product state given by its ``n`` factors."""
        f = np.asarray(factors, dtype=complex).reshape(self.n, 2)
        if not self._proj:
            return 0.0
        keys = list(self._proj)
        mats = np.stack([self._proj[s] for s in keys])
        local = _batched_products(f, np.array(keys))
        out = np.einsum("bij,bj->bi", mats, local)
        return float(np.sum(np.abs(out) ** 2))

    def max_violation(self, factors: Sequence) -> float:
        """Largest ``||Pi_s phi_s||`` over subsets for a product state."""
        f = np.asarray(factors, dtype=complex).reshape(self.n, 2)
        if not self._proj:
            return 0.0
        keys = list(self._proj)
        mats = np.stack([self._proj[s] for s in keys])
        local = _batched_products(f, np.array(keys))
        out = np.einsum("bij,bj->bi", mats, local)
        return float(np.sqrt(np.max(np.sum(np.abs(out) ** 2, axis=1))))


def _batched_products(factors: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    """Local product vectors ``phi_{s_0} x ... x phi_{s_{k-1}}`` for each row of ``subsets``."""
    out = factors[subsets[:, 0]]
    for j in range(1, subsets.shape[1]):
        nxt = factors[subsets[:, j]]
        out = (out[:, :, None] * nxt[:, None, :]).reshape(out.shape[0], -1)
    return out


def _validate_projectors(mats: np.ndarray, keys: list, tol: float = PROJECTOR_TOL) -> None:
    herm = np.abs(mats - np.conj(np.swapaxes(mats, 1, 2))).max(axis=(1, 2))
    idem = np.abs(mats @ mats - mats).max(axis=(1, 2))
    bad = np.nonzero((herm > tol) | (idem > tol))[0]
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"matrix on {keys[i]} is not a projector (hermiticity err {herm[i]:.2e}, idempotency err {idem[i]:.2e})"
        )


def restrict(inst: QSatInstance, C: Iterable[int]) -> QSatInstance:
    """Sub-instance on the qubits ``C``, relabelled ``0..|C|-1`` in increasing order."""
    C = _canon_subset(C)
    if len(set(C)) != len(C):
        raise ValueError("restriction set has repeated qubits")
    if C and (C[0] < 0 or C[-1] >= inst.n):
        raise ValueError(f"restriction set {C} out of range for n={inst.n}")
    relabel = {q: i for i, q in enumerate(C)}
    proj = {}
    if len(C) >= inst.k:
        # enumerate inside C when that is cheaper than scanning every stored subset
        if math.comb(len(C), inst.k) <= len(inst.projectors):
            for s in itertools.combinations(C, inst.k):
                m = inst.projectors.get(s)
                if m is not None:
                    proj[tuple(relabel[q] for q in s)] = m
        else:
            cset = set(C)
            for s, m in inst.projectors.items():
                if cset.issuperset(s):
                    proj[tuple(relabel[q] for q in s)] = m
    return QSatInstance(len(C), inst.k, proj, validate=False)


@dataclass
class InstanceCertificate:
    """Ground truth attached to a generated instance.

    ``witness`` is either an ``(n, 2)`` array of single-qubit factors
    (``witness_kind == "product"``) or a full state vector (``"state"``).
    """

    kind: str
    witness: np.ndarray | None = None
    witness_kind: str | None = None
    eps: Fraction | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CERT_KINDS:
            raise ValueError(f"unknown certificate kind {self.kind!r}")
        if self.kind == EPS_FAR and self.eps is None:
            raise ValueError("eps-far certificate needs eps")
        if self.witness is not None and self.witness_kind not in ("product", "state"):
            raise ValueError("witness_kind must be 'product' or 'state'")

    def witness_residual(self, inst: QSatInstance) -> float:
        """Largest ``||Pi_s w||`` for the stored witness."""
        if self.witness is None:
            raise ValueError("certificate has no witness")
        if self.witness_kind == "product":
            return inst.max_violation(self.witness)
        worst = 0.0
        for s, m in inst.projectors.items():
            worst = max(worst, float(np.linalg.norm(m @ state_matrix(self.witness, inst.n, s))))
        return worst


def _rank_sampler(rank_profile, k: int, rng: np.random.Generator, count: int, cap: int) -> np.ndarray:
    if rank_profile is None:
        rank_profile = (1, cap)
    if isinstance(rank_profile, (int, np.integer)):
        lo = hi = int(rank_profile)
    else:
        lo, hi = (int(v) for v in rank_profile)
    if lo < 0 or hi < lo:
        raise ValueError(f"bad rank profile {rank_profile}")
    if hi > cap:
        raise ValueError(f"rank {hi} exceeds the maximum {cap} for k={k}")
    return rng.integers(lo, hi + 1, size=count)


def _complex_normal(rng, shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def gen_satisfiable(
    n: int,
    k: int,
    seed=None,
    mode: str = "product",
    rank_profile=None,
    *,
    state=None,
    witness=None,
) -> tuple[QSatInstance, InstanceCertificate]:
    """Random instance with a planted ground state.

    ``mode="product"``: a random product state ``phi`` is drawn (or taken from
    ``witness``, an ``(n, 2)`` array) and each ``Pi_s`` projects onto a random
    subspace of the complement of ``phi_s`` of rank drawn from ``rank_profile``
    (an int or inclusive ``(lo, hi)`` range, default ``(1, 2^k - 1)``).

    ``mode="entangled"``: a Haar state ``psi`` (or ``state``) is drawn and
    ``Pi_s`` is the projector onto the kernel of its reduced density on ``s``.
    Subsets whose kernel is trivial are left out. ``rank_profile`` is ignored.
    """
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    rng = rng_from(seed)
    d = 2**k
    subsets = list(itertools.combinations(range(n), k))
    if mode in ("product", "product-ground-state"):
        ranks = _rank_sampler(rank_profile, k, rng, len(subsets), d - 1)
        if witness is None:
            f = _complex_normal(rng, (n, 2))
        else:
            f = np.asarray(witness, dtype=complex).reshape(n, 2)
        f = f / np.linalg.norm(f, axis=1, keepdims=True)
        if not subsets:
            return QSatInstance(n, k, {}), InstanceCertificate(SAT_PRODUCT, f, "product")
        phis = _batched_products(f, np.array(subsets))
        g = _complex_normal(rng, (len(subsets), d, d - 1))
        # project the Gaussian block off phi_s, then orthonormalise
        g = g - phis[:, :, None] * np.einsum("bi,bij->bj", phis.conj(), g)[:, None, :]
        q, _ = np.linalg.qr(g)
        proj = {}
        for i, s in enumerate(subsets):
            r = int(ranks[i])
            if r == 0:
                continue
            b = q[i, :, :r]
            proj[s] = _clean_projector(b)
        return QSatInstance(n, k, proj), InstanceCertificate(SAT_PRODUCT, f, "product")
    if mode in ("entangled", "entangled-ground-state"):
        if n > 16:
            raise ValueError("entangled mode needs the full state vector; n must be <= 16")
        psi = random_state(2**n, rng) if state is None else np.asarray(state, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        proj = {}
        for s in subsets:
            rho = state_matrix(psi, n, s)
            rho = rho @ rho.conj().T
            ker = kernel(rho)
            if ker.dim:
                proj[s] = _clean_projector(ker.basis)
        return QSatInstance(n, k, proj), InstanceCertificate(SAT_ENTANGLED, psi, "state")
    raise ValueError(f"unknown mode {mode!r}")


def _clean_projector(basis: np.ndarray) -> np.ndarray:
    p = basis @ basis.conj().T
    return (p + p.conj().T) / 2


def gen_random(n: int, k: int, seed=None, rank_profile=None, density: float = 1.0) -> QSatInstance:
    """Instance with Haar-random projectors of random rank on a random fraction of subsets.

    No ground truth is planted; used to probe solvers on generic input.
    """
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    rng = rng_from(seed)
    d = 2**k
    subsets = [s for s in itertools.combinations(range(n), k) if rng.random() < density]
    ranks = _rank_sampler(rank_profile, k, rng, len(subsets), d)
    proj = {}
    for s, r in zip(subsets, ranks):
        if r == 0:
            continue
        q, _ = np.linalg.qr(_complex_normal(rng, (d, int(r))))
        proj[s] = _clean_projector(q)
    return QSatInstance(n, k, proj)


def far_eps(n: int, k: int, family: str = "all-identity", rho: float = 0.5) -> Fraction:
    """Certified farness of the far families: ``C(b, k) / n^k`` with ``b`` the block size."""
    b = n if family == "all-identity" else block_size(n, rho)
    return Fraction(math.comb(b, k), n**k)


def block_size(n: int, rho: float) -> int:
    # round before ceil so that e.g. 0.3 * 10 does not become 4
    return min(n, max(0, math.ceil(round(rho * n, 9))))


def gen_far(
    n: int,
    k: int,
    seed=None,
    family: str = "all-identity",
    *,
    rho: float = 0.5,
    eps=None,
) -> tuple[QSatInstance, InstanceCertificate]:
    """Instance with identity projectors and certified farness.

    ``all-identity`` puts ``I`` on every ``k``-subset. ``dense-local-block``
    puts ``I`` on every ``k``-subset of a seeded block of ``ceil(rho * n)``
    qubits. Passing ``eps`` larger than the certified value raises.
    """
    if n < k:
        raise ValueError(f"need n >= k, got n={n}, k={k}")
    rng = rng_from(seed)
    eye = np.eye(2**k, dtype=complex)
    if family == "all-identity":
        block = list(range(n))
    elif family == "dense-local-block":
        b = block_size(n, rho)
        if b < k:
            raise ValueError(f"block of size {b} holds no {k}-subset")
        block = sorted(int(v) for v in rng.permutation(n)[:b])
    else:
        raise ValueError(f"unknown far family {family!r}")
    cert_eps = Fraction(math.comb(len(block), k), n**k)
    if eps is not None and Fraction(eps) > cert_eps:
        raise ValueError(f"requested eps {eps} exceeds certified {float(cert_eps):.6g}")
    proj = {s: eye for s in itertools.combinations(block, k)}
    cert = InstanceCertificate(EPS_FAR, eps=cert_eps, details={"family": family, "block": block})
    return QSatInstance(n, k, proj, validate=False), cert


# ---------------------------------------------------------------- JSON


def _cplx_to_json(a) -> list:
    a = np.asarray(a, dtype=complex).ravel()
    return [[float(z.real), float(z.imag)] for z in a]


def _cplx_from_json(rows, shape=None) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("complex arrays are lists of [re, im] pairs")
    z = arr[:, 0] + 1j * arr[:, 1]
    return z.reshape(shape) if shape is not None else z


def instance_to_dict(inst: QSatInstance, cert: InstanceCertificate | None = None) -> dict:
    out = {
        "n": inst.n,
        "k": inst.k,
        "projectors": [
            {"subset": list(s), "matrix": _cplx_to_json(m)} for s, m in sorted(inst.projectors.items())
        ],
    }
    if cert is not None:
        out["certificate"] = certificate_to_dict(cert)
    return out


def certificate_to_dict(cert: InstanceCertificate) -> dict:
    out = {"kind": cert.kind}
    if cert.eps is not None:
        out["eps"] = float(cert.eps)
        out["eps_exact"] = f"{cert.eps.numerator}/{cert.eps.denominator}"
    if cert.witness is not None:
        out["witness_kind"] = cert.witness_kind
        out["witness"] = _cplx_to_json(cert.witness)
    if cert.details:
        out["details"] = cert.details
    return out


def certificate_from_dict(d: dict, n: int) -> InstanceCertificate:
    eps = None
    if "eps_exact" in d:
        eps = Fraction(d["eps_exact"])
    elif d.get("eps") is not None:
        eps = Fraction(d["eps"])
    witness = None
    if d.get("witness") is not None:
        shape = (n, 2) if d.get("witness_kind") == "product" else None
        witness = _cplx_from_json(d["witness"], shape)
    return InstanceCertificate(d["kind"], witness, d.get("witness_kind"), eps, d.get("details", {}))


def instance_from_dict(d: dict) -> tuple[QSatInstance, InstanceCertificate | None]:
    try:
        n, k = int(d["n"]), int(d["k"])
        proj = {}
        for entry in d["projectors"]:
            s = _canon_subset(entry["subset"])
            if s in proj:
                raise ValueError(f"duplicate subset {s}")
            proj[s] = _cplx_from_json(entry["matrix"], (2**k, 2**k))
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed instance document: {e}") from e
    inst = QSatInstance(n, k, proj)
    cert = certificate_from_dict(d["certificate"], n) if "certificate" in d else None
    return inst, cert


def dumps_instance(inst: QSatInstance, cert: InstanceCertificate | None = None) -> str:
    return json.dumps(instance_to_dict(inst, cert), separators=(",", ":"))


def loads_instance(text: str) -> tuple[QSatInstance, InstanceCertificate | None]:
    return instance_from_dict(json.loads(text))


def save_instance(path, inst: QSatInstance, cert: InstanceCertificate | None = None) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_instance(inst, cert))
        fh.write("\n")


def load_instance(path) -> tuple[QSatInstance, InstanceCertificate | None]:
    with open(path) as fh:
        return loads_instance(fh.read())
