"""Dense complex linear algebra shared by the rest of the package.

Conventions: qubits are indexed from 0 and qubit 0 is the most significant
tensor factor, so the amplitude of ``|b_0 b_1 ... b_{n-1}>`` sits at index
``sum(b_i * 2**(n-1-i))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-10


def as_cmatrix(a) -> np.ndarray:
    """Return ``a`` as a finite complex128 2-d array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def num_qubits(dim: int) -> int:
    """Number of qubits of a ``dim``-dimensional register; ``dim`` must be a power of 2."""
    n = int(dim).bit_length() - 1
    if dim < 1 or (1 << n) != dim:
        raise ValueError(f"dimension {dim} is not a power of 2")
    return n


@dataclass(frozen=True, eq=False)
class Subspace:
    """A linear subspace stored as an orthonormal column basis.

    ``basis`` has shape ``(ambient_dim, dim)``. The zero subspace has a basis
    with no columns.
    """

    ambient_dim: int
    basis: np.ndarray
    tol: float = DEFAULT_TOL
    _proj: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=complex).reshape(self.ambient_dim, -1)
        object.__setattr__(self, "basis", b)
        b.setflags(write=False)

    @classmethod
    def full(cls, ambient_dim: int, tol: float = DEFAULT_TOL) -> "Subspace":
        return cls(ambient_dim, np.eye(ambient_dim, dtype=complex), tol)

    @classmethod
    def zero(cls, ambient_dim: int, tol: float = DEFAULT_TOL) -> "Subspace":
        return cls(ambient_dim, np.zeros((ambient_dim, 0), dtype=complex), tol)

    @classmethod
    def span(cls, vectors, tol: float = DEFAULT_TOL) -> "Subspace":
        """Span of the columns of ``vectors`` (rank decided by SVD at ``tol``)."""
        v = as_cmatrix(vectors)
        d = v.shape[0]
        if v.shape[1] == 0:
            return cls.zero(d, tol)
        u, s, _ = np.linalg.svd(v, full_matrices=False)
        scale = max(1.0, s[0]) if s.size else 1.0
        r = int(np.sum(s > tol * scale))
        return cls(d, u[:, :r], tol)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def n_qubits(self) -> int:
        return num_qubits(self.ambient_dim)

    def projector(self) -> np.ndarray:
        if not self._proj:
            self._proj.append(self.basis @ self.basis.conj().T)
        return self._proj[0]

    def complement(self) -> "Subspace":
        """Orthogonal complement in the ambient space."""
        if self.dim == 0:
            return Subspace.full(self.ambient_dim, self.tol)
        if self.dim == self.ambient_dim:
            return Subspace.zero(self.ambient_dim, self.tol)
        q, _ = np.linalg.qr(
            np.hstack([self.basis, np.eye(self.ambient_dim, dtype=complex)]), mode="complete"
        )
        return Subspace(self.ambient_dim, q[:, self.dim :], self.tol)

    def distance(self, v) -> float:
        """Norm of the component of ``v`` orthogonal to the subspace."""
        v = np.asarray(v, dtype=complex).ravel()
        return float(np.linalg.norm(v - self.basis @ (self.basis.conj().T @ v)))

    def contains(self, v, tol: float | None = None) -> bool:
        v = np.asarray(v, dtype=complex).ravel()
        tol = self.tol if tol is None else tol
        return self.distance(v) <= tol * max(1.0, float(np.linalg.norm(v)))

    def contains_subspace(self, other: "Subspace", tol: float | None = None) -> bool:
        tol = 10 * self.tol if tol is None else tol
        if other.dim == 0:
            return True
        resid = other.basis - self.basis @ (self.basis.conj().T @ other.basis)
        return bool(np.linalg.norm(resid, 2) <= tol)

    def intersect(self, other: "Subspace") -> "Subspace":
        return kernel_intersection(
            [self.complement().basis.conj().T, other.complement().basis.conj().T],
            self.ambient_dim,
            min(self.tol, other.tol),
        )

    def equals(self, other: "Subspace", tol: float | None = None) -> bool:
        return self.dim == other.dim and self.contains_subspace(other, tol)

    def check(self) -> None:
        """Raise if the basis is not orthonormal to within ``10 * tol``."""
        g = self.basis.conj().T @ self.basis
        if self.dim and np.linalg.norm(g - np.eye(self.dim), 2) > 10 * max(self.tol, 1e-12):
            raise ValueError("subspace basis is not orthonormal")


def tensor(*mats) -> np.ndarray:
    """Kronecker product of the arguments, left factor most significant."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, [np.asarray(m, dtype=complex) for m in mats])


def ket(bits: str | Sequence[int]) -> np.ndarray:
    """Computational basis vector, e.g. ``ket("01")``."""
    bits = [int(b) for b in bits]
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)) or "0", 2)] = 1.0
    return v


def _check_qubits(n: int, qubits: Iterable[int]) -> tuple[int, ...]:
    qs = tuple(sorted(set(int(q) for q in qubits)))
    if any(q < 0 or q >= n for q in qs):
        raise ValueError(f"qubits {qs} out of range for n={n}")
    return qs


def partial_trace(rho, n: int, keep: Iterable[int]) -> np.ndarray:
    """Reduced density matrix of ``rho`` on the qubits in ``keep``.

    The result is ordered by increasing qubit index.
    """
    rho = as_cmatrix(rho)
    if rho.shape != (2**n, 2**n):
        raise ValueError(f"rho has shape {rho.shape}, expected {(2**n, 2**n)}")
    keep = _check_qubits(n, keep)
    t = rho.reshape((2,) * (2 * n))
    # dropped qubits share a label between ket and bra axes, so einsum traces them
    row = list(range(n))
    col = [n + q if q in keep else q for q in range(n)]
    out = [q for q in keep] + [n + q for q in keep]
    red = np.einsum(t, row + col, out)
    d = 2 ** len(keep)
    return red.reshape(d, d)


def state_matrix(psi, n: int, rows: Iterable[int]) -> np.ndarray:
    """Reshape a pure state into a ``2^|rows| x 2^(n-|rows|)`` matrix.

    Rows are indexed by the qubits in ``rows`` (increasing order) and columns
    by the remaining qubits (increasing order).
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != 2**n:
        raise ValueError(f"state has {psi.size} amplitudes, expected {2**n}")
    rows = _check_qubits(n, rows)
    cols = [q for q in range(n) if q not in rows]
    t = psi.reshape((2,) * n).transpose(list(rows) + cols)
    return t.reshape(2 ** len(rows), -1)


def reduced_density(psi, n: int, keep: Iterable[int]) -> np.ndarray:
    """``Tr_{complement of keep} |psi><psi|`` computed directly from the state."""
    m = state_matrix(psi, n, keep)
    return m @ m.conj().T


def _hermitian_or_raise(rho: np.ndarray, tol: float) -> None:
    if rho.shape[0] != rho.shape[1]:
        raise ValueError("matrix is not square")
    scale = max(1.0, float(np.abs(rho).max(initial=0.0)))
    if np.abs(rho - rho.conj().T).max(initial=0.0) > max(tol, 1e-12) * 1e3 * scale:
        raise ValueError("matrix is not Hermitian")


def support(rho, tol: float = DEFAULT_TOL) -> Subspace:
    """Span of the eigenvectors of ``rho`` with eigenvalue above ``tol * lambda_max``."""
    rho = as_cmatrix(rho)
    _hermitian_or_raise(rho, tol)
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    top = max(float(w[-1]), 0.0) if w.size else 0.0
    if top <= 0.0:
        return Subspace.zero(rho.shape[0], tol)
    keep = w > tol * top
    return Subspace(rho.shape[0], v[:, keep], tol)


def kernel(rho, tol: float = DEFAULT_TOL) -> Subspace:
    """Orthogonal complement of :func:`support`."""
    rho = as_cmatrix(rho)
    _hermitian_or_raise(rho, tol)
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    top = max(float(w[-1]), 0.0) if w.size else 0.0
    if top <= 0.0:
        return Subspace.full(rho.shape[0], tol)
    return Subspace(rho.shape[0], v[:, w <= tol * top], tol)


def state_support(psi, n: int, keep: Iterable[int], tol: float = DEFAULT_TOL) -> Subspace:
    """Support of the reduced density of a pure state, via an SVD of the state.

    Singular values are square roots of the reduced eigenvalues, so the
    threshold ``tol`` is applied to ``s**2`` relative to ``s_max**2``.
    """
    m = state_matrix(psi, n, keep)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return Subspace.zero(m.shape[0], tol)
    r = int(np.sum(s**2 > tol * s[0] ** 2))
    return Subspace(m.shape[0], u[:, :r], tol)


def kernel_intersection(constraints, ambient_dim: int, tol: float = DEFAULT_TOL) -> Subspace:
    """Common null space of a list of matrices with ``ambient_dim`` columns."""
    rows = [as_cmatrix(c) for c in constraints]
    rows = [r if r.shape[1] == ambient_dim else r.T for r in rows if r.size]
    for r in rows:
        if r.shape[1] != ambient_dim:
            raise ValueError(f"constraint with {r.shape[1]} columns, expected {ambient_dim}")
    if not rows:
        return Subspace.full(ambient_dim, tol)
    a = np.vstack(rows)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    scale = max(1.0, float(s[0])) if s.size else 1.0
    rank = int(np.sum(s > tol * scale))
    return Subspace(ambient_dim, vh[rank:].conj().T, tol)


def is_projector(p, tol: float = DEFAULT_TOL) -> bool:
    p = np.asarray(p, dtype=complex)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return False
    return bool(
        np.abs(p - p.conj().T).max(initial=0.0) <= tol and np.abs(p @ p - p).max(initial=0.0) <= tol
    )


def rng_from(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_state(dim: int, rng=None) -> np.ndarray:
    """Haar-random unit vector in ``C^dim``."""
    rng = rng_from(rng)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_state(n: int, rng=None) -> np.ndarray:
    """Haar-random pure state on ``n`` qubits."""
    return random_state(2**n, rng)


def haar_unitary(dim: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase correction."""
    rng = rng_from(rng)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_subspace(ambient_dim: int, dim: int, rng=None, tol: float = DEFAULT_TOL) -> Subspace:
    """Uniformly random ``dim``-dimensional subspace."""
    rng = rng_from(rng)
    if dim == 0:
        return Subspace.zero(ambient_dim, tol)
    z = rng.standard_normal((ambient_dim, dim)) + 1j * rng.standard_normal((ambient_dim, dim))
    q, _ = np.linalg.qr(z)
    return Subspace(ambient_dim, q, tol)


def product_state(factors: Sequence) -> np.ndarray:
    """Tensor product of single-site vectors."""
    return tensor(*[np.asarray(f, dtype=complex).ravel() for f in factors]).ravel()


def ghz_state(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v
