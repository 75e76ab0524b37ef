import itertools
import json

import numpy as np
import pytest

from qksat.assignment import (
    CONFLICTING,
    HEAVY,
    NOT_BAD,
    ChainRecord,
    ProductAssignment,
    bad_census,
    classify,
    delta,
    grow_chain,
    heavy_threshold,
    l_space,
    w0_bound,
    w_value,
)
from qksat.instance import QSatInstance, gen_far, gen_satisfiable
from qksat.linalg import Subspace, ket


def _zero(n, k):
    return QSatInstance(n, k, {})


def _identity(n, k):
    return gen_far(n, k, 0, "all-identity")[0]


def _line(v):
    return Subspace.span(np.asarray(v, dtype=complex).reshape(2, 1))


def test_zero_instance_gives_full_space():
    inst = _zero(5, 3)
    a = ProductAssignment.build(inst, {0: ket("0")})
    assert l_space(inst, a, (1, 2)).dim == 4
    assert l_space(inst, a, (3,)).dim == 2


def test_identity_conflicts_once_enough_qubits_are_fixed():
    inst = _identity(5, 2)
    a = ProductAssignment((0,), (_line(ket("0")),))
    assert l_space(inst, a, (3,)).dim == 0


def test_single_projector_forces_orthogonal_state():
    P = np.outer(ket("11"), ket("11").conj())
    inst = QSatInstance(4, 2, {(1, 2): P})
    a = ProductAssignment.build(inst, {1: ket("1")})
    L = l_space(inst, a, (2,))
    assert L.dim == 1
    assert L.contains(ket("0"))


def test_sigma_removes_a_constraint():
    P = np.outer(ket("11"), ket("11").conj())
    inst = QSatInstance(4, 2, {(1, 2): P})
    a = ProductAssignment.build(inst, {1: ket("1")})
    assert l_space(inst, a, (2,), {(1, 2)}).dim == 2


def test_l_space_target_checks():
    inst = _zero(4, 2)
    a = ProductAssignment.build(inst, {0: ket("0")})
    with pytest.raises(ValueError):
        l_space(inst, a, (0,))
    with pytest.raises(ValueError):
        l_space(inst, a, (1, 2))


def test_build_rejects_a_violating_assignment():
    P = np.outer(ket("11"), ket("11").conj())
    inst = QSatInstance(3, 2, {(0, 1): P})
    with pytest.raises(ValueError):
        ProductAssignment.build(inst, {0: ket("1"), 1: ket("1")})


def test_delta_zero_on_zero_instance():
    inst = _zero(5, 2)
    a = ProductAssignment.empty()
    assert delta(inst, a, 2, _line(ket("0"))) == 0


def test_delta_identity_k2_n5_is_eight():
    inst = _identity(5, 2)
    assert delta(inst, ProductAssignment.empty(), 0, _line(ket("0"))) == 8


def _recount_delta(inst, a, x, V):
    """Independent dimension census using explicit projector contraction."""
    n, k = inst.n, inst.k
    ext = a.extend(x, V)
    total = 0
    for j in range(1, k):
        for t in itertools.combinations([q for q in range(n) if q not in ext.S], j):
            total += (_dim_direct(inst, a, t) - _dim_direct(inst, ext, t)) * n ** (k - j - 1)
    return total


def _dim_direct(inst, a, t):
    # stack Pi_s (v (x) phi) for every completion phi drawn from assigned bases
    n, k = inst.n, inst.k
    cols = []
    j = len(t)
    for e in np.eye(2**j):
        blocks = []
        for T in itertools.combinations(a.S, k - j):
            s = tuple(sorted(t + T))
            if s not in inst.projectors:
                continue
            for choice in itertools.product(*[range(a.basis_of(q).shape[1]) for q in T]):
                vecs = {q: a.basis_of(q)[:, i] for q, i in zip(T, choice)}
                psi = e.reshape((2,) * j)
                order = list(t)
                for q in T:
                    psi = np.multiply.outer(psi, vecs[q])
                    order.append(q)
                perm = [order.index(q) for q in s]
                psi = np.transpose(psi, perm).ravel()
                blocks.append(inst.projectors[s] @ psi)
        cols.append(np.concatenate(blocks) if blocks else np.zeros(0))
    if not cols[0].size:
        return 2**j
    M = np.array(cols).T
    return 2**j - np.linalg.matrix_rank(M, tol=1e-9)


@pytest.mark.parametrize("seed", range(4))
def test_delta_matches_direct_recount(seed):
    inst, cert = gen_satisfiable(6, 3, seed, mode="product", rank_profile=(1, 4))
    w = cert.witness
    a = ProductAssignment.build(inst, {0: w[0], 3: w[3]})
    V = _line(w[1])
    assert delta(inst, a, 1, V) == _recount_delta(inst, a, 1, V)
    V2 = _line(np.array([1, 1j]) / np.sqrt(2))
    if l_space(inst, a, (1,)).contains(V2.basis[:, 0]):
        assert delta(inst, a, 1, V2) == _recount_delta(inst, a, 1, V2)


def test_classify_examples():
    inst = _identity(5, 2)
    a = ProductAssignment((0,), (_line(ket("0")),))
    assert classify(inst, a, 2, 0.5).kind == CONFLICTING
    c = classify(inst, ProductAssignment.empty(), 2, 0.5)
    assert c.kind == HEAVY
    assert c.delta_min == 8
    assert c.threshold == pytest.approx(0.5)
    assert classify(_zero(5, 2), ProductAssignment.empty(), 2, 0.5).kind == NOT_BAD


def test_census_on_identity_with_assignment():
    inst = _identity(6, 3)
    a = ProductAssignment((0, 1), (_line(ket("0")), _line(ket("1"))))
    assert bad_census(inst, a, 0.1) == 4


def test_census_on_dense_block_exceeds_threshold():
    for seed in range(5):
        inst, cert = gen_far(8, 2, seed, "dense-local-block")
        eps = cert.eps
        assert bad_census(inst, ProductAssignment.empty(), eps) > float(eps) * inst.n / 5


def test_chain_on_zero_instance_is_empty():
    rec = grow_chain(_zero(5, 2), 0.5, 5, seed=0)
    assert len(rec) == 0
    assert rec.stop_reason == "no-heavy"


def test_chain_on_identity_decreases_w():
    inst = _identity(8, 2)
    rec = grow_chain(inst, 0.5, 8, seed=1)
    assert rec.threshold == pytest.approx(0.8)
    assert len(rec) >= 1
    assert rec.decrease_violations() == []
    # recompute W along the chain from scratch
    a = ProductAssignment.empty()
    assert rec.W_values[0] == w_value(inst, a)
    for x, V, W in zip(rec.qubits, rec.subspaces, rec.W_values[1:]):
        a = a.extend(x, V)
        assert W == w_value(inst, a)
        assert W < rec.W_values[0]


@pytest.mark.parametrize("n,k", [(5, 2), (6, 3), (7, 2)])
def test_initial_w_within_bound(n, k):
    inst = _identity(n, k)
    assert w_value(inst, ProductAssignment.empty()) <= w0_bound(n, k)
    direct = sum(2 ** len(t) * n ** (k - len(t) - 1) for j in range(1, k) for t in itertools.combinations(range(n), j))
    assert w_value(inst, ProductAssignment.empty()) == direct


def test_chain_record_round_trip():
    rec = grow_chain(_identity(6, 2), 0.5, 3, seed=2)
    d = json.loads(json.dumps(rec.to_dict()))
    back = ChainRecord.from_dict(d)
    assert back.qubits == rec.qubits
    assert back.W_values == rec.W_values
    assert all(u.equals(v) for u, v in zip(back.subspaces, rec.subspaces))
    assert back.to_dict() == rec.to_dict()


def test_heavy_threshold_formula():
    assert heavy_threshold(_zero(10, 3), 0.5) == pytest.approx(0.5 * 100 / 5)


def test_size_cap():
    with pytest.raises(ValueError):
        grow_chain(_zero(20, 2), 0.5, 1)
