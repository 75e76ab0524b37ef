import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qksat.instance import (
    QSatInstance,
    block_size,
    dumps_instance,
    far_eps,
    gen_far,
    gen_random,
    gen_satisfiable,
    instance_to_dict,
    loads_instance,
    restrict,
)
from qksat.linalg import ket


def test_rejects_non_projector():
    with pytest.raises(ValueError):
        QSatInstance(2, 2, {(0, 1): np.ones((4, 4))})
    with pytest.raises(ValueError):
        QSatInstance(2, 2, {(0, 2): np.eye(4)})


def test_missing_subsets_are_zero():
    inst = QSatInstance(3, 2, {(1, 0): np.diag([0, 0, 0, 1.0])})
    assert (0, 1) in inst.projectors
    assert not inst.projector((1, 2)).any()
    assert inst.product_residual([[1, 0]] * 3) == 0
    assert np.isclose(inst.product_residual([[0, 1]] * 3), 1.0)


@given(st.integers(0, 2**32 - 1), st.integers(3, 9), st.integers(2, 3))
@settings(max_examples=15, deadline=None)
def test_planted_product_witness_solves_instance(seed, n, k):
    inst, cert = gen_satisfiable(n, k, seed)
    assert cert.witness_residual(inst) < 1e-9
    C = sorted(np.random.default_rng(seed).choice(n, size=k + 0, replace=False).tolist())
    local = restrict(inst, C)
    assert local.max_violation(cert.witness[C]) < 1e-9


def test_entangled_planted_state_is_ground_state(rng):
    inst, cert = gen_satisfiable(5, 2, rng, mode="entangled")
    assert cert.witness_residual(inst) < 1e-9
    assert inst.residual(cert.witness) < 1e-18


def test_restrict_relabels_and_composes(rng):
    inst = gen_random(6, 2, rng)
    outer = restrict(inst, [1, 2, 4, 5])
    inner = restrict(outer, [0, 2, 3])
    direct = restrict(inst, [1, 4, 5])
    assert inner.equals(direct)
    assert np.allclose(direct.projector((0, 1)), inst.projector((1, 4)))


def test_restrict_is_identity_on_full_set(rng):
    inst = gen_random(5, 3, rng)
    assert restrict(inst, range(5)).equals(inst)


def test_far_families():
    inst, cert = gen_far(8, 2, 0, "all-identity")
    assert cert.eps == Fraction(28, 64) == far_eps(8, 2)
    assert len(inst.nontrivial()) == 28
    inst, cert = gen_far(10, 2, 3, "dense-local-block", rho=0.5)
    b = block_size(10, 0.5)
    assert cert.eps == Fraction(b * (b - 1) // 2, 100)
    assert len(inst.nontrivial()) == b * (b - 1) // 2


def test_json_round_trip(rng):
    inst, cert = gen_satisfiable(6, 3, rng)
    text = dumps_instance(inst, cert)
    back, bcert = loads_instance(text)
    assert back.equals(inst, tol=0)
    assert np.array_equal(bcert.witness, cert.witness)
    assert dumps_instance(back, bcert) == text
    far, fcert = gen_far(6, 2, 1)
    back, bcert = loads_instance(json.dumps(instance_to_dict(far, fcert)))
    assert bcert.eps == fcert.eps


def test_generators_are_deterministic():
    a, _ = gen_satisfiable(7, 2, 11)
    b, _ = gen_satisfiable(7, 2, 11)
    assert dumps_instance(a) == dumps_instance(b)


def test_planted_basis_witness_is_exactly_annihilated():
    w = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=float)
    inst, _ = gen_satisfiable(4, 2, 5, witness=w)
    for s, P in inst.projectors.items():
        v = ket("".join("0" if w[q, 0] else "1" for q in s))
        assert np.linalg.norm(P @ v) < 1e-12


def test_full_rank_profile_gives_unsatisfiable_pairs():
    # rank 3 on every pair leaves only the planted product line
    inst, cert = gen_satisfiable(4, 2, 2, rank_profile=3)
    for s in itertools.combinations(range(4), 2):
        assert np.isclose(np.trace(inst.projector(s)).real, 3)
