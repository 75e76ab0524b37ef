import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qksat.groebner import ONE, GaussianRational, Polynomial, groebner, reduce_full

sp = pytest.importorskip("sympy")


def gr(re, im=0, den=1):
    return GaussianRational(re, im, den)


def test_gaussian_rational_field_ops():
    a, b = gr(1, 2, 3), gr(-4, 1, 5)
    assert (a * b) / b == a
    assert a - a == gr(0)
    assert a * a.inverse() == ONE
    assert complex(a + b) == pytest.approx(complex(a) + complex(b))
    assert gr(2, 4, 6) == gr(1, 2, 3)
    assert GaussianRational.from_complex(0.5 - 0.25j) == gr(2, -1, 4)
    with pytest.raises(ZeroDivisionError):
        gr(0).inverse()


def to_sympy(p: Polynomial, xs):
    expr = 0
    for m, c in p.terms.items():
        coeff = sp.Rational(c.re, c.den) + sp.I * sp.Rational(c.im, c.den)
        expr += coeff * sp.Mul(*[x**e for x, e in zip(xs, m)])
    return sp.expand(expr)


def random_poly(rng, nvars, terms, max_deg):
    out = {}
    for _ in range(terms):
        m = tuple(int(v) for v in rng.integers(0, max_deg + 1, nvars))
        if sum(m) > max_deg:
            continue
        out[m] = gr(int(rng.integers(-3, 4)), int(rng.integers(-2, 3)))
    return Polynomial(nvars, {m: c for m, c in out.items() if c})


def same_ideal(G1, G2, xs):
    """Ideal equality via mutual membership using sympy's own reduced basis."""
    if not G1 and not G2:
        return True
    S1 = sp.groebner(G1 or [0], *xs, order="grevlex", domain=sp.QQ_I)
    S2 = sp.groebner(G2 or [0], *xs, order="grevlex", domain=sp.QQ_I)
    return all(S1.contains(g) for g in G2) and all(S2.contains(g) for g in G1)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_basis_generates_the_same_ideal_as_sympy(seed):
    rng = np.random.default_rng(seed)
    nv = 3
    polys = [random_poly(rng, nv, 4, 2) for _ in range(int(rng.integers(2, 4)))]
    polys = [p for p in polys if not p.is_zero()]
    xs = sp.symbols(f"v0:{nv}")
    res = groebner(polys)
    assert res.complete
    ours = [to_sympy(p, xs) for p in res.basis]
    given_ = [to_sympy(p, xs) for p in polys]
    assert same_ideal(ours, given_, xs)
    ref = sp.groebner(given_, *xs, order="grevlex", domain=sp.QQ_I)
    assert res.is_unit == (list(ref.exprs) == [1])


def test_unit_ideal_detected():
    nv = 2
    x, y = Polynomial.variable(nv, 0), Polynomial.variable(nv, 1)
    one = Polynomial.constant(nv, ONE)
    res = groebner([x * y - one, x])
    assert res.is_unit


def test_reduction_by_basis_vanishes_on_members():
    nv = 2
    x, y = Polynomial.variable(nv, 0), Polynomial.variable(nv, 1)
    one = Polynomial.constant(nv, ONE)
    f, g = x * x - y, x * y - one
    res = groebner([f, g])
    member = f * (x + y) + g * g
    assert reduce_full(member, res.basis).is_zero()


def test_budget_exhaustion_is_reported():
    nv = 3
    x, y, z = (Polynomial.variable(nv, i) for i in range(3))
    one = Polynomial.constant(nv, ONE)
    polys = [x * x + y * z + one, y * y + x * z - one, z * z + x * y + x]
    res = groebner(polys, max_spairs=1)
    assert not res.complete and not res.is_unit


def test_polynomial_evaluate_and_format():
    nv = 2
    x, y = Polynomial.variable(nv, 0), Polynomial.variable(nv, 1)
    p = x * y + Polynomial.constant(nv, gr(0, 1))
    assert p.evaluate([2, 3]) == pytest.approx(6 + 1j)
    assert "x*y" in p.format(["x", "y"])
