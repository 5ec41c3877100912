"""Fock Majoranas, polynomial algebra, reflections, RP functionals."""

import numpy as np
import pytest

from vortexladder.errors import InvalidSpecError, MalformedMatrixError
from vortexladder.rp import (
    MajoranaPolynomial,
    doubled_hamiltonians,
    energy_inequality_check,
    even_monomials,
    fix_cross_signs,
    fock_majoranas,
    mirror_theta,
    negative_half,
    quadratic,
    random_even_element,
    reflect,
    rp_functional,
    split_by_side,
    trace_bound_check,
)


def test_fock_clifford_relations():
    for n in (2, 4, 6):
        rep = fock_majoranas(n)
        assert rep.dim == 1 << (n // 2)
        eye = np.eye(rep.dim)
        for k, c in enumerate(rep.matrices):
            assert np.array_equal(c, c.conj().T)
            assert np.array_equal(c @ c, eye)
            for l in range(k):
                d = rep.matrices[l]
                assert np.array_equal(c @ d + d @ c, np.zeros_like(eye))


def test_fock_guards():
    with pytest.raises(InvalidSpecError):
        fock_majoranas(18)
    with pytest.raises(InvalidSpecError):
        fock_majoranas(5)


def test_quartic_monomial_squares_to_plus_identity():
    p = MajoranaPolynomial(4, {(1, 2, 3, 4): 1.0})
    sq = p * p
    assert sq.terms == {(): 1.0}
    m = p.to_matrix(fock_majoranas(4))
    assert np.array_equal(m @ m, np.eye(4))


def test_polynomial_algebra_is_matrix_homomorphism():
    rng = np.random.default_rng(9)
    n = 6
    rep = fock_majoranas(n)
    monos = even_monomials(range(1, n + 1)) + [(1,), (3,), (1, 2, 5), (2, 4, 6)]
    for _ in range(50):
        pick = rng.choice(len(monos), size=4, replace=False)
        a = MajoranaPolynomial(
            n, {monos[i]: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for i in pick[:2]}
        )
        b = MajoranaPolynomial(
            n, {monos[i]: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for i in pick[2:]}
        )
        ma, mb = a.to_matrix(rep), b.to_matrix(rep)
        assert np.allclose((a * b).to_matrix(rep), ma @ mb, atol=1e-12)
        assert np.allclose((a + b).to_matrix(rep), ma + mb, atol=1e-12)
        assert np.allclose((a - 2.5 * b).to_matrix(rep), ma - 2.5 * mb, atol=1e-12)


def test_monomial_ordering_rules():
    # c2 c1 = -c1 c2 and repeated factors contract: encoded input must be sorted
    with pytest.raises(InvalidSpecError):
        MajoranaPolynomial(4, {(2, 1): 1.0})
    with pytest.raises(InvalidSpecError):
        MajoranaPolynomial(4, {(1, 1): 1.0})
    with pytest.raises(InvalidSpecError):
        MajoranaPolynomial(4, {(0, 1): 1.0})
    p = MajoranaPolynomial(4, {(1, 2): 1.0})
    q = MajoranaPolynomial(4, {(2, 3): 1.0})
    anti = p * q + q * p  # {c1c2, c2c3} = 0
    assert anti.terms == {}


def test_reflect_frozen_images_and_involution():
    n = 8
    theta = mirror_theta(n)
    assert theta == {1: 8, 2: 7, 3: 6, 4: 5, 5: 4, 6: 3, 7: 2, 8: 1}
    assert negative_half(n) == frozenset({1, 2, 3, 4})

    one = MajoranaPolynomial(n, {(1,): 1.0})
    assert reflect(one, theta).terms == {(8,): 1.0}
    pair = MajoranaPolynomial(n, {(1, 2): 1j})
    # antilinear: conj(i) = -i, then c8 c7 -> -c7 c8
    assert reflect(pair, theta).terms == {(7, 8): 1j}

    rng = np.random.default_rng(31)
    monos = even_monomials(range(1, 5)) + [(1, 3), (2, 4)]
    for _ in range(50):
        pick = rng.choice(len(monos), size=3, replace=False)
        p = MajoranaPolynomial(
            n, {monos[i]: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for i in pick}
        )
        assert reflect(reflect(p, theta), theta).close_to(p, tol=1e-14)
        assert reflect(p * 1j, theta).close_to(reflect(p, theta) * (-1j), tol=1e-14)
        image = reflect(p, theta)
        assert image.support() <= {theta[i] for i in p.support()}


def test_reflect_rejects_straddling_support():
    n = 4
    theta = mirror_theta(n)
    with pytest.raises(InvalidSpecError):
        reflect(MajoranaPolynomial(n, {(2, 3): 1.0}), theta)


def test_quadratic_builder_and_split():
    n = 4
    h = quadratic(n, {(1, 2): 0.7, (2, 3): 1.0, (3, 4): 0.7})
    assert h.terms[(1, 2)] == 0.7j and h.terms[(2, 3)] == 1.0j
    assert h.is_even
    with pytest.raises(InvalidSpecError):
        quadratic(n, {(2, 1): 1.0})
    minus, cross, plus = split_by_side(h)
    assert minus.terms == {(1, 2): 0.7j}
    assert cross.terms == {(2, 3): 1.0j}
    assert plus.terms == {(3, 4): 0.7j}


def test_rp_functional_symmetric_quadratic_is_nonnegative():
    n = 4
    theta = mirror_theta(n)
    h = quadratic(n, {(1, 2): 0.7, (3, 4): 0.7, (2, 3): 1.0, (1, 4): 0.4})
    b = MajoranaPolynomial(n, {(1, 2): 1.0})
    for beta in (0.5, 1.0, 2.0):
        assert rp_functional(b, h, theta, beta=beta) >= -1e-10
    rng = np.random.default_rng(12)
    for _ in range(25):
        b = random_even_element(rng, n, max_degree=2)
        assert rp_functional(b, h, theta) >= -1e-10


def test_rp_functional_input_validation():
    n = 4
    theta = mirror_theta(n)
    h = quadratic(n, {(1, 2): 0.5, (3, 4): 0.5, (2, 3): 1.0})
    with pytest.raises(InvalidSpecError):
        rp_functional(MajoranaPolynomial(n, {(1,): 1.0}), h, theta)  # odd element
    lopsided = quadratic(n, {(1, 2): 0.5, (3, 4): 0.9, (2, 3): 1.0})
    with pytest.raises(InvalidSpecError):
        rp_functional(MajoranaPolynomial(n, {(1, 2): 1.0}), lopsided, theta)


def test_fix_cross_signs():
    n = 4
    theta = mirror_theta(n)
    h = quadratic(n, {(1, 2): 0.5, (3, 4): 0.5, (2, 3): -1.0, (1, 4): -0.25})
    fixed, flips = fix_cross_signs(h, theta)
    assert fixed.terms[(2, 3)] == 1.0j and fixed.terms[(1, 4)] == 0.25j
    # both negative-half generators flip, so the bulk term is untouched
    assert (flips(1), flips(2), flips(3), flips(4)) == (-1, -1, 1, 1)
    assert fixed.terms[(1, 2)] == 0.5j
    b = MajoranaPolynomial(n, {(1, 2): 1.0})
    assert rp_functional(b, fixed, theta) >= -1e-10

    missing = quadratic(n, {(1, 2): 0.5, (3, 4): 0.5, (2, 3): 1.0, (1, 4): 0.0})
    with pytest.raises(InvalidSpecError):
        fix_cross_signs(missing, theta)  # zero cross coupling
    odd_form = MajoranaPolynomial(
        n, {(1, 2): 0.5j, (3, 4): 0.5j, (2, 3): 1.0, (1, 4): 0.25j}
    )
    with pytest.raises(InvalidSpecError):
        fix_cross_signs(odd_form, theta)  # cross term not of the i*w form


def test_doubled_hamiltonians_structure():
    n = 8
    theta = mirror_theta(n)
    rng = np.random.default_rng(21)
    weights = {
        pair: float(rng.uniform(-1, 1))
        for pair in ((1, 2), (1, 4), (2, 3), (5, 7), (6, 8), (7, 8))
    }
    weights.update({(i, n + 1 - i): float(rng.uniform(0.5, 1.5)) for i in range(1, 5)})
    h = quadratic(n, weights)
    hm, h0, hp = split_by_side(h)
    h1, h2 = doubled_hamiltonians(hm, h0, hp, theta)
    m1, c1, p1 = split_by_side(h1)
    assert m1.close_to(hm, tol=1e-14) and c1.close_to(h0, tol=1e-14)
    assert p1.close_to(reflect(hm, theta), tol=1e-14)
    m2, c2, p2 = split_by_side(h2)
    assert p2.close_to(hp, tol=1e-14) and c2.close_to(h0, tol=1e-14)
    assert m2.close_to(reflect(hp, theta), tol=1e-14)

    bad_h0 = MajoranaPolynomial(n, {(4, 5): 1.0})  # real coeff: flips under theta
    with pytest.raises(InvalidSpecError):
        doubled_hamiltonians(hm, bad_h0, hp, theta)


def test_trace_bound_and_energy_inequality_symmetric_case():
    n = 8
    theta = mirror_theta(n)
    weights = {(1, 2): 0.6, (3, 4): -0.2, (7, 8): 0.6, (5, 6): -0.2}
    weights.update({(i, n + 1 - i): 1.0 + 0.1 * i for i in range(1, 5)})
    h = quadratic(n, weights)
    hm, h0, hp = split_by_side(h)
    h1, h2 = doubled_hamiltonians(hm, h0, hp, theta)
    # fully symmetric: H1 = H2 = H, the bound is saturated
    assert h1.close_to(h, tol=1e-12) and h2.close_to(h, tol=1e-12)
    for beta in (0.5, 1.0, 2.0):
        rep = trace_bound_check(h, h1, h2, beta=beta)
        assert rep.holds
        assert rep.margin <= 1e-10 * rep.rhs
        assert rep.lhs == pytest.approx(rep.rhs, rel=1e-12)
    erep = energy_inequality_check(h, h1, h2)
    assert erep.holds
    assert erep.e0 <= 0  # traceless even polynomial
    assert abs(erep.gap) <= 1e-12


def test_trace_bound_asymmetric_bulk():
    n = 8
    theta = mirror_theta(n)
    rng = np.random.default_rng(40)
    weights = {}
    for pair in ((1, 2), (1, 4), (2, 3), (5, 7), (6, 8), (7, 8)):
        weights[pair] = float(rng.uniform(-1, 1))
    for i in range(1, 5):
        weights[(i, n + 1 - i)] = float(rng.uniform(0.5, 1.5))
    h = quadratic(n, weights)
    hm, h0, hp = split_by_side(h)
    h1, h2 = doubled_hamiltonians(hm, h0, hp, theta)
    for beta in (0.5, 1.0, 2.0):
        assert trace_bound_check(h, h1, h2, beta=beta).holds
    erep = energy_inequality_check(h, h1, h2)
    assert erep.holds


def test_even_monomial_enumeration():
    monos = even_monomials((1, 2, 3, 4))
    assert len(monos) == 8  # 1 + C(4,2) + C(4,4)
    assert () in monos and (1, 2, 3, 4) in monos
    assert len(even_monomials((1, 2, 3, 4), max_degree=2)) == 7
    assert all(len(m) % 2 == 0 for m in monos)


def test_random_even_element_support_and_determinism():
    n = 8
    a = random_even_element(np.random.default_rng(5), n)
    b = random_even_element(np.random.default_rng(5), n)
    assert a.terms == b.terms
    assert a.is_even
    assert a.support() <= negative_half(n)
    pos = random_even_element(np.random.default_rng(5), n, side="positive")
    assert pos.support() <= {5, 6, 7, 8}
