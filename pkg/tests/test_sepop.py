import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as spi

from _gen import SUPPORT, WINDOW, random_operator, random_probe
from sepkern.errors import MembershipError, SupportMismatch
from sepkern.measure import FunctionExpr, SupportSet, pairing
from sepkern.sepop import (
    KernelTerm,
    PolynomialSpec,
    SeparableOperator,
    adjoint,
    apply,
    canonical_form,
    commutator,
    compose,
    gram_matrix,
    kernel_coefficient,
    kernel_distance,
    kernel_norm,
    merged,
    operators_equal,
    polynomial,
    power,
)

seeds = st.integers(0, 2**31)


def kernel_at(A: SeparableOperator, t: float, s: float) -> float:
    if not A.support.contains([s])[0]:
        return 0.0
    return sum(float(term.left(np.array([t]))[0] * term.right(np.array([s]))[0]) for term in A.terms)


def test_polynomial_spec():
    P = PolynomialSpec([1.0, 2.0, 0.0, 0.0])
    assert P.coeffs == (1.0, 2.0) and P.degree == 1 and P.constant == 1.0
    assert P(3.0) == 7.0
    assert PolynomialSpec.monomial(2.0, 3).coeffs == (0.0, 0.0, 0.0, 2.0)
    assert (P + PolynomialSpec.identity()).coeffs == (1.0, 3.0)


def test_left_factors_need_windows():
    with pytest.raises(ValueError):
        SeparableOperator([KernelTerm(FunctionExpr.sin(1.0), FunctionExpr.cos(1.0))], SUPPORT)


def test_right_factors_are_cut_to_support():
    A = SeparableOperator([KernelTerm(FunctionExpr.const(1.0, WINDOW), FunctionExpr.const(1.0))], SUPPORT)
    assert A.terms[0].right.window.pieces == SUPPORT.pieces
    assert A.output_window.pieces == WINDOW.pieces


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_compose_matches_quadrature_kernel(seed):
    rng = np.random.default_rng(seed)
    A = random_operator(rng, int(rng.integers(1, 3)))
    B = random_operator(rng, int(rng.integers(1, 3)))
    AB = compose(A, B)
    for t, s in rng.uniform([0.0, 0.5], [2.5, 2.0], size=(3, 2)):
        ref = spi.quad(lambda u: kernel_at(A, t, u) * kernel_at(B, u, s), 0.5, 2.0,
                       epsabs=1e-12, epsrel=1e-12, limit=200)[0]
        assert kernel_at(AB, t, s) == pytest.approx(ref, rel=1e-8, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_apply_is_composition_on_probes(seed):
    rng = np.random.default_rng(seed)
    A, B = random_operator(rng), random_operator(rng)
    x = random_probe(rng, SUPPORT)
    lhs = apply(compose(A, B), x)
    rhs = apply(A, apply(B, x))
    assert kernel_distance(SeparableOperator([KernelTerm(lhs, FunctionExpr.const(1.0))], SUPPORT),
                           SeparableOperator([KernelTerm(rhs, FunctionExpr.const(1.0))], SUPPORT))[0] \
        <= 1e-10 * max(1.0, kernel_norm(A) * kernel_norm(B))


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 5))
def test_power_matches_repeated_compose(seed, m):
    A = random_operator(np.random.default_rng(seed))
    acc = A
    for _ in range(m - 1):
        acc = compose(acc, A)
    diff, n1, n2 = kernel_distance(power(A, m), acc)
    assert diff <= 1e-9 * max(n1, n2, 1e-300)


def test_gram_matrix_entries():
    A = random_operator(np.random.default_rng(3), 3)
    g = gram_matrix(A)
    for i, ti in enumerate(A.terms):
        for j, tj in enumerate(A.terms):
            assert g[i, j] == pairing(tj.left, ti.right, SUPPORT).value


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_polynomial_is_additive_and_matches_powers(seed):
    rng = np.random.default_rng(seed)
    A = random_operator(rng, int(rng.integers(1, 4)))
    F = PolynomialSpec([0.0, *rng.uniform(-1, 1, 3)])
    G = PolynomialSpec([0.0, *rng.uniform(-1, 1, 2)])
    direct = power(A, 1) * F.coeffs[1] + power(A, 2) * F.coeffs[2] + power(A, 3) * F.coeffs[3]
    diff, n1, n2 = kernel_distance(polynomial(F, A), direct)
    assert diff <= 1e-10 * max(n1, n2, 1e-300)
    diff, n1, n2 = kernel_distance(polynomial(F + G, A), polynomial(F, A) + polynomial(G, A))
    assert diff <= 1e-10 * max(n1, n2, 1e-300)


def test_polynomial_constant_term_is_identity_part():
    A = random_operator(np.random.default_rng(9), 2)
    P = polynomial(PolynomialSpec([2.5, 1.0]), A)
    assert P.scalar == 2.5
    assert operators_equal(P - SeparableOperator((), SUPPORT, 2.0, 2.5), A)


def test_power_rejects_identity_part():
    A = random_operator(np.random.default_rng(1), 2)
    with pytest.raises(ValueError):
        power(SeparableOperator(A.terms, SUPPORT, 2.0, 1.0), 2)
    with pytest.raises(ValueError):
        power(A, 0)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_commutator_is_antisymmetric_and_zero_on_self(seed):
    rng = np.random.default_rng(seed)
    A, B = random_operator(rng), random_operator(rng)
    assert operators_equal(commutator(A, B), -commutator(B, A))
    assert kernel_norm(commutator(A, A)) <= 1e-12 * max(kernel_norm(A) ** 2, 1.0)
    assert kernel_norm(commutator(A, power(A, 2))) <= 1e-10 * max(kernel_norm(A) ** 3, 1.0)


def test_commutator_requires_common_support():
    rng = np.random.default_rng(4)
    A = random_operator(rng)
    B = random_operator(rng, support=SupportSet.interval(0.0, 1.0))
    with pytest.raises(SupportMismatch):
        commutator(A, B)


def test_kernel_norm_matches_quadrature():
    A = random_operator(np.random.default_rng(12), 2)
    ref = spi.dblquad(lambda s, t: kernel_at(A, t, s) ** 2, 0.0, 2.5, 0.5, 2.0, epsabs=1e-10)[0]
    assert kernel_norm(A) == pytest.approx(math.sqrt(ref), rel=1e-7)


def test_merged_preserves_operator_and_reduces_rank():
    s = FunctionExpr.sin(1.0, window=WINDOW)
    c = FunctionExpr.cos(1.0)
    A = SeparableOperator([KernelTerm(s, c), KernelTerm(s * 2.0, c), KernelTerm(s, FunctionExpr.const(1.0))],
                          SUPPORT)
    M = merged(A)
    assert M.rank < A.rank
    assert operators_equal(M, A)


def test_kernel_coefficient_reads_single_products():
    s = FunctionExpr.sin(1.0, window=WINDOW)
    c = FunctionExpr.cos(1.0, window=SUPPORT)
    A = SeparableOperator([KernelTerm(s * 3.0, c), KernelTerm(s, FunctionExpr.const(1.0))], SUPPORT)
    assert kernel_coefficient(A, s, c) == pytest.approx(3.0)
    assert kernel_coefficient(A, s, FunctionExpr.const(1.0, SUPPORT)) == pytest.approx(1.0)


def test_canonical_form_shares_basis():
    rng = np.random.default_rng(5)
    A, B = random_operator(rng), random_operator(rng)
    cf = canonical_form(A, B)
    assert len(cf.matrices) == 2
    assert cf.matrices[0].shape == cf.matrices[1].shape


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_adjoint_duality_and_involution(seed):
    rng = np.random.default_rng(seed)
    A = random_operator(rng)
    As = adjoint(A)
    assert As.support.pieces == A.output_window.pieces
    for _ in range(5):
        x, y = random_probe(rng, SUPPORT), random_probe(rng, WINDOW)
        lhs = pairing(apply(A, x), y, None).value
        rhs = pairing(x, apply(As, y), None).value
        assert lhs == pytest.approx(rhs, abs=1e-10)
    assert operators_equal(adjoint(As), SeparableOperator(A.terms, A.support, A.p))


def test_adjoint_swaps_exponents():
    A = random_operator(np.random.default_rng(2), p=3.0)
    assert adjoint(A).p == pytest.approx(1.5)


def test_membership_rejects_nonintegrable_factor():
    left = FunctionExpr.const(1.0, SupportSet.half_line(1.0))
    A = SeparableOperator([KernelTerm(left, FunctionExpr.const(1.0))], SupportSet.interval(0, 1), p=2.0)
    with pytest.raises(MembershipError):
        A.check_membership()


def test_operator_arithmetic():
    rng = np.random.default_rng(8)
    A, B = random_operator(rng), random_operator(rng)
    assert operators_equal((A + B) - B, A)
    assert operators_equal(A * 2.0, A + A)
    assert operators_equal(A @ B, compose(A, B))
    x = random_probe(rng, SUPPORT)
    assert pairing(A(x) - apply(A, x), A(x) - apply(A, x), None).value == 0.0
