import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _gen import SUPPORT, random_operator
from sepkern.cli import perturb_outside_support
from sepkern.commrel import (
    RelationSpec,
    condition_kernels,
    verify_covariance,
    verify_monomial,
    verify_reciprocal,
    verify_two_sided,
)
from sepkern.families import build_family
from sepkern.measure import FunctionExpr, SupportSet
from sepkern.sepop import KernelTerm, PolynomialSpec, SeparableOperator, compose, kernel_distance, polynomial

Z = PolynomialSpec.identity()


def test_relation_spec_rejects_identity_parts():
    A = random_operator(np.random.default_rng(0))
    with pytest.raises(ValueError):
        RelationSpec(Z, Z, SeparableOperator(A.terms, A.support, 2.0, 1.0), A)


def test_T4_holds_with_zero_residuals():
    fam = build_family("T4")
    rep = verify_monomial(fam.delta, 2, fam.A, fam.B)
    assert rep.holds and rep.violated_condition is None
    assert max(rep.residuals) <= 1e-12
    assert rep.residuals[1:] == (0.0, 0.0)


def test_perturbation_outside_common_support_breaks_condition_three():
    fam = build_family("T4")
    B = perturb_outside_support(fam, 1.0, 0.1)
    rep = verify_monomial(fam.delta, 2, fam.A, B)
    assert not rep.holds
    assert rep.violated == (3,)
    assert rep.residuals[2] > 1e-3


def test_commuting_with_polynomials_of_itself():
    A = random_operator(np.random.default_rng(1), 3)
    F = PolynomialSpec([0.0, 0.5, -1.0, 0.25])
    rep = verify_two_sided(RelationSpec(F, F, A, polynomial(PolynomialSpec([0.0, 1.0, 2.0]), A)))
    assert rep.holds


def test_zero_B_holds_for_any_F():
    A = random_operator(np.random.default_rng(2))
    rep = verify_covariance(PolynomialSpec([3.0, -1.0, 2.0]), A, SeparableOperator.zero(SUPPORT))
    assert rep.holds


def test_zero_A_with_constant_F_fails():
    B = random_operator(np.random.default_rng(3))
    rep = verify_covariance(PolynomialSpec([1.0]), SeparableOperator.zero(SUPPORT), B)
    assert not rep.holds
    assert rep.violated_condition == 1


def test_T5_family_covariance():
    fam = build_family("T5")
    assert verify_covariance(PolynomialSpec.monomial(fam.delta, 2), fam.A, fam.B).holds


def test_laurent_any_delta():
    fam = build_family("laurent")
    for delta in (-3.0, 0.5, 7.0):
        rep = verify_monomial(delta, 2, fam.A, fam.B)
        assert rep.holds and rep.lhs_norm <= 1e-12 and rep.rhs_norm <= 1e-12


def test_monomial_argument_checks():
    A = random_operator(np.random.default_rng(4))
    with pytest.raises(ValueError):
        verify_monomial(0.0, 2, A, A)
    with pytest.raises(ValueError):
        verify_monomial(1.0, 0, A, A)
    assert verify_monomial(1.0, 1, A, A).holds


def test_reciprocal_with_rank_one_projectors_on_one_line():
    u = FunctionExpr.const(1.0, SupportSet.interval(0, 1))
    P = SeparableOperator.rank_one(u, FunctionExpr.const(1.0), SupportSet.interval(0, 1))
    Q = P * 2.5
    assert verify_reciprocal(Z, P, Q).holds


def test_distinct_supports_use_all_three_conditions():
    ga, gb = SupportSet.interval(0.0, 1.0), SupportSet.interval(0.5, 2.0)
    A = SeparableOperator([KernelTerm(FunctionExpr.const(1.0, ga), FunctionExpr.sin(1.0))], ga)
    B = SeparableOperator([KernelTerm(FunctionExpr.cos(1.0, window=gb), FunctionExpr.const(1.0))], gb)
    rep = verify_covariance(Z, A, B)
    assert not rep.holds
    on_gb, on_ga = condition_kernels(RelationSpec(Z, Z, A, B))
    assert on_gb.support.pieces == gb.pieces and on_ga.support.pieces == ga.pieces
    assert rep.violated_condition in (1, 2, 3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.1, 10) | st.floats(-10, -0.1))
def test_scaling_B_preserves_verdict(seed, lam):
    rng = np.random.default_rng(seed)
    A = random_operator(rng, int(rng.integers(1, 4)))
    if rng.random() < 0.5:
        B = polynomial(PolynomialSpec([0.0, 1.0, float(rng.uniform(-1, 1))]), A)
    else:
        B = random_operator(rng, int(rng.integers(1, 4)))
    F = PolynomialSpec([0.0, 1.0, float(rng.uniform(-1, 1))])
    assert verify_covariance(F, A, B).holds == verify_covariance(F, A, B * lam).holds


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_condition_verdict_agrees_with_direct(seed):
    rng = np.random.default_rng(seed)
    A = random_operator(rng, int(rng.integers(1, 4)))
    B = random_operator(rng, int(rng.integers(1, 4)),
                        support=[SUPPORT, SupportSet.interval(1.0, 3.0)][int(rng.integers(0, 2))])
    H = PolynomialSpec(list(rng.uniform(-1, 1, int(rng.integers(1, 4)))))
    F = PolynomialSpec(list(rng.uniform(-1, 1, int(rng.integers(1, 4)))))
    rep = verify_two_sided(RelationSpec(H, F, A, B))
    lhs = compose(polynomial(H, A), B)
    rhs = compose(B, polynomial(F, A))
    diff, _, _ = kernel_distance(lhs, rhs)
    assert rep.holds == (diff / rep.scale <= rep.tol)


def test_equal_supports_make_conditions_two_and_three_vacuous():
    rng = np.random.default_rng(6)
    A, B = random_operator(rng), random_operator(rng)
    rep = verify_covariance(PolynomialSpec([0.0, 0.0, 1.0]), A, B)
    assert rep.residuals[1] == 0.0 and rep.residuals[2] == 0.0
