"""Verification of two-sided polynomial commutation relations ``H(A)B = BF(A)``.

For ``A = Σ a_i ⊗ c_i`` on ``G_A`` and ``B = Σ b_k ⊗ e_k`` on ``G_B`` the
difference ``H(A)B − BF(A)`` has kernel

    (h₀ − f₀) Σ_k b_k(t) e_k(s)·I_{G_B}(s)
      + Σ_{i,k} a_i(t) U[i,k] e_k(s)·I_{G_B}(s)
      − Σ_{k,m} b_k(t) V[k,m] c_m(s)·I_{G_A}(s)

with ``U = Σ_l h_l Γ^{l−1} P`` and ``V = S Σ_j f_j Γ^{j−1}``, where
``Γ[i,j] = Q_{G_A}(a_j, c_i)``, ``P[m,k] = Q_{G_A}(b_k, c_m)`` and
``S[k,i] = Q_{G_B}(e_k, a_i)``.  The relation holds exactly when this
kernel vanishes a.e. on ``X × G``, ``X × (G_A∖G)`` and ``X × (G_B∖G)``
separately.  The same verdict is recomputed by building both products
directly; a mismatch is a bug and raises :class:`ConsistencyError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConsistencyError
from .measure import FunctionExpr, SupportSet, pairing
from .sepop import (
    KernelTerm,
    PolynomialSpec,
    SeparableOperator,
    compose,
    gram_matrix,
    kernel_distance,
    kernel_norm,
    polynomial,
)

DEFAULT_TOL = 1e-9
SCALE_FLOOR = 1e-300
# verdicts whose residuals sit within this factor of tol may legitimately differ
AMBIGUITY_BAND = 10.0


@dataclass(frozen=True)
class RelationSpec:
    H: PolynomialSpec
    F: PolynomialSpec
    A: SeparableOperator
    B: SeparableOperator

    def __post_init__(self):
        if self.A.scalar != 0.0 or self.B.scalar != 0.0:
            raise ValueError("relation operands must be pure kernel operators")


@dataclass(frozen=True)
class RelationReport:
    """Verdict plus relative residuals of the three kernel conditions.

    ``residuals[0]`` is measured on ``X × G``, ``residuals[1]`` on
    ``X × (G_A∖G)`` and ``residuals[2]`` on ``X × (G_B∖G)``; all are divided
    by ``scale``.  ``direct_residual`` is the relative distance between the
    two products computed independently.
    """

    holds: bool
    residuals: tuple
    scale: float
    direct_residual: float
    lhs_norm: float
    rhs_norm: float
    tol: float = DEFAULT_TOL
    violated: tuple = field(default=())

    @property
    def violated_condition(self) -> Optional[int]:
        return self.violated[0] if self.violated else None


def _poly_gram(coeffs, g: np.ndarray) -> np.ndarray:
    """``Σ_{j≥1} coeffs[j] Γ^{j−1}``."""
    n = g.shape[0]
    out = np.zeros((n, n))
    gp = np.eye(n)
    for j, c in enumerate(coeffs[1:], start=1):
        if j > 1:
            gp = gp @ g
        if c != 0.0:
            out = out + c * gp
    return out


def _combine(weights, exprs) -> FunctionExpr:
    return FunctionExpr((w * c, a, win) for w, e in zip(weights, exprs) if w != 0.0
                        for c, a, win in e.terms)


def condition_kernels(spec: RelationSpec) -> tuple[SeparableOperator, SeparableOperator]:
    """Residual kernel split into its ``e_k`` part (on G_B) and ``c_m`` part (on G_A)."""
    A, B = spec.A, spec.B
    h, f = spec.H.coeffs, spec.F.coeffs
    h0, f0 = spec.H.constant, spec.F.constant
    nA, nB = A.rank, B.rank
    g = gram_matrix(A) if nA else np.zeros((0, 0))
    P = np.array([[pairing(tb.left, ta.right, A.support).value for tb in B.terms]
                  for ta in A.terms]).reshape(nA, nB)
    S = np.array([[pairing(ta.left, tb.right, B.support).value for ta in A.terms]
                  for tb in B.terms]).reshape(nB, nA)
    U = _poly_gram(h, g) @ P
    V = S @ _poly_gram(f, g)
    e = [tb.right for tb in B.terms]
    c = [ta.right for ta in A.terms]
    on_gb = [KernelTerm(tb.left * (h0 - f0), tb.right) for tb in B.terms]
    on_gb += [KernelTerm(ta.left, _combine(U[i], e)) for i, ta in enumerate(A.terms)]
    on_ga = [KernelTerm(tb.left * -1.0, _combine(V[k], c)) for k, tb in enumerate(B.terms)]
    return (SeparableOperator(on_gb, B.support, A.p),
            SeparableOperator(on_ga, A.support, A.p))


def _restricted(op: SeparableOperator, region: SupportSet) -> SeparableOperator:
    return SeparableOperator(op.terms, region, op.p)


def _reference_scale(spec: RelationSpec) -> float:
    """A-priori bound on both products from submultiplicativity of the kernel norm.

    Keeps verdicts meaningful when both sides vanish and only rounding is left.
    """
    na, nb = kernel_norm(spec.A), kernel_norm(spec.B)
    lhs = sum(abs(c) * na**l for l, c in enumerate(spec.H.coeffs))
    rhs = sum(abs(c) * na**j for j, c in enumerate(spec.F.coeffs))
    return nb * max(lhs, rhs)


def verify_two_sided(spec: RelationSpec, tol: float = DEFAULT_TOL) -> RelationReport:
    """Check ``H(A)B = BF(A)`` through the three kernel conditions and directly."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    A, B = spec.A, spec.B
    G = A.support.intersect(B.support)
    on_gb, on_ga = condition_kernels(spec)

    lhs = compose(polynomial(spec.H, A), B)
    rhs = compose(B, polynomial(spec.F, A))
    diff, lhs_norm, rhs_norm = kernel_distance(lhs, rhs)
    scale = max(lhs_norm, rhs_norm, _reference_scale(spec), SCALE_FLOOR)

    regions = (G, A.support.difference(G), B.support.difference(G))
    absolute = []
    for idx, region in enumerate(regions):
        if region.is_empty:
            absolute.append(0.0)
            continue
        if idx == 0:
            op = _restricted(on_gb, region) + _restricted(on_ga, region)
        elif idx == 1:
            op = _restricted(on_ga, region)
        else:
            op = _restricted(on_gb, region)
        absolute.append(kernel_norm(op))
    residuals = tuple(r / scale for r in absolute)
    violated = tuple(i + 1 for i, r in enumerate(residuals) if r > tol)
    holds = not violated
    direct = diff / scale
    direct_holds = direct <= tol and abs(lhs.scalar - rhs.scalar) <= 1e-12

    if holds != direct_holds:
        worst = max(max(residuals), direct)
        if not (tol / AMBIGUITY_BAND <= worst <= tol * AMBIGUITY_BAND):
            raise ConsistencyError(
                f"condition verdict {holds} (residuals {residuals}) disagrees with "
                f"direct verdict {direct_holds} (residual {direct})")
    return RelationReport(holds, residuals, scale, direct, lhs_norm, rhs_norm, tol, violated)


def verify_covariance(F: PolynomialSpec, A: SeparableOperator, B: SeparableOperator,
                      tol: float = DEFAULT_TOL) -> RelationReport:
    """``AB = BF(A)``."""
    return verify_two_sided(RelationSpec(PolynomialSpec.identity(), F, A, B), tol)


def verify_reciprocal(H: PolynomialSpec, A: SeparableOperator, B: SeparableOperator,
                      tol: float = DEFAULT_TOL) -> RelationReport:
    """``BA = H(A)B``."""
    return verify_two_sided(RelationSpec(H, PolynomialSpec.identity(), A, B), tol)


def verify_monomial(delta: float, d: int, A: SeparableOperator, B: SeparableOperator,
                    tol: float = DEFAULT_TOL) -> RelationReport:
    """``AB = δ B A^d`` for δ ≠ 0."""
    if delta == 0:
        raise ValueError("delta must be nonzero")
    if d < 1:
        raise ValueError("degree must be a positive integer")
    return verify_covariance(PolynomialSpec.monomial(delta, d), A, B, tol)


__all__ = [
    "RelationReport", "RelationSpec", "condition_kernels", "verify_covariance",
    "verify_monomial", "verify_reciprocal", "verify_two_sided",
]
