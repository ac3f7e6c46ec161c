"""Separable-kernel integral operators and their algebra.

An operator is ``(Ax)(t) = scalar·x(t) + ∫_G Σ_i a_i(t) c_i(s) x(s) ds``.
Left factors carry the output window; right factors are cut to the
integration support ``G`` when the operator is built, so operators with
different supports can be added and compared directly.

Kernel comparisons go through a *canonical form*: every factor is expanded
over a joint basis of ``(atom, cell)`` elements, where cells come from
splitting all windows at every breakpoint.  Distinct atoms on one cell are
linearly independent, so the coefficient matrix ``C`` with
``k(t,s) = Σ C[u,v] φ_u(t) ψ_v(s)`` is unique and differences cancel
exactly.  The kernel L² norm is then ``‖L_φᵀ C L_ψ‖_F`` with ``L`` a square
root of the basis Gram matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import MembershipError, SupportMismatch
from .measure import (
    Atom,
    FunctionExpr,
    SupportSet,
    as_exponent,
    atom_integral,
    atom_product,
    conjugate,
    is_in_lp,
    pairing,
)

EQUALITY_TOL = 1e-9
SCALAR_TOL = 1e-12


class KernelTerm(NamedTuple):
    left: FunctionExpr
    right: FunctionExpr


@dataclass(frozen=True)
class PolynomialSpec:
    """Real polynomial ``Σ_j coeffs[j] z^j`` with trailing zeros trimmed."""

    coeffs: tuple = ()

    def __post_init__(self):
        c = [float(x) for x in self.coeffs]
        while c and c[-1] == 0.0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def identity(cls) -> "PolynomialSpec":
        return cls((0.0, 1.0))

    @classmethod
    def monomial(cls, delta: float, d: int) -> "PolynomialSpec":
        if d < 0:
            raise ValueError("monomial degree must be non-negative")
        return cls(tuple([0.0] * d + [float(delta)]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def constant(self) -> float:
        return self.coeffs[0] if self.coeffs else 0.0

    def __add__(self, other: "PolynomialSpec") -> "PolynomialSpec":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0.0,) * (n - len(self.coeffs))
        b = other.coeffs + (0.0,) * (n - len(other.coeffs))
        return PolynomialSpec(tuple(x + y for x, y in zip(a, b)))

    def __call__(self, z: float) -> float:
        return sum(c * z**j for j, c in enumerate(self.coeffs))


class SeparableOperator:
    """Immutable ``scalar·I + Σ a_i ⊗ c_i`` acting on ``L_p``."""

    __slots__ = ("scalar", "terms", "support", "p")

    def __init__(self, terms: Iterable[KernelTerm | tuple] = (), support: SupportSet | None = None,
                 p=2.0, scalar: float = 0.0):
        if support is None:
            support = SupportSet.empty()
        clean = []
        for left, right in terms:
            if left.window is None:
                raise ValueError("left kernel factors must carry an output window")
            right = right.restrict(support)
            if left.is_zero or right.is_zero:
                continue
            clean.append(KernelTerm(left, right))
        self.scalar = float(scalar)
        self.terms = tuple(clean)
        self.support = support
        self.p = as_exponent(p)

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls, support: SupportSet | None = None, p=2.0) -> "SeparableOperator":
        return cls((), support, p)

    @classmethod
    def rank_one(cls, a: FunctionExpr, c: FunctionExpr, support: SupportSet,
                 p=2.0) -> "SeparableOperator":
        return cls([KernelTerm(a, c)], support, p)

    @property
    def q(self) -> float:
        return conjugate(self.p)

    @property
    def rank(self) -> int:
        return len(self.terms)

    @property
    def output_window(self) -> SupportSet:
        out = SupportSet.empty()
        for term in self.terms:
            out = out.union(term.left.window)
        return out

    def with_terms(self, terms, scalar: float | None = None, support=None) -> "SeparableOperator":
        return SeparableOperator(terms, self.support if support is None else support, self.p,
                                 self.scalar if scalar is None else scalar)

    def check_membership(self) -> None:
        """Raise MembershipError unless every a_i ∈ L_p and c_i ∈ L_q."""
        for i, term in enumerate(self.terms):
            if not is_in_lp(term.left, None, self.p):
                raise MembershipError(f"left factor {i} is not in L_{self.p:g} of its window")
            if not is_in_lp(term.right, self.support, self.q):
                raise MembershipError(f"right factor {i} is not in L_{self.q:g} of the support")

    # linear structure -------------------------------------------------
    def __add__(self, other: "SeparableOperator") -> "SeparableOperator":
        if not isinstance(other, SeparableOperator):
            return NotImplemented
        return SeparableOperator(self.terms + other.terms, self.support.union(other.support),
                                 self.p, self.scalar + other.scalar)

    def __neg__(self) -> "SeparableOperator":
        return self * -1.0

    def __sub__(self, other: "SeparableOperator") -> "SeparableOperator":
        if not isinstance(other, SeparableOperator):
            return NotImplemented
        return self + (-other)

    def __mul__(self, lam) -> "SeparableOperator":
        lam = float(lam)
        return self.with_terms([KernelTerm(t.left * lam, t.right) for t in self.terms],
                               scalar=self.scalar * lam)

    __rmul__ = __mul__

    def __matmul__(self, other: "SeparableOperator") -> "SeparableOperator":
        return compose(self, other)

    def __call__(self, x: FunctionExpr) -> FunctionExpr:
        return apply(self, x)

    def __repr__(self) -> str:
        return (f"SeparableOperator(scalar={self.scalar:g}, rank={self.rank}, "
                f"support={self.support}, p={self.p:g})")


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------


def _cuts(exprs: Iterable[FunctionExpr]) -> list[float]:
    cuts = set()
    for e in exprs:
        for _, _, w in e.terms:
            if w is not None:
                cuts.update(w.breakpoints())
    return sorted(cuts)


def _expand(expr: FunctionExpr, cuts: Sequence[float]):
    """Yield ``(coef, atom, lo, hi)`` over cells cut at every breakpoint."""
    for c, atom, w in expr.terms:
        for lo, hi in w.pieces:
            inner = [x for x in cuts if lo < x < hi]
            edges = [lo] + inner + [hi]
            for a, b in zip(edges[:-1], edges[1:]):
                yield c, atom, a, b


class _Basis:
    def __init__(self):
        self.index: dict = {}
        self.elements: list[tuple[Atom, float, float]] = []

    def vector(self, expr: FunctionExpr, cuts) -> dict:
        out: dict = {}
        for c, atom, a, b in _expand(expr, cuts):
            key = (atom.power, atom.kind, float(f"{atom.freq:.12e}"), a, b)
            if key not in self.index:
                self.index[key] = len(self.elements)
                self.elements.append((atom, a, b))
            i = self.index[key]
            out[i] = out.get(i, 0.0) + c
        return out

    def __len__(self):
        return len(self.elements)

    def gram(self) -> np.ndarray:
        n = len(self.elements)
        g = np.zeros((n, n))
        for i, (ai, lo, hi) in enumerate(self.elements):
            for j in range(i, n):
                aj, lo2, hi2 = self.elements[j]
                if (lo, hi) != (lo2, hi2):
                    continue
                val = math.fsum(f * atom_integral(atom, lo, hi)[0] for f, atom in atom_product(ai, aj))
                g[i, j] = g[j, i] = val
        return g

    def factor(self) -> np.ndarray:
        """``L`` with ``L Lᵀ = Gram`` (negative rounding eigenvalues clipped)."""
        g = self.gram()
        if g.size == 0:
            return g
        lam, vec = np.linalg.eigh(g)
        return vec * np.sqrt(np.clip(lam, 0.0, None))


class CanonicalForm(NamedTuple):
    left: _Basis
    right: _Basis
    matrices: tuple
    scalars: tuple


def canonical_form(*ops: SeparableOperator) -> CanonicalForm:
    """Coefficient matrices of several operators over one joint basis."""
    lcuts = _cuts(t.left for op in ops for t in op.terms)
    rcuts = _cuts(t.right for op in ops for t in op.terms)
    lb, rb = _Basis(), _Basis()
    vecs = []
    for op in ops:
        vecs.append([(lb.vector(t.left, lcuts), rb.vector(t.right, rcuts)) for t in op.terms])
    mats = []
    for pairs in vecs:
        m = np.zeros((len(lb), len(rb)))
        for lv, rv in pairs:
            for i, x in lv.items():
                for j, y in rv.items():
                    m[i, j] += x * y
        mats.append(m)
    return CanonicalForm(lb, rb, tuple(mats), tuple(op.scalar for op in ops))


def _frob(lf: np.ndarray, m: np.ndarray, rf: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(lf.T @ m @ rf))


def kernel_norm(A: SeparableOperator) -> float:
    """L² norm of the kernel of A over X × support."""
    cf = canonical_form(A)
    return _frob(cf.left.factor(), cf.matrices[0], cf.right.factor())


def kernel_distance(A: SeparableOperator, B: SeparableOperator) -> tuple[float, float, float]:
    """``(‖k_A − k_B‖, ‖k_A‖, ‖k_B‖)`` in kernel L² norm."""
    cf = canonical_form(A, B)
    lf, rf = cf.left.factor(), cf.right.factor()
    ma, mb = cf.matrices
    return _frob(lf, ma - mb, rf), _frob(lf, ma, rf), _frob(lf, mb, rf)


def operators_equal(A: SeparableOperator, B: SeparableOperator, tol: float = EQUALITY_TOL) -> bool:
    """Equal identity parts and kernel residual within ``tol`` of the larger kernel."""
    if abs(A.scalar - B.scalar) > SCALAR_TOL:
        return False
    diff, na, nb = kernel_distance(A, B)
    return diff <= tol * max(na, nb)


def _from_matrix(cf: CanonicalForm, m: np.ndarray, support: SupportSet, p,
                 scalar: float) -> SeparableOperator:
    """Rebuild terms from a coefficient matrix, grouping along the shorter side."""
    lefts = [FunctionExpr([(1.0, atom, SupportSet.interval(a, b))]) for atom, a, b in cf.left.elements]
    rights = [FunctionExpr([(1.0, atom, SupportSet.interval(a, b))]) for atom, a, b in cf.right.elements]
    terms = []
    if len(lefts) <= len(rights):
        for i, phi in enumerate(lefts):
            row = m[i]
            if np.any(row != 0.0):
                psi = FunctionExpr((row[j], r.terms[0][1], r.terms[0][2])
                                   for j, r in enumerate(rights) if row[j] != 0.0)
                terms.append(KernelTerm(phi, psi))
    else:
        for j, psi in enumerate(rights):
            col = m[:, j]
            if np.any(col != 0.0):
                phi = FunctionExpr((col[i], l.terms[0][1], l.terms[0][2])
                                   for i, l in enumerate(lefts) if col[i] != 0.0)
                terms.append(KernelTerm(phi, psi))
    return SeparableOperator(terms, support, p, scalar)


def merged(A: SeparableOperator) -> SeparableOperator:
    """Same operator with terms regrouped over the canonical basis."""
    cf = canonical_form(A)
    return _from_matrix(cf, cf.matrices[0], A.support, A.p, A.scalar)


def kernel_coefficient(A: SeparableOperator, left: FunctionExpr, right: FunctionExpr) -> float:
    """Coefficient of the single-atom product ``left ⊗ right`` in A's kernel.

    ``left`` and ``right`` must each be one windowed atom; the coefficient
    is read off the canonical form on the first cell of that window.
    """
    (lc, latom, lw), = left.terms
    (rc, ratom, rw), = right.terms
    probe = KernelTerm(FunctionExpr([(1.0, latom, lw)]), FunctionExpr([(1.0, ratom, rw)]))
    B = SeparableOperator([probe], A.support.union(rw), A.p)
    cf = canonical_form(A, B)
    mb = cf.matrices[1]
    idx = np.argwhere(mb != 0.0)
    i, j = idx[0]
    return float(cf.matrices[0][i, j]) / (lc * rc)


# ---------------------------------------------------------------------------
# Algebra
# ---------------------------------------------------------------------------


def apply(A: SeparableOperator, x: FunctionExpr) -> FunctionExpr:
    """``scalar·x + Σ_i Q_G(c_i, x)·a_i``."""
    out = x * A.scalar if A.scalar else FunctionExpr.zero()
    for term in A.terms:
        q = pairing(term.right, x, A.support).value
        if q != 0.0:
            out = out + term.left * q
    return out


def _combine(weights: np.ndarray, exprs: Sequence[FunctionExpr]) -> FunctionExpr:
    return FunctionExpr((w * c, a, win) for w, e in zip(weights, exprs) if w != 0.0
                        for c, a, win in e.terms)


def compose(A: SeparableOperator, B: SeparableOperator) -> SeparableOperator:
    """The product ``A∘B``; inner pairings run over A's support."""
    terms = []
    if A.terms and B.terms:
        P = np.array([[pairing(tb.left, ta.right, A.support).value for tb in B.terms]
                      for ta in A.terms])
        rights = [tb.right for tb in B.terms]
        for m, ta in enumerate(A.terms):
            e = _combine(P[m], rights)
            if not e.is_zero:
                terms.append(KernelTerm(ta.left, e))
    support = B.support
    if A.scalar:
        terms.extend(KernelTerm(t.left * A.scalar, t.right) for t in B.terms)
    if B.scalar:
        terms.extend(KernelTerm(t.left * B.scalar, t.right) for t in A.terms)
        support = support.union(A.support)
    return SeparableOperator(terms, support, A.p, A.scalar * B.scalar)


def gram_matrix(A: SeparableOperator) -> np.ndarray:
    """``Gram[i, j] = Q_G(a_j, c_i)``; the coefficient matrix of A^m is Gram^(m−1)."""
    n = A.rank
    g = np.zeros((n, n))
    for i, ti in enumerate(A.terms):
        for j, tj in enumerate(A.terms):
            g[i, j] = pairing(tj.left, ti.right, A.support).value
    return g


def _require_raw(A: SeparableOperator, what: str) -> None:
    if A.scalar != 0.0:
        raise ValueError(f"{what} expects an operator without identity part")


def _from_coefficients(A: SeparableOperator, M: np.ndarray, scalar: float = 0.0) -> SeparableOperator:
    rights = [t.right for t in A.terms]
    terms = [KernelTerm(t.left, _combine(M[i], rights)) for i, t in enumerate(A.terms)]
    return SeparableOperator(terms, A.support, A.p, scalar)


def power(A: SeparableOperator, m: int) -> SeparableOperator:
    """``A^m`` by the Gram recurrence, O(m·rank²) pairings and products."""
    _require_raw(A, "power")
    if m < 1:
        raise ValueError("power expects m ≥ 1")
    if m == 1:
        return A
    g = gram_matrix(A)
    return _from_coefficients(A, np.linalg.matrix_power(g, m - 1))


def polynomial(F: PolynomialSpec, A: SeparableOperator) -> SeparableOperator:
    """``F(A) = f₀·I + Σ_{j≥1} f_j A^j`` as one separable operator."""
    _require_raw(A, "polynomial")
    n = A.rank
    coeffs = np.zeros((n, n))
    if n and len(F.coeffs) > 1:
        g = gram_matrix(A)
        gp = np.eye(n)
        for j, fj in enumerate(F.coeffs[1:], start=1):
            if j > 1:
                gp = gp @ g
            if fj != 0.0:
                coeffs = coeffs + fj * gp
    return _from_coefficients(A, coeffs, F.constant)


def commutator(A: SeparableOperator, B: SeparableOperator) -> SeparableOperator:
    """``AB − BA`` over a common support, with terms merged."""
    if not A.support.same_as(B.support):
        raise SupportMismatch(f"supports differ: {A.support} vs {B.support}")
    ab, ba = compose(A, B), compose(B, A)
    cf = canonical_form(ab, ba)
    m = cf.matrices[0] - cf.matrices[1]
    return _from_matrix(cf, m, A.support, A.p, ab.scalar - ba.scalar)


def adjoint(A: SeparableOperator) -> SeparableOperator:
    """Kernel transpose ``k*(t, s) = k(s, t)`` acting on ``L_q``."""
    support = A.output_window
    terms = [KernelTerm(t.right, t.left) for t in A.terms]
    out = SeparableOperator(terms, support, A.q, A.scalar)
    out.check_membership()
    return out


__all__ = [
    "CanonicalForm", "KernelTerm", "PolynomialSpec", "SeparableOperator",
    "adjoint", "apply", "canonical_form", "commutator", "compose", "gram_matrix",
    "kernel_coefficient", "kernel_distance", "kernel_norm", "merged",
    "operators_equal", "polynomial", "power",
]
