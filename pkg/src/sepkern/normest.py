"""Upper bounds and empirical lower estimates for L_p operator norms."""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from .errors import NonIntegrable
from .measure import (
    Atom,
    FunctionExpr,
    SupportSet,
    as_exponent,
    conjugate,
    lp_norm,
    pairing,
)
from .sepop import SeparableOperator, apply

DOMINANCE_SLACK = 1e-9


class NormBound(NamedTuple):
    p: float
    upper: float
    method: str
    empirical_lower: Optional[float] = None


def hoelder_bound(A: SeparableOperator, p=None) -> NormBound:
    """``|scalar| + Σ ‖a_i‖_p · ‖c_i‖_q`` with exact factor norms."""
    p = A.p if p is None else as_exponent(p)
    q = conjugate(p)
    parts = [abs(A.scalar)]
    for t in A.terms:
        parts.append(lp_norm(t.left, None, p) * lp_norm(t.right, A.support, q))
    return NormBound(p, math.fsum(parts), "hoelder-sum")


def _crude_atom_norm(atom: Atom, region: SupportSet, r: float) -> float:
    """Norm estimate ``sup|atom| · |region|^{1/r}`` with trig factors bounded by 1."""
    total = 0.0
    for lo, hi in region.pieces:
        piece = SupportSet.interval(lo, hi) if math.isfinite(hi) else SupportSet.half_line(lo)
        if not math.isfinite(hi):
            total_r = lp_norm(FunctionExpr([(1.0, atom, None)]), piece, r)
            if math.isinf(r):
                total = max(total, total_r)
            else:
                total += total_r**r
            continue
        if atom.kind != "one" and atom.power == 0:
            sup = 1.0
        else:
            sup = lp_norm(FunctionExpr([(1.0, atom, None)]), piece, math.inf)
        if math.isinf(r):
            total = max(total, sup)
        else:
            total += sup**r * (hi - lo)
    return total if math.isinf(r) else total ** (1.0 / r)


def crude_factor_norm(f: FunctionExpr, domain: Optional[SupportSet], r) -> float:
    """Triangle-inequality estimate ``Σ |c_j| · ‖atom_j‖`` of ``‖f‖_r``."""
    r = as_exponent(r)
    out = []
    for c, atom, w in f.terms:
        region = w if domain is None else (domain if w is None else w.intersect(domain))
        if region is None:
            raise NonIntegrable("factor without a window")
        out.append(abs(c) * _crude_atom_norm(atom, region, r))
    return math.fsum(out)


def crude_bound(A: SeparableOperator, p=None) -> NormBound:
    """Hölder bound with every trig factor estimated by its sup of 1.

    For a trig kernel ``θ·k(t,s)`` on ``[α,β] × [α₁,β₁]`` this is
    ``|θ|·|β−α|^{1/p}·|β₁−α₁|^{1/q}``; for ``(γ/t)·I_{[α,∞)} ⊗ (1 − 2ln2/s)``
    on ``[1,2]`` it is ``|γ|·α^{(1−p)/p}/(p−1)^{1/p}·(1 + 2ln2)``.
    """
    p = A.p if p is None else as_exponent(p)
    q = conjugate(p)
    parts = [abs(A.scalar)]
    for t in A.terms:
        parts.append(crude_factor_norm(t.left, None, p) * crude_factor_norm(t.right, A.support, q))
    return NormBound(p, math.fsum(parts), "hoelder-crude")


def schur_bound(A: SeparableOperator) -> NormBound:
    """``max(λ₁, λ₂)`` with ``λ₁ = Σ‖a_i‖_∞‖c_i‖_1`` and ``λ₂ = Σ‖a_i‖_1‖c_i‖_∞``.

    These dominate ``sup_t ∫|k| ds`` and ``sup_s ∫|k| dt``, so the bound is
    valid on every ``L_p``.  Raises NonIntegrable when a left factor is not
    integrable (e.g. ``1/t`` on a half-line).
    """
    lam1 = [abs(A.scalar)]
    lam2 = [abs(A.scalar)]
    for t in A.terms:
        lam1.append(lp_norm(t.left, None, math.inf) * lp_norm(t.right, A.support, 1))
        lam2.append(lp_norm(t.left, None, 1) * lp_norm(t.right, A.support, math.inf))
    return NormBound(A.p, max(math.fsum(lam1), math.fsum(lam2)), "schur")


def _dictionary(support: SupportSet) -> list[FunctionExpr]:
    """Eight fixed probe atoms adapted to the support."""
    if support.is_bounded:
        lo, hi = support.lo, support.hi
        length = hi - lo
        k = math.pi / length
        shift = -lo
        t = FunctionExpr.power(1) + FunctionExpr.const(shift)
        return [
            FunctionExpr.const(1.0),
            t * (1.0 / length),
            t * t * (1.0 / length**2),
            FunctionExpr.sin(k, math.cos(k * lo)) - FunctionExpr.cos(k, math.sin(k * lo)),
            FunctionExpr.cos(k, math.cos(k * lo)) + FunctionExpr.sin(k, math.sin(k * lo)),
            FunctionExpr.sin(2 * k),
            FunctionExpr.cos(2 * k),
            FunctionExpr.sin(4 * k),
        ]
    lo = support.lo
    if lo <= 0:
        raise NonIntegrable("probe dictionary on a half-line needs a positive left end")
    return [FunctionExpr.power(k, lo ** (-k)) for k in (-2, -3, -4, -5, -6, -7, -8, -9)]


def _optimal_l2_direction(A: SeparableOperator) -> Optional[FunctionExpr]:
    """Unit-L² maximiser of ``‖Ax‖₂`` inside ``span{c_i}`` (exact for p = 2)."""
    n = A.rank
    if n == 0:
        return None
    rights = [t.right for t in A.terms]
    lefts = [t.left for t in A.terms]
    gc = np.array([[pairing(rights[i], rights[j], A.support).value for j in range(n)] for i in range(n)])
    ga = np.array([[pairing(lefts[i], lefts[j], None).value for j in range(n)] for i in range(n)])
    lam, vec = np.linalg.eigh(gc)
    keep = lam > 1e-13 * max(lam.max(), 1e-300)
    if not keep.any():
        return None
    lc = vec[:, keep] * np.sqrt(lam[keep])
    m = lc.T @ ga @ lc
    _, z = np.linalg.eigh(m)
    y = vec[:, keep] @ (z[:, -1] / np.sqrt(lam[keep]))
    return FunctionExpr((y[j] * c, a, w) for j, r in enumerate(rights) for c, a, w in r.terms)


def _probe_ratio(A: SeparableOperator, x: FunctionExpr, p: float) -> float:
    x = x.restrict(A.support)
    nx = lp_norm(x, A.support, p)
    if not nx > 0 or not math.isfinite(nx):
        return 0.0
    y = apply(A, x)
    return lp_norm(y, None, p) / nx if not y.is_zero else 0.0


def empirical_norm(A: SeparableOperator, p=None, trials: int = 100, seed: int = 0) -> float:
    """Seeded lower estimate ``max ‖Ax‖_p / ‖x‖_p`` over probe functions.

    Probe 0 is the L²-optimal direction in the span of the right factors;
    later probes mix the right factors or an eight-atom dictionary with
    coefficients uniform on [−1, 1].  Probe ``i`` draws from its own stream
    ``default_rng([seed, i])`` so results do not depend on evaluation order.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    p = A.p if p is None else as_exponent(p)
    if not A.terms and A.scalar == 0.0:
        return 0.0
    if A.support.is_empty:
        return abs(A.scalar)
    dictionary = _dictionary(A.support)
    rights = [t.right for t in A.terms]
    best = 0.0
    for i in range(trials):
        if i == 0:
            x = _optimal_l2_direction(A)
            if x is None:
                continue
        else:
            rng = np.random.default_rng([seed, i])
            pool = rights if (rights and rng.random() < 0.5) else dictionary
            coefs = rng.uniform(-1.0, 1.0, size=len(pool))
            x = FunctionExpr((w * c, a, win) for w, f in zip(coefs, pool) for c, a, win in f.terms)
        try:
            best = max(best, _probe_ratio(A, x, p))
        except NonIntegrable:
            continue
    return best


__all__ = [
    "NormBound", "crude_bound", "crude_factor_norm", "empirical_norm",
    "hoelder_bound", "schur_bound",
]
