"""Convergence experiments for operator sequences and their commutators.

Commutator convergence does not force the sequence itself to converge.
With an orthonormal pair on [0, 1] and ``C_m = diag((−1)^m, 1)``,
``D = diag(1, 0)``, every commutator vanishes although ``C_m`` oscillates:

>>> from sepkern.convlab import matrix_operator
>>> from sepkern.sepop import commutator, kernel_distance, kernel_norm
>>> D = matrix_operator([[1, 0], [0, 0]])
>>> C = [matrix_operator([[(-1) ** m, 0], [0, 1]]) for m in (1, 2, 3)]
>>> [kernel_norm(commutator(c, D)) for c in C]
[0.0, 0.0, 0.0]
>>> round(kernel_distance(C[0], C[1])[0], 12)
2.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InadmissibleParams
from .families import build_family, get_param, with_param
from .measure import FunctionExpr, SupportSet
from .normest import crude_bound, empirical_norm, hoelder_bound
from .sepop import (
    KernelTerm,
    SeparableOperator,
    commutator,
    kernel_norm,
    merged,
)

DESK_RATIO = 50.0
SLOPE_LIMIT = -0.9
DEFAULT_TOL = 1e-9
EMPIRICAL_TRIALS = 50
SEQUENCE_KINDS = ("const", "inv", "inv2", "affine")


@dataclass(frozen=True)
class SequenceLaw:
    """``c``, ``c/n``, ``c/n²`` or ``c + c2/n``.

    ``c=None`` stands for the family's limit value and is resolved by
    :func:`run_sequence`.
    """

    kind: str = "inv"
    c: Optional[float] = 1.0
    c2: float = 0.0

    def __post_init__(self):
        if self.kind not in SEQUENCE_KINDS:
            raise ValueError(f"sequence kind must be one of {SEQUENCE_KINDS}")

    def resolved(self, limit: float) -> "SequenceLaw":
        return self if self.c is not None else SequenceLaw(self.kind, limit, self.c2)

    def value(self, n: int) -> float:
        c = float(self.c)
        if self.kind == "const":
            return c
        if self.kind == "inv":
            return c / n
        if self.kind == "inv2":
            return c / n**2
        return c + self.c2 / n

    @property
    def limit(self) -> float:
        return 0.0 if self.kind in ("inv", "inv2") else float(self.c)


@dataclass(frozen=True)
class SequenceSpec:
    family: str
    params: object = None
    theta_seq: Optional[SequenceLaw] = None
    sigma_seq: Optional[SequenceLaw] = None
    n_max: int = 16
    p: float = 2.0
    seed: int = 0
    trials: int = EMPIRICAL_TRIALS


class TraceRow(NamedTuple):
    n: int
    bound_diff: float
    bound_comm: float
    empirical_comm: float


@dataclass(frozen=True)
class ConvergenceTrace:
    rows: tuple
    slope: Optional[float]
    label: str = ""
    p: float = 2.0
    meta: dict = field(default_factory=dict)

    @property
    def bound_comm(self) -> list[float]:
        return [r.bound_comm for r in self.rows]

    def converges(self, tol: float = DEFAULT_TOL, slope_rule: bool = False) -> bool:
        return desk_scale_converges(self.bound_comm, tol, slope_rule)


def fit_slope(ns: Sequence[float], values: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(value) against log(n) over positive values."""
    pts = [(math.log(n), math.log(v)) for n, v in zip(ns, values) if v > 0 and n > 0]
    if len(pts) < 2 or len({x for x, _ in pts}) < 2:
        return None
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


def desk_scale_converges(values: Sequence[float], tol: float = DEFAULT_TOL,
                         slope_rule: bool = False) -> bool:
    """Finite-n reading of "tends to zero".

    The last value must be at most ``max(tol, values[0]/50)``; with
    ``slope_rule`` the fitted log-log slope must also be ≤ −0.9 unless the
    whole sequence already sits below ``tol``.
    """
    if not values:
        return False
    final = values[-1]
    if final > max(tol, values[0] / DESK_RATIO):
        return False
    if slope_rule and max(values) > tol:
        slope = fit_slope(range(1, len(values) + 1), values)
        return slope is not None and slope <= SLOPE_LIMIT
    return True


def _diff_bound(X: SeparableOperator, Y: SeparableOperator, p) -> float:
    return hoelder_bound(merged(X - Y), p).upper


def _comm_bound(X: SeparableOperator, Y: SeparableOperator, p):
    c = commutator(X, Y)
    return c, crude_bound(c, p).upper


def _with_p(op: SeparableOperator, p) -> SeparableOperator:
    return SeparableOperator(op.terms, op.support, p, op.scalar)


def _resolve(law: Optional[SequenceLaw], limits: tuple, what: str) -> Optional[SequenceLaw]:
    if law is None:
        return None
    if not limits:
        raise InadmissibleParams(f"this family has no {what} sequence")
    law = law.resolved(limits[0])
    if not any(abs(law.limit - L) <= 1e-9 * max(1.0, abs(L)) for L in limits):
        raise InadmissibleParams(
            f"{what} sequence tends to {law.limit:g}; the family needs one of "
            + ", ".join(f"{L:g}" for L in limits))
    return law


def run_sequence(spec: SequenceSpec) -> ConvergenceTrace:
    """Evaluate norm bounds and commutator decay along ``A_n``, ``B_n``."""
    if spec.n_max < 1:
        raise ValueError("n_max must be positive")
    fam = build_family(spec.family, spec.params, spec.p)
    p = fam.p
    tlaw = _resolve(spec.theta_seq, fam.A_limits, "A_n")
    slaw = _resolve(spec.sigma_seq, fam.B_limits, "B_n")
    A_lim = fam.A_n(tlaw.limit) if tlaw else fam.A
    B_lim = fam.B_n(slaw.limit) if slaw else fam.B
    rows = []
    for n in range(1, spec.n_max + 1):
        A_n = fam.A_n(tlaw.value(n)) if tlaw else fam.A
        B_n = fam.B_n(slaw.value(n)) if slaw else fam.B
        bound_diff = _diff_bound(A_n, A_lim, p) + _diff_bound(B_n, B_lim, p)
        comm, bound_comm = _comm_bound(A_n, B_n, p)
        emp = empirical_norm(_with_p(comm, p), p, spec.trials, spec.seed)
        rows.append(TraceRow(n, bound_diff, bound_comm, emp))
    slope = fit_slope([r.n for r in rows], [r.bound_comm for r in rows])
    return ConvergenceTrace(tuple(rows), slope, spec.family, p,
                            {"A_limit": tlaw.limit if tlaw else None,
                             "B_limit": slaw.limit if slaw else None})


class LemmaVerdict(NamedTuple):
    """``sequence_converges`` and ``limit_commutes`` must agree for the lemma."""

    sequence_converges: bool
    limit_commutes: bool
    final_bound: float
    limit_residual: float

    @property
    def consistent(self) -> bool:
        return self.sequence_converges == self.limit_commutes


def _limit_commutes(C: SeparableOperator, D: SeparableOperator, tol: float) -> tuple[bool, float]:
    residual = kernel_norm(commutator(C, D))
    scale = max(kernel_norm(C) * kernel_norm(D), 1e-300)
    return residual <= tol * scale, residual / scale


def check_lemma_one_sided(C_seq: Sequence[SeparableOperator], D: SeparableOperator,
                          C_limit: SeparableOperator, tol: float = DEFAULT_TOL) -> LemmaVerdict:
    """``C_m D − D C_m → 0`` iff ``C D = D C`` for ``C_m → C``."""
    return check_lemma_two_sided(C_seq, [D] * len(C_seq), C_limit, D, tol)


def check_lemma_two_sided(C_seq: Sequence[SeparableOperator], D_seq: Sequence[SeparableOperator],
                          C_limit: SeparableOperator, D_limit: SeparableOperator,
                          tol: float = DEFAULT_TOL) -> LemmaVerdict:
    """``C_m D_m − D_m C_m → 0`` iff ``C D = D C`` for ``C_m → C``, ``D_m → D``."""
    if len(C_seq) != len(D_seq) or not C_seq:
        raise ValueError("sequences must be non-empty and of equal length")
    bounds = [hoelder_bound(commutator(c, d)).upper for c, d in zip(C_seq, D_seq)]
    ref = max(max(kernel_norm(c) for c in C_seq) * max(kernel_norm(d) for d in D_seq), 1e-300)
    converges = desk_scale_converges(bounds, tol * ref)
    commutes, residual = _limit_commutes(C_limit, D_limit, tol)
    return LemmaVerdict(converges, commutes, bounds[-1], residual)


def parameter_limit_scan(family: str, param: str, path: SequenceLaw, steps: int, p=2.0,
                         params=None, seed: int = 0,
                         trials: int = EMPIRICAL_TRIALS) -> ConvergenceTrace:
    """Commutator bound of the base pair while ``param`` follows ``path``.

    Row ``k`` evaluates the family at ``param = path.value(k)``; every point
    must be admissible.  ``bound_diff`` is ``|param − limit|``.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    base = build_family(family, params, p)
    rows = []
    for k in range(1, steps + 1):
        value = path.value(k)
        fam = build_family(family, with_param(base.params, param, value), base.p)
        comm, bound = _comm_bound(fam.A, fam.B, fam.p)
        emp = empirical_norm(_with_p(comm, fam.p), fam.p, trials, seed)
        rows.append(TraceRow(k, abs(value - path.limit), bound, emp))
    slope = fit_slope([r.n for r in rows], [r.bound_comm for r in rows])
    return ConvergenceTrace(tuple(rows), slope, f"{family}:{param}", base.p,
                            {"start": get_param(base.params, param)})


def matrix_operator(M, support: SupportSet | None = None, p=2.0) -> SeparableOperator:
    """``Σ M[i,j] φ_i(t) φ_j(s)`` for the orthonormal step basis of ``support``.

    ``φ_i`` is the normalized indicator of the i-th equal sub-interval, so
    composition and commutators reproduce matrix arithmetic exactly.
    """
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    support = support or SupportSet.interval(0.0, 1.0)
    lo, hi = support.lo, support.hi
    h = (hi - lo) / n
    phis = [FunctionExpr.const(1.0 / math.sqrt(h), SupportSet.interval(lo + i * h, lo + (i + 1) * h))
            for i in range(n)]
    terms = [KernelTerm(phis[i] * M[i, j], phis[j]) for i in range(n) for j in range(n) if M[i, j]]
    return SeparableOperator(terms, support, p)


__all__ = [
    "ConvergenceTrace", "LemmaVerdict", "SequenceLaw", "SequenceSpec", "TraceRow",
    "check_lemma_one_sided", "check_lemma_two_sided", "desk_scale_converges",
    "fit_slope", "matrix_operator", "parameter_limit_scan", "run_sequence",
]
