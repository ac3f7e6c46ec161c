"""Concrete operator pairs satisfying ``AB = δBA²``.

The trigonometric families all live in the span of four kernels on
``[α,β] × [α₁,β₁]``::

    k₁ = sin(ωt)cos(ωs)   k₂ = cos(ωt)cos(ωs)
    k₃ = sin(ωt)sin(ωs)   k₄ = cos(ωt)sin(ωs)

and an operator is written as its coefficient vector ``θ = (θ₁, θ₂, θ₃, θ₄)``.
Admissible windows make ``∫ sin cos`` vanish over ``[α₁,β₁]``, so every
pairing reduces to ``σ₁ = ∫ sin²`` or ``σ₂ = ∫ cos²``.

The Laurent family uses ``(γ/t)·I_{[α,∞)}(t)`` on the output side and
integrates over ``[1, 2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .errors import InadmissibleParams
from .measure import FunctionExpr, SupportSet, as_exponent, pairing
from .sepop import KernelTerm, SeparableOperator

ADMISSIBILITY_TOL = 1e-9
SIGMA_GUARD = 1e-12
ORTHOGONALITY_TOL = 1e-12

TRIG_FAMILIES = ("T4", "T5", "T6", "T7", "T8", "T9", "T10")
FAMILIES = TRIG_FAMILIES + ("laurent",)


def sigma(omega: float, alpha1: float, beta1: float) -> tuple[float, float]:
    """``(∫ sin²(ωs) ds, ∫ cos²(ωs) ds)`` over ``[α₁, β₁]`` in closed form."""
    if not alpha1 < beta1:
        raise ValueError("sigma needs alpha1 < beta1")
    length = beta1 - alpha1
    if omega == 0:
        return 0.0, length
    s1 = 0.5 * length - math.cos(omega * (alpha1 + beta1)) * math.sin(omega * length) / (2.0 * omega)
    return s1, length - s1


def trig_commutator_coefficients(theta_a, theta_b, s1: float, s2: float) -> tuple:
    """Coefficients of ``[A, B]`` on ``(k₁, k₂, k₃, k₄)`` for admissible windows."""
    a1, a2, a3, a4 = theta_a
    b1, b2, b3, b4 = theta_b
    return (
        (a3 * b1 - b3 * a1) * s1 + (a1 * b2 - b1 * a2) * s2,
        (b1 * a4 - a1 * b4) * s1,
        (a1 * b4 - b1 * a4) * s2,
        (a4 * b3 - b4 * a3) * s1 + (a2 * b4 - b2 * a4) * s2,
    )


@dataclass(frozen=True)
class TrigFamilyParams:
    """Parameters shared by the trigonometric families (unused entries ignored)."""

    theta_A: tuple = (1.0, 0.0, 0.0, 0.0)
    theta_B: tuple = (1.0, 0.0, 1.0, 0.0)
    omega: float = 1.0
    delta: float = 1.0
    alpha: float = 0.0
    beta: float = math.pi
    alpha1: float = 0.0
    beta1: float = math.pi

    def __post_init__(self):
        object.__setattr__(self, "theta_A", _pad4(self.theta_A))
        object.__setattr__(self, "theta_B", _pad4(self.theta_B))

    @property
    def window(self) -> SupportSet:
        return SupportSet.interval(self.alpha, self.beta)

    @property
    def support(self) -> SupportSet:
        return SupportSet.interval(self.alpha1, self.beta1)

    @property
    def sigmas(self) -> tuple[float, float]:
        return sigma(self.omega, self.alpha1, self.beta1)


@dataclass(frozen=True)
class LaurentFamilyParams:
    gamma_A2: float = 1.0
    gamma_B2: float = 1.0
    alpha: float = 1.0
    p: float = 2.0

    @property
    def window(self) -> SupportSet:
        return SupportSet.half_line(self.alpha)


def _pad4(values) -> tuple:
    vals = tuple(float(v) for v in values)
    if len(vals) > 4:
        raise ValueError("at most four theta coefficients")
    return vals + (0.0,) * (4 - len(vals))


def with_param(params, name: str, value: float):
    """Copy of ``params`` with one scalar parameter replaced.

    ``theta_A1`` … ``theta_B4`` address the coefficient vectors; other names
    are dataclass fields.
    """
    if name.startswith("theta_") and len(name) == 8:
        side, idx = name[6], int(name[7]) - 1
        field_name = f"theta_{side}"
        vec = list(getattr(params, field_name))
        vec[idx] = float(value)
        return replace(params, **{field_name: tuple(vec)})
    if not hasattr(params, name):
        raise KeyError(f"unknown parameter {name!r}")
    return replace(params, **{name: float(value)})


def get_param(params, name: str) -> float:
    if name.startswith("theta_") and len(name) == 8:
        return getattr(params, f"theta_{name[6]}")[int(name[7]) - 1]
    return float(getattr(params, name))


def check_admissible(params: TrigFamilyParams) -> tuple[float, float]:
    """Validate a trig parameter point and return ``(σ₁, σ₂)``."""
    a, b, a1, b1 = params.alpha, params.beta, params.alpha1, params.beta1
    if params.delta == 0:
        raise InadmissibleParams("delta must be nonzero")
    if not a1 < b1:
        raise InadmissibleParams("need alpha1 < beta1")
    if not (a <= a1 and b >= b1):
        raise InadmissibleParams("need alpha <= alpha1 and beta >= beta1")
    w = params.omega
    r_diff = w * (b1 - a1) / math.pi
    r_sum = w * (b1 + a1) / math.pi
    if min(abs(r_diff - round(r_diff)), abs(r_sum - round(r_sum))) > ADMISSIBILITY_TOL:
        raise InadmissibleParams(
            "omega*(beta1-alpha1)/pi or omega*(beta1+alpha1)/pi must be an integer")
    s1, s2 = sigma(w, a1, b1)
    guard = SIGMA_GUARD * (b1 - a1)
    if abs(s1) < guard:
        raise InadmissibleParams("sigma1 vanishes")
    if abs(s2) < guard:
        raise InadmissibleParams("sigma2 vanishes")
    q = pairing(FunctionExpr.sin(w), FunctionExpr.cos(w), params.support).value
    if abs(q) > ORTHOGONALITY_TOL * max(1.0, b1 - a1):
        raise InadmissibleParams(f"sin and cos are not orthogonal on the support ({q:.3e})")
    return s1, s2


def trig_operator(theta, params: TrigFamilyParams, p=2.0) -> SeparableOperator:
    """``Σ θ_i k_i`` with output window ``[α,β]`` and support ``[α₁,β₁]``."""
    w, win = params.omega, params.window
    left = (FunctionExpr.sin(w, window=win), FunctionExpr.cos(w, window=win),
            FunctionExpr.sin(w, window=win), FunctionExpr.cos(w, window=win))
    right = (FunctionExpr.cos(w), FunctionExpr.cos(w), FunctionExpr.sin(w), FunctionExpr.sin(w))
    terms = [KernelTerm(left[i] * c, right[i]) for i, c in enumerate(_pad4(theta)) if c != 0.0]
    return SeparableOperator(terms, params.support, p)


@dataclass(frozen=True)
class Family:
    """A constructed pair plus its sequence templates.

    ``A_n(v)`` / ``B_n(v)`` rebuild the operator with the family's sequence
    parameter (``A_param`` / ``B_param``) set to ``v``; ``A_limits`` and
    ``B_limits`` hold the limit values the family's convergence statements use.
    """

    name: str
    params: object
    p: float
    A: SeparableOperator
    B: SeparableOperator
    delta: float
    A_n: Optional[Callable[[float], SeparableOperator]] = None
    B_n: Optional[Callable[[float], SeparableOperator]] = None
    A_param: Optional[str] = None
    B_param: Optional[str] = None
    A_limits: tuple = ()
    B_limits: tuple = ()
    commutator_coefficients: tuple = ()
    sigmas: tuple = (math.nan, math.nan)
    theta_A: tuple = ()
    theta_B: tuple = ()
    notes: tuple = field(default=())

    def A_tilde(self, which: int = 0) -> SeparableOperator:
        return self.A_n(self.A_limits[which])

    def B_tilde(self, which: int = 0) -> SeparableOperator:
        return self.B_n(self.B_limits[which])


def _theta_vectors(name: str, pr: TrigFamilyParams, s1: float, s2: float):
    """``(θ_A, θ_B)`` as functions of the family's free parameters."""
    tA, tB, d = pr.theta_A, pr.theta_B, pr.delta
    if name == "T4":
        return (tA[0], 0, 0, 0), (tB[0], 0, tB[2], 0)
    if name == "T5":
        if tA[0] == 0:
            raise InadmissibleParams("T5 needs theta_A1 != 0")
        b3 = -tB[0] * (d * s2 * tA[1] - 1.0) / (d * tA[0] * s1)
        return (tA[0], tA[1], 1.0 / (d * s1), 0), (tB[0], 0, b3, 0)
    if name == "T6":
        return (tA[0], -1.0 / (d * s2), 1.0 / (d * s1), 0), (tB[0], 0, tB[2], 0)
    if name == "T7":
        return (tA[0], 1.0 / (d * s2), 1.0 / (d * s1), 0), (tB[0], 2.0 * s1 / s2 * tB[2], tB[2], 0)
    if name == "T8":
        return (tA[0], tA[1], d * tA[1] ** 2 * s2**2 / s1, 0), (tB[0], 0, 0, 0)
    if name == "T9":
        return (0, 1.0 / (d * s2), 1.0 / (d * s1), tA[3]), (0, tB[1], 2.0 * s2 * tB[1] / s1, 0)
    if name == "T10":
        return (0, 1.0 / (d * s2), -1.0 / (d * s1), tA[3]), (0, tB[1], 0, 0)
    raise KeyError(f"unknown trig family {name!r}")


# sequence parameter of A_n and B_n, and their limit values as functions of (params, σ₁, σ₂)
_SEQUENCES = {
    "T4": ("theta_A1", lambda pr, s1, s2: (0.0,), "theta_B3", lambda pr, s1, s2: (0.0,)),
    "T5": ("theta_A2", lambda pr, s1, s2: (1.0 / (pr.delta * s2),),
           "theta_B1", lambda pr, s1, s2: (0.0,)),
    "T6": (None, None, "theta_B1",
           lambda pr, s1, s2: (0.5 * pr.delta * pr.theta_A[0] * pr.theta_B[2] * s1,)),
    "T7": ("theta_A1", lambda pr, s1, s2: (0.0,), "theta_B3", lambda pr, s1, s2: (0.0,)),
    "T8": ("theta_A2", lambda pr, s1, s2: (0.0, 1.0 / (pr.delta * s2)),
           "theta_B1", lambda pr, s1, s2: (0.0,)),
    "T9": ("theta_A4", lambda pr, s1, s2: (0.0,), "theta_B2", lambda pr, s1, s2: (0.0,)),
    "T10": ("theta_A4", lambda pr, s1, s2: (0.0,), "theta_B2", lambda pr, s1, s2: (0.0,)),
}


def family_trig(name: str, params: TrigFamilyParams, p=2.0) -> Family:
    """Build trig family ``name`` (one of ``T4`` … ``T10``)."""
    p = as_exponent(p)
    s1, s2 = check_admissible(params)
    ta, tb = _theta_vectors(name, params, s1, s2)
    a_param, a_lim, b_param, b_lim = _SEQUENCES[name]

    def seq(side: str, pname: Optional[str]):
        if pname is None:
            return None

        def build(value: float) -> SeparableOperator:
            pr = with_param(params, pname, value)
            va, vb = _theta_vectors(name, pr, s1, s2)
            return trig_operator(va if side == "A" else vb, params, p)

        return build

    return Family(
        name=name, params=params, p=p,
        A=trig_operator(ta, params, p), B=trig_operator(tb, params, p), delta=params.delta,
        A_n=seq("A", a_param), B_n=seq("B", b_param),
        A_param=a_param, B_param=b_param,
        A_limits=a_lim(params, s1, s2) if a_lim else (),
        B_limits=b_lim(params, s1, s2) if b_lim else (),
        commutator_coefficients=trig_commutator_coefficients(ta, tb, s1, s2),
        sigmas=(s1, s2), theta_A=tuple(map(float, ta)), theta_B=tuple(map(float, tb)),
    )


def family_T4(params: TrigFamilyParams, p=2.0) -> Family:
    return family_trig("T4", params, p)


def family_T5(params: TrigFamilyParams, p=2.0) -> Family:
    return family_trig("T5", params, p)


def family_T6(params: TrigFamilyParams, p=2.0) -> Family:
    return family_trig("T6", params, p)


def family_T7(params: TrigFamilyParams, p=2.0) -> Family:
    return family_trig("T7", params, p)


def family_T8(params: TrigFamilyParams, p=2.0) -> Family:
    return family_trig("T8", params, p)


def family_T9(params: TrigFamilyParams, p=2.0) -> Family:
    return family_trig("T9", params, p)


def family_T10(params: TrigFamilyParams, p=2.0) -> Family:
    return family_trig("T10", params, p)


LAURENT_SUPPORT = SupportSet.interval(1.0, 2.0)
LN2 = math.log(2.0)


def laurent_operator(gamma: float, alpha: float, p, with_log: bool) -> SeparableOperator:
    """``(γ/t)·I_{[α,∞)}(t) ⊗ r(s)`` on ``[1,2]`` with ``r = 1 − 2ln2/s`` or ``r = 1``."""
    left = FunctionExpr.power(-1, gamma, SupportSet.half_line(alpha))
    right = FunctionExpr.const(1.0)
    if with_log:
        right = right + FunctionExpr.power(-1, -2.0 * LN2)
    return SeparableOperator([KernelTerm(left, right)], LAURENT_SUPPORT, p)


def family_laurent(params: LaurentFamilyParams) -> Family:
    """Laurent-kernel pair with ``AB = 0`` and ``[A,B] = −γ_Aγ_B ln2 · (1/t)(1 − 2ln2/s)``."""
    p = as_exponent(params.p)
    if p <= 1.0:
        raise InadmissibleParams("the Laurent family needs p > 1")
    if not 0.0 < params.alpha <= 1.0:
        raise InadmissibleParams("the Laurent family needs 0 < alpha <= 1")
    a = params.alpha

    def A_n(g: float) -> SeparableOperator:
        return laurent_operator(g, a, p, True)

    return Family(
        name="laurent", params=params, p=p,
        A=A_n(params.gamma_A2), B=laurent_operator(params.gamma_B2, a, p, False), delta=1.0,
        A_n=A_n, A_param="gamma_A2", A_limits=(0.0,),
        commutator_coefficients=(-params.gamma_A2 * params.gamma_B2 * LN2,),
    )


def laurent_commutator_kernel(params: LaurentFamilyParams) -> SeparableOperator:
    """Predicted ``[A, B]`` for the Laurent family."""
    c = -params.gamma_A2 * params.gamma_B2 * LN2
    return laurent_operator(c, params.alpha, params.p, True)


def build_family(name: str, params=None, p=None) -> Family:
    """Dispatch by family name with default parameters when omitted."""
    if name == "laurent":
        params = params or LaurentFamilyParams()
        if p is not None:
            params = replace(params, p=as_exponent(p))
        return family_laurent(params)
    if name not in TRIG_FAMILIES:
        raise KeyError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
    return family_trig(name, params or TrigFamilyParams(), 2.0 if p is None else p)


__all__ = [
    "FAMILIES", "Family", "LaurentFamilyParams", "TRIG_FAMILIES", "TrigFamilyParams",
    "build_family", "check_admissible", "family_T4", "family_T5", "family_T6",
    "family_T7", "family_T8", "family_T9", "family_T10", "family_laurent",
    "family_trig", "get_param", "laurent_commutator_kernel", "laurent_operator",
    "sigma", "trig_commutator_coefficients", "trig_operator", "with_param",
]
