"""Closed symbolic functions on the real line, support sets, pairings and L_p norms.

A :class:`FunctionExpr` is a finite sum ``Σ c_j · t^k_j · τ_j(ω_j t) · I_{W_j}(t)``
where ``τ_j`` is ``1``, ``sin`` or ``cos`` and ``W_j`` is an optional
:class:`SupportSet` window.  The algebra is closed under sums, scalar
multiples and pointwise products (product-to-sum rules keep the atom set
finite), so every kernel manipulation downstream stays symbolic and only
the final integrals are numbers.

Integrals of single atoms use closed antiderivatives where they are stable
(pure powers, trig with no power factor) and an adaptive Gauss-Legendre
rule otherwise.  Unbounded pieces are only ever integrated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import NonIntegrable

MERGE_TOL = 1e-10
QUAD_TOL = 1e-12
QUAD_MAX_DEPTH = 40
QUAD_ORDER = 10
GRID_POINTS = 10_000
FREQ_SNAP = 1e-13

_EPS = np.finfo(float).eps
_GL_X, _GL_W = np.polynomial.legendre.leggauss(QUAD_ORDER)


def as_exponent(p) -> float:
    """Parse a Lebesgue exponent (number, ``"inf"`` or ``math.inf``)."""
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "∞"):
            return math.inf
        p = float(s)
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"Lebesgue exponent must lie in [1, inf], got {p}")
    return p


def conjugate(p) -> float:
    """Conjugate exponent q with 1/p + 1/q = 1."""
    p = as_exponent(p)
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


# ---------------------------------------------------------------------------
# Support sets
# ---------------------------------------------------------------------------


def _normalize_pieces(pieces) -> tuple:
    cleaned = []
    for lo, hi in pieces:
        lo, hi = float(lo), float(hi)
        if not math.isfinite(lo):
            raise ValueError("left endpoints of support pieces must be finite")
        if math.isnan(hi):
            raise ValueError("right endpoint is NaN")
        if hi - lo > MERGE_TOL:
            cleaned.append((lo, hi))
    cleaned.sort()
    merged: list[tuple[float, float]] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1][1] + MERGE_TOL:
            plo, phi = merged[-1]
            merged[-1] = (plo, max(phi, hi))
        else:
            merged.append((lo, hi))
    return tuple(merged)


@dataclass(frozen=True)
class SupportSet:
    """Finite union of disjoint intervals; only the last may be unbounded.

    Pieces closer than ``MERGE_TOL`` are merged and slivers shorter than
    ``MERGE_TOL`` are dropped, so set differences of equal sets computed in
    floating point come out empty.
    """

    pieces: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", _normalize_pieces(self.pieces))

    @classmethod
    def interval(cls, lo: float, hi: float) -> "SupportSet":
        return cls(((lo, hi),))

    @classmethod
    def half_line(cls, lo: float) -> "SupportSet":
        return cls(((lo, math.inf),))

    @classmethod
    def empty(cls) -> "SupportSet":
        return cls(())

    @property
    def is_empty(self) -> bool:
        return not self.pieces

    @property
    def is_bounded(self) -> bool:
        return all(math.isfinite(hi) for _, hi in self.pieces)

    @property
    def measure(self) -> float:
        return math.fsum(hi - lo for lo, hi in self.pieces)

    @property
    def lo(self) -> float:
        return self.pieces[0][0] if self.pieces else math.nan

    @property
    def hi(self) -> float:
        return self.pieces[-1][1] if self.pieces else math.nan

    def breakpoints(self) -> list[float]:
        out = []
        for lo, hi in self.pieces:
            out.append(lo)
            if math.isfinite(hi):
                out.append(hi)
        return out

    def intersect(self, other: Optional["SupportSet"]) -> "SupportSet":
        if other is None:
            return self
        out = []
        for a, b in self.pieces:
            for c, d in other.pieces:
                lo, hi = max(a, c), min(b, d)
                if hi - lo > MERGE_TOL:
                    out.append((lo, hi))
        return SupportSet(tuple(out))

    def union(self, other: "SupportSet") -> "SupportSet":
        return SupportSet(self.pieces + other.pieces)

    def difference(self, other: Optional["SupportSet"]) -> "SupportSet":
        if other is None:
            return SupportSet.empty()
        current = list(self.pieces)
        for c, d in other.pieces:
            nxt = []
            for a, b in current:
                if d <= a or c >= b:
                    nxt.append((a, b))
                    continue
                if c > a:
                    nxt.append((a, c))
                if d < b:
                    nxt.append((d, b))
            current = nxt
        return SupportSet(tuple(current))

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        mask = np.zeros(t.shape, dtype=bool)
        for lo, hi in self.pieces:
            mask |= (t >= lo) & (t < hi)
        return mask

    def same_as(self, other: Optional["SupportSet"]) -> bool:
        if other is None:
            return False
        return self.difference(other).is_empty and other.difference(self).is_empty

    def __str__(self) -> str:
        if not self.pieces:
            return "∅"
        return " ∪ ".join(f"[{lo:g}, {hi:g}]" for lo, hi in self.pieces)


def _meet(a: Optional[SupportSet], b: Optional[SupportSet]) -> Optional[SupportSet]:
    if a is None:
        return b
    if b is None:
        return a
    return a.intersect(b)


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------


class Atom(NamedTuple):
    """``t^power · kind(freq · t)`` with ``kind`` in {'one', 'sin', 'cos'}."""

    power: int
    kind: str
    freq: float


_KIND_ORDER = {"one": 0, "sin": 1, "cos": 2}


def make_atom(power: int, kind: str, freq: float = 0.0) -> tuple[float, Optional[Atom]]:
    """Canonical atom plus the sign it absorbs; ``(0, None)`` for sin(0·t)."""
    if kind not in _KIND_ORDER:
        raise ValueError(f"unknown atom kind {kind!r}")
    power = int(power)
    freq = float(freq)
    if kind == "one":
        return 1.0, Atom(power, "one", 0.0)
    sign = 1.0
    if freq < 0:
        freq = -freq
        if kind == "sin":
            sign = -1.0
    if freq == 0.0:
        if kind == "sin":
            return 0.0, None
        return sign, Atom(power, "one", 0.0)
    return sign, Atom(power, kind, freq)


def _snap(f: float, scale: float) -> float:
    return 0.0 if abs(f) <= FREQ_SNAP * scale else f


def atom_product(x: Atom, y: Atom) -> list[tuple[float, Atom]]:
    """Expand ``x·y`` into canonical atoms by product-to-sum."""
    k = x.power + y.power
    if x.kind == "one":
        return [(1.0, Atom(k, y.kind, y.freq))]
    if y.kind == "one":
        return [(1.0, Atom(k, x.kind, x.freq))]
    a, b = x.freq, y.freq
    scale = max(a, b)
    diff, tot = _snap(a - b, scale), a + b
    if x.kind == "sin" and y.kind == "sin":
        parts = [(0.5, "cos", diff), (-0.5, "cos", tot)]
    elif x.kind == "cos" and y.kind == "cos":
        parts = [(0.5, "cos", diff), (0.5, "cos", tot)]
    elif x.kind == "sin":
        parts = [(0.5, "sin", tot), (0.5, "sin", diff)]
    else:
        parts = [(0.5, "sin", tot), (-0.5, "sin", diff)]
    out = []
    for c, kind, f in parts:
        s, atom = make_atom(k, kind, f)
        if atom is not None:
            out.append((c * s, atom))
    return out


def atom_eval(atom: Atom, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if atom.power == 0:
        base = np.ones_like(t)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            base = np.power(t, float(atom.power))
    if atom.kind == "sin":
        return base * np.sin(atom.freq * t)
    if atom.kind == "cos":
        return base * np.cos(atom.freq * t)
    return base


def _atom_key(atom: Atom) -> tuple:
    return (atom.power, _KIND_ORDER[atom.kind], float(f"{atom.freq:.12e}"))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def adaptive_gauss(f, a: float, b: float, tol: float = QUAD_TOL,
                   max_depth: int = QUAD_MAX_DEPTH) -> tuple[float, float]:
    """Integrate a vectorized ``f`` over [a, b] by adaptive bisection.

    Each panel is compared against its two halves under a fixed-order
    Gauss-Legendre rule; panels whose halves agree within their share of
    ``tol`` (or within rounding of ``∫|f|``) are accepted.  Returns
    ``(value, error_estimate)``.
    """
    if b <= a:
        return 0.0, 0.0
    length = b - a

    def panels(lo, hi):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        pts = mid[:, None] + half[:, None] * _GL_X[None, :]
        vals = np.asarray(f(pts.ravel()), dtype=float).reshape(pts.shape)
        return half * (vals @ _GL_W), half * (np.abs(vals) @ _GL_W)

    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    whole, _ = panels(lo, hi)
    accepted: list[np.ndarray] = []
    errors: list[np.ndarray] = []
    for _depth in range(max_depth):
        mid = 0.5 * (lo + hi)
        left, la = panels(lo, mid)
        right, ra = panels(mid, hi)
        est = left + right
        diff = np.abs(est - whole)
        allowed = np.maximum(tol * (hi - lo) / length, 64 * _EPS * (la + ra))
        done = diff <= allowed
        accepted.append(est[done])
        errors.append(diff[done])
        if done.all():
            break
        keep = ~done
        if keep.sum() > 1 << 15:
            accepted.append(est[keep])
            errors.append(diff[keep])
            break
        lo = np.concatenate([lo[keep], mid[keep]])
        hi = np.concatenate([mid[keep], hi[keep]])
        whole = np.concatenate([left[keep], right[keep]])
    else:
        accepted.append(whole)
        errors.append(np.zeros_like(whole))
    value = math.fsum(np.concatenate(accepted).tolist())
    err = math.fsum(np.concatenate(errors).tolist())
    return value, err


def _trig0_integral(kind: str, w: float, a: float, b: float) -> float:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    s = math.sin(w * half) / w
    if kind == "sin":
        return 2.0 * math.sin(w * mid) * s
    return 2.0 * math.cos(w * mid) * s


def _power_integral(k: int, a: float, b: float) -> float:
    if k == -1:
        return math.log(b / a)
    if math.isinf(b):
        return -(a ** (k + 1)) / (k + 1)
    return (b ** (k + 1) - a ** (k + 1)) / (k + 1)


@lru_cache(maxsize=200_000)
def atom_integral(atom: Atom, a: float, b: float) -> tuple[float, float, bool]:
    """``∫_a^b atom`` as ``(value, abs_error, closed_form)``."""
    if b <= a:
        return 0.0, 0.0, True
    k = atom.power
    if k < 0 and a <= 0.0 <= b:
        raise NonIntegrable(f"t^{k} has a pole inside [{a}, {b}]")
    if math.isinf(b):
        if atom.kind != "one" or k > -2:
            raise NonIntegrable(
                f"atom {atom} is not integrable over the unbounded piece [{a}, inf)"
            )
        return _power_integral(k, a, b), 0.0, True
    if atom.kind == "one":
        return _power_integral(k, a, b), 0.0, True
    if k == 0:
        return _trig0_integral(atom.kind, atom.freq, a, b), 0.0, True
    value, err = adaptive_gauss(lambda t: atom_eval(atom, t), a, b)
    return value, err, False


# ---------------------------------------------------------------------------
# Function expressions
# ---------------------------------------------------------------------------


def _window_key(w: Optional[SupportSet]) -> tuple:
    return () if w is None else w.pieces


class FunctionExpr:
    """Immutable finite sum of windowed atoms.

    ``terms`` holds ``(coef, Atom, window)`` triples in canonical order with
    like terms merged and exact zeros dropped.  A ``None`` window means the
    term is not cut off.
    """

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Iterable[tuple[float, Atom, Optional[SupportSet]]] = ()):
        acc: dict = {}
        first: dict = {}
        for coef, atom, window in terms:
            if window is not None and window.is_empty:
                continue
            key = (_atom_key(atom), _window_key(window))
            if key in acc:
                acc[key] += float(coef)
            else:
                acc[key] = float(coef)
                first[key] = (atom, window)
        out = []
        for key in sorted(acc):
            if acc[key] != 0.0:
                atom, window = first[key]
                out.append((acc[key], atom, window))
        self.terms = tuple(out)
        self._hash = None

    # constructors -----------------------------------------------------
    @classmethod
    def zero(cls) -> "FunctionExpr":
        return cls(())

    @classmethod
    def atom(cls, power: int = 0, kind: str = "one", freq: float = 0.0,
             coef: float = 1.0, window: Optional[SupportSet] = None) -> "FunctionExpr":
        sign, atom = make_atom(power, kind, freq)
        if atom is None:
            return cls(())
        return cls([(coef * sign, atom, window)])

    @classmethod
    def const(cls, c: float = 1.0, window: Optional[SupportSet] = None) -> "FunctionExpr":
        return cls.atom(0, "one", 0.0, c, window)

    @classmethod
    def sin(cls, omega: float = 1.0, coef: float = 1.0,
            window: Optional[SupportSet] = None) -> "FunctionExpr":
        return cls.atom(0, "sin", omega, coef, window)

    @classmethod
    def cos(cls, omega: float = 1.0, coef: float = 1.0,
            window: Optional[SupportSet] = None) -> "FunctionExpr":
        return cls.atom(0, "cos", omega, coef, window)

    @classmethod
    def power(cls, k: int, coef: float = 1.0,
              window: Optional[SupportSet] = None) -> "FunctionExpr":
        return cls.atom(k, "one", 0.0, coef, window)

    # structure --------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def window(self) -> Optional[SupportSet]:
        """Union of term windows; ``None`` if any term is uncut."""
        out = SupportSet.empty()
        for _, _, w in self.terms:
            if w is None:
                return None
            out = out.union(w)
        return out

    def restrict(self, support: Optional[SupportSet]) -> "FunctionExpr":
        if support is None:
            return self
        return FunctionExpr((c, a, _meet(w, support)) for c, a, w in self.terms)

    def key(self) -> tuple:
        return tuple((c, _atom_key(a), _window_key(w)) for c, a, w in self.terms)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __eq__(self, other):
        return isinstance(other, FunctionExpr) and self.key() == other.key()

    # algebra ----------------------------------------------------------
    def __add__(self, other: "FunctionExpr") -> "FunctionExpr":
        if not isinstance(other, FunctionExpr):
            return NotImplemented
        return FunctionExpr(self.terms + other.terms)

    def __neg__(self) -> "FunctionExpr":
        return FunctionExpr((-c, a, w) for c, a, w in self.terms)

    def __sub__(self, other: "FunctionExpr") -> "FunctionExpr":
        if not isinstance(other, FunctionExpr):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> "FunctionExpr":
        if isinstance(other, FunctionExpr):
            out = []
            for c1, a1, w1 in self.terms:
                for c2, a2, w2 in other.terms:
                    w = _meet(w1, w2)
                    if w is not None and w.is_empty:
                        continue
                    for f, atom in atom_product(a1, a2):
                        out.append((c1 * c2 * f, atom, w))
            return FunctionExpr(out)
        other = float(other)
        return FunctionExpr((c * other, a, w) for c, a, w in self.terms)

    __rmul__ = __mul__

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for c, atom, w in self.terms:
            vals = c * atom_eval(atom, t)
            if w is not None:
                vals = np.where(w.contains(t), vals, 0.0)
            out = out + vals
        return out

    def __repr__(self) -> str:
        parts = []
        for c, a, w in self.terms:
            body = {"one": "1", "sin": f"sin({a.freq:g}t)", "cos": f"cos({a.freq:g}t)"}[a.kind]
            if a.power:
                body = f"t^{a.power}·{body}" if a.kind != "one" else f"t^{a.power}"
            win = "" if w is None else f"·I{w}"
            parts.append(f"{c:+.6g}·{body}{win}")
        return "FunctionExpr(" + (" ".join(parts) if parts else "0") + ")"


# ---------------------------------------------------------------------------
# Pairings
# ---------------------------------------------------------------------------


class PairingValue(NamedTuple):
    value: float
    method: str
    abs_error: float


def integrate(u: FunctionExpr, domain: Optional[SupportSet] = None) -> PairingValue:
    """``∫_domain u``; terms without a window need a finite ``domain``."""
    parts: list[float] = []
    err = 0.0
    closed = True
    for coef, atom, w in u.terms:
        region = _meet(w, domain)
        if region is None:
            raise NonIntegrable("integration over the whole real line")
        for lo, hi in region.pieces:
            val, e, cf = atom_integral(atom, lo, hi)
            parts.append(coef * val)
            err += abs(coef) * e
            closed = closed and cf
    return PairingValue(math.fsum(parts), "closed-form" if closed else "quadrature", err)


def pairing(u: FunctionExpr, v: FunctionExpr, domain: Optional[SupportSet]) -> PairingValue:
    """``Q_Λ(u, v) = ∫_Λ u v`` (exactly symmetric in its two arguments)."""
    if v.key() < u.key():
        u, v = v, u
    return integrate(u * v, domain)


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------


def _cells(u: FunctionExpr, domain: SupportSet) -> list[tuple[float, float, list]]:
    """Split ``domain`` so that each cell sees a fixed set of active atoms."""
    cuts = set()
    for _, _, w in u.terms:
        if w is not None:
            cuts.update(w.breakpoints())
    cells = []
    for lo, hi in domain.pieces:
        inner = sorted(x for x in cuts if lo < x < hi)
        edges = [lo] + inner + [hi]
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a <= MERGE_TOL:
                continue
            probe = 0.5 * (a + b) if math.isfinite(b) else a + 1.0
            acc: dict = {}
            first: dict = {}
            for c, atom, w in u.terms:
                if w is None or bool(w.contains(probe)):
                    key = _atom_key(atom)
                    acc[key] = acc.get(key, 0.0) + c
                    first.setdefault(key, atom)
            atoms = [(acc[k], first[k]) for k in sorted(acc) if acc[k] != 0.0]
            if atoms:
                cells.append((a, b, atoms))
    return cells


def _cell_eval(atoms, t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for c, atom in atoms:
        out = out + c * atom_eval(atom, t)
    return out


def _cell_integral(atoms, a, b) -> float:
    return math.fsum(c * atom_integral(atom, a, b)[0] for c, atom in atoms)


def _check_pole(atoms, a, b):
    for _, atom in atoms:
        if atom.power < 0 and a <= 0.0 <= b:
            raise NonIntegrable(f"t^{atom.power} has a pole inside [{a}, {b}]")


def _grid_size(atoms, a, b) -> int:
    fmax = max(atom.freq for _, atom in atoms)
    return int(min(200_000, max(GRID_POINTS, 40 * fmax * (b - a))))


def _unbounded_grid(a: float, n: int) -> np.ndarray:
    s = np.linspace(1.0, 0.0, n + 1)[:-1]
    return a / s


def _roots(atoms, a, b) -> list[float]:
    """Sign changes of a cell function located by grid scan plus brentq."""
    if math.isinf(b):
        grid = _unbounded_grid(a, GRID_POINTS)
    else:
        grid = np.linspace(a, b, _grid_size(atoms, a, b) + 1)
    vals = _cell_eval(atoms, grid)
    roots = [float(x) for x in grid[1:-1][vals[1:-1] == 0.0]]
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        roots.append(brentq(lambda x: float(_cell_eval(atoms, x)), grid[i], grid[i + 1],
                            xtol=1e-15, rtol=4 * _EPS))
    return sorted(roots)


def _sup_single(coef, atom: Atom, a, b) -> Optional[float]:
    if atom.kind == "one":
        if math.isinf(b):
            if atom.power > 0:
                raise NonIntegrable("unbounded power on a half-line")
            return abs(coef) * (1.0 if atom.power == 0 else a ** atom.power)
        return abs(coef) * max(abs(a) ** atom.power, abs(b) ** atom.power)
    if atom.power != 0 or math.isinf(b):
        return None
    w = atom.freq
    if w * (b - a) >= math.pi:
        return abs(coef)
    offset = 0.5 * math.pi if atom.kind == "sin" else 0.0
    m = math.ceil((w * a - offset) / math.pi)
    if (m * math.pi + offset) / w <= b:
        return abs(coef)
    ends = _cell_eval([(coef, atom)], np.array([a, b]))
    return float(np.max(np.abs(ends)))


def _sup_cell(atoms, a, b) -> float:
    _check_pole(atoms, a, b)
    if len(atoms) == 1:
        exact = _sup_single(atoms[0][0], atoms[0][1], a, b)
        if exact is not None:
            return exact
    if math.isinf(b):
        if any(atom.kind != "one" or atom.power > 0 for _, atom in atoms):
            raise NonIntegrable("sup over a half-line needs decaying power atoms")
        limit = abs(math.fsum(c for c, atom in atoms if atom.power == 0))
        grid = _unbounded_grid(a, GRID_POINTS)
        vals = np.abs(_cell_eval(atoms, grid))
        return max(limit, float(vals.max()))
    grid = np.linspace(a, b, _grid_size(atoms, a, b) + 1)
    vals = np.abs(_cell_eval(atoms, grid))
    top = np.argsort(vals)[-5:]
    lo = grid[np.maximum(top - 1, 0)]
    hi = grid[np.minimum(top + 1, len(grid) - 1)]
    return max(float(vals.max()), _refine_max(atoms, lo, hi))


def _refine_max(atoms, lo: np.ndarray, hi: np.ndarray, rounds: int = 3, points: int = 65) -> float:
    """Max of |f| on several brackets by repeated local grids.

    Each round zooms onto the best sample with a bracket of ±1 spacing, so
    three rounds shrink a bracket by roughly 32³.
    """
    lo, hi = lo.astype(float), hi.astype(float)
    frac = np.linspace(0.0, 1.0, points)
    best = 0.0
    for _ in range(rounds):
        width = hi - lo
        xs = lo[:, None] + width[:, None] * frac[None, :]
        vals = np.abs(_cell_eval(atoms, xs))
        best = max(best, float(vals.max()))
        k = np.argmax(vals, axis=1)
        step = width / (points - 1)
        centre = xs[np.arange(len(lo)), k]
        lo = np.maximum(centre - step, lo)
        hi = np.minimum(centre + step, hi)
    return best


def _lp_cell(atoms, a, b, p: float) -> float:
    """``∫_a^b |f|^p`` on one cell."""
    _check_pole(atoms, a, b)
    if p == 2.0:
        parts = []
        for i, (ci, ai) in enumerate(atoms):
            for j, (cj, aj) in enumerate(atoms):
                if j < i:
                    continue
                mult = 1.0 if i == j else 2.0
                for f, atom in atom_product(ai, aj):
                    parts.append(mult * ci * cj * f * atom_integral(atom, a, b)[0])
        return max(math.fsum(parts), 0.0)
    if math.isinf(b):
        if len(atoms) == 1 and atoms[0][1].kind == "one":
            c, atom = atoms[0]
            e = atom.power * p
            if e >= -1.0 or a <= 0.0:
                raise NonIntegrable(f"|t^{atom.power}|^{p} is not integrable on [{a}, inf)")
            return abs(c) ** p * a ** (e + 1.0) / -(e + 1.0)
        if p != 1.0:
            raise NonIntegrable("L_p norm on a half-line needs a single power atom")
    edges = [a] + _roots(atoms, a, b) + [b]
    parts = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if p == 1.0:
            parts.append(abs(_cell_integral(atoms, lo, hi)))
        else:
            val, _ = adaptive_gauss(lambda t: np.abs(_cell_eval(atoms, t)) ** p, lo, hi)
            parts.append(val)
    return math.fsum(parts)


def lp_norm(u: FunctionExpr, domain: Optional[SupportSet] = None, p=2.0) -> float:
    """``‖u‖_{L_p(domain)}`` for p in [1, inf]; ``domain=None`` uses u's window."""
    p = as_exponent(p)
    if u.is_zero:
        return 0.0
    region = _meet(u.window, domain)
    if region is None:
        raise NonIntegrable("norm over the whole real line")
    cells = _cells(u, region)
    if math.isinf(p):
        return max((_sup_cell(atoms, a, b) for a, b, atoms in cells), default=0.0)
    total = math.fsum(_lp_cell(atoms, a, b, p) for a, b, atoms in cells)
    return total ** (1.0 / p)


def is_in_lp(u: FunctionExpr, domain: Optional[SupportSet], p) -> bool:
    try:
        return math.isfinite(lp_norm(u, domain, p))
    except NonIntegrable:
        return False


# ---------------------------------------------------------------------------
# Functional equality
# ---------------------------------------------------------------------------


class EqualityVerdict(NamedTuple):
    """Outcome of :func:`check_functional_equality`.

    ``residuals`` are the absolute L² norms of ``f−g`` on ``G``, ``f`` on
    ``G1∖G`` and ``g`` on ``G2∖G``.  ``witness`` names the region with the
    largest relative violation (``"G"``, ``"G1-G"`` or ``"G2-G"``).
    """

    equal: bool
    witness: Optional[str]
    region: Optional[SupportSet]
    residual: float
    residuals: tuple
    scale: float


def check_functional_equality(f: FunctionExpr, g: FunctionExpr, G1: SupportSet,
                              G2: SupportSet, tol: float = 1e-9) -> EqualityVerdict:
    """Decide whether ``∫_{G1} f x = ∫_{G2} g x`` for every test function x.

    That holds exactly when f = g a.e. on ``G = G1 ∩ G2`` while f vanishes
    on ``G1∖G`` and g vanishes on ``G2∖G``; each condition is tested as an
    L² norm at most ``tol`` times ``max(‖f‖, ‖g‖)``.
    """
    G = G1.intersect(G2)
    regions = (("G", G), ("G1-G", G1.difference(G)), ("G2-G", G2.difference(G)))
    fr, gr = f.restrict(G1), g.restrict(G2)
    exprs = (fr - gr, fr, gr)
    residuals = []
    for (_, region), expr in zip(regions, exprs):
        residuals.append(0.0 if region.is_empty else lp_norm(expr, region, 2))
    scale = max(lp_norm(fr, G1, 2), lp_norm(gr, G2, 2))
    bound = tol * scale
    worst = max(range(3), key=lambda i: residuals[i])
    if all(r <= bound for r in residuals):
        return EqualityVerdict(True, None, None, residuals[worst], tuple(residuals), scale)
    name, region = regions[worst]
    return EqualityVerdict(False, name, region, residuals[worst], tuple(residuals), scale)


__all__ = [
    "Atom", "EqualityVerdict", "FunctionExpr", "PairingValue", "SupportSet",
    "adaptive_gauss", "as_exponent", "atom_integral", "atom_product",
    "check_functional_equality", "conjugate", "integrate", "is_in_lp",
    "lp_norm", "make_atom", "pairing",
]
