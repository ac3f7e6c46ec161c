"""Command-line front end.

Each run reads one YAML config (schema below), executes a single command and
writes its outputs into ``--out``:

* ``verify``        report.txt, verify.csv; exit 1 when the relation fails
* ``norms``         report.txt, norms.csv; exit 1 when a probe beats a bound
* ``family-check``  report.txt; exit 1 when an identity fails
* ``converge``      report.txt, trace.csv, trace.dat, trace.png
* ``scan``          report.txt, trace.csv, trace.dat, trace.png

Config errors exit with status 2.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Any, Optional

import jsonschema
import yaml

from . import convlab
from .commrel import RelationSpec, verify_two_sided
from .errors import ConsistencyError, InadmissibleParams, MembershipError, NonIntegrable, SupportMismatch
from .families import (
    LaurentFamilyParams,
    TrigFamilyParams,
    build_family,
    laurent_commutator_kernel,
    trig_operator,
)
from .measure import FunctionExpr, SupportSet, as_exponent
from .normest import DOMINANCE_SLACK, crude_bound, empirical_norm, hoelder_bound, schur_bound
from .sepop import KernelTerm, PolynomialSpec, SeparableOperator, commutator, kernel_distance, kernel_norm

COMMANDS = ("verify", "norms", "family-check", "converge", "scan")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CSV_HEADER = "n,bound_diff,bound_comm,empirical_comm"

_number = {"type": "number"}
_bound = {"anyOf": [_number, {"type": "string", "enum": ["inf", "-inf"]}]}
_interval = {"type": "array", "items": _bound, "minItems": 2, "maxItems": 2}
_coeffs = {"type": "array", "items": _number, "minItems": 1}
_atom = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "coef": _number,
        "kind": {"enum": ["one", "sin", "cos"]},
        "power": {"type": "integer"},
        "freq": _number,
        "window": _interval,
    },
}
_factor = {"type": "array", "items": _atom, "minItems": 1}
_operator = {
    "type": "object",
    "additionalProperties": False,
    "required": ["support", "terms"],
    "properties": {
        "support": _interval,
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["left", "right"],
                "properties": {"left": _factor, "right": _factor},
            },
        },
    },
}
_law = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(convlab.SEQUENCE_KINDS)},
        "c": {"anyOf": [_number, {"const": "limit"}]},
        "c2": _number,
    },
}
_exponent = {"anyOf": [{"type": "number", "minimum": 1}, {"const": "inf"}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "family": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["T4", "T5", "T6", "T7", "T8", "T9", "T10", "laurent"]},
                "theta_A": {"type": "array", "items": _number, "maxItems": 4},
                "theta_B": {"type": "array", "items": _number, "maxItems": 4},
                "omega": _number,
                "delta": _number,
                "alpha": _number,
                "beta": _number,
                "alpha1": _number,
                "beta1": _number,
                "gamma_A2": _number,
                "gamma_B2": _number,
            },
        },
        "operators": {
            "type": "object",
            "additionalProperties": False,
            "required": ["A", "B"],
            "properties": {"A": _operator, "B": _operator},
        },
        "H": _coeffs,
        "F": _coeffs,
        "perturb": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "extend": {"type": "number", "exclusiveMinimum": 0},
                "amplitude": _number,
            },
        },
        "sequence": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_max"],
            "properties": {
                "theta": _law,
                "sigma": _law,
                "n_max": {"type": "integer", "minimum": 1},
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["param", "path", "steps"],
            "properties": {
                "param": {"type": "string"},
                "path": _law,
                "steps": {"type": "integer", "minimum": 1},
            },
        },
        "p": _exponent,
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "trials": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
        "figure": {"type": "boolean"},
    },
}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; ``to_dict`` / ``from_dict`` round-trip."""

    command: str
    family: Optional[dict] = None
    operators: Optional[dict] = None
    H: Optional[list] = None
    F: Optional[list] = None
    perturb: Optional[dict] = None
    sequence: Optional[dict] = None
    scan: Optional[dict] = None
    p: Any = 2
    tol: float = 1e-9
    seed: int = 0
    trials: Optional[int] = None
    out: Optional[str] = None
    figure: bool = True

    @classmethod
    def from_dict(cls, data: Any) -> "RunConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
            raise ConfigError(f"{where}: {exc.message}") from None
        return cls(**data)

    def to_dict(self) -> dict:
        default = RunConfig(self.command)
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)
                if f.name == "command" or getattr(self, f.name) != getattr(default, f.name)}

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @property
    def exponent(self) -> float:
        return as_exponent(self.p)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from None
    return RunConfig.from_dict(data)


# ---------------------------------------------------------------- output

def fmt(x) -> str:
    """Shortest form for ints and bools, 17 significant digits for floats."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return f"{x:.17g}"
    if isinstance(x, (tuple, list)):
        return ";".join(fmt(v) for v in x)
    return str(x)


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def report_text(items: dict) -> str:
    return "".join(f"{k}={fmt(v)}\n" for k, v in items.items())


def csv_text(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def trace_csv(trace: convlab.ConvergenceTrace) -> str:
    return csv_text(CSV_HEADER.split(","), [list(r) for r in trace.rows])


def trace_dat(trace: convlab.ConvergenceTrace) -> str:
    lines = ["# n bound_comm"] + [f"{r.n} {fmt(r.bound_comm)}" for r in trace.rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- builders

def _num(v) -> float:
    return float(v)


def _interval_set(pair) -> SupportSet:
    lo, hi = (_num(v) for v in pair)
    if math.isinf(hi) and hi > 0:
        return SupportSet.half_line(lo)
    if math.isinf(lo):
        raise ConfigError("intervals must have a finite left end")
    return SupportSet.interval(lo, hi)


def _factor(atoms: list[dict]) -> FunctionExpr:
    out = FunctionExpr.zero()
    for a in atoms:
        window = _interval_set(a["window"]) if "window" in a else None
        out = out + FunctionExpr.atom(a.get("power", 0), a.get("kind", "one"),
                                      a.get("freq", 0.0), a.get("coef", 1.0), window)
    return out


def operator_from_config(data: dict, p) -> SeparableOperator:
    terms = [KernelTerm(_factor(t["left"]), _factor(t["right"])) for t in data["terms"]]
    return SeparableOperator(terms, _interval_set(data["support"]), p)


def family_from_config(cfg: RunConfig):
    if cfg.family is None:
        raise ConfigError("this command needs a 'family' section")
    fam = dict(cfg.family)
    name = fam.pop("name")
    if name == "laurent":
        unknown = set(fam) - {"alpha", "gamma_A2", "gamma_B2"}
        if unknown:
            raise ConfigError(f"laurent does not take {sorted(unknown)}")
        params = LaurentFamilyParams(p=cfg.exponent, **fam)
    else:
        unknown = set(fam) & {"gamma_A2", "gamma_B2"}
        if unknown:
            raise ConfigError(f"{name} does not take {sorted(unknown)}")
        params = TrigFamilyParams(**fam)
    return build_family(name, params, cfg.exponent)


def perturb_outside_support(fam, extend: float, amplitude: float) -> SeparableOperator:
    """``B`` plus ``η·cos(ωt)·I_{(β₁, β₁+ε]}(s)`` on the support enlarged by ``ε``.

    The new input factor lives only where ``B`` acts but ``A`` does not, so
    only the condition on ``X × (G_B∖G)`` can break.
    """
    B = fam.B
    lo, hi = B.support.lo, B.support.hi
    ext = SupportSet.interval(hi, hi + extend)
    omega = getattr(fam.params, "omega", 1.0)
    window = B.output_window
    extra = KernelTerm(FunctionExpr.cos(omega, amplitude, window), FunctionExpr.const(1.0, ext))
    return SeparableOperator(list(B.terms) + [extra], SupportSet.interval(lo, hi + extend), B.p)


def _relation_operands(cfg: RunConfig):
    if (cfg.family is None) == (cfg.operators is None):
        raise ConfigError("give exactly one of 'family' or 'operators'")
    if cfg.family is not None:
        fam = family_from_config(cfg)
        A, B = fam.A, fam.B
        if cfg.perturb is not None:
            B = perturb_outside_support(fam, cfg.perturb.get("extend", 1.0),
                                        cfg.perturb.get("amplitude", 0.1))
        F = PolynomialSpec(cfg.F) if cfg.F else PolynomialSpec.monomial(fam.delta, 2)
        return A, B, F
    if cfg.perturb is not None:
        raise ConfigError("'perturb' applies to family runs only")
    A = operator_from_config(cfg.operators["A"], cfg.exponent)
    B = operator_from_config(cfg.operators["B"], cfg.exponent)
    return A, B, PolynomialSpec(cfg.F) if cfg.F else PolynomialSpec.identity()


def _law(data: Optional[dict]) -> Optional[convlab.SequenceLaw]:
    if data is None:
        return None
    c = data.get("c", 1.0)
    return convlab.SequenceLaw(data["kind"], None if c == "limit" else float(c),
                               float(data.get("c2", 0.0)))


def _norm_row(name: str, op: SeparableOperator, p: float, trials: int, seed: int) -> dict:
    row = {"operator": name, "p": p,
           "hoelder": hoelder_bound(op, p).upper, "crude": crude_bound(op, p).upper}
    try:
        row["schur"] = schur_bound(op).upper
    except NonIntegrable:
        row["schur"] = None
    row["empirical"] = empirical_norm(op, p, trials, seed)
    return row


def _dominated(row: dict) -> bool:
    bound = min(v for v in (row["hoelder"], row["schur"]) if v is not None)
    return row["empirical"] <= bound + DOMINANCE_SLACK * max(1.0, bound)


# ---------------------------------------------------------------- commands

def cmd_verify(cfg: RunConfig, out: str) -> int:
    A, B, F = _relation_operands(cfg)
    H = PolynomialSpec(cfg.H) if cfg.H else PolynomialSpec.identity()
    rep = verify_two_sided(RelationSpec(H, F, A, B), cfg.tol)
    p = cfg.exponent
    items = {
        "command": "verify",
        "holds": rep.holds,
        "residual_1": rep.residuals[0],
        "residual_2": rep.residuals[1],
        "residual_3": rep.residuals[2],
        "scale": rep.scale,
        "direct_residual": rep.direct_residual,
        "violated_condition": rep.violated_condition,
        "violated_conditions": list(rep.violated),
        "tol": cfg.tol,
        "p": p,
        "hoelder_A": hoelder_bound(A, p).upper,
        "hoelder_B": hoelder_bound(B, p).upper,
    }
    for name, op in (("A", A), ("B", B)):
        try:
            items[f"schur_{name}"] = schur_bound(op).upper
        except NonIntegrable:
            items[f"schur_{name}"] = None
    write_atomic(os.path.join(out, "report.txt"), report_text(items))
    header = ["holds", "residual_1", "residual_2", "residual_3", "scale", "violated_condition"]
    write_atomic(os.path.join(out, "verify.csv"), csv_text(header, [[items[h] for h in header]]))
    if not rep.holds:
        print(f"relation fails: condition {rep.violated_condition} "
              f"(residual {rep.residuals[rep.violated_condition - 1]:.3e})", file=sys.stderr)
    return EXIT_OK if rep.holds else EXIT_FAIL


def cmd_norms(cfg: RunConfig, out: str) -> int:
    if cfg.family is not None and cfg.operators is None:
        fam = family_from_config(cfg)
        ops = (("A", fam.A), ("B", fam.B))
    elif cfg.operators is not None and cfg.family is None:
        ops = tuple((k, operator_from_config(v, cfg.exponent)) for k, v in cfg.operators.items())
    else:
        raise ConfigError("give exactly one of 'family' or 'operators'")
    trials = cfg.trials or 100
    rows = [_norm_row(name, op, cfg.exponent, trials, cfg.seed) for name, op in ops]
    ok = all(_dominated(r) for r in rows)
    items = {"command": "norms", "p": cfg.exponent, "trials": trials, "seed": cfg.seed,
             "dominated": ok}
    for r in rows:
        for key in ("hoelder", "crude", "schur", "empirical"):
            items[f"{key}_{r['operator']}"] = r[key]
    write_atomic(os.path.join(out, "report.txt"), report_text(items))
    header = ["operator", "p", "hoelder", "crude", "schur", "empirical"]
    write_atomic(os.path.join(out, "norms.csv"), csv_text(header, [[r[h] for h in header] for r in rows]))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_family_check(cfg: RunConfig, out: str) -> int:
    fam = family_from_config(cfg)
    rep = verify_two_sided(RelationSpec(PolynomialSpec.identity(),
                                        PolynomialSpec.monomial(fam.delta, 2), fam.A, fam.B), cfg.tol)
    comm = commutator(fam.A, fam.B)
    if fam.name == "laurent":
        predicted = laurent_commutator_kernel(fam.params)
    else:
        predicted = trig_operator(fam.commutator_coefficients, fam.params, fam.p)
    diff, n_comm, n_pred = kernel_distance(comm, predicted)
    comm_residual = diff / max(n_comm, n_pred, kernel_norm(fam.A) * kernel_norm(fam.B), 1e-300)
    comm_ok = comm_residual <= cfg.tol
    items = {
        "command": "family-check",
        "family": fam.name,
        "p": fam.p,
        "holds": rep.holds,
        "residual_1": rep.residuals[0],
        "residual_2": rep.residuals[1],
        "residual_3": rep.residuals[2],
        "scale": rep.scale,
        "commutator_residual": comm_residual,
        "commutator_matches": comm_ok,
        "commutator_coefficients": list(map(float, fam.commutator_coefficients)),
        "sigma1": fam.sigmas[0],
        "sigma2": fam.sigmas[1],
        "theta_A": list(fam.theta_A),
        "theta_B": list(fam.theta_B),
    }
    write_atomic(os.path.join(out, "report.txt"), report_text(items))
    return EXIT_OK if rep.holds and comm_ok else EXIT_FAIL


def _family_params(cfg: RunConfig):
    fam = family_from_config(cfg)
    return fam.name, fam.params


def _emit_trace(cfg: RunConfig, out: str, trace: convlab.ConvergenceTrace, items: dict) -> None:
    b = trace.bound_comm
    items.update({
        "p": trace.p,
        "rows": len(trace.rows),
        "slope": trace.slope,
        "first_bound": b[0],
        "final_bound": b[-1],
        "converges": trace.converges(cfg.tol),
        "empirical_dominated": all(r.empirical_comm <= r.bound_comm * (1 + DOMINANCE_SLACK) + DOMINANCE_SLACK
                                   for r in trace.rows),
    })
    write_atomic(os.path.join(out, "trace.csv"), trace_csv(trace))
    write_atomic(os.path.join(out, "trace.dat"), trace_dat(trace))
    if cfg.figure:
        from .plotting import render_trace

        render_trace(trace, os.path.join(out, "trace.png"))
        items["figure"] = "trace.png"
    write_atomic(os.path.join(out, "report.txt"), report_text(items))


def cmd_converge(cfg: RunConfig, out: str) -> int:
    if cfg.sequence is None:
        raise ConfigError("converge needs a 'sequence' section")
    name, params = _family_params(cfg)
    seq = cfg.sequence
    if "theta" not in seq and "sigma" not in seq:
        raise ConfigError("sequence needs 'theta' and/or 'sigma'")
    spec = convlab.SequenceSpec(name, params, _law(seq.get("theta")), _law(seq.get("sigma")),
                                seq["n_max"], cfg.exponent, cfg.seed,
                                cfg.trials or convlab.EMPIRICAL_TRIALS)
    trace = convlab.run_sequence(spec)
    _emit_trace(cfg, out, trace, {"command": "converge", "family": name, "seed": cfg.seed})
    return EXIT_OK


def cmd_scan(cfg: RunConfig, out: str) -> int:
    if cfg.scan is None:
        raise ConfigError("scan needs a 'scan' section")
    name, params = _family_params(cfg)
    sc = cfg.scan
    try:
        trace = convlab.parameter_limit_scan(name, sc["param"], _law(sc["path"]), sc["steps"],
                                             cfg.exponent, params, cfg.seed,
                                             cfg.trials or convlab.EMPIRICAL_TRIALS)
    except KeyError as exc:
        raise ConfigError(f"unknown scan parameter {exc}") from None
    _emit_trace(cfg, out, trace, {"command": "scan", "family": name, "param": sc["param"],
                                  "seed": cfg.seed})
    return EXIT_OK


HANDLERS = {
    "verify": cmd_verify,
    "norms": cmd_norms,
    "family-check": cmd_family_check,
    "converge": cmd_converge,
    "scan": cmd_scan,
}


def _exponent_arg(text: str):
    try:
        return "inf" if as_exponent(text) == math.inf else float(text)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"not an exponent: {text!r}") from None


def _seed_arg(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sepkern",
        description="Verify commutation relations and convergence for separable-kernel operators.")
    parser.add_argument("--config", required=True, help="YAML run configuration")
    parser.add_argument("--out", help="output directory (default: config 'out' or '.')")
    parser.add_argument("--seed", type=_seed_arg, help="override the config seed")
    parser.add_argument("--tol", type=float, help="override the config tolerance")
    parser.add_argument("--p", type=_exponent_arg, help="exponent: a real >= 1 or 'inf'")
    parser.add_argument("--no-figure", action="store_true", help="skip PNG rendering")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        overrides = {k: v for k, v in (("seed", args.seed), ("tol", args.tol), ("p", args.p))
                     if v is not None}
        if args.no_figure:
            overrides["figure"] = False
        if overrides:
            cfg = RunConfig.from_dict({**cfg.to_dict(), **overrides})
        out = args.out or cfg.out or "."
        os.makedirs(out, exist_ok=True)
        return HANDLERS[cfg.command](cfg, out)
    except (ConfigError, InadmissibleParams, MembershipError, SupportMismatch, NonIntegrable,
            ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConsistencyError as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
