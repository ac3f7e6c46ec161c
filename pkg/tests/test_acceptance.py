"""The ten acceptance criteria, one test each, at their stated tolerances."""

import math

import numpy as np
import pytest
from scipy import integrate

from _gen import (
    SUPPORT,
    WINDOW,
    random_family,
    random_operator,
    random_probe,
    random_trig_params,
)
from sepkern import cli
from sepkern.commrel import RelationSpec, verify_covariance, verify_monomial, verify_reciprocal, verify_two_sided
from sepkern.convlab import SequenceLaw, SequenceSpec, run_sequence
from sepkern.errors import ConsistencyError
from sepkern.families import (
    FAMILIES,
    LN2,
    TrigFamilyParams,
    build_family,
    sigma,
    trig_commutator_coefficients,
    trig_operator,
)
from sepkern.measure import FunctionExpr, SupportSet, check_functional_equality, pairing
from sepkern.normest import empirical_norm, hoelder_bound, schur_bound
from sepkern.sepop import (
    KernelTerm,
    PolynomialSpec,
    SeparableOperator,
    adjoint,
    apply,
    commutator,
    compose,
    kernel_coefficient,
    kernel_distance,
    kernel_norm,
    polynomial,
    power,
)


def _rel(diff, *norms):
    return diff / max(max(norms), 1e-300)


def test_01_power_formula(criterion):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        A = random_operator(rng)
        acc = A
        for m in range(2, 6):
            acc = compose(acc, A)
            worst = max(worst, _rel(*kernel_distance(power(A, m), acc)))
    assert criterion(1, worst <= 1e-9, f"power vs repeated compose, 100 operators, worst rel {worst:.2e}")


def _random_poly(rng, zero_constant=False):
    deg = int(rng.integers(0, 4))
    coeffs = [float(c) for c in rng.uniform(-1.5, 1.5, deg + 1)]
    if zero_constant:
        coeffs[0] = 0.0
    return PolynomialSpec(coeffs)


def _random_spec(rng, k):
    kind = k % 6
    if kind == 0:
        supports = [SUPPORT, SupportSet.interval(1.0, 2.5), SupportSet.interval(0.0, 1.0)]
        A = random_operator(rng, int(rng.integers(1, 4)))
        B = random_operator(rng, int(rng.integers(1, 4)), supports[int(rng.integers(0, 3))])
        return RelationSpec(_random_poly(rng), _random_poly(rng), A, B)
    if kind == 1:
        A = random_operator(rng, int(rng.integers(1, 4)))
        return RelationSpec(_random_poly(rng), _random_poly(rng), A, SeparableOperator.zero(SUPPORT))
    if kind == 2:
        A = random_operator(rng, int(rng.integers(1, 4)))
        H = _random_poly(rng)
        B = polynomial(_random_poly(rng, zero_constant=True), A)
        if not B.terms:
            B = A
        return RelationSpec(H, H, A, B)
    if kind == 3:
        fam = random_family(FAMILIES[int(rng.integers(0, len(FAMILIES)))], rng)
        return RelationSpec(PolynomialSpec.identity(), PolynomialSpec.monomial(fam.delta, 2), fam.A, fam.B)
    if kind == 4:
        ga, gb = SupportSet.interval(0.0, 1.0), SupportSet.interval(2.0, 3.0)
        A = random_operator(rng, int(rng.integers(1, 4)), ga, ga)
        B = random_operator(rng, int(rng.integers(1, 4)), gb, gb)
        H, F = _random_poly(rng, True), _random_poly(rng, True)
        if rng.random() < 0.3:
            H = H + PolynomialSpec([0.5])
        return RelationSpec(H, F, A, B)
    A = random_operator(rng, int(rng.integers(1, 4)))
    return RelationSpec(_random_poly(rng), _random_poly(rng), A, A)


def test_02_condition_verdict_matches_direct(criterion):
    rng = np.random.default_rng(202)
    disagreements = holds = 0
    for k in range(200):
        spec = _random_spec(rng, k)
        try:
            rep = verify_two_sided(spec)
        except ConsistencyError:
            disagreements += 1
            continue
        direct = rep.direct_residual <= rep.tol
        disagreements += rep.holds != direct
        holds += rep.holds
    ok = disagreements == 0 and 40 <= holds <= 160
    assert criterion(2, ok, f"200 specs, {disagreements} disagreements, {holds} hold")


def test_03_family_identities(criterion):
    rng = np.random.default_rng(303)
    worst = worst_pair = 0.0
    for name in FAMILIES:
        for _ in range(5):
            fam = random_family(name, rng)
            delta = float(rng.uniform(0.5, 2.0)) if name == "laurent" else fam.delta
            rep = verify_monomial(delta, 2, fam.A, fam.B)
            assert rep.holds, (name, rep)
            worst = max(worst, *rep.residuals, rep.direct_residual)
            if name in ("T4", "laurent"):
                pairs = [pairing(tb.left, ta.right, fam.A.support).value
                         for ta in fam.A.terms for tb in fam.B.terms]
                worst_pair = max(worst_pair, max(abs(v) for v in pairs))
                assert kernel_norm(compose(fam.A, fam.B)) <= 1e-12 * max(kernel_norm(fam.A) * kernel_norm(fam.B), 1.0)
    ok = worst <= 1e-10 and worst_pair <= 1e-12
    assert criterion(3, ok, f"{len(FAMILIES)} families x 5 draws, worst residual {worst:.2e}, "
                            f"AB=0 pairings {worst_pair:.2e}")


def test_04_sigma_identities(criterion):
    rng = np.random.default_rng(404)
    worst_sum = worst_quad = 0.0
    for _ in range(50):
        pr = random_trig_params(rng)
        s1, s2 = sigma(pr.omega, pr.alpha1, pr.beta1)
        length = pr.beta1 - pr.alpha1
        worst_sum = max(worst_sum, abs(s1 + s2 - length) / length)
        ref, _ = integrate.quad(lambda s: math.sin(pr.omega * s) ** 2, pr.alpha1, pr.beta1,
                                epsabs=1e-14, epsrel=1e-14, limit=200)
        worst_quad = max(worst_quad, abs(s1 - ref))
    zero = sigma(0.0, 0.3, 2.0)
    ok = worst_sum <= 4 * np.finfo(float).eps and worst_quad <= 1e-10 and zero == (0.0, 1.7)
    assert criterion(4, ok, f"sum rel {worst_sum:.1e}, quad {worst_quad:.1e}, omega=0 -> {zero[0]}")


def test_05_commutator_formulas(criterion):
    rng = np.random.default_rng(505)
    worst_t4 = worst_laurent = worst_general = 0.0
    for _ in range(5):
        fam = random_family("T4", rng)
        pr = fam.params
        comm = commutator(fam.A, fam.B)
        got = kernel_coefficient(comm, FunctionExpr.sin(pr.omega, window=pr.window),
                                 FunctionExpr.cos(pr.omega, window=pr.support))
        want = -fam.sigmas[0] * fam.theta_A[0] * fam.theta_B[2]
        worst_t4 = max(worst_t4, abs(got - want))

        lf = random_family("laurent", rng)
        comm = commutator(lf.A, lf.B)
        lp = lf.params
        got = kernel_coefficient(comm, FunctionExpr.power(-1, window=SupportSet.half_line(lp.alpha)),
                                 FunctionExpr.const(1.0, SupportSet.interval(1.0, 2.0)))
        worst_laurent = max(worst_laurent, abs(got + lp.gamma_A2 * lp.gamma_B2 * LN2))

    for _ in range(50):
        pr = random_trig_params(rng)
        s1, s2 = pr.sigmas
        A = trig_operator(pr.theta_A, pr)
        B = trig_operator(pr.theta_B, pr)
        predicted = trig_operator(trig_commutator_coefficients(pr.theta_A, pr.theta_B, s1, s2), pr)
        direct = compose(A, B) - compose(B, A)
        diff, n1, _ = kernel_distance(direct, predicted)
        worst_general = max(worst_general, diff / max(n1, 1.0))
    ok = worst_t4 <= 1e-10 and worst_laurent <= 1e-10 and worst_general <= 1e-9
    assert criterion(5, ok, f"T4 {worst_t4:.1e}, laurent {worst_laurent:.1e}, "
                            f"50 four-theta draws {worst_general:.1e}")


def test_06_convergence_decay(criterion):
    details, ok = [], True
    for p in (1, 2, math.inf):
        trace = run_sequence(SequenceSpec("T4", theta_seq=SequenceLaw("inv", 1.0), n_max=64, p=p))
        b = trace.bound_comm
        decreasing = all(x > y for x, y in zip(b, b[1:]))
        below = all(r.empirical_comm <= r.bound_comm * (1 + 1e-9) for r in trace.rows)
        good = (len(trace.rows) == 64 and decreasing and b[-1] <= b[0] / 50 and below
                and trace.slope is not None and -1.05 <= trace.slope <= -0.95)
        ok &= good
        details.append(f"p={p:g} slope {trace.slope:.4f}")
    assert criterion(6, ok, "T4 theta_n=1/n, n<=64: " + ", ".join(details))


def test_07_norm_bound_dominance(criterion):
    rng = np.random.default_rng(707)
    worst_gap = -math.inf
    checked = 0
    for name in FAMILIES:
        exponents = (1.5, 2.0, math.inf) if name == "laurent" else (1.0, 2.0, math.inf)
        for _ in range(5):
            draw = rng.integers(0, 2**32)
            for p in exponents:
                fam = random_family(name, np.random.default_rng(draw), p)
                for op in (fam.A, fam.B):
                    bounds = [hoelder_bound(op, p).upper]
                    if name != "laurent":
                        bounds.append(schur_bound(op).upper)
                    bound = min(bounds)
                    emp = empirical_norm(op, p, 100, seed=int(draw % 1000))
                    worst_gap = max(worst_gap, (emp - bound) / max(bound, 1.0))
                    checked += 1
    projector = SeparableOperator.rank_one(FunctionExpr.const(1.0, SupportSet.interval(0, 1)),
                                           FunctionExpr.const(1.0), SupportSet.interval(0, 1))
    tight = empirical_norm(projector, 2, 100)
    ok = worst_gap <= 1e-9 and tight >= 0.98
    assert criterion(7, ok, f"{checked} operator/exponent pairs, worst (emp-bound)/bound {worst_gap:.2e}, "
                            f"projector {tight:.6f}")


def _lemma_pair(rng):
    """``f``, ``g`` agreeing on G=[1,2], vanishing on G1∖G and G2∖G respectively."""
    G1, G2 = SupportSet.interval(0.0, 2.0), SupportSet.interval(1.0, 3.0)
    G = SupportSet.interval(1.0, 2.0)
    common = random_probe(rng, G)
    f = common + random_probe(rng, SupportSet.interval(2.0, 4.0))
    g = common + random_probe(rng, SupportSet.interval(-2.0, 1.0))
    return f, g, G1, G2


def test_08_functional_equality(criterion):
    rng = np.random.default_rng(808)
    worst = 0.0
    verdicts_ok = True
    for _ in range(5):
        f, g, G1, G2 = _lemma_pair(rng)
        verdicts_ok &= check_functional_equality(f, g, G1, G2).equal
        for _ in range(10):
            x = random_probe(rng)
            worst = max(worst, abs(pairing(f, x, G1).value - pairing(g, x, G2).value))
    f, g, G1, G2 = _lemma_pair(rng)
    bump = FunctionExpr.const(math.sqrt(0.02), SupportSet.interval(0.25, 0.75))
    bad = check_functional_equality(f + bump, g, G1, G2)
    detected = (not bad.equal) and bad.witness == "G1-G"
    ok = worst <= 1e-9 and verdicts_ok and detected
    assert criterion(8, ok, f"50 probes worst {worst:.1e}, bump witness {bad.witness} "
                            f"residual {bad.residuals[1]:.4f}")


def test_09_adjoint_duality(criterion):
    rng = np.random.default_rng(909)
    worst = 0.0
    for _ in range(20):
        A = random_operator(rng)
        As = adjoint(A)
        for _ in range(50):
            x = random_probe(rng, SUPPORT)
            y = random_probe(rng, WINDOW)
            lhs = pairing(apply(A, x), y, None).value
            rhs = pairing(x, apply(As, y), None).value
            worst = max(worst, abs(lhs - rhs))
    implied = True
    for name in FAMILIES:
        fam = random_family(name, rng)
        F = PolynomialSpec.monomial(fam.delta, 2)
        if verify_covariance(F, fam.A, fam.B).holds:
            implied &= verify_reciprocal(F, adjoint(fam.A), adjoint(fam.B)).holds
        else:
            implied = False
    ok = worst <= 1e-10 and implied
    assert criterion(9, ok, f"1000 probe pairs worst {worst:.1e}, reciprocal adjoint relation on "
                            f"{len(FAMILIES)} families: {implied}")


def test_10_cli_determinism(criterion, tmp_path):
    conf = tmp_path / "converge.yaml"
    conf.write_text("command: converge\nfamily: {name: T4}\n"
                    "sequence: {theta: {kind: inv, c: 1.0}, n_max: 8}\n")
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["--config", str(conf), "--out", str(out), "--seed", "7"]) == 0
        outputs.append(((out / "trace.csv").read_bytes(), (out / "trace.dat").read_bytes()))
    identical = outputs[0] == outputs[1]

    good = tmp_path / "t4.yaml"
    good.write_text("command: verify\nfamily: {name: T4}\n")
    bad = tmp_path / "t4p.yaml"
    bad.write_text("command: verify\nfamily: {name: T4}\nperturb: {extend: 1.0, amplitude: 0.1}\n")
    code_good = cli.main(["--config", str(good), "--out", str(tmp_path / "g"), "--no-figure"])
    code_bad = cli.main(["--config", str(bad), "--out", str(tmp_path / "p"), "--no-figure"])
    report = (tmp_path / "p" / "report.txt").read_text()
    ok = identical and code_good == 0 and code_bad == 1 and "violated_condition=3" in report
    assert criterion(10, ok, f"byte-identical {identical}, exit codes pass={code_good} perturbed={code_bad}")
