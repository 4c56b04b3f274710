import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracle import covered_prob, signature_pattern_dist
from supcode import analysis
from supcode.codegen import CodeSpec
from supcode.isotropic import fixed_weight_F, from_binomial, from_fixed_weight
from supcode.models import SourceModel
from supcode.optimizer import isotropize
from supcode.simulator import exact_enumeration


def test_target_of_binomial_code_is_binomial():
    src = SourceModel.fixed_weight(2, 2)
    t = analysis.target_distribution(src, from_binomial(8, 0.5))
    assert t.F(7) == pytest.approx(0.25)
    for m in range(9):
        assert t.F(m) == pytest.approx(0.25 ** (8 - m))
    mom = analysis.target_moments(SourceModel.fixed_weight(4, 4), from_binomial(16, 0.9))
    qr = 0.9 ** 4
    assert mom.mu1 == pytest.approx(16 * (1 - qr))
    assert mom.variance == pytest.approx(16 * qr * (1 - qr))


def test_empirical_source_matches_enumeration():
    N, n = 4, 6
    src = SourceModel.empirical(N, {0: 0.1, 1: 0.2, 2: 0.3, 4: 0.4})
    code = from_fixed_weight(n, 2)
    predicted = analysis.target_distribution(src, code)
    probs = np.array([src.pattern_probability(b) for b in range(1 << N)])
    code_probs = np.zeros(1 << n)
    for x in range(1 << n):
        if bin(x).count("1") == 2:
            code_probs[x] = 1 / math.comb(n, 2)
    sig = signature_pattern_dist(probs, [code_probs] * N, N)
    for m in range(n + 1):
        assert abs(predicted.F(m) - covered_prob(sig, n, m)) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_per_bit_codes_with_exchangeable_source(seed):
    # the elementary-symmetric path against direct enumeration
    rng = np.random.default_rng(seed)
    N, n = int(rng.integers(1, 6)), int(rng.integers(1, 7))
    src = SourceModel.empirical(N, list(rng.dirichlet(np.ones(N + 1))))
    specs = [CodeSpec.fixed(n, int(rng.integers(0, n + 1))) for _ in range(N)]
    brute = exact_enumeration(src, specs)
    for a in range(n + 1):
        assert analysis.target_F(src, specs, a) == pytest.approx(brute.F(a), abs=1e-12)


def test_uniform_specs_equal_pi_of_F():
    src = SourceModel.fixed_weight(5, 2)
    spec = CodeSpec.binomial(6, 0.7)
    brute = exact_enumeration(src, spec)
    for m in range(7):
        assert brute.F(m) == pytest.approx(src.gf(0.7 ** (6 - m)), abs=1e-13)


def test_exact_weight_pmf_matches_coefficients():
    # reference in exact rationals: Pi(F_m), then the alternating sum to weight probabilities
    n = 20
    hist = {2: Fraction(3, 10), 5: Fraction(7, 10)}
    src = SourceModel.empirical(10, {k: float(v) for k, v in hist.items()})
    code_F = {"fixed": lambda m: Fraction(math.comb(m, 3), math.comb(n, 3)),
              "binomial": lambda m: Fraction(0.8) ** (n - m)}
    for spec in (CodeSpec.fixed(n, 3), CodeSpec.binomial(n, 0.8)):
        F = [sum(h * code_F[spec.kind](m) ** r for r, h in hist.items()) for m in range(n + 1)]
        exact = [math.comb(n, k) * sum((-1) ** (k + m) * math.comb(k, m) * F[m] for m in range(k + 1))
                 for k in range(n + 1)]
        assert analysis.target_weight_pmf(src, spec) == pytest.approx([float(x) for x in exact], abs=1e-13)
    p = [0.1, 0.4, 0.2]
    specs = [CodeSpec.fixed(9, w) for w in (1, 2, 3)]
    ind = SourceModel.independent(p)
    expect = analysis.target_coefficients(ind, specs).weight_pmf()
    assert analysis.target_weight_pmf(ind, specs) == pytest.approx(expect, abs=1e-12)
    with pytest.raises(NotImplementedError):
        analysis.target_weight_pmf(SourceModel.fixed_weight(3, 1), specs)


def test_exact_weight_pmf_large_n_is_a_distribution():
    pmf = analysis.target_weight_pmf(SourceModel.fixed_weight(32, 32), CodeSpec.fixed(2048, 44))
    assert pmf.sum() == pytest.approx(1.0)
    assert (pmf >= 0).all()


def test_false_drop_exact_binomial_agrees_with_closed_form():
    # binomial codes: bits of independent signatures are independent
    n, r, s, q = 24, 5, 2, 0.85
    rec = analysis.target_weight_pmf(SourceModel.fixed_weight(r, r), CodeSpec.binomial(n, q))
    qry = analysis.target_weight_pmf(SourceModel.fixed_weight(s, s), CodeSpec.binomial(n, q))
    assert analysis.false_drop_exact(rec, qry) == pytest.approx(
        analysis.false_drop_binomial(n, r, s, q), rel=1e-10)


def test_binomial_false_drop_examples():
    q = math.sqrt(0.8)
    assert analysis.optimal_q_binomial(8, 2) == pytest.approx(0.894427, abs=1e-6)
    theta = analysis.false_drop_binomial(32, 8, 2, q)
    assert theta == pytest.approx(((1 - q ** 8) * (1 - q ** 2) + q ** 2) ** 32)
    assert theta == pytest.approx(0.0649, abs=1e-4)
    q = analysis.optimal_q_binomial(1000, 1)
    assert q ** 1000 == pytest.approx(math.exp(-1), rel=1e-3)
    with pytest.raises(ValueError):
        analysis.optimal_q_binomial(0, 1)


def test_required_length():
    assert analysis.required_length(100, 3, 0.01) == 418
    assert analysis.required_length(8, 8, math.exp(-1)) == 3
    assert analysis.required_length(8, 2, 1.0) == 0
    n = analysis.required_length_exact(100, 3, 0.01)
    q = analysis.optimal_q_binomial(100, 3)
    assert n == 422
    assert analysis.false_drop_binomial(n, 100, 3, q) <= 0.01 < analysis.false_drop_binomial(n - 1, 100, 3, q)
    for bad in (0.0, 1.5, -1):
        with pytest.raises(ValueError):
            analysis.required_length(10, 2, bad)


def test_fixed_weight_forms():
    n, r, s, w = 512, 32, 4, 11
    q = 1 - w / n
    assert analysis.roberts_optimal_weight(n, r) == 11
    assert analysis.roberts_optimal_weight(1024, 16) == 43
    assert analysis.log_false_drop_fixed_weight(n, r, s, w) == pytest.approx(
        n * (1 - q ** s) * math.log(1 - q ** r))
    assert analysis.false_drop_fixed_weight(8, 2, 1, 8) == 1.0
    with pytest.raises(ValueError):
        analysis.false_drop_fixed_weight(8, 2, 1, 0)


def test_fixed_weight_variance_asymptotics():
    for n, r in ((512, 16), (4096, 16)):
        w = analysis.roberts_optimal_weight(n, r)
        q = 1 - w / n
        exact = analysis.target_moments(SourceModel.fixed_weight(r, r), from_fixed_weight(n, w)).variance
        assert exact == pytest.approx(analysis.fixed_weight_variance_asymptotic(n, r, q), rel=0.01)


def test_query_signature_variance_scale():
    # with w/n -> 0 the exact query variance tends to n s (s-1) (ln 2)^2 / (2 r^2),
    # a factor (s-1)/(2s) below the rough n s^2 (ln 2)^2 / r^2 figure
    s, n = 4, 2 ** 20
    for r, tol in ((256, 0.03), (1024, 0.01)):
        w = analysis.roberts_optimal_weight(n, r)
        exact = analysis.moments_from_target_F(n, lambda a: fixed_weight_F(n, w, a) ** s).variance
        assert exact / analysis.roberts_query_variance(n, r, s) == pytest.approx((s - 1) / (2 * s), rel=tol)


def test_expected_candidates():
    q_target = 0.7
    target = from_binomial(12, q_target)
    for m in range(13):
        assert analysis.expected_candidates(target, m, 500) == pytest.approx(500 * (1 - q_target) ** m)
    with pytest.raises(ValueError):
        analysis.expected_candidates(target, 13, 10)


def test_expected_candidates_on_toy_index():
    # exhaustive count over stored patterns versus the isotropized histogram
    n = 6
    rng = np.random.default_rng(3)
    stored = rng.integers(0, 1 << n, 200)
    weights = np.array([bin(int(x)).count("1") for x in stored])
    target = isotropize(np.bincount(weights, minlength=n + 1) / len(stored), n)
    for m in range(n + 1):
        count = 0.0
        for mask in range(1 << n):
            if bin(mask).count("1") == m:
                count += sum(1 for x in stored if int(x) & mask == mask)
        count /= math.comb(n, m)
        assert analysis.expected_candidates(target, m, len(stored)) == pytest.approx(count, abs=1e-9)


def test_design_reports():
    rep = analysis.design_binomial(32, 8, 2)
    assert rep.q == pytest.approx(math.sqrt(0.8))
    assert rep.theta == pytest.approx(0.0649, abs=1e-4)
    assert not rep.approximation
    rep = analysis.design_fixed_weight(512, 32, 4, 11)
    assert rep.w == 11 and rep.approximation
    assert 0 < rep.extra["theta_exact"] < 1
    assert rep.log_theta == pytest.approx(analysis.log_false_drop_fixed_weight(512, 32, 4, 11))
