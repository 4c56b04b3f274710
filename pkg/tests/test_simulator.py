import math

import numpy as np
import pytest

from supcode.analysis import target_F, target_moments
from supcode.bitkit import BitPattern
from supcode.codegen import CodeSpec, SplitMix64, build_codebook, derive_state_array, spec_coefficients
from supcode.models import SourceModel
from supcode.simulator import (
    Comparison, MAX_ENUM_N, SimConfig, exact_enumeration, run_false_drop_experiment,
    run_target_experiment, sample_source, source_positions_batch,
)


@pytest.mark.parametrize("model", [
    SourceModel.fixed_weight(30, 4),
    SourceModel.independent([0.05, 0.5, 0.9, 0.2] * 5),
    SourceModel.empirical(12, {0: 0.2, 3: 0.5, 12: 0.3}),
])
def test_batched_sources_match_scalar(model):
    states = derive_state_array(8, np.arange(60))
    batch = source_positions_batch(model, states)
    for s, row in zip(states, batch):
        ref = sample_source(model, SplitMix64(int(s)))
        assert BitPattern.from_positions(model.N, [p for p in row if p >= 0]) == ref


def test_fixed_weight_source_is_uniform():
    states = derive_state_array(21, np.arange(100_000))
    pos = np.sort(source_positions_batch(SourceModel.fixed_weight(4, 2), states), axis=1)
    codes = pos[:, 0] * 4 + pos[:, 1]
    counts = np.bincount(codes, minlength=16)[[1, 2, 3, 6, 7, 11]]
    assert counts.sum() == 100_000
    sigma = math.sqrt(100_000 / 6 * 5 / 6)
    assert (np.abs(counts - 100_000 / 6) < 5 * sigma).all(), counts


def test_config_validation():
    src = SourceModel.fixed_weight(5, 2)
    with pytest.raises(ValueError):
        SimConfig(trials=0, seed=1, source=src, specs=CodeSpec.fixed(8, 2))
    with pytest.raises(ValueError):
        SimConfig(trials=5, seed=1, source=src, specs=[CodeSpec.fixed(8, 2)] * 4)
    with pytest.raises(ValueError):
        SimConfig(trials=5, seed=1, source=src, specs=[CodeSpec.fixed(8, 2)] * 4 + [CodeSpec.fixed(9, 2)])
    cfg = SimConfig(trials=5, seed=1, source=src, specs=CodeSpec.fixed(8, 2))
    with pytest.raises(ValueError):
        run_false_drop_experiment(cfg, SourceModel.fixed_weight(6, 1))
    with pytest.raises(ValueError):
        run_false_drop_experiment(cfg, SourceModel.fixed_weight(5, 1), estimator="conditional")
    with pytest.raises(ValueError):
        run_false_drop_experiment(cfg, SourceModel.fixed_weight(5, 1), estimator="other")


def test_results_do_not_depend_on_chunking():
    src = SourceModel.empirical(20, {1: 0.3, 4: 0.7})
    res = [run_target_experiment(SimConfig(trials=5000, seed=17, source=src, specs=CodeSpec.fixed(24, 3),
                                           chunk_size=c)) for c in (64, 777, 10_000)]
    assert res[0].weight_hist == res[1].weight_hist == res[2].weight_hist
    other = run_target_experiment(SimConfig(trials=5000, seed=18, source=src, specs=CodeSpec.fixed(24, 3)))
    assert other.weight_hist != res[0].weight_hist


def test_regenerated_codebook_agrees_with_prediction():
    src = SourceModel.independent(np.linspace(0.02, 0.3, 12))
    specs = [CodeSpec.fixed(32, w) for w in (1, 2, 3) * 4]
    res = run_target_experiment(SimConfig(trials=50_000, seed=5, source=src, specs=specs))
    assert not res.failures()
    assert res.mean == pytest.approx(32 * (1 - target_F(src, specs, 31)), rel=0.01)


def test_regenerated_codebook_matches_averaged_prediction():
    src = SourceModel.fixed_weight(600, 6)
    spec = CodeSpec.binomial(64, 0.9)
    res = run_target_experiment(SimConfig(trials=40_000, seed=9, source=src, specs=spec))
    assert all(abs(c.z) <= 4 for c in res.comparisons), res.comparisons
    assert res.mean == pytest.approx(target_moments(src, spec_coefficients(spec)).mu1, rel=0.01)


def test_fixed_codebook_spread():
    # One codebook is a single draw: the mean weight it produces is exact given
    # the codebook, and scatters around the averaged prediction by the
    # between-codebook spread, which does not shrink with more trials.
    N, r, n, q = 600, 6, 64, 0.9
    spec = CodeSpec.binomial(n, q)
    src = SourceModel.fixed_weight(N, r)
    clear = lambda k: math.comb(N - k, r) / math.comb(N, r)
    # K_i, the number of words setting position i, is Binomial(N, 1 - q) per position
    pk = [math.comb(N, k) * (1 - q) ** k * q ** (N - k) for k in range(N + 1)]
    m1 = sum(p * clear(k) for k, p in enumerate(pk))
    book_sd = math.sqrt(n * (sum(p * clear(k) ** 2 for k, p in enumerate(pk)) - m1 * m1))
    for seed in (9, 10, 11):
        cfg = SimConfig(trials=40_000, seed=seed, source=src, specs=spec, regenerate_codebook=False)
        res = run_target_experiment(cfg)
        K = build_codebook(cfg.specs, seed).as_array().sum(axis=0)
        given_book = sum(1 - clear(k) for k in K)
        se = math.sqrt(res.variance / res.trials)
        assert abs(res.mean - given_book) <= 4 * se
        averaged = target_moments(src, spec_coefficients(spec)).mu1
        assert averaged == pytest.approx(n * (1 - m1))
        assert abs(res.mean - averaged) <= 4 * math.hypot(se, book_sd)
    assert book_sd > 10 * se


def test_false_drop_pairs_small_case():
    n, r, s = 16, 3, 1
    q = 0.8
    cfg = SimConfig(trials=40_000, seed=12, source=SourceModel.fixed_weight(5000, r),
                    specs=CodeSpec.binomial(n, q))
    res = run_false_drop_experiment(cfg, SourceModel.fixed_weight(5000, s))
    expect = ((1 - q ** r) * (1 - q ** s) + q ** s) ** n
    assert res.extra["theta_disjoint"] == pytest.approx(expect, abs=4 * res.extra["theta_disjoint_se"])
    assert res.extra["theta_closed_form"] == pytest.approx(expect)
    assert not res.failures()


def test_conditional_estimator_agrees_with_pairs():
    src, qry = SourceModel.fixed_weight(300, 6), SourceModel.fixed_weight(300, 2)
    spec = CodeSpec.fixed(48, 4)
    pairs = run_false_drop_experiment(
        SimConfig(trials=60_000, seed=3, source=src, specs=spec, regenerate_codebook=False), qry)
    cond = run_false_drop_experiment(
        SimConfig(trials=20_000, seed=3, source=src, specs=spec, regenerate_codebook=False), qry,
        estimator="conditional")
    se = math.hypot(pairs.extra["theta_disjoint_se"], cond.extra["theta_disjoint_se"])
    assert abs(pairs.extra["theta_disjoint"] - cond.extra["theta_disjoint"]) < 4 * se
    assert "theta_roberts" in cond.extra


def test_exact_enumeration():
    src = SourceModel.fixed_weight(4, 2)
    code = CodeSpec.fixed(6, 2)
    brute = exact_enumeration(src, code)
    for a in range(7):
        assert brute.F(a) == pytest.approx(src.gf(spec_coefficients(code).F(a)), abs=1e-14)
    table = {0b0011: 0.5, 0b1100: 0.5}
    assert exact_enumeration(table, code, N=4).F(5) == pytest.approx((4 / 6) ** 2)
    with pytest.raises(ValueError):
        exact_enumeration(table, code)
    with pytest.raises(ValueError):
        exact_enumeration(SourceModel.fixed_weight(MAX_ENUM_N + 1, 1), code)


def test_comparison_z():
    assert Comparison("x", 1.0, 1.5, 0.25).z == pytest.approx(2.0)
    assert Comparison("x", 1.0, 1.0, 0.0).z == 0.0
    assert Comparison("x", 1.0, 2.0, 0.0).z == math.inf
