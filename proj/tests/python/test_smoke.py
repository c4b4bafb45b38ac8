"""Smoke tests for the _dpbss extension through the dpbss package."""

import math

import numpy as np
import pytest

import dpbss


@pytest.fixture(scope="module")
def small_instance():
    ds, support, beta = dpbss.generate_synthetic(n=40, p=8, s=2, signal="strong", seed=3)
    return ds, support, beta


def test_generate_shapes_and_bounds(small_instance):
    ds, support, beta = small_instance
    assert ds.n == 40 and ds.p == 8
    assert ds.X.shape == (40, 8)
    assert ds.y.shape == (40,)
    assert support == [0, 1]
    assert np.abs(ds.X).max() <= ds.x_max
    assert np.abs(ds.y).max() <= ds.r
    expected = 2.0 * math.sqrt(2.0 * math.log(8.0) / 40.0)
    assert beta[0] == pytest.approx(expected)


def test_generate_is_deterministic():
    a, _, _ = dpbss.generate_synthetic(n=12, p=5, s=1, seed=9)
    b, _, _ = dpbss.generate_synthetic(n=12, p=5, s=1, seed=9)
    assert np.array_equal(a.X, b.X)
    assert np.array_equal(a.y, b.y)


def test_scoring_consistency(small_instance):
    ds, support, _ = small_instance
    ols = dpbss.ols_rss(ds, support)
    constrained = dpbss.constrained_rss(ds, support, K=2.0)
    assert constrained.rss >= ols.rss - 1e-9
    assert np.abs(constrained.coef).sum() <= 2.0 * (1 + 1e-9)
    assert dpbss.score(ds, support, K=2.0) == pytest.approx(-constrained.rss)


def test_formula_helpers():
    assert dpbss.sensitivity_bound(1.0, 1.0, 2.0) == pytest.approx(9.0)
    assert dpbss.recommended_k(1.0, 1.0, 1.0, 0.0, 1.0, 4) == pytest.approx(2.0)
    assert dpbss.approx_dp_delta(0.01, 1.0) == pytest.approx(0.01 * (1 + math.e))


def test_exact_distribution_and_sampling(small_instance):
    ds, _, _ = small_instance
    dist = dpbss.exact_distribution(ds, epsilon=0.0, K=1.0, s=2)
    assert len(dist.models) == 28
    assert sum(dist.probs) == pytest.approx(1.0, abs=1e-12)
    assert max(dist.probs) == pytest.approx(1.0 / 28)

    draws = dpbss.exact_sample(dist, seed=1, draws=5)
    again = dpbss.exact_sample(dist, seed=1, draws=5)
    assert draws == again


def test_chain_runs_and_recovers(small_instance):
    ds, support, _ = small_instance
    trace = dpbss.run_chain(ds, s=2, steps=2000, epsilon=8.0, K=2.0, seed=5)
    assert trace.final_model == support
    assert 0.0 <= trace.accept_rate <= 1.0
    assert trace.records[0].t == 0

    traces = dpbss.run_parallel_chains(
        ds, s=2, steps=500, epsilon=8.0, K=2.0, num_chains=3, base_seed=7
    )
    assert len(traces) == 3
    scores = [dpbss.f_score(t.final_model, support) for t in traces]
    assert all(0.0 <= s <= 1.0 for s in scores)


def test_bounds_and_src(small_instance):
    ds, _, _ = small_instance
    assert dpbss.validate_bounds(ds)["compliant"]
    tightened = ds.with_declared_bounds(ds.r * 0.5, ds.x_max)
    assert not dpbss.validate_bounds(tightened)["compliant"]

    k_minus, k_plus, exhaustive = dpbss.estimate_src(ds, s=2, sample_budget=100)
    assert exhaustive
    assert 0.0 < k_minus <= k_plus


def test_privacy_audit(small_instance):
    ds, _, _ = small_instance
    audit = dpbss.dp_ratio_audit(ds, epsilon=1.0, K=1.0, s=2, trials=10, seed=5)
    assert audit["passed"]
    assert audit["worst"] <= 1.0 + 1e-6


def test_chain_tv_against_exact(small_instance):
    ds, _, _ = small_instance
    pi = dpbss.exact_distribution(ds, epsilon=1.0, K=50.0, s=2)
    trace = dpbss.run_chain(ds, s=2, steps=50000, epsilon=1.0, K=50.0, seed=6)
    tv = dpbss.empirical_tv_vs_exact(trace, pi, burn_in=1000)
    assert tv <= 0.1


def test_diagnostics_roundtrip(small_instance):
    ds, support, beta = small_instance
    margin, argmin = dpbss.identifiability_margin(ds, support, beta, s=2)
    assert margin > 0.0
    assert len(argmin) == 2

    tm = dpbss.build_transition_matrix(ds, epsilon=1.0, K=1.5, s=2, lazy=True)
    gap = dpbss.spectral_gap(tm)
    assert 0.0 < gap <= 1.0

    pi = dpbss.exact_distribution(ds, epsilon=1.0, K=1.5, s=2)
    report = dpbss.measure_mixing(tm, pi, eta=0.1)
    assert report["sandwich_holds"]
    assert report["sandwich_lower"] <= report["tau_eta_measured"] <= report["sandwich_upper"]
