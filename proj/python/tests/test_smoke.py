import math

import numpy as np
import pytest

import pmorder as pm


def diatomic(a, b):
    return pm.DiscreteDistribution([a, b], [(b - 1) / (b - a), (1 - a) / (b - a)])


def test_counterexample_variance():
    chain = pm.MarginalChain(np.array([0.5, 0.5]), np.full((2, 2), 0.5))
    a, b = 0.9208, 3.0046
    q = diatomic(a, b)
    k = pm.pseudo_marginal_kernel(chain, [q, q])
    var = pm.asymptotic_variance(k, pm.lift_state_function(k, np.array([-1.0, 1.0])))
    closed = (a * (b - 1) + (2 * b - 1) * b * (1 - a)) / (b - a)
    assert var == pytest.approx(closed, abs=1e-10)
    assert q.variance() == pytest.approx(0.1587, abs=2e-4)


def test_convex_order_and_coupling():
    q1 = pm.DiscreteDistribution([1.0], [1.0])
    q2 = diatomic(0.5, 2.0)
    assert pm.cx_leq(q1, q2)
    assert not pm.cx_leq(q2, q1)
    r = pm.build_martingale_coupling(q1, q2)
    assert pm.verify_martingale_coupling(r, q1, q2)["passed"]
    assert np.asarray(r.joint).sum() == pytest.approx(1.0)


def test_invalid_law_raises():
    with pytest.raises(pm.PmorderError):
        pm.DiscreteDistribution([1.0, 2.0], [0.5, 0.6])


def test_spectral_gaps_and_reversibility():
    chain = pm.MarginalChain(np.array([0.2, 0.3, 0.5]), np.full((3, 3), 1 / 3))
    k = pm.marginal_mh_kernel(chain)
    assert pm.check_reversibility(k) < 1e-12
    gaps = pm.spectral_gaps(k)
    assert 0 < gaps["right_gap"] <= 1
    assert np.asarray(k.matrix).sum(axis=1) == pytest.approx(np.ones(3))


def test_stratified_estimator_is_cx_smaller():
    plain, strat = pm.estimator_laws(4, 0.1, 0.55)
    assert pm.cx_leq(strat, plain)
    assert plain.mean() == pytest.approx(strat.mean())


def test_sampler_batch_means():
    chain = pm.MarginalChain(np.array([0.5, 0.5]), np.full((2, 2), 0.5))
    q = diatomic(0.5, 2.0)
    states, weights, accepted = pm.run_pseudo_marginal(chain, [q, q], 20000, seed=3)
    assert len(states) == 20000
    bm = pm.batch_means([2.0 * s - 1.0 for s in states], 100)
    assert abs(bm["mean"]) < 0.1


def test_experiment_roundtrip():
    assert "counterexample" in pm.experiment_kinds()
    report = pm.run_experiment({"kind": "counterexample", "seed": 1})
    assert report["passed"]
    assert {v["name"] for v in report["verdicts"]} >= {"law1_variance", "law2_variance"}
    with pytest.raises(pm.PmorderError):
        pm.run_experiment({})
    assert math.isfinite(report["results"]["laws"][0]["var"])
