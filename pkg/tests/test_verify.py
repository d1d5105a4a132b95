import math

import numpy as np
import pytest

from hjbpinn.data import sample_dataset
from hjbpinn.hjb import unit_cube_problem
from hjbpinn.loss import LossWeights
from hjbpinn.network import NetworkParams
from hjbpinn.training import init_network
from hjbpinn.verify import (EventEstimate, check_cover_correlation_event,
                            check_derivative_perturbations, check_gradients,
                            check_noise_label_correlation,
                            check_noise_variance_tail, check_risk_perturbation,
                            derivative_gap_checks)


def test_event_estimate_fields():
    e = EventEstimate("x", 1000, 10, 0.5, 0.01)
    assert e.freq == 0.01
    assert e.passed
    d = e.to_json_dict()
    assert d["name"] == "x" and d["pass"] is True and d["trials"] == 1000


def test_variance_tail_impossible_event():
    # threshold below zero cannot be hit by nonnegative squares
    est = check_noise_variance_tail(50, 0.5, eta=6.0, label_bound=2.0,
                                    trials=10_000, seed=0)
    assert est.hits == 0
    assert est.passed


def test_variance_tail_bound_arithmetic():
    est = check_noise_variance_tail(288, 0.5, eta=1.0, label_bound=1.0,
                                    trials=10_000, seed=1)
    assert est.bound == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_variance_tail_respects_bound():
    est = check_noise_variance_tail(100, 0.5, eta=0.6, label_bound=3.0,
                                    trials=20_000, seed=2)
    assert est.freq - est.ci_halfwidth <= est.bound
    assert est.passed


def test_variance_tail_reproducible():
    a = check_noise_variance_tail(60, 0.4, 0.5, 2.0, trials=10_000, seed=3)
    b = check_noise_variance_tail(60, 0.4, 0.5, 2.0, trials=10_000, seed=3)
    assert a.hits == b.hits


def test_label_correlation_noiseless_never_fires():
    est = check_noise_label_correlation(unit_cube_problem(2), 50, 0.0, eta=0.5,
                                        trials=10_000, seed=4)
    assert est.hits == 0


def test_label_correlation_respects_bound():
    est = check_noise_label_correlation(unit_cube_problem(2), 100, 0.5, eta=0.6,
                                        trials=20_000, seed=5)
    assert est.passed


def test_cover_event_zero_noise_zero_statistic():
    est = check_cover_correlation_event(
        unit_cube_problem(1), width=1, weight_radius=1.0, eta=1.0, n_sup=30,
        noise_var=0.0, lambda_sup=0.5, mu=0.7, trials=2_000, seed=6)
    # S = 0.2 > 0 while every statistic is exactly 0
    assert est.hits == 0


def test_cover_event_small_run_passes():
    est = check_cover_correlation_event(
        unit_cube_problem(1), width=1, weight_radius=1.0, eta=1.0, n_sup=50,
        noise_var=0.5, lambda_sup=0.5, mu=0.7, trials=3_000, seed=7)
    assert est.freq - est.ci_halfwidth <= est.bound


def test_cover_event_vacuous_threshold_still_passes():
    # mu small makes S negative: the event is near-certain but the bound is
    # infinite, which can never be violated
    est = check_cover_correlation_event(
        unit_cube_problem(1), width=1, weight_radius=1.0, eta=1.0, n_sup=30,
        noise_var=0.5, lambda_sup=0.5, mu=0.1, trials=2_000, seed=8)
    assert math.isinf(est.bound)
    assert est.passed
    assert est.to_json_dict()["bound"] is None


def test_risk_perturbation_no_violations_small():
    problem = unit_cube_problem(2)
    data = sample_dataset(problem, 32, 24, 32, noise_var=0.5, seed=9)
    est = check_risk_perturbation(problem, data, LossWeights(0.3, 0.5),
                                  width=4, weight_radius=1.0, eta=0.1,
                                  trials=300, seed=10)
    assert est.hits == 0
    assert est.passed


def test_derivative_gaps_zero_perturbation():
    p = init_network(3, 2, seed=11, radius=1.0)
    base = p.with_flat(0.3 * p.flat() / np.linalg.norm(p.flat()))
    checks = derivative_gap_checks(base, base, np.array([0.5, 0.5]), 0.5, eta=0.2)
    assert len(checks) == 6
    for c in checks:
        assert c.ok
    gap = next(c for c in checks if c.name == "time_derivative_gap")
    assert gap.lhs == 0.0


def test_derivative_gap_p6_hand_value_at_eta_zero():
    # single unit, one dimension: laplacian sum bound is 2 * curvature * W^2
    p = NetworkParams(np.array([[0.4]]), np.array([0.2]), np.array([1.0]),
                      1.0, "tanh")
    checks = derivative_gap_checks(p, p, np.array([0.3]), 0.1, eta=0.0)
    lap_sum = next(c for c in checks if c.name == "laplacian_sum")
    curv = p.bounds().curvature_bound
    assert lap_sum.rhs == pytest.approx(2.0 * curv, rel=1e-12)


def test_derivative_gap_rejects_large_perturbation():
    p = init_network(2, 2, seed=12, radius=1.0)
    far = p.with_flat(p.flat() + 1.0)
    with pytest.raises(ValueError, match="exceeds"):
        derivative_gap_checks(p, far, np.array([0.1, 0.1]), 0.1, eta=0.1)


def test_derivative_perturbation_sweep_no_violations():
    est = check_derivative_perturbations(unit_cube_problem(2), width=3,
                                         weight_radius=1.0, eta=0.3,
                                         trials=500, seed=13)
    assert est.hits == 0


def test_gradient_audit_passes():
    audit = check_gradients(seed=14, cases=10)
    assert audit.passed
    assert audit.max_input_error < 1e-5
    assert audit.max_value_gradient_error < 1e-5
    assert audit.max_risk_gradient_error < 1e-4


def test_trial_floor_enforced():
    with pytest.raises(ValueError):
        check_noise_variance_tail(10, 0.5, 0.5, 2.0, trials=100, seed=0)
