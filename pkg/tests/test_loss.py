import numpy as np
import pytest

from hjbpinn.data import Dataset, noisy_initial_dataset, sample_dataset
from hjbpinn.hjb import ExactSolution, unit_cube_problem
from hjbpinn.loss import (LossWeights, RiskBreakdown, empirical_risk,
                          empirical_risk_unsupervised, risk_and_gradient,
                          risk_gradient)
from hjbpinn.network import NetworkParams
from hjbpinn.training import init_network


@pytest.fixture
def cube():
    return unit_cube_problem(2)


WEIGHTS = LossWeights(lambda_init=0.3, lambda_sup=0.5)


def test_exact_solution_zeroes_every_term(cube):
    data = sample_dataset(cube, 50, 30, 40, noise_var=0.0, seed=0)
    rb = empirical_risk(ExactSolution(2), data, WEIGHTS)
    assert rb.pde_term <= 1e-20
    assert rb.init_term == 0.0
    assert rb.sup_term == 0.0
    assert rb.total <= 1e-20


def test_zero_network_hand_values(cube):
    data = sample_dataset(cube, 20, 15, 25, noise_var=0.5, seed=1)
    p = NetworkParams(np.zeros((3, 2)), np.zeros(3), np.array([1.0, -2.0, 0.5]),
                      1.0, "tanh")
    rb = empirical_risk(p, data, WEIGHTS)
    assert rb.pde_term == 0.0
    assert rb.init_term == pytest.approx(float(np.mean(data.init_values**2)), rel=1e-14)
    assert rb.sup_term == pytest.approx(float(np.mean(data.sup_y**2)), rel=1e-14)
    assert rb.total == pytest.approx(
        0.3 * rb.init_term + 0.5 * rb.sup_term, rel=1e-14)


def test_supervised_term_converges_to_noise_variance(cube):
    data = sample_dataset(cube, 1, 1, 100_000, noise_var=0.5, seed=2)
    rb = empirical_risk(ExactSolution(2), data, WEIGHTS)
    assert rb.sup_term == pytest.approx(0.5, rel=0.02)


def test_total_is_weighted_sum():
    rb = RiskBreakdown.from_terms(0.25, 1.5, 3.0, WEIGHTS)
    assert rb.total == 0.25 + 0.3 * 1.5 + 0.5 * 3.0


def test_doubling_lambda_sup_is_affine(cube):
    data = sample_dataset(cube, 10, 10, 10, noise_var=0.5, seed=3)
    p = init_network(4, 2, seed=4)
    lo = empirical_risk(p, data, LossWeights(0.3, 0.5))
    hi = empirical_risk(p, data, LossWeights(0.3, 1.0))
    assert hi.sup_term == lo.sup_term
    assert hi.total - lo.total == pytest.approx(0.5 * lo.sup_term, rel=1e-12)


def test_terms_nonnegative_random(cube):
    rng = np.random.default_rng(5)
    data = sample_dataset(cube, 12, 9, 8, noise_var=0.3, seed=6)
    for _ in range(20):
        p = init_network(3, 2, seed=int(rng.integers(1 << 30)))
        rb = empirical_risk(p, data, WEIGHTS)
        for term in (rb.pde_term, rb.init_term, rb.sup_term, rb.total):
            assert term >= 0.0


def test_gradient_matches_finite_differences(cube):
    rng = np.random.default_rng(7)
    for case in range(20):
        data = sample_dataset(cube, int(rng.integers(3, 20)),
                              int(rng.integers(3, 20)), int(rng.integers(3, 20)),
                              noise_var=0.4, seed=case)
        k = int(rng.integers(1, 5))
        p = init_network(k, 2, seed=100 + case,
                         activation="tanh" if case % 2 else "sigmoid")
        p = p.with_flat(rng.normal(0, 0.8, p.param_count))
        grad = risk_gradient(p, data, WEIGHTS)
        flat = p.flat()
        h = 1e-5
        for j in range(flat.size):
            e = np.zeros_like(flat)
            e[j] = h
            up = empirical_risk(p.with_flat(flat + e), data, WEIGHTS).total
            dn = empirical_risk(p.with_flat(flat - e), data, WEIGHTS).total
            fd = (up - dn) / (2 * h)
            assert abs(fd - grad[j]) <= 1e-4 * max(1.0, abs(fd), abs(grad[j]))


def test_gradient_zero_at_interpolating_minimum():
    # the zero tanh network solves the PDE exactly and fits all-zero labels
    p = NetworkParams(np.zeros((2, 2)), np.zeros(2), np.ones(2), 1.0, "tanh")
    n_pts = 6
    zeros = np.zeros(n_pts)
    data = Dataset(
        colloc_x=np.linspace(0, 1, 2 * n_pts).reshape(n_pts, 2),
        colloc_t=np.linspace(0, 1, n_pts),
        init_x=np.linspace(0, 1, 2 * n_pts).reshape(n_pts, 2),
        init_values=zeros,
        sup_x=np.linspace(0, 1, 2 * n_pts).reshape(n_pts, 2),
        sup_t=np.linspace(0, 1, n_pts),
        sup_y=zeros,
        sup_clean=zeros,
        sup_noise=zeros,
        noise_var=0.0,
        label_bound=0.0,
        init_bound=0.0,
    )
    rb, grad = risk_and_gradient(p, data, WEIGHTS)
    assert rb.total == 0.0
    assert np.all(grad == 0.0)


def test_sup_gradient_scales_linearly_in_lambda(cube):
    data = sample_dataset(cube, 8, 8, 8, noise_var=0.5, seed=8)
    p = init_network(3, 2, seed=9)
    g0 = risk_gradient(p, data, LossWeights(0.3, 1e-12))
    g1 = risk_gradient(p, data, LossWeights(0.3, 0.5))
    g2 = risk_gradient(p, data, LossWeights(0.3, 1.0))
    assert np.allclose(g2 - g0, 2.0 * (g1 - g0), rtol=1e-9, atol=1e-12)


def test_empty_term_errors(cube):
    data = sample_dataset(cube, 0, 5, 5, noise_var=0.1, seed=10)
    p = init_network(2, 2, seed=11)
    with pytest.raises(ValueError):
        empirical_risk(p, data, WEIGHTS)
    data = sample_dataset(cube, 5, 0, 5, noise_var=0.1, seed=12)
    with pytest.raises(ValueError):
        empirical_risk(p, data, WEIGHTS)
    data = sample_dataset(cube, 5, 5, 0, noise_var=0.0, seed=13)
    with pytest.raises(ValueError):
        empirical_risk(p, data, WEIGHTS)
    rb = empirical_risk(p, data, LossWeights(0.3, 0.0))
    assert rb.sup_term == 0.0


def test_unsupervised_variants(cube):
    p = NetworkParams(np.zeros((2, 2)), np.zeros(2), np.ones(2), 1.0, "tanh")
    noiseless = noisy_initial_dataset(cube, 40, noise_var=0.0, seed=14, n_colloc=10)
    ru = empirical_risk_unsupervised(p, noiseless, WEIGHTS)
    rs = empirical_risk(p, noiseless, LossWeights(0.3, 0.0))
    assert ru.init_term == rs.init_term
    assert ru.sup_term == 0.0

    noisy = noisy_initial_dataset(cube, 50, noise_var=0.5, seed=15, n_colloc=10)
    ru = empirical_risk_unsupervised(p, noisy, WEIGHTS)
    assert ru.init_term == pytest.approx(float(np.mean(noisy.init_labels**2)), rel=1e-14)

    plain = sample_dataset(cube, 5, 5, 5, noise_var=0.1, seed=16)
    with pytest.raises(ValueError):
        empirical_risk_unsupervised(p, plain, WEIGHTS)


def test_unsupervised_init_term_converges_to_noise_variance(cube):
    data = noisy_initial_dataset(cube, 100_000, noise_var=0.5, seed=17, n_colloc=1)
    rb = empirical_risk_unsupervised(ExactSolution(2), data, WEIGHTS)
    assert rb.init_term == pytest.approx(0.5, rel=0.02)


def test_unsupervised_gradient_matches_finite_differences(cube):
    rng = np.random.default_rng(18)
    data = noisy_initial_dataset(cube, 12, noise_var=0.3, seed=19, n_colloc=9)
    p = init_network(3, 2, seed=20)
    p = p.with_flat(rng.normal(0, 0.7, p.param_count))
    grad = risk_gradient(p, data, WEIGHTS, unsupervised=True)
    flat = p.flat()
    h = 1e-5
    for j in range(flat.size):
        e = np.zeros_like(flat)
        e[j] = h
        up = empirical_risk_unsupervised(p.with_flat(flat + e), data, WEIGHTS).total
        dn = empirical_risk_unsupervised(p.with_flat(flat - e), data, WEIGHTS).total
        fd = (up - dn) / (2 * h)
        assert abs(fd - grad[j]) <= 1e-4 * max(1.0, abs(fd), abs(grad[j]))


def test_weight_validation():
    with pytest.raises(ValueError):
        LossWeights(lambda_init=0.0, lambda_sup=0.5)
    with pytest.raises(ValueError):
        LossWeights(lambda_init=0.3, lambda_sup=-0.1)
