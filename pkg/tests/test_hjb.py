import math

import numpy as np
import pytest

from hjbpinn.hjb import (ExactSolution, HjbProblem, exact_derivatives,
                         exact_solution, make_problem, pde_residual,
                         quadratic_init, symmetric_box_problem,
                         unit_cube_problem)
from hjbpinn.network import Derivatives


def test_solution_at_time_zero_is_initial_condition():
    x = np.array([1.0, 1.0])
    assert exact_solution(x, 0.0) == pytest.approx(2.0)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, (100, 3))
    assert np.allclose(exact_solution(pts, np.zeros(100)), quadratic_init(pts))


def test_solution_at_origin():
    assert exact_solution(np.zeros(2), 0.25) == pytest.approx(math.log(2.0))


def test_exact_derivatives_hand_values():
    d = exact_derivatives(np.array([1.0, 1.0]), 0.0)
    assert d.dt == pytest.approx(-4.0)
    assert np.allclose(d.grad_x, [2.0, 2.0])
    assert d.laplacian == pytest.approx(4.0)
    assert pde_residual(d) == pytest.approx(0.0, abs=1e-14)


def test_exact_derivatives_at_origin():
    d = exact_derivatives(np.zeros(3), 0.7)
    assert np.all(d.grad_x == 0.0)
    assert d.dt == pytest.approx(d.laplacian)
    assert pde_residual(d) == pytest.approx(0.0, abs=1e-14)


def test_exact_derivatives_match_finite_differences():
    rng = np.random.default_rng(1)
    h = 1e-5
    for _ in range(40):
        n = int(rng.integers(1, 5))
        x = rng.uniform(-2, 2, n)
        t = float(rng.uniform(0.01, 2.0))
        d = exact_derivatives(x, t)
        fd_dt = (exact_solution(x, t + h) - exact_solution(x, t - h)) / (2 * h)
        assert abs(fd_dt - d.dt) <= 1e-6 * max(1.0, abs(d.dt))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            fd_g = (exact_solution(x + e, t) - exact_solution(x - e, t)) / (2 * h)
            assert abs(fd_g - d.grad_x[i]) <= 1e-6 * max(1.0, abs(d.grad_x[i]))


@pytest.mark.parametrize("n", [1, 2, 10])
def test_residual_vanishes_on_random_points(n):
    rng = np.random.default_rng(2)
    x = rng.uniform(-3, 3, (10_000, n))
    t = rng.uniform(0, 1, 10_000)
    d = exact_derivatives(x, t)
    res = pde_residual(d)
    grad_sq = np.einsum("ij,ij->i", d.grad_x, d.grad_x)
    scale = 1.0 + np.abs(d.dt) + np.abs(d.laplacian) + grad_sq
    assert np.all(np.abs(res) <= 1e-10 * scale)


def test_residual_arithmetic():
    assert pde_residual(Derivatives(0.0, 1.0, np.zeros(2), 1.0)) == 0.0
    assert pde_residual(Derivatives(0.0, 0.0, np.array([2.0, 0.0]), 0.0)) == 4.0


def test_negative_time_rejected():
    with pytest.raises(ValueError):
        exact_solution(np.ones(2), -0.1)
    with pytest.raises(ValueError):
        exact_derivatives(np.ones(2), -0.1)


def test_exact_predictor_protocol():
    sol = ExactSolution(2)
    x = np.random.default_rng(3).uniform(0, 1, (50, 2))
    t = np.random.default_rng(4).uniform(0, 1, 50)
    d = sol.derivatives_batch(x, t)
    assert np.allclose(d.value, sol.values(x, t))
    assert np.max(np.abs(pde_residual(d))) <= 1e-10


def test_problem_geometry():
    cube = unit_cube_problem(2)
    assert cube.coordinate_bound == 1.0
    box = symmetric_box_problem(3, half_width=2.5, horizon=0.5)
    assert box.coordinate_bound == 2.5
    assert box.horizon == 0.5
    assert cube.exact is not None


def test_problem_validation():
    with pytest.raises(ValueError):
        HjbProblem(space_dim=0, lower=0.0, upper=1.0, horizon=1.0)
    with pytest.raises(ValueError):
        HjbProblem(space_dim=2, lower=1.0, upper=1.0, horizon=1.0)
    with pytest.raises(ValueError):
        HjbProblem(space_dim=2, lower=0.0, upper=1.0, horizon=0.0)


def test_make_problem_selectors():
    p = make_problem(2, 0.0, 1.0, 1.0, init="quadratic")
    assert p.exact is not None
    assert p.g(np.array([0.5, 0.5])) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        make_problem(2, 0.0, 1.0, 1.0, init="sine")
