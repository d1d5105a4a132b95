"""The benchmark nonlinear parabolic PDE and its closed-form solution.

Strong form on a box times [0, horizon]:

    du/dt - laplace(u) + ||grad u||^2 = 0,      u(x, 0) = g(x).

For the quadratic initial condition g(x) = ||x||^2 the solution is

    u(x, t) = ||x||^2 / (1 + 4t) + (n/2) log(1 + 4t),

which is what the sampler uses to produce clean supervision labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .network import Derivatives

__all__ = [
    "HjbProblem",
    "ExactSolution",
    "pde_residual",
    "exact_solution",
    "exact_derivatives",
    "quadratic_init",
    "unit_cube_problem",
    "symmetric_box_problem",
    "make_problem",
]


def pde_residual(d: Derivatives):
    """Pointwise PDE residual dt - laplacian + ||grad_x||^2 (batch-aware)."""
    grad = np.asarray(d.grad_x, dtype=float)
    if grad.ndim == 1:
        sq = float(grad @ grad)
    else:
        sq = np.einsum("ij,ij->i", grad, grad)
    return d.dt - d.laplacian + sq


def _check_time(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be nonnegative")
    return t


def exact_solution(x, t, n=None):
    """Closed-form solution value(s) for the quadratic initial condition."""
    x = np.asarray(x, dtype=float)
    t = _check_time(t)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if n is not None and x.shape[1] != n:
        raise ValueError(f"points have {x.shape[1]} coordinates, expected {n}")
    n = x.shape[1]
    t = np.broadcast_to(t, (x.shape[0],))
    denom = 1.0 + 4.0 * t
    val = np.einsum("ij,ij->i", x, x) / denom + 0.5 * n * np.log(denom)
    return float(val[0]) if single else val


def exact_derivatives(x, t, n=None) -> Derivatives:
    """Analytic derivative bundle of the closed-form solution.

    dt = -4||x||^2/(1+4t)^2 + 2n/(1+4t),  grad = 2x/(1+4t),
    laplacian = 2n/(1+4t); the PDE residual of the bundle is identically 0.
    """
    x = np.asarray(x, dtype=float)
    t = _check_time(t)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if n is not None and x.shape[1] != n:
        raise ValueError(f"points have {x.shape[1]} coordinates, expected {n}")
    n = x.shape[1]
    t = np.broadcast_to(t, (x.shape[0],))
    denom = 1.0 + 4.0 * t
    sq = np.einsum("ij,ij->i", x, x)
    value = sq / denom + 0.5 * n * np.log(denom)
    dt = -4.0 * sq / denom**2 + 2.0 * n / denom
    grad = 2.0 * x / denom[:, None]
    lap = 2.0 * n / denom
    if single:
        return Derivatives(float(value[0]), float(dt[0]), grad[0], float(lap[0]))
    return Derivatives(value, dt, grad, lap)


class ExactSolution:
    """Predictor-protocol wrapper around the closed-form solution.

    Interchangeable with a network wherever losses evaluate a predictor,
    which is what makes "the exact solution zeroes the PDE loss" testable.
    """

    def __init__(self, space_dim: int):
        self.space_dim = int(space_dim)

    def values(self, x, t):
        return exact_solution(x, t, self.space_dim)

    def derivatives_batch(self, x, t) -> Derivatives:
        return exact_derivatives(x, t, self.space_dim)


def quadratic_init(x):
    """g(x) = ||x||^2, the benchmark initial condition."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(x @ x)
    return np.einsum("ij,ij->i", x, x)


_INIT_FNS = {"quadratic": quadratic_init}


@dataclass(frozen=True)
class HjbProblem:
    """Domain, horizon, initial condition, and (optionally) the exact solution.

    The spatial domain is an axis-aligned box with independent bounds per
    axis, so both the symmetric box [-B, B]^n and the unit cube are
    representable; ``coordinate_bound`` is the largest |coordinate| the box
    allows, which is what the theory's box half-width stands for.
    """

    space_dim: int
    lower: np.ndarray
    upper: np.ndarray
    horizon: float
    init_fn: Callable = quadratic_init
    init_name: str = "quadratic"
    exact: Optional[ExactSolution] = None

    def __post_init__(self):
        n = int(self.space_dim)
        if n < 1:
            raise ValueError("space_dim must be >= 1")
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if np.any(upper <= lower):
            raise ValueError("upper bounds must exceed lower bounds")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "space_dim", n)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def coordinate_bound(self) -> float:
        return float(np.max(np.abs(np.stack([self.lower, self.upper]))))

    def g(self, x):
        return self.init_fn(x)


def unit_cube_problem(space_dim=2, horizon=1.0) -> HjbProblem:
    """The experiment domain: x in [0, 1]^n, t in [0, horizon]."""
    return HjbProblem(
        space_dim=space_dim,
        lower=np.zeros(space_dim),
        upper=np.ones(space_dim),
        horizon=horizon,
        exact=ExactSolution(space_dim),
    )


def symmetric_box_problem(space_dim=2, half_width=1.0, horizon=1.0) -> HjbProblem:
    """The theory domain: x in [-B, B]^n, t in [0, horizon]."""
    return HjbProblem(
        space_dim=space_dim,
        lower=-half_width * np.ones(space_dim),
        upper=half_width * np.ones(space_dim),
        horizon=horizon,
        exact=ExactSolution(space_dim),
    )


def make_problem(space_dim, box_lower, box_upper, horizon, init="quadratic") -> HjbProblem:
    """Build a problem from flat config values; only "quadratic" has an
    exact solution attached."""
    if init not in _INIT_FNS:
        raise ValueError(f"unknown initial condition {init!r}; choose from {sorted(_INIT_FNS)}")
    exact = ExactSolution(space_dim) if init == "quadratic" else None
    return HjbProblem(
        space_dim=space_dim,
        lower=box_lower,
        upper=box_upper,
        horizon=horizon,
        init_fn=_INIT_FNS[init],
        init_name=init,
        exact=exact,
    )
