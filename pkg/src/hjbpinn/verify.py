"""Monte Carlo and finite-difference verification of the theory at desk scale.

Every probabilistic claim is an upper bound on an event frequency, so each
check resamples the event, attaches a one-sided 99% Hoeffding confidence
halfwidth, and passes when freq - ci <= bound.  Inequality checks (risk
perturbation, derivative gaps) count violations and pass only at zero.

Trials are drawn in fixed-size chunks with one RNG stream per chunk
(seeded by (seed, chunk index)), so serial and parallel execution agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import network
from .activations import bound_constants, get_activation
from .bounds import BoundInputs, perturbation_constants, perturbed_risk_bound, s_threshold
from .data import Dataset, noise_draws
from .hjb import HjbProblem
from .loss import LossWeights, empirical_risk, risk_gradient
from .network import NetworkParams, PointAdjoints, enumerate_cover
from .training import init_network

__all__ = [
    "EventEstimate",
    "GapCheck",
    "GradientAudit",
    "check_noise_variance_tail",
    "check_noise_label_correlation",
    "check_cover_correlation_event",
    "check_risk_perturbation",
    "derivative_gap_checks",
    "check_derivative_perturbations",
    "check_gradients",
    "default_suite",
]

_CHUNK = 1024
_CI_LEVEL = 0.01  # one-sided 99%


def _ci_halfwidth(trials: int) -> float:
    return math.sqrt(math.log(1.0 / _CI_LEVEL) / (2.0 * trials))


@dataclass(frozen=True)
class EventEstimate:
    """Estimated event frequency against its theoretical upper bound."""

    name: str
    trials: int
    hits: int
    bound: float
    ci_halfwidth: float

    @property
    def freq(self) -> float:
        return self.hits / self.trials

    @property
    def passed(self) -> bool:
        return self.freq - self.ci_halfwidth <= self.bound

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "freq": self.freq,
            "bound": self.bound if math.isfinite(self.bound) else None,
            "vacuous": self.bound >= 1.0,
            "ci": self.ci_halfwidth,
            "pass": self.passed,
        }


def _chunk_sizes(trials: int):
    full, rem = divmod(trials, _CHUNK)
    return [_CHUNK] * full + ([rem] if rem else [])


def check_noise_variance_tail(n_sup, noise_var, eta, label_bound,
                              noise_kind="uniform", trials=100_000, seed=0) -> EventEstimate:
    """Lower-tail event for the mean squared noise.

    Event: mean of z_i^2 over a fresh noise vector falls below
    noise_var - eta/6.  Bound: exp(-n_sup * eta^2 / (288 * label_bound^4)).
    """
    if trials < 10_000:
        raise ValueError("need at least 1e4 trials for a meaningful tail estimate")
    threshold = noise_var - eta / 6.0
    hits = 0
    for idx, size in enumerate(_chunk_sizes(trials)):
        rng = np.random.default_rng((seed, idx))
        z = noise_draws(noise_kind, noise_var, size * n_sup, rng).reshape(size, n_sup)
        hits += int(np.count_nonzero(np.mean(z * z, axis=1) <= threshold))
    bound = math.exp(-n_sup * eta * eta / (288.0 * label_bound**4))
    return EventEstimate("noise_variance_tail", trials, hits, bound, _ci_halfwidth(trials))


def check_noise_label_correlation(problem: HjbProblem, n_sup, noise_var, eta,
                                  noise_kind="uniform", trials=100_000, seed=0) -> EventEstimate:
    """Lower-tail event for the noise / clean-label correlation.

    Event: mean of z_i * E[y_i | location] falls below -eta/6, with clean
    labels from the exact solution at freshly sampled locations.  The label
    bound in exp(-n_sup eta^2 / (288 M^4)) is taken as ceil of the largest
    |label| (noisy or clean) seen across all trials.
    """
    if trials < 10_000:
        raise ValueError("need at least 1e4 trials for a meaningful tail estimate")
    if problem.exact is None:
        raise ValueError("needs a problem with an exact solution")
    threshold = -eta / 6.0
    hits = 0
    largest = 0.0
    for idx, size in enumerate(_chunk_sizes(trials)):
        rng = np.random.default_rng((seed, idx))
        x = rng.uniform(problem.lower, problem.upper, (size * n_sup, problem.space_dim))
        t = rng.uniform(0.0, problem.horizon, size * n_sup)
        clean = np.asarray(problem.exact.values(x, t)).reshape(size, n_sup)
        z = noise_draws(noise_kind, noise_var, size * n_sup, rng).reshape(size, n_sup)
        hits += int(np.count_nonzero(np.mean(z * clean, axis=1) <= threshold))
        largest = max(largest, float(np.max(np.abs(clean + z))), float(np.max(np.abs(clean))))
    label_bound = max(1.0, math.ceil(largest))
    bound = math.exp(-n_sup * eta * eta / (288.0 * label_bound**4))
    return EventEstimate("noise_label_correlation", trials, hits, bound, _ci_halfwidth(trials))


def check_cover_correlation_event(problem: HjbProblem, width, weight_radius, eta,
                                  n_sup, noise_var, lambda_sup, mu,
                                  noise_kind="uniform", trials=10_000, seed=0,
                                  activation="tanh", outer=None,
                                  cover_cap=200_000) -> EventEstimate:
    """Existence event over an exhaustive weight-space cover.

    Event: some cover element's correlation with fresh label noise at fresh
    supervision locations reaches the threshold S.  Bound: the two-term
    covering-number expression; it often exceeds 1 at desk scale, in which
    case the check is vacuous but still must not be violated.
    """
    if problem.exact is None:
        raise ValueError("needs a problem with an exact solution")
    n = problem.space_dim
    if outer is None:
        outer = np.random.default_rng(seed).normal(3.0, 1.0, width)
    outer = np.asarray(outer, dtype=float)
    cover = enumerate_cover(width, n, weight_radius, eta, activation=activation,
                            outer=outer, cap=cover_cap)
    w1s = np.stack([c.input_weights for c in cover])  # (C, k, n)
    w2s = np.stack([c.time_weights for c in cover])   # (C, k)
    act = get_activation(activation)
    threshold = s_threshold(lambda_sup, mu, eta, noise_var)

    hits = 0
    largest = 0.0
    n_cover, k = w2s.shape
    block = max(1, 2_000_000 // max(1, n_sup * n_cover * k))
    for idx, size in enumerate(_chunk_sizes(trials)):
        rng = np.random.default_rng((seed, idx))
        x = rng.uniform(problem.lower, problem.upper, (size, n_sup, n))
        t = rng.uniform(0.0, problem.horizon, (size, n_sup))
        clean = np.asarray(problem.exact.values(
            x.reshape(-1, n), t.reshape(-1))).reshape(size, n_sup)
        z = noise_draws(noise_kind, noise_var, size * n_sup, rng).reshape(size, n_sup)
        largest = max(largest, float(np.max(np.abs(clean + z))))
        for lo in range(0, size, block):
            xs = x[lo:lo + block]
            ts = t[lo:lo + block]
            zs = z[lo:lo + block]
            pre = np.einsum("ckj,bpj->bpck", w1s, xs) + \
                w2s[None, None, :, :] * ts[:, :, None, None]
            vals = np.einsum("bpck,k->bpc", act.derivatives(pre, order=0)[0], outer)
            stats = np.einsum("bpc,bp->bc", vals, zs) / n_sup
            hits += int(np.count_nonzero(np.max(stats, axis=1) >= threshold))

    label_bound = max(1.0, math.ceil(largest))
    c1 = float(np.sum(np.abs(outer)))
    d = width * (n + 1)
    log_cover_bound = d * math.log(2.0 * weight_radius * math.sqrt(d) / eta)
    if threshold <= 0:
        bound = math.inf
    else:
        exp1 = log_cover_bound - n_sup * threshold**2 / (128.0 * (label_bound * c1) ** 2)
        exp2 = -n_sup * threshold**2 / (32.0 * (label_bound * c1) ** 2)
        bound = 2.0 * math.exp(min(exp1, 700.0)) + 2.0 * math.exp(exp2)
    return EventEstimate("cover_correlation_event", trials, hits, bound, _ci_halfwidth(trials))


def _ball_point(rng, dim, radius):
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    return radius * rng.uniform() ** (1.0 / dim) * u


def check_risk_perturbation(problem: HjbProblem, data: Dataset, weights: LossWeights,
                            width, weight_radius, eta, trials=1000, seed=0,
                            activation="tanh", adversarial_every=10) -> EventEstimate:
    """Violations of the polynomial risk-perturbation bound (expected: none).

    Draws a base network inside the weight ball and a perturbation of 2-norm
    at most eta/2 (exactly eta/2 on every other draw, and aligned with the
    risk gradient every ``adversarial_every``-th draw), then asserts
    risk(perturbed) <= risk(base) + linear*eta + ... + quartic*eta^4.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    outer = rng.normal(3.0, 1.0, width)
    template = init_network(width, problem.space_dim, seed=seed,
                            activation=activation, radius=weight_radius)
    template = NetworkParams(template.input_weights, template.time_weights,
                             outer, weight_radius, activation)
    b = bound_constants(activation, outer)
    bi = BoundInputs(
        space_dim=problem.space_dim, width=width, weight_radius=weight_radius,
        output_bound=b.output_bound, gradient_bound=b.gradient_bound,
        curvature_bound=b.curvature_bound, box_halfwidth=problem.coordinate_bound,
        horizon=problem.horizon, label_bound=data.label_bound,
        init_bound=data.init_bound, lambda_init=weights.lambda_init,
        lambda_sup=weights.lambda_sup, noise_var=data.noise_var,
        eta=eta, delta=0.5, n_sup=data.n_sup, n_init=data.n_init,
    )
    pc = perturbation_constants(bi)
    d = template.param_count
    hits = 0
    for trial in range(trials):
        trng = np.random.default_rng((seed, trial))
        base = template.with_flat(_ball_point(trng, d, weight_radius))
        if adversarial_every and trial % adversarial_every == 0:
            direction = risk_gradient(base, data, weights)
            norm = np.linalg.norm(direction)
            if norm == 0:
                direction = trng.normal(size=d)
                norm = np.linalg.norm(direction)
            step = (eta / 2.0) * direction / norm
        else:
            direction = trng.normal(size=d)
            direction /= np.linalg.norm(direction)
            radius = eta / 2.0 if trial % 2 else (eta / 2.0) * trng.uniform()
            step = radius * direction
        perturbed = template.with_flat(base.flat() + step)
        risk_base = empirical_risk(base, data, weights).total
        risk_pert = empirical_risk(perturbed, data, weights).total
        limit = perturbed_risk_bound(risk_base, pc, eta)
        if risk_pert > limit + 1e-9 * max(1.0, abs(limit)):
            hits += 1
    return EventEstimate("risk_perturbation", trials, hits, 0.0, 0.0)


@dataclass(frozen=True)
class GapCheck:
    name: str
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + 1e-12 * max(1.0, abs(self.rhs))


def derivative_gap_checks(base: NetworkParams, perturbed: NetworkParams,
                          x, t, eta) -> List[GapCheck]:
    """The six pointwise bounds on derivative gaps and sums under an eta/2
    weight perturbation, with the gradient-Lipschitz constant instantiated
    as the curvature bound."""
    gap = np.linalg.norm(base.flat() - perturbed.flat())
    if gap > eta / 2.0 + 1e-9:
        raise ValueError(f"perturbation norm {gap} exceeds eta/2 = {eta / 2.0}")
    b = base.bounds()
    c2, c3 = b.gradient_bound, b.curvature_bound
    w = base.radius
    n, k = base.space_dim, base.width
    x = np.asarray(x, dtype=float)
    reach = float(np.linalg.norm(x)) + abs(float(t))
    d_base = network.input_derivatives(base, x, t)
    d_pert = network.input_derivatives(perturbed, x, t)
    g_base = float(d_base.grad_x @ d_base.grad_x)
    g_pert = float(d_pert.grad_x @ d_pert.grad_x)
    half = eta / 2.0
    dt_gap_rhs = half * (c2 + w * c3 * reach)
    grad_gap = half * (w * c3 * reach + c2)
    return [
        GapCheck("time_derivative_gap", d_base.dt - d_pert.dt, dt_gap_rhs),
        GapCheck("time_derivative_sum", d_base.dt + d_pert.dt, dt_gap_rhs + 2.0 * w * c2),
        GapCheck("gradient_sq_gap", g_base - g_pert, grad_gap * (grad_gap + 2.0 * w * c2)),
        GapCheck(
            "gradient_sq_sum",
            g_base + g_pert,
            w * c2 * eta * (w * c3 * reach + c2)
            + 2.0 * (w * c2) ** 2
            + half * (w * c3 * half * reach + (2.0 * w + half) * c2),
        ),
        GapCheck("laplacian_gap", d_pert.laplacian - d_base.laplacian,
                 c3 * n * k * (eta * w + half * half)),
        GapCheck("laplacian_sum", d_pert.laplacian + d_base.laplacian,
                 c3 * n * k * (2.0 * w * w + eta * w + half * half)),
    ]


def check_derivative_perturbations(problem: HjbProblem, width, weight_radius,
                                   eta, trials=10_000, seed=0,
                                   activation="tanh") -> EventEstimate:
    """Randomized sweep of the six derivative-gap bounds (expected: none fail)."""
    rng = np.random.default_rng(seed)
    outer = rng.normal(3.0, 1.0, width)
    template = NetworkParams(
        np.zeros((width, problem.space_dim)), np.zeros(width), outer,
        weight_radius, activation,
    )
    d = template.param_count
    hits = 0
    for trial in range(trials):
        trng = np.random.default_rng((seed, trial))
        base = template.with_flat(_ball_point(trng, d, weight_radius))
        direction = trng.normal(size=d)
        direction /= np.linalg.norm(direction)
        radius = eta / 2.0 if trial % 2 else (eta / 2.0) * trng.uniform()
        perturbed = template.with_flat(base.flat() + radius * direction)
        x = trng.uniform(problem.lower, problem.upper)
        t = trng.uniform(0.0, problem.horizon)
        checks = derivative_gap_checks(base, perturbed, x, t, eta)
        if not all(c.ok for c in checks):
            hits += 1
    return EventEstimate("derivative_perturbations", trials, hits, 0.0, 0.0)


def _rel_err(approx: float, exact: float) -> float:
    return abs(approx - exact) / max(1.0, abs(approx), abs(exact))


def fd_input_derivative_errors(p: NetworkParams, x, t, h=1e-5) -> float:
    """Worst relative error of the closed-form input derivatives against
    central finite differences of the forward value."""
    x = np.asarray(x, dtype=float)
    d = network.input_derivatives(p, x, t)
    worst = 0.0
    fd_dt = (network.forward(p, x, t + h) - network.forward(p, x, t - h)) / (2 * h)
    worst = max(worst, _rel_err(fd_dt, d.dt))
    lap_fd = 0.0
    h2 = 1e-4
    f0 = network.forward(p, x, t)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = 1.0
        fd_g = (network.forward(p, x + h * e, t) - network.forward(p, x - h * e, t)) / (2 * h)
        worst = max(worst, _rel_err(fd_g, float(d.grad_x[i])))
        lap_fd += (network.forward(p, x + h2 * e, t) - 2 * f0
                   + network.forward(p, x - h2 * e, t)) / (h2 * h2)
    worst = max(worst, _rel_err(lap_fd, d.laplacian))
    return worst


def fd_value_gradient_error(p: NetworkParams, x, t, h=1e-5) -> float:
    """Worst relative error of the parameter gradient of the forward value."""
    x = np.asarray(x, dtype=float)
    xb = x[None, :]
    tb = np.asarray([t], dtype=float)
    adj = PointAdjoints(value=np.ones(1))
    grad = network.parameter_gradient(p, xb, tb, adj)
    flat = p.flat()
    worst = 0.0
    for j in range(flat.size):
        e = np.zeros_like(flat)
        e[j] = h
        fd = (network.forward(p.with_flat(flat + e), x, t)
              - network.forward(p.with_flat(flat - e), x, t)) / (2 * h)
        worst = max(worst, _rel_err(fd, float(grad[j])))
    return worst


def fd_risk_gradient_error(p: NetworkParams, data: Dataset, weights: LossWeights,
                           h=1e-5) -> float:
    """Worst relative error of the full risk gradient against central
    finite differences of the total."""
    grad = risk_gradient(p, data, weights)
    flat = p.flat()
    worst = 0.0
    for j in range(flat.size):
        e = np.zeros_like(flat)
        e[j] = h
        up = empirical_risk(p.with_flat(flat + e), data, weights).total
        dn = empirical_risk(p.with_flat(flat - e), data, weights).total
        worst = max(worst, _rel_err((up - dn) / (2 * h), float(grad[j])))
    return worst


@dataclass(frozen=True)
class GradientAudit:
    cases: int
    max_input_error: float
    max_value_gradient_error: float
    max_risk_gradient_error: float

    @property
    def passed(self) -> bool:
        return (self.max_input_error < 1e-5
                and self.max_value_gradient_error < 1e-5
                and self.max_risk_gradient_error < 1e-4)

    def to_json_dict(self) -> dict:
        return {
            "name": "gradient_audit",
            "trials": self.cases,
            "freq": max(self.max_input_error, self.max_value_gradient_error,
                        self.max_risk_gradient_error),
            "bound": 1e-4,
            "ci": 0.0,
            "pass": self.passed,
        }


def check_gradients(seed=0, cases=25) -> GradientAudit:
    """Finite-difference audit of input derivatives and parameter gradients
    on random small instances of both activations."""
    from .data import sample_dataset
    from .hjb import unit_cube_problem

    worst_in = worst_val = worst_risk = 0.0
    for case in range(cases):
        rng = np.random.default_rng((seed, case))
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 4))
        act = "tanh" if case % 2 else "sigmoid"
        p = init_network(k, n, seed=1000 + case, activation=act)
        p = p.with_flat(rng.normal(0.0, 0.8, p.param_count))
        x = rng.uniform(-1.0, 1.0, n)
        t = float(rng.uniform(0.0, 1.0))
        worst_in = max(worst_in, fd_input_derivative_errors(p, x, t))
        worst_val = max(worst_val, fd_value_gradient_error(p, x, t))
        if case % 5 == 0:
            problem = unit_cube_problem(n)
            data = sample_dataset(problem, 12, 8, 10, noise_var=0.25,
                                  seed=2000 + case)
            weights = LossWeights(lambda_init=0.3, lambda_sup=0.5)
            worst_risk = max(worst_risk, fd_risk_gradient_error(p, data, weights))
    return GradientAudit(cases, worst_in, worst_val, worst_risk)


def default_suite(seed=0, trials_scale=1.0) -> list:
    """The checks the command-line verify subcommand runs."""
    from .hjb import unit_cube_problem
    from .data import sample_dataset

    problem = unit_cube_problem(2)
    scale = max(0.1, trials_scale)
    tail_trials = max(10_000, int(50_000 * scale))
    results = [
        check_noise_variance_tail(100, 0.5, 0.5, 3.0, trials=tail_trials, seed=seed),
        check_noise_label_correlation(problem, 100, 0.5, 0.5,
                                      trials=tail_trials, seed=seed + 1),
        check_cover_correlation_event(
            unit_cube_problem(1), width=1, weight_radius=1.0, eta=1.0,
            n_sup=50, noise_var=0.5, lambda_sup=0.5, mu=0.7,
            trials=max(2000, int(5000 * scale)), seed=seed + 2),
    ]
    data = sample_dataset(problem, 48, 32, 48, noise_var=0.5, seed=seed + 3)
    weights = LossWeights(lambda_init=0.3, lambda_sup=0.5)
    results.append(check_risk_perturbation(
        problem, data, weights, width=4, weight_radius=1.0, eta=0.1,
        trials=max(200, int(500 * scale)), seed=seed + 4))
    results.append(check_derivative_perturbations(
        problem, width=4, weight_radius=1.0, eta=0.1,
        trials=max(1000, int(3000 * scale)), seed=seed + 5))
    results.append(check_gradients(seed=seed + 6))
    return results
