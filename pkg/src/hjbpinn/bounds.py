"""Model-size lower-bound machinery, evaluated symbol by symbol.

Implements the perturbation constants of the risk-vs-weight-perturbation
bound, the covering-number count, the correlation threshold, and the two
capacity reports (supervised labels, noisy initial-condition labels),
including the general sample ceiling.  Anything that can overflow (cover
counts, exponential tails) is handled in log space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = [
    "BoundInputs",
    "RiskPerturbationBound",
    "CoverCount",
    "BoundReport",
    "perturbation_constants",
    "perturbed_risk_bound",
    "s_threshold",
    "covering_count_bound",
    "default_regime_s",
    "theorem1_report",
    "theorem2_report",
    "min_width_for",
]

# reports assume the label bound exceeds 1; smaller values are clamped
_MIN_LABEL_BOUND = 1.0 + 1e-9


@dataclass(frozen=True)
class BoundInputs:
    """Every scalar the capacity reports consume.

    output_bound/gradient_bound/curvature_bound are the activation-and-outer
    bounds of the hidden map; box_halfwidth is the largest |coordinate| of
    the spatial box; s is the regime parameter (None picks the default for
    the current lambda_sup regime).
    """

    space_dim: int
    width: int
    weight_radius: float
    output_bound: float
    gradient_bound: float
    curvature_bound: float
    box_halfwidth: float
    horizon: float
    label_bound: float
    init_bound: float
    lambda_init: float
    lambda_sup: float
    noise_var: float
    eta: float
    delta: float
    n_sup: int
    n_init: int
    s: Optional[float] = None

    def __post_init__(self):
        if self.space_dim < 1 or self.width < 1:
            raise ValueError("space_dim and width must be >= 1")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        for name in ("weight_radius", "output_bound", "gradient_bound",
                     "curvature_bound", "box_halfwidth", "horizon"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def param_count(self) -> int:
        return self.width * (self.space_dim + 1)

    @classmethod
    def from_run(cls, problem, params, weights, dataset, eta, delta, s=None):
        """Fill the inputs from a problem/network/dataset triple."""
        b = params.bounds()
        return cls(
            space_dim=problem.space_dim,
            width=params.width,
            weight_radius=params.radius,
            output_bound=b.output_bound,
            gradient_bound=b.gradient_bound,
            curvature_bound=b.curvature_bound,
            box_halfwidth=problem.coordinate_bound,
            horizon=problem.horizon,
            label_bound=dataset.label_bound,
            init_bound=dataset.init_bound,
            lambda_init=weights.lambda_init,
            lambda_sup=weights.lambda_sup,
            noise_var=dataset.noise_var,
            eta=eta,
            delta=delta,
            n_sup=dataset.n_sup,
            n_init=dataset.n_init,
            s=s,
        )


@dataclass(frozen=True)
class RiskPerturbationBound:
    """Coefficients of the polynomial bound on the risk change under an
    eta/2 weight perturbation: risk growth <= linear*eta + quadratic*eta^2
    + cubic*eta^3 + quartic*eta^4.

    reach = sqrt(n)*B + T bounds ||x|| + |t| over the domain;
    residual_linear is the PDE-residual part of the linear coefficient.
    """

    reach: float
    residual_linear: float
    linear: float
    quadratic: float
    cubic: float
    quartic: float


def perturbation_constants(bi: BoundInputs) -> RiskPerturbationBound:
    """Verbatim evaluation of the five coefficient formulas."""
    n, k = bi.space_dim, bi.width
    w = bi.weight_radius
    c1, c2, c3 = bi.output_bound, bi.gradient_bound, bi.curvature_bound
    box, horizon = bi.box_halfwidth, bi.horizon
    v = math.sqrt(n) * box + horizon
    wcv = w * c3 * v + c2
    cnk = c3 * n * k

    b1 = 2.0 * (wcv * (1.0 + 2.0 * w * c2) + cnk * w) * (
        w * c2 * (1.0 + w * c2) + cnk * w * w
    )
    a1 = (
        bi.lambda_sup * c2 * v * (c1 + bi.label_bound)
        + bi.lambda_init * c2 * math.sqrt(n) * box * (c1 + bi.init_bound)
        + b1
    )
    inner = c2 * (0.5 + w * (c3 * v + c2 * c2 + 1.0)) + w * (0.5 * c3 * v + cnk)
    a2 = 0.25 * (cnk + wcv * wcv) * (w * c2 * (1.0 + w * c2) + cnk * w * w) + (
        wcv * (0.5 + w * c2) + cnk * w
    ) * inner
    a3 = 0.25 * (cnk + wcv) * (wcv * (0.5 + w * c2) + cnk * w) + 0.25 * (
        cnk + wcv * wcv
    ) * inner
    a4 = (cnk + wcv) * (cnk + wcv * wcv) / 16.0
    return RiskPerturbationBound(
        reach=v, residual_linear=b1, linear=a1, quadratic=a2, cubic=a3, quartic=a4
    )


def perturbed_risk_bound(base_risk: float, pc: RiskPerturbationBound, eta: float) -> float:
    """Upper bound on the risk after an eta/2 weight perturbation."""
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    return base_risk + eta * (
        pc.linear + eta * (pc.quadratic + eta * (pc.cubic + eta * pc.quartic))
    )


def s_threshold(lambda_sup: float, mu: float, eta: float, noise_var: float) -> float:
    """Correlation threshold (1/(2*lambda_sup))(mu*eta - var) + var/2 - eta/4."""
    if lambda_sup <= 0:
        raise ValueError("the correlation threshold needs lambda_sup > 0")
    return (mu * eta - noise_var) / (2.0 * lambda_sup) + 0.5 * noise_var - 0.25 * eta


@dataclass(frozen=True)
class CoverCount:
    """Cover cardinality bound (2 W sqrt(d) / eta)^d, kept in log space."""

    log_count: float
    count: float  # inf when not representable

    @classmethod
    def compute(cls, param_count: int, weight_radius: float, eta: float):
        if eta <= 0:
            raise ValueError("eta must be positive")
        base = 2.0 * weight_radius * math.sqrt(param_count) / eta
        log_count = param_count * math.log(base) if base > 0 else -math.inf
        count = math.exp(log_count) if log_count < 700 else math.inf
        return cls(log_count=log_count, count=count)


def covering_count_bound(param_count: int, weight_radius: float, eta: float) -> CoverCount:
    return CoverCount.compute(param_count, weight_radius, eta)


def default_regime_s(lambda_sup: float, output_bound: float) -> float:
    if lambda_sup < 1.0:
        return lambda_sup / 4.0
    if lambda_sup > 1.0:
        return lambda_sup
    return 2.0 * output_bound / 3.0 + 0.5


def _check_regime(lambda_sup: float, s: float, output_bound: float) -> str:
    if lambda_sup <= 0:
        raise ValueError("capacity reports need lambda_sup > 0")
    if lambda_sup < 1.0:
        if not 0.0 < s < lambda_sup / 2.0:
            raise ValueError(
                f"regime violation: lambda_sup={lambda_sup} < 1 requires "
                f"s in (0, lambda_sup/2); got s={s}"
            )
        return "lambda_sup<1"
    if lambda_sup > 1.0:
        if not s > lambda_sup / 2.0:
            raise ValueError(
                f"regime violation: lambda_sup={lambda_sup} > 1 requires "
                f"s > lambda_sup/2; got s={s}"
            )
        return "lambda_sup>1"
    floor = 2.0 * output_bound / 3.0 + 0.5
    if not s >= floor:
        raise ValueError(
            f"regime violation: lambda_sup=1 requires s >= 2*C1/3 + 1/2 = {floor}; "
            f"got s={s}"
        )
    return "lambda_sup=1"


@dataclass(frozen=True)
class BoundReport:
    """One capacity check: lhs >= rhs of the size inequality plus every
    intermediate constant, and the smallest parameter count that passes."""

    which: str
    param_count: int
    eta: float
    delta: float
    regime: str
    s: float
    correlation_threshold: float
    critical_samples: float
    log_cover_count: float
    lhs: float
    rhs: float
    satisfied: bool
    vacuous: bool
    sample_ceiling: float
    witness_margin: float
    min_param_count: int
    effective_amplitude_bound: float
    in_asymptotic_regime: bool
    constants: RiskPerturbationBound

    def to_json_dict(self) -> dict:
        pc = self.constants
        return {
            "bound": self.which,
            "d_N": self.param_count,
            "eta": self.eta,
            "delta": self.delta,
            "regime": self.regime,
            "s": self.s,
            "V": pc.reach,
            "b1": pc.residual_linear,
            "a1": pc.linear,
            "a2": pc.quadratic,
            "a3": pc.cubic,
            "a4": pc.quartic,
            "S_eta": self.correlation_threshold,
            "N_c": self.critical_samples,
            "log_cover_count": self.log_cover_count,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "satisfied": self.satisfied,
            "vacuous": self.vacuous,
            "sample_upper_bound": self.sample_ceiling if math.isfinite(self.sample_ceiling) else None,
            "witness_a": self.witness_margin,
            "witness_a_note": "proof-derived, eta-dependent",
            "min_d_N": self.min_param_count,
            "amplitude_bound_effective": self.effective_amplitude_bound,
            "in_asymptotic_regime": self.in_asymptotic_regime,
        }


def _capacity_lhs(param_count: int, weight_radius: float, eta: float) -> float:
    return param_count * (
        math.log(param_count) + math.log(4.0 * weight_radius**2 / eta**2)
    )


def _capacity_rhs(count: int, amp_bound: float, eta: float, delta: float) -> float:
    return count * eta * eta / (144.0 * amp_bound**4) - 2.0 * math.log(4.0 / (1.0 - delta))


def _clamped_amplitude(raw: float, label: str) -> float:
    if raw < _MIN_LABEL_BOUND:
        warnings.warn(
            f"{label} bound {raw} is below 1; the capacity derivation assumes "
            f"a bound > 1, clamping to {_MIN_LABEL_BOUND}",
            stacklevel=3,
        )
        return _MIN_LABEL_BOUND
    return raw


def _report(which: str, count: int, raw_amp: float, bi: BoundInputs) -> BoundReport:
    amp = _clamped_amplitude(raw_amp, which)
    s = default_regime_s(bi.lambda_sup, bi.output_bound) if bi.s is None else bi.s
    regime = _check_regime(bi.lambda_sup, s, bi.output_bound)
    corr = s_threshold(bi.lambda_sup, s, bi.eta, bi.noise_var)
    d = bi.param_count
    lhs = _capacity_lhs(d, bi.weight_radius, bi.eta)
    rhs = _capacity_rhs(count, amp, bi.eta, bi.delta)
    cover = covering_count_bound(d, bi.weight_radius, bi.eta)
    pc = perturbation_constants(bi)

    denom = min(bi.eta**2 / 9.0, corr**2 / bi.output_bound**2)
    if denom > 0:
        log_tail = np.logaddexp(math.log(2.0), cover.log_count)
        ceiling = (32.0 * amp**4 / denom) * (
            math.log(2.0 / (1.0 - bi.delta)) + log_tail
        )
    else:
        ceiling = math.inf
    witness = s + pc.linear + pc.quadratic * bi.eta + pc.cubic * bi.eta**2 + pc.quartic * bi.eta**3
    vacuous = rhs <= 0.0
    return BoundReport(
        which=which,
        param_count=d,
        eta=bi.eta,
        delta=bi.delta,
        regime=regime,
        s=s,
        correlation_threshold=corr,
        critical_samples=288.0 * amp**4 / bi.eta**2,
        log_cover_count=cover.log_count,
        lhs=lhs,
        rhs=rhs,
        satisfied=lhs >= rhs,
        vacuous=vacuous,
        sample_ceiling=float(ceiling),
        witness_margin=witness,
        min_param_count=0 if vacuous else _smallest_param_count(bi.weight_radius, bi.eta, rhs),
        effective_amplitude_bound=amp,
        in_asymptotic_regime=d >= 3,
        constants=pc,
    )


def theorem1_report(bi: BoundInputs) -> BoundReport:
    """Capacity report against the supervised sample count and label bound."""
    return _report("supervised", bi.n_sup, bi.label_bound, bi)


def theorem2_report(bi: BoundInputs) -> BoundReport:
    """Same inequality with initial-condition count and bound substituted."""
    return _report("initial_condition", bi.n_init, bi.init_bound, bi)


def _smallest_param_count(weight_radius: float, eta: float, rhs: float) -> int:
    if rhs <= 0:
        return 0
    hi = 1
    while _capacity_lhs(hi, weight_radius, eta) < rhs:
        hi *= 2
        if hi > 2**62:
            raise OverflowError("no representable parameter count satisfies the bound")
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if _capacity_lhs(mid, weight_radius, eta) >= rhs:
            hi = mid
        else:
            lo = mid
    # guard against non-monotone stretches when log(4W^2/eta^2) < 0
    while hi > 1 and _capacity_lhs(hi - 1, weight_radius, eta) >= rhs:
        hi -= 1
    return hi


def min_width_for(bi: BoundInputs, which: str = "supervised") -> int:
    """Smallest parameter count satisfying the chosen capacity inequality
    (0 when the inequality is vacuous)."""
    if which == "supervised":
        count, raw = bi.n_sup, bi.label_bound
    elif which == "initial_condition":
        count, raw = bi.n_init, bi.init_bound
    else:
        raise ValueError("which must be 'supervised' or 'initial_condition'")
    amp = _clamped_amplitude(raw, which)
    rhs = _capacity_rhs(count, amp, bi.eta, bi.delta)
    if rhs <= 0:
        return 0
    return _smallest_param_count(bi.weight_radius, bi.eta, rhs)
