"""Empirical risks: PDE residual + initial-condition + noisy supervision.

Per-term values are stored as unweighted mean squares; the regularization
weights enter exactly once, in ``total``.  That keeps the raw supervised
mean square comparable against the label-noise variance regardless of how
the supervised term is weighted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import network
from .data import Dataset
from .hjb import pde_residual
from .network import NetworkParams, PointAdjoints

__all__ = [
    "LossWeights",
    "RiskBreakdown",
    "empirical_risk",
    "empirical_risk_unsupervised",
    "risk_gradient",
    "risk_and_gradient",
]


@dataclass(frozen=True)
class LossWeights:
    """Regularization weights: lambda_init on the t=0 term, lambda_sup on
    the supervised term.  lambda_sup = 0 selects the unsupervised form."""

    lambda_init: float = 0.3
    lambda_sup: float = 0.5

    def __post_init__(self):
        if not self.lambda_init > 0:
            raise ValueError("lambda_init must be positive")
        if self.lambda_sup < 0:
            raise ValueError("lambda_sup must be nonnegative")


@dataclass(frozen=True)
class RiskBreakdown:
    """Unweighted per-term mean squares plus the weighted total."""

    pde_term: float
    init_term: float
    sup_term: float
    total: float

    @classmethod
    def from_terms(cls, pde_term, init_term, sup_term, weights: LossWeights):
        total = (
            pde_term
            + weights.lambda_init * init_term
            + weights.lambda_sup * sup_term
        )
        return cls(float(pde_term), float(init_term), float(sup_term), float(total))


def _pde_mean_square(model, data: Dataset) -> float:
    if data.n_colloc == 0:
        raise ValueError("risk needs at least one collocation point")
    res = pde_residual(model.derivatives_batch(data.colloc_x, data.colloc_t))
    return float(np.mean(res * res))


def _init_mean_square(model, data: Dataset, labels) -> float:
    if data.n_init == 0:
        raise ValueError("risk needs at least one initial-condition point")
    vals = model.values(data.init_x, np.zeros(data.n_init))
    diff = vals - labels
    return float(np.mean(diff * diff))


def empirical_risk(model, data: Dataset, weights: LossWeights) -> RiskBreakdown:
    """Three-term empirical risk of any predictor with the evaluation protocol.

    ``model`` needs ``derivatives_batch(x, t)`` and ``values(x, t)``; both
    networks and the exact solution qualify.
    """
    pde = _pde_mean_square(model, data)
    init = _init_mean_square(model, data, data.init_values)
    if data.n_sup > 0:
        vals = model.values(data.sup_x, data.sup_t)
        diff = vals - data.sup_y
        sup = float(np.mean(diff * diff))
    elif weights.lambda_sup > 0:
        raise ValueError("lambda_sup > 0 but the dataset has no supervision points")
    else:
        sup = 0.0
    return RiskBreakdown.from_terms(pde, init, sup, weights)


def empirical_risk_unsupervised(model, data: Dataset, weights: LossWeights) -> RiskBreakdown:
    """Variant with noisy initial-condition labels and no supervised term."""
    if data.init_labels is None:
        raise ValueError("unsupervised risk needs noisy initial-condition labels")
    pde = _pde_mean_square(model, data)
    init = _init_mean_square(model, data, data.init_labels)
    return RiskBreakdown.from_terms(pde, init, 0.0, weights)


def risk_and_gradient(p: NetworkParams, data: Dataset, weights: LossWeights,
                      unsupervised: bool = False):
    """Breakdown plus the exact gradient of ``total`` w.r.t. (W1, w2).

    One evaluation pass per point set; gradients reuse the activation
    derivatives instead of recomputing them.
    """
    if data.n_colloc == 0:
        raise ValueError("risk needs at least one collocation point")
    if data.n_init == 0:
        raise ValueError("risk needs at least one initial-condition point")
    if unsupervised and data.init_labels is None:
        raise ValueError("unsupervised risk needs noisy initial-condition labels")

    grad = np.zeros(p.param_count)

    # PDE residual term
    parts = network.eval_parts(p, None, None, order=3, aug=data.colloc_aug())
    d = network.derivatives_from_parts(p, parts)
    res = pde_residual(d)
    pde = float(np.mean(res * res))
    coef = (2.0 / data.n_colloc) * res
    adj = PointAdjoints(
        dt=coef,
        grad_x=2.0 * coef[:, None] * d.grad_x,
        laplacian=-coef,
    )
    grad += network.gradient_from_parts(p, parts, adj)

    # initial-condition term
    labels = data.init_labels if unsupervised else data.init_values
    parts0 = network.eval_parts(p, None, None, order=1, aug=data.init_aug())
    vals0 = parts0.s @ p.outer
    diff0 = vals0 - labels
    init = float(np.mean(diff0 * diff0))
    adj0 = PointAdjoints(value=(2.0 * weights.lambda_init / data.n_init) * diff0)
    grad += network.gradient_from_parts(p, parts0, adj0)

    # supervised term
    sup = 0.0
    if not unsupervised and data.n_sup > 0:
        partss = network.eval_parts(p, None, None, order=1, aug=data.sup_aug())
        valss = partss.s @ p.outer
        diffs = valss - data.sup_y
        sup = float(np.mean(diffs * diffs))
        if weights.lambda_sup > 0:
            adjs = PointAdjoints(value=(2.0 * weights.lambda_sup / data.n_sup) * diffs)
            grad += network.gradient_from_parts(p, partss, adjs)
    elif not unsupervised and weights.lambda_sup > 0:
        raise ValueError("lambda_sup > 0 but the dataset has no supervision points")

    return RiskBreakdown.from_terms(pde, init, sup, weights), grad


def risk_gradient(p: NetworkParams, data: Dataset, weights: LossWeights,
                  unsupervised: bool = False) -> np.ndarray:
    """Gradient of the weighted total risk, flattened W1 row-major then w2."""
    return risk_and_gradient(p, data, weights, unsupervised=unsupervised)[1]
