"""Scalar activations with closed-form derivatives up to third order.

The hidden map used throughout is f(z) = <a, sigma(z)> for a frozen outer
vector a, so the only analytic ingredients needed anywhere are sigma and its
first three derivatives, plus the worst-case magnitudes of sigma' and sigma''
(they set the output/gradient/curvature bounds of f).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Activation",
    "ActivationBounds",
    "get_activation",
    "eval_derivatives",
    "bound_constants",
]

_SIGMOID_GRAD_MAX = 0.25
_SIGMOID_CURV_MAX = 1.0 / (6.0 * math.sqrt(3.0))
_TANH_GRAD_MAX = 1.0
_TANH_CURV_MAX = 4.0 / (3.0 * math.sqrt(3.0))


class Activation:
    """A smooth bounded scalar activation, applied pointwise.

    Instances are stateless; ``derivatives`` returns (s, s', s'', s''') as
    arrays matching the input shape, with entries above ``order`` left as
    None so large batches only pay for what they use.
    """

    name: str

    def derivatives(self, z, order: int = 3):
        raise NotImplementedError

    # worst-case |sigma'| and |sigma''| over the real line
    def gradient_max(self) -> float:
        raise NotImplementedError

    def curvature_max(self) -> float:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class Sigmoid(Activation):
    name = "sigmoid"

    def derivatives(self, z, order: int = 3):
        z = np.asarray(z, dtype=float)
        # 0.5*(1+tanh(z/2)) is the overflow-safe form of 1/(1+exp(-z))
        s = 0.5 * (1.0 + np.tanh(0.5 * z))
        d1 = s * (1.0 - s) if order >= 1 else None
        d2 = d1 * (1.0 - 2.0 * s) if order >= 2 else None
        d3 = d1 * (1.0 - 6.0 * s + 6.0 * s * s) if order >= 3 else None
        return s, d1, d2, d3

    def gradient_max(self) -> float:
        return _SIGMOID_GRAD_MAX

    def curvature_max(self) -> float:
        return _SIGMOID_CURV_MAX


class Tanh(Activation):
    name = "tanh"

    # Maxima of |tanh'| and |tanh''| found once on a dense grid; the closed
    # forms 1 and 4/(3*sqrt(3)) must agree or the grid search is broken.
    _grid_max: tuple | None = None

    def derivatives(self, z, order: int = 3):
        z = np.asarray(z, dtype=float)
        t = np.tanh(z)
        d1 = 1.0 - t * t if order >= 1 else None
        d2 = -2.0 * t * d1 if order >= 2 else None
        d3 = d1 * (6.0 * t * t - 2.0) if order >= 3 else None
        return t, d1, d2, d3

    @classmethod
    def _grid_maxima(cls):
        if cls._grid_max is None:
            x = np.arange(-20.0, 20.0 + 1e-4, 1e-4)
            t = np.tanh(x)
            d1 = 1.0 - t * t
            d2 = -2.0 * t * d1
            g1 = float(np.max(np.abs(d1)))
            g2 = float(np.max(np.abs(d2)))
            if abs(g1 - _TANH_GRAD_MAX) > 1e-6 or abs(g2 - _TANH_CURV_MAX) > 1e-6:
                raise AssertionError(
                    f"tanh derivative maxima {g1}, {g2} disagree with closed forms"
                )
            cls._grid_max = (g1, g2)
        return cls._grid_max

    def gradient_max(self) -> float:
        return self._grid_maxima()[0]

    def curvature_max(self) -> float:
        return self._grid_maxima()[1]


_ACTIVATIONS = {"sigmoid": Sigmoid(), "tanh": Tanh()}


def get_activation(name) -> Activation:
    """Look up an activation by name ("sigmoid" or "tanh")."""
    if isinstance(name, Activation):
        return name
    try:
        return _ACTIVATIONS[str(name).lower()]
    except KeyError:
        raise ValueError(
            f"unknown activation {name!r}; choose from {sorted(_ACTIVATIONS)}"
        ) from None


def eval_derivatives(act, x):
    """Evaluate (sigma, sigma', sigma'', sigma''') at a scalar x."""
    act = get_activation(act)
    s, d1, d2, d3 = act.derivatives(float(x))
    return float(s), float(d1), float(d2), float(d3)


@dataclass(frozen=True)
class ActivationBounds:
    """Worst-case bounds of f(z) = <a, sigma(z)>.

    output_bound    sup |f|            = |a|_1
    gradient_bound  sup ||grad f||_2   = max|sigma'|  * |a|_2
    curvature_bound sup ||Hess f||_F   = max|sigma''| * |a|_2
    """

    output_bound: float
    gradient_bound: float
    curvature_bound: float

    def as_tuple(self):
        return (self.output_bound, self.gradient_bound, self.curvature_bound)


def bound_constants(act, outer) -> ActivationBounds:
    """Bound constants of f(z) = <outer, sigma(z)> for a frozen outer vector."""
    act = get_activation(act)
    a = np.asarray(outer, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("outer vector must be nonempty")
    if not np.all(np.isfinite(a)):
        raise ValueError("outer vector must be finite")
    l1 = float(np.sum(np.abs(a)))
    l2 = float(np.linalg.norm(a))
    return ActivationBounds(
        output_bound=l1,
        gradient_bound=act.gradient_max() * l2,
        curvature_bound=act.curvature_max() * l2,
    )
