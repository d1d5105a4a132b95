"""Shallow bounded-weight networks h(x, t) = <a, sigma(W1 x + w2 t)>.

Trainable weights are (W1, w2) constrained to a 2-norm ball of radius
``radius``; the outer vector ``a`` is frozen.  Everything a PDE loss needs
(value, time derivative, spatial gradient, Laplacian) has a closed form, as
does the exact parameter gradient of any scalar loss built from those four
quantities, so no autodiff is involved anywhere.

Flattened parameter order is fixed everywhere: W1 row-major, then w2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .activations import Activation, bound_constants, get_activation

__all__ = [
    "NetworkParams",
    "Derivatives",
    "PointAdjoints",
    "EvalParts",
    "CoverTooLarge",
    "forward",
    "values_batch",
    "input_derivatives",
    "derivatives_batch",
    "eval_parts",
    "derivatives_from_parts",
    "gradient_from_parts",
    "parameter_gradient",
    "project_to_ball",
    "enumerate_cover",
    "covering_grid_spacing",
    "save_params",
    "load_params",
    "params_to_json",
    "params_from_json",
]


class CoverTooLarge(ValueError):
    """Raised when a requested weight-space cover exceeds the enumeration cap."""


@dataclass(frozen=True)
class Derivatives:
    """Value and input derivatives of a predictor at one or many points."""

    value: np.ndarray
    dt: np.ndarray
    grad_x: np.ndarray
    laplacian: np.ndarray


@dataclass(frozen=True)
class PointAdjoints:
    """Per-point sensitivities of a scalar loss to the Derivatives fields.

    A field left as None means the loss does not depend on that quantity,
    which lets the gradient skip the corresponding chain-rule terms.
    """

    value: Optional[np.ndarray] = None
    dt: Optional[np.ndarray] = None
    grad_x: Optional[np.ndarray] = None
    laplacian: Optional[np.ndarray] = None


@dataclass(frozen=True)
class NetworkParams:
    """Weights of one shallow network, treated as an immutable value.

    input_weights: (k, n), time_weights: (k,), outer: (k,), radius: ball
    bound on the concatenated 2-norm of (input_weights, time_weights).
    """

    input_weights: np.ndarray
    time_weights: np.ndarray
    outer: np.ndarray
    radius: float
    activation: str = "tanh"

    def __post_init__(self):
        w1 = np.array(self.input_weights, dtype=float)
        w2 = np.array(self.time_weights, dtype=float).ravel()
        a = np.array(self.outer, dtype=float).ravel()
        if w1.ndim != 2:
            raise ValueError("input_weights must be a k x n matrix")
        if w1.shape[0] != w2.size or w1.shape[0] != a.size:
            raise ValueError(
                f"width mismatch: W1 {w1.shape}, w2 {w2.shape}, outer {a.shape}"
            )
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2)) and np.all(np.isfinite(a))):
            raise ValueError("weights must be finite")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        get_activation(self.activation)
        for arr in (w1, w2, a):
            arr.flags.writeable = False
        object.__setattr__(self, "input_weights", w1)
        object.__setattr__(self, "time_weights", w2)
        object.__setattr__(self, "outer", a)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def width(self) -> int:
        return self.input_weights.shape[0]

    @property
    def space_dim(self) -> int:
        return self.input_weights.shape[1]

    @property
    def param_count(self) -> int:
        return self.width * (self.space_dim + 1)

    def act(self) -> Activation:
        return get_activation(self.activation)

    def bounds(self):
        """Output/gradient/curvature bounds of the induced hidden map."""
        return bound_constants(self.activation, self.outer)

    def weight_norm(self) -> float:
        return math.hypot(
            float(np.linalg.norm(self.input_weights)),
            float(np.linalg.norm(self.time_weights)),
        )

    def flat(self) -> np.ndarray:
        """Trainable weights, W1 row-major then w2."""
        return np.concatenate([self.input_weights.ravel(), self.time_weights])

    def with_flat(self, flat) -> "NetworkParams":
        flat = np.asarray(flat, dtype=float)
        k, n = self.input_weights.shape
        if flat.shape != (k * (n + 1),):
            raise ValueError(f"expected {k * (n + 1)} weights, got {flat.shape}")
        return NetworkParams(
            input_weights=flat[: k * n].reshape(k, n),
            time_weights=flat[k * n :],
            outer=self.outer,
            radius=self.radius,
            activation=self.activation,
        )

    # duck-typed predictor protocol shared with the exact solution
    def derivatives_batch(self, x, t) -> Derivatives:
        return derivatives_batch(self, x, t)

    def values(self, x, t) -> np.ndarray:
        return values_batch(self, x, t)


def _check_points(p: NetworkParams, x, t):
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
        t = t.reshape(1)
    if x.ndim != 2 or x.shape[1] != p.space_dim:
        raise ValueError(f"points must have {p.space_dim} spatial coordinates")
    t = np.broadcast_to(t, (x.shape[0],))
    return x, t, single


def augment_points(x, t) -> np.ndarray:
    """Stack (x, t) rows into one (points, n+1) matrix so the preactivation
    and the gradient reduce to single matrix products."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    return np.concatenate([x, np.broadcast_to(t, (x.shape[0],))[:, None]], axis=1)


@dataclass(frozen=True)
class EvalParts:
    """Cached per-batch evaluation pieces shared by values and gradients."""

    aug: np.ndarray  # (points, n+1): spatial coordinates then time
    s: np.ndarray
    d1: Optional[np.ndarray]
    d2: Optional[np.ndarray]
    d3: Optional[np.ndarray]


def _stacked_weights(p: NetworkParams) -> np.ndarray:
    return np.concatenate([p.input_weights, p.time_weights[:, None]], axis=1)


def eval_parts(p: NetworkParams, x, t, order: int = 3, aug=None) -> EvalParts:
    if aug is None:
        x, t, _ = _check_points(p, x, t)
        aug = augment_points(x, t)
    elif aug.shape[1] != p.space_dim + 1:
        raise ValueError(f"augmented points must have {p.space_dim + 1} columns")
    z = aug @ _stacked_weights(p).T
    s, d1, d2, d3 = p.act().derivatives(z, order=order)
    return EvalParts(aug, s, d1, d2, d3)


def derivatives_from_parts(p: NetworkParams, parts: EvalParts) -> Derivatives:
    a = p.outer
    g = parts.d1 * a[None, :]
    value = parts.s @ a
    dt = g @ p.time_weights
    grad_x = g @ p.input_weights
    row_sq = np.einsum("ij,ij->i", p.input_weights, p.input_weights)
    laplacian = parts.d2 @ (a * row_sq)
    return Derivatives(value, dt, grad_x, laplacian)


def values_batch(p: NetworkParams, x, t) -> np.ndarray:
    x, t, single = _check_points(p, x, t)
    z = augment_points(x, t) @ _stacked_weights(p).T
    s = p.act().derivatives(z, order=0)[0]
    out = s @ p.outer
    return out[0] if single else out


def forward(p: NetworkParams, x, t) -> float:
    """Evaluate the network at a single point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("forward expects a single point; use values_batch")
    return float(values_batch(p, x, float(t)))


def derivatives_batch(p: NetworkParams, x, t) -> Derivatives:
    """Value, time derivative, spatial gradient and Laplacian at points.

    With z = W1 x + w2 t and g = a * sigma'(z):
        dt        = <w2, g>
        grad_x    = W1^T g
        laplacian = sum_p a_p sigma''(z_p) * ||W1 row p||^2
    """
    x, t, single = _check_points(p, x, t)
    d = derivatives_from_parts(p, eval_parts(p, x, t))
    if single:
        return Derivatives(d.value[0], d.dt[0], d.grad_x[0], d.laplacian[0])
    return d


def input_derivatives(p: NetworkParams, x, t) -> Derivatives:
    """Derivative bundle at a single point (scalars and an n-vector)."""
    d = derivatives_batch(p, np.asarray(x, dtype=float), float(t))
    return Derivatives(float(d.value), float(d.dt), d.grad_x, float(d.laplacian))


def _adj_vector(field, npts):
    if field is None:
        return None
    arr = np.broadcast_to(np.asarray(field, dtype=float), (npts,))
    return None if not arr.any() else arr


def gradient_from_parts(p: NetworkParams, parts: EvalParts, adj: PointAdjoints) -> np.ndarray:
    npts = parts.aug.shape[0]
    vbar = _adj_vector(adj.value, npts)
    dbar = _adj_vector(adj.dt, npts)
    lbar = _adj_vector(adj.laplacian, npts)
    gbar = None if adj.grad_x is None else np.asarray(adj.grad_x, dtype=float)
    if gbar is not None:
        if gbar.shape != (npts, p.space_dim):
            raise ValueError("grad_x adjoint must be (points, space_dim)")
        if not gbar.any():
            gbar = None

    d1, d2, d3 = parts.d1, parts.d2, parts.d3
    a = p.outer
    w1, w2 = p.input_weights, p.time_weights
    n = p.space_dim

    # chain through the preactivation z
    q = None
    if vbar is not None:
        q = vbar[:, None] * d1
    if dbar is not None or gbar is not None:
        mid = 0.0
        if dbar is not None:
            mid = dbar[:, None] * w2[None, :]
        if gbar is not None:
            mid = mid + gbar @ w1.T
        q = mid * d2 if q is None else q + mid * d2
    if lbar is not None:
        row_sq = np.einsum("ij,ij->i", w1, w1)
        term = (lbar[:, None] * d3) * row_sq[None, :]
        q = term if q is None else q + term
    if q is None:
        return np.zeros(p.param_count)
    q *= a[None, :]
    g_aug = q.T @ parts.aug  # (k, n+1): input-weight block then time column
    # explicit-weight terms (w2 in dt, W1 in grad_x and in the row norms)
    if dbar is not None:
        g_aug[:, n] += a * (d1.T @ dbar)
    if gbar is not None:
        g_aug[:, :n] += a[:, None] * (d1.T @ gbar)
    if lbar is not None:
        g_aug[:, :n] += 2.0 * (a * (d2.T @ lbar))[:, None] * w1
    return np.concatenate([g_aug[:, :n].ravel(), g_aug[:, n]])


def parameter_gradient(p: NetworkParams, x, t, adj: PointAdjoints) -> np.ndarray:
    """Exact gradient d(loss)/d(W1, w2) for a loss with the given adjoints.

    The loss is assumed to be sum over points of a function of
    (value, dt, grad_x, laplacian); ``adj`` holds its per-point partials.
    Returns the flattened gradient (W1 row-major, then w2).
    """
    x, t, _ = _check_points(p, x, t)
    return gradient_from_parts(p, eval_parts(p, x, t), adj)


def project_to_ball(p: NetworkParams) -> NetworkParams:
    """Radially project the trainable weights onto the ball of radius p.radius."""
    norm = p.weight_norm()
    if norm <= p.radius:
        return p
    scale = p.radius / norm
    return NetworkParams(
        input_weights=p.input_weights * scale,
        time_weights=p.time_weights * scale,
        outer=p.outer,
        radius=p.radius,
        activation=p.activation,
    )


def covering_grid_spacing(param_count: int, eta: float) -> float:
    """Axis spacing that makes one grid cell fit in a ball of radius eta/2."""
    return eta / math.sqrt(param_count)


def enumerate_cover(k, n, radius, eta, activation="tanh", outer=None, cap=10_000_000):
    """Enumerate a finite eta/2-net of the weight ball as NetworkParams.

    Grid cells have side eta/sqrt(d) with centers at odd multiples of half the
    spacing; cells whose closed cell touches the ball are kept and their
    centers are radially projected into the ball (projection is nonexpansive,
    so every ball point stays within eta/2 of an emitted point).
    """
    k, n = int(k), int(n)
    radius, eta = float(radius), float(eta)
    if k < 1 or n < 0 or radius <= 0 or eta <= 0:
        raise ValueError("need k >= 1, n >= 0, radius > 0, eta > 0")
    d = k * (n + 1)
    spacing = covering_grid_spacing(d, eta)
    half = 0.5 * spacing
    per_side = max(1, math.ceil(radius / spacing))
    log_cells = d * math.log(2 * per_side)
    log_bound = d * math.log(max(2.0 * radius * math.sqrt(d) / eta, 1e-300))
    if max(log_cells, log_bound) > math.log(cap):
        raise CoverTooLarge(
            f"cover needs about exp({log_cells:.1f}) grid cells "
            f"(count bound exp({log_bound:.1f})), over the cap {cap}"
        )

    axis = (np.arange(-per_side, per_side) + 0.5) * spacing
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=1)
    # keep cells whose closed cell intersects the ball
    nearest = np.maximum(np.abs(centers) - half, 0.0)
    keep = np.einsum("ij,ij->i", nearest, nearest) <= radius * radius + 1e-12
    centers = centers[keep]
    norms = np.linalg.norm(centers, axis=1)
    outside = norms > radius
    centers[outside] *= (radius / norms[outside])[:, None]

    a = np.ones(k) if outer is None else np.asarray(outer, dtype=float)
    out = []
    for row in centers:
        out.append(
            NetworkParams(
                input_weights=row[: k * n].reshape(k, n),
                time_weights=row[k * n :],
                outer=a,
                radius=radius,
                activation=activation,
            )
        )
    return out


def params_to_json(p: NetworkParams) -> str:
    """Serialize weights; floats keep full precision via repr round-trip."""
    return json.dumps(
        {
            "k": p.width,
            "n": p.space_dim,
            "W": p.radius,
            "activation": p.activation,
            "a": p.outer.tolist(),
            "W1": p.input_weights.tolist(),
            "w2": p.time_weights.tolist(),
        }
    )


def params_from_json(text: str) -> NetworkParams:
    obj = json.loads(text)
    p = NetworkParams(
        input_weights=np.asarray(obj["W1"], dtype=float),
        time_weights=np.asarray(obj["w2"], dtype=float),
        outer=np.asarray(obj["a"], dtype=float),
        radius=float(obj["W"]),
        activation=obj.get("activation", "tanh"),
    )
    if p.width != int(obj["k"]) or p.space_dim != int(obj["n"]):
        raise ValueError("snapshot dimensions disagree with weight shapes")
    return p


def save_params(p: NetworkParams, path):
    with open(path, "w") as fh:
        fh.write(params_to_json(p))
        fh.write("\n")


def load_params(path) -> NetworkParams:
    with open(path) as fh:
        return params_from_json(fh.read())
