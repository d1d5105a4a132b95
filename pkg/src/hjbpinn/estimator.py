"""Estimator-style wrapper so the trainer composes with the usual tooling.

``HjbPinnRegressor`` is fit on a sampled ``Dataset`` (collocation +
initial-condition + noisy supervision points) and then predicts the learned
surrogate at arbitrary (x, t) rows, so it drops into pipelines, grid
searches over width, or anything else expecting fit/predict/get_params.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .data import Dataset
from .loss import LossWeights
from .network import values_batch
from .training import TrainConfig, init_network, train

__all__ = ["HjbPinnRegressor"]


class HjbPinnRegressor(BaseEstimator, RegressorMixin):
    """Shallow PDE surrogate trained on the three-term empirical risk.

    Parameters mirror the training protocol: ``width`` hidden units with a
    frozen outer vector, full-batch Adam for ``steps`` updates.  After
    ``fit`` the trained weights live in ``net_``, the recorded loss curve in
    ``trace_``, and the final loss decomposition in ``breakdown_``.
    """

    def __init__(self, width=32, activation="tanh", lambda_init=0.3,
                 lambda_sup=0.5, steps=2000, lr=1e-3, beta1=0.9, beta2=0.999,
                 eps=1e-8, record_every=100, project_ball=False,
                 weight_radius=None, unsupervised=False, random_state=0):
        self.width = width
        self.activation = activation
        self.lambda_init = lambda_init
        self.lambda_sup = lambda_sup
        self.steps = steps
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.record_every = record_every
        self.project_ball = project_ball
        self.weight_radius = weight_radius
        self.unsupervised = unsupervised
        self.random_state = random_state

    def fit(self, X, y=None):
        """Train on a Dataset; ``y`` is ignored (labels live in the dataset)."""
        if not isinstance(X, Dataset):
            raise TypeError(
                "fit expects a Dataset (see hjbpinn.data.sample_dataset); "
                f"got {type(X).__name__}"
            )
        weights = LossWeights(
            lambda_init=self.lambda_init,
            lambda_sup=0.0 if self.unsupervised else self.lambda_sup,
        )
        cfg = TrainConfig(
            steps=self.steps, lr=self.lr, beta1=self.beta1, beta2=self.beta2,
            eps=self.eps, record_every=self.record_every,
            seed=self.random_state, project_ball=self.project_ball,
        )
        p0 = init_network(self.width, X.space_dim, seed=self.random_state,
                          activation=self.activation, radius=self.weight_radius)
        self.trace_ = train(p0, X, weights, cfg, unsupervised=self.unsupervised)
        self.net_ = self.trace_.final_params
        self.breakdown_ = self.trace_.final
        self.n_features_in_ = X.space_dim + 1
        return self

    def predict(self, X):
        """Evaluate the surrogate at rows (x_1 .. x_n, t)."""
        check_is_fitted(self, "net_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} columns "
                f"({self.n_features_in_ - 1} spatial + time), got {X.shape[1]}"
            )
        return np.asarray(values_batch(self.net_, X[:, :-1], X[:, -1]))
