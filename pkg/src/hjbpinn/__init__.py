"""Bounded shallow PDE surrogates under noisy supervision.

Training and width sweeps for the benchmark nonlinear parabolic equation,
exact capacity-bound reports, and Monte Carlo verification of the
concentration and perturbation inequalities behind them.
"""

__version__ = "0.1.0"

from .activations import Activation, ActivationBounds, bound_constants, get_activation
from .bounds import (BoundInputs, BoundReport, RiskPerturbationBound,
                     covering_count_bound, min_width_for,
                     perturbation_constants, perturbed_risk_bound,
                     s_threshold, theorem1_report, theorem2_report)
from .data import Dataset, noisy_initial_dataset, sample_dataset
from .estimator import HjbPinnRegressor
from .hjb import (ExactSolution, HjbProblem, exact_derivatives, exact_solution,
                  make_problem, pde_residual, quadratic_init,
                  symmetric_box_problem, unit_cube_problem)
from .loss import (LossWeights, RiskBreakdown, empirical_risk,
                   empirical_risk_unsupervised, risk_and_gradient, risk_gradient)
from .network import (Derivatives, NetworkParams, PointAdjoints, enumerate_cover,
                      forward, input_derivatives, load_params, parameter_gradient,
                      params_from_json, params_to_json, project_to_ball,
                      save_params, values_batch)
from .training import (Adam, TrainConfig, TrainingDiverged, TrainTrace,
                       init_network, train)
from .experiment import (SweepConfig, SweepRecord, analyze_sweep,
                         emit_fig1_data, run_sweep)
