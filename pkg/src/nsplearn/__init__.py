"""Learning null-space projections of constrained systems from state/action data.

Observed actions are assumed to decompose as ``u = pinv(A) b + N pi`` with
``N = I - pinv(A) A``. The package estimates the null-space component of
each action, then the constraint ``A`` (and with it ``N``) without access to
``A``, ``b`` or ``pi``.
"""
from .arm import DEFAULT_ARM, SELECTIONS, ArmModel
from .constraints import (
    FixedRows,
    SelectionEstimate,
    StateDependentRows,
    fit_constraint_rows,
    fit_selection_matrix,
    fit_state_dependent_rows,
    objective_combined,
    objective_image,
    objective_orthogonal,
    predict_projection,
)
from .data import Dataset, add_policy_noise, generate_arm_trajectories, generate_toy_dataset
from .evaluation import evaluate, nnce, npoe, nppe, observation_variance, reproduce_trajectory
from .lm import LmOptions, levenberg_marquardt
from .nullspace import (
    RbfFeatureMap,
    RbfVectorModel,
    fit_nullspace_component,
    predict_nullspace_component,
    residual_task_component,
)
from .policies import PolicySpec

__version__ = "0.1.0"
