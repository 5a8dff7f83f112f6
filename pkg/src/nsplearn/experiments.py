"""Experiment protocols: configuration, single trials, tables and sweeps.

A trial with index ``t`` uses the seed ``config.seed + t`` for everything it
draws, so trials can run in any order and still give identical results.
"""
import dataclasses
from dataclasses import dataclass

import numpy as np

from . import arm as armlib
from .constraints import fit_constraint_rows, fit_selection_matrix, fit_state_dependent_rows
from .data import add_policy_noise, generate_arm_trajectories, generate_toy_dataset
from .errors import ConfigError
from .evaluation import evaluate, reproduce_trajectory
from .lm import LmOptions
from .nullspace import BANDWIDTH_SCALES, CENTRE_RESTARTS, fit_nullspace_component, predict_nullspace_component
from .policies import PolicySpec, joint_attractor_policy, quadratic_potential_policy, task_linear_attractor

TOY_POLICIES = {"toy_linear": "linear", "toy_limit_cycle": "limit_cycle", "toy_sinusoidal": "sinusoidal"}
ARM_SELECTIONS = {"arm_xz": "xz", "arm_xtheta": "xtheta", "arm_ztheta": "ztheta"}
SCENARIOS = tuple(TOY_POLICIES) + tuple(ARM_SELECTIONS)
METHODS = ("fixed_rows", "selection", "state_dependent")

DATA_SIZES = (10, 25, 50, 100, 150, 200, 250)
NOISE_LEVELS = (0.0, 0.01, 0.02, 0.05, 0.1, 0.2)
GENERALISATION_TARGET = (-1.0, 2.0)

# the arm fits are ~20x larger than the toy ones; their objective flattens
# after a few dozen iterations, so they use a shorter budget and grid
ARM_LM_MAX_ITER = 100
ARM_BANDWIDTH_SCALES = (2.0, 4.0)


SCENARIO_FIELDS = ("phi", "lm_max_iter", "centre_restarts", "bandwidth_scales")


def is_arm(scenario):
    return scenario in ARM_SELECTIONS


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a trial depends on.

    Fields left as ``None`` take the per-scenario default: 16 basis
    functions and full LM budget for the toy problem, 100 basis functions
    and a 100-iteration budget for the arm.
    """

    scenario: str = "toy_limit_cycle"
    method: str = None
    n_points: int = 150
    n_test: int = 150
    n_traj: int = 50
    n_steps: int = 50
    dt: float = 0.1
    phi: int = None
    noise_fraction: float = 0.0
    n_trials: int = 50
    seed: int = 0
    lm_max_iter: int = None
    lm_rtol: float = 1e-10
    lm_damping: float = 1e-3
    lm_multistart: int = 8
    centre_restarts: int = None
    bandwidth_scales: tuple = None
    pinned: tuple = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario '{self.scenario}' (choose from {', '.join(SCENARIOS)})")
        method = self.method or ("selection" if is_arm(self.scenario) else "fixed_rows")
        if method not in METHODS:
            raise ConfigError(f"unknown method '{method}' (choose from {', '.join(METHODS)})")
        if method == "selection" and not is_arm(self.scenario):
            raise ConfigError("the selection method needs an arm scenario")
        object.__setattr__(self, "method", method)
        if self.n_trials < 1:
            raise ConfigError("n_trials must be at least 1")
        for name in ("n_points", "n_test", "n_traj", "n_steps"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not 0.0 <= self.noise_fraction <= 1.0:
            raise ConfigError("noise_fraction must be in [0, 1]")
        if self.pinned is None:
            given = tuple(n for n in SCENARIO_FIELDS if getattr(self, n) is not None)
            object.__setattr__(self, "pinned", given)
        arm = is_arm(self.scenario)
        defaults = {
            "phi": 100 if arm else 16,
            "lm_max_iter": ARM_LM_MAX_ITER if arm else 500,
            "centre_restarts": 1 if arm else CENTRE_RESTARTS,
            "bandwidth_scales": ARM_BANDWIDTH_SCALES if arm else BANDWIDTH_SCALES,
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)
        object.__setattr__(self, "bandwidth_scales", tuple(float(s) for s in self.bandwidth_scales))
        try:
            self.lm_options(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def lm_options(self, seed):
        return LmOptions(damping=self.lm_damping, max_iter=self.lm_max_iter, rtol=self.lm_rtol,
                         multistart=self.lm_multistart, seed=seed)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def for_scenario(self, scenario, method=None):
        """Same settings on another scenario; fields not set explicitly take its defaults."""
        resets = {n: None for n in SCENARIO_FIELDS if n not in self.pinned}
        return self.replace(scenario=scenario, method=method, **resets)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig) if f.name != "pinned"}


def _coerce(name, text):
    kind = _FIELD_TYPES[name]
    try:
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is tuple:
            return tuple(float(v) for v in text.split(",") if v.strip())
        return text
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None


def parse_config_text(text):
    """Parse ``key = value`` lines (``#`` starts a comment) into field values."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"config line {lineno}: expected key = value")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"config line {lineno}: unknown key '{key}'")
        values[key] = _coerce(key, value)
    return values


def make_config(config_text=None, **overrides):
    """Config from optional file contents plus overrides (``None`` overrides are ignored)."""
    values = parse_config_text(config_text) if config_text else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


# --- data -------------------------------------------------------------------


def trial_seed(config, trial):
    return int(config.seed) + int(trial)


def generate_trial_data(config, trial=0):
    """Training and held-out test datasets for one trial.

    Policy noise, if any, is applied to the training data only.
    """
    seed = trial_seed(config, trial)
    if is_arm(config.scenario):
        lam = armlib.SELECTIONS[ARM_SELECTIONS[config.scenario]]
        kw = dict(dt=config.dt, seed=seed, name=config.scenario)
        train = generate_arm_trajectories(lam, config.n_traj, config.n_steps, stream=1, **kw)
        test = generate_arm_trajectories(lam, config.n_traj, config.n_steps, stream=2, **kw)
    else:
        policy = PolicySpec(TOY_POLICIES[config.scenario])
        train = generate_toy_dataset(policy, config.n_points, seed, stream=1)
        test = generate_toy_dataset(policy, config.n_test, seed, stream=2)
        train.meta["scenario"] = test.meta["scenario"] = config.scenario
    train = add_policy_noise(train, config.noise_fraction, seed)
    for d in (train, test):
        d.meta["trial"] = int(trial)
    return train, test


# --- learning ---------------------------------------------------------------


def effective_phi(config, dataset):
    """Basis size, capped by the number of distinct training states."""
    return min(config.phi, len(np.unique(dataset.x, axis=0)))


def fit_model(config, dataset, seed):
    """Null-space component model under the config's fitting settings."""
    return fit_nullspace_component(dataset, effective_phi(config, dataset), seed, config.lm_options(seed),
                                   restarts=config.centre_restarts, scales=config.bandwidth_scales)


def fit_estimate(config, dataset, model, seed, method=None):
    """Constraint estimate from the decomposition predicted by ``model``."""
    method = method or config.method
    opts = config.lm_options(seed)
    u_ns = predict_nullspace_component(model, dataset.x)
    u_ts = dataset.u - u_ns
    if method == "fixed_rows":
        return fit_constraint_rows(u_ns, u_ts, opts)
    if method == "selection":
        arm = armlib.DEFAULT_ARM
        return fit_selection_matrix(arm.jacobian(dataset.x), u_ns, u_ts, opts, jacobian_provider=arm.jacobian)
    return fit_state_dependent_rows(dataset.x, u_ns, u_ts, effective_phi(config, dataset), opts, seed=seed)


def learn(config, dataset, seed=None):
    """Null-space component model and constraint estimate for one dataset."""
    seed = config.seed if seed is None else seed
    model = fit_model(config, dataset, seed)
    return model, fit_estimate(config, dataset, model, seed)


def run_trial(config, trial, methods=None):
    """Generate, learn and evaluate one trial.

    ``methods`` lists constraint methods that share the same data and
    null-space model; it defaults to the config's method. Returns one result
    dict per method (a single dict when ``methods`` is omitted).
    """
    seed = trial_seed(config, trial)
    train, test = generate_trial_data(config, trial)
    model = fit_model(config, train, seed)
    rows = []
    for method in methods or [config.method]:
        estimate = fit_estimate(config, train, model, seed, method)
        report = evaluate(estimate, model, test)
        rows.append({
            "scenario": config.scenario,
            "method": method,
            "trial": int(trial),
            "nnce": report.nnce,
            "nppe": report.nppe,
            "npoe": report.npoe,
            "n_rows": estimate.n_rows,
        })
    return rows if methods else rows[0]


def run_trials(config, progress=None):
    rows = []
    for t in range(config.n_trials):
        rows.append(run_trial(config, t))
        if progress:
            progress(rows[-1])
    return rows


# --- tables and sweeps ------------------------------------------------------


def table1(config, progress=None):
    """Every toy policy under the fixed-row method."""
    out = {}
    for scenario in TOY_POLICIES:
        cfg = config.for_scenario(scenario, "fixed_rows")
        out[scenario] = run_trials(cfg, progress)
    return out


def table2(config, progress=None):
    """Every arm constraint under both the selection and the state-dependent method.

    Both methods of a trial see the same data and null-space model.
    """
    methods = ("selection", "state_dependent")
    out = {}
    for scenario in ARM_SELECTIONS:
        cfg = config.for_scenario(scenario, "selection")
        for m in methods:
            out[(scenario, m)] = []
        for t in range(cfg.n_trials):
            for row in run_trial(cfg, t, methods):
                out[(scenario, row["method"])].append(row)
                if progress:
                    progress(row)
    return out


def sweep(config, parameter, values, progress=None):
    """Trials of ``config`` for each value of ``parameter`` (``n_points`` or ``noise_fraction``)."""
    if parameter not in ("n_points", "noise_fraction"):
        raise ConfigError(f"cannot sweep over '{parameter}'")
    return {v: run_trials(config.replace(**{parameter: v}), progress) for v in values}


# --- generalisation ---------------------------------------------------------


def _arm_task_velocity(lam, target, arm=armlib.DEFAULT_ARM, beta=0.1):
    lam = np.atleast_2d(lam)
    full = lam.T @ np.asarray(target, dtype=float) if len(target) == len(lam) else np.asarray(target, dtype=float)

    def velocity(q):
        A = armlib.task_constraint(lam, q, arm)
        b = lam @ task_linear_attractor(armlib.forward_kinematics(q, arm), full, beta)
        return np.linalg.pinv(A) @ b

    return velocity


def generalisation_trial(seed, scenario="arm_xz", n_steps=50, dt=0.1, config=None):
    """Learn the selection on training data, then roll out unseen policies.

    Two comparisons are made from the start of the first test trajectory:
    the training task with the unseen null-space policy ``-0.1 q``, and the
    training null-space policy with the unseen task target ``(-1, 2)`` on
    the selected coordinates.

    Returns
    -------
    dict
        ``TrajectoryComparison`` objects under ``"new_null_policy"`` and
        ``"new_task"``.
    """
    cfg = (config or ExperimentConfig(scenario=scenario)).for_scenario(scenario, "selection").replace(seed=seed)
    train, test = generate_trial_data(cfg, 0)
    _, estimate = learn(cfg, train, seed)
    lam = armlib.SELECTIONS[ARM_SELECTIONS[scenario]]
    arm = armlib.DEFAULT_ARM

    def true_projection(q):
        A = armlib.task_constraint(lam, q, arm)
        return np.eye(3) - np.linalg.pinv(A) @ A

    q0 = test.x[0]
    target = np.asarray(test.meta["targets"][0])
    return {
        "new_null_policy": reproduce_trajectory(estimate, true_projection, _arm_task_velocity(lam, target),
                                                quadratic_potential_policy, q0, n_steps, dt),
        "new_task": reproduce_trajectory(estimate, true_projection,
                                         _arm_task_velocity(lam, GENERALISATION_TARGET),
                                         joint_attractor_policy, q0, n_steps, dt),
    }
