"""Ground-truth null-space and task-space policies used to synthesise data.

Every policy accepts a single state or a stack of states (leading axis) and
returns actions of matching shape.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatchError, SingularStateError

# rows (2, 4, 0) and (1, 3, -1) act on (x1, x2, 1)
LINEAR_GAIN = np.array([[2.0, 4.0, 0.0], [1.0, 3.0, -1.0]])
LIMIT_CYCLE_RHO = 0.75
LIMIT_CYCLE_RATE = 1.0
POTENTIAL_SCALE = 0.05
TASK_GAIN = 0.1


def _states(x, dim=None):
    x = np.asarray(x, dtype=float)
    if dim is not None and x.shape[-1] != dim:
        raise DimensionMismatchError(f"expected state dimension {dim}, got {x.shape[-1]}")
    return x


def linear_policy(x, L=LINEAR_GAIN):
    """``-L (x, 1)``."""
    x = _states(x, 2)
    L = np.asarray(L, dtype=float)
    return -(x @ L[:, :2].T + L[:, 2])


def limit_cycle_policy(x, rho=LIMIT_CYCLE_RHO, rate=LIMIT_CYCLE_RATE):
    """Radial dynamics ``r (rho - r^2)`` with constant angular rate, in Cartesian form.

    The radial equation is used as written, so the attracting cycle sits at
    ``r = sqrt(rho)``.
    """
    x = _states(x, 2)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise SingularStateError("limit-cycle policy is undefined at the origin")
    # r_dot * x/r + r * phi_dot * (-sin, cos) == (rho - r^2) x + rate * (-x2, x1)
    radial = (rho - r2)[..., None] * x
    tangential = rate * np.stack([-x[..., 1], x[..., 0]], axis=-1)
    return radial + tangential


def sinusoidal_policy(x):
    x = _states(x, 2)
    z1 = np.pi * x[..., 0]
    z2 = np.pi * (x[..., 1] + 0.5)
    return np.stack([np.cos(z1) * np.cos(z2), -np.sin(z1) * np.sin(z2)], axis=-1)


def joint_attractor_policy(x, x_star=None, L=None):
    """``-L (x - x_star)``; defaults are ``x_star = 0`` and ``L = I``."""
    x = _states(x)
    d = x if x_star is None else x - np.asarray(x_star, dtype=float)
    if L is None:
        return -d
    return -(d @ np.asarray(L, dtype=float).T)


def quadratic_potential_policy(x, scale=POTENTIAL_SCALE):
    """Descent direction of the potential ``scale * |x|^2``, i.e. ``-2 scale x``."""
    return -2.0 * scale * _states(x)


def task_linear_attractor(rho, rho_star, beta=TASK_GAIN):
    """``beta (rho_star - rho)``."""
    return beta * (np.asarray(rho_star, dtype=float) - np.asarray(rho, dtype=float))


_KINDS = {
    "linear": ("L",),
    "limit_cycle": ("rho", "rate"),
    "sinusoidal": (),
    "joint_attractor": ("x_star", "L"),
    "quadratic_potential": ("scale",),
}


@dataclass(frozen=True, eq=False)
class PolicySpec:
    """Serialisable description of a null-space policy."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown policy kind {self.kind!r}")
        allowed = _KINDS[self.kind]
        extra = set(self.params) - set(allowed)
        if extra:
            raise ConfigError(f"policy {self.kind!r} does not take {sorted(extra)}")
        if self.kind == "linear" and "L" in self.params:
            if np.shape(self.params["L"]) != (2, 3):
                raise ConfigError("linear policy gain must be 2x3")
        if self.kind == "joint_attractor":
            shapes = [np.shape(v) for v in self.params.values() if v is not None]
            dims = {s[0] for s in shapes}
            if len(dims) > 1 or any(len(s) == 2 and s[0] != s[1] for s in shapes):
                raise ConfigError("joint attractor parameters have inconsistent shapes")

    def __eq__(self, other):
        return isinstance(other, PolicySpec) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.kind)

    def __call__(self, x):
        p = self.params
        if self.kind == "linear":
            return linear_policy(x, np.asarray(p.get("L", LINEAR_GAIN), dtype=float))
        if self.kind == "limit_cycle":
            return limit_cycle_policy(x, p.get("rho", LIMIT_CYCLE_RHO), p.get("rate", LIMIT_CYCLE_RATE))
        if self.kind == "sinusoidal":
            return sinusoidal_policy(x)
        if self.kind == "joint_attractor":
            return joint_attractor_policy(x, p.get("x_star"), p.get("L"))
        return quadratic_potential_policy(x, p.get("scale", POTENTIAL_SCALE))

    def to_dict(self):
        params = {k: np.asarray(v).tolist() for k, v in self.params.items() if v is not None}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError(f"malformed policy description {d!r}")
        params = dict(d.get("params") or {})
        for key in ("L", "x_star"):
            if key in params:
                params[key] = np.asarray(params[key], dtype=float)
        return cls(d["kind"], params)
