"""Cart-pole plant models: linearization, ZOH discretization, noisy stepping.

State convention throughout: (x, v, theta, omega) with theta = 0 at the
upright equilibrium. The linearization is the standard frictionless cart-pole
about upright, so the open-loop continuous spectrum is
{0, 0, +sqrt((M+m) g / (M l)), -sqrt((M+m) g / (M l))}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError, SolverError

STATE_DIM = 4
STATE_NAMES = ("x", "v", "theta", "omega")


@dataclass(frozen=True)
class PendulumParams:
    """Physical parameters of one cart-pole.

    input_gain converts a command unit into Newtons of cart force;
    process_noise_std is the per-component std of the additive discrete-time
    Gaussian noise.
    """

    cart_mass: float = 0.5
    pole_mass: float = 0.2
    pole_com_length: float = 0.3
    gravity: float = 9.81
    input_gain: float = 1.0
    process_noise_std: tuple[float, float, float, float] = (1e-4, 1e-4, 1e-4, 1e-4)

    def validate(self) -> None:
        for name in ("cart_mass", "pole_mass", "pole_com_length", "gravity"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"PendulumParams.{name} must be > 0, got {getattr(self, name)}")
        if len(self.process_noise_std) != STATE_DIM:
            raise ConfigError("PendulumParams.process_noise_std must have 4 entries")
        if any(s < 0 for s in self.process_noise_std):
            raise ConfigError("PendulumParams.process_noise_std entries must be >= 0")


@dataclass(frozen=True)
class ContinuousLtiModel:
    """Continuous-time LTI plant xdot = A_c x + B_c u.

    General (n, n) / (n, m) shapes are accepted; the cart-pole linearization
    always produces the fixed 4x4 / 4x1 pair.
    """

    A_c: np.ndarray
    B_c: np.ndarray

    def __post_init__(self):
        n = self.A_c.shape[0]
        if self.A_c.shape != (n, n) or self.B_c.shape[0] != n or self.B_c.ndim != 2:
            raise ConfigError(
                f"ContinuousLtiModel expects (n,n)/(n,m) matrices, got {self.A_c.shape}, {self.B_c.shape}"
            )
        if not (np.isfinite(self.A_c).all() and np.isfinite(self.B_c).all()):
            raise ConfigError("ContinuousLtiModel entries must be finite")


@dataclass(frozen=True)
class DiscreteLtiModel:
    """Sampled-data plant x+ = A x + B u + w,  w ~ N(0, W)."""

    A: np.ndarray
    B: np.ndarray
    W: np.ndarray
    T_s: float

    def __post_init__(self):
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ConfigError("DiscreteLtiModel.A must be square")
        if self.B.shape[0] != n:
            raise ConfigError("DiscreteLtiModel.B row count must match A")
        if self.T_s <= 0:
            raise ConfigError(f"DiscreteLtiModel.T_s must be > 0, got {self.T_s}")
        if self.W.shape != (n, n) or not np.allclose(self.W, self.W.T):
            raise ConfigError("DiscreteLtiModel.W must be symmetric n x n")
        if np.linalg.eigvalsh(self.W).min() < -1e-12:
            raise ConfigError("DiscreteLtiModel.W must be positive semidefinite")
        if not (np.isfinite(self.A).all() and np.isfinite(self.B).all()):
            raise ConfigError("DiscreteLtiModel matrices must be finite")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass
class PlantState:
    """Cart-pole state; theta measured from upright."""

    x: float = 0.0
    v: float = 0.0
    theta: float = 0.0
    omega: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.v, self.theta, self.omega], dtype=float)

    @staticmethod
    def from_array(arr: np.ndarray) -> "PlantState":
        return PlantState(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))


def linearize_cartpole(params: PendulumParams) -> ContinuousLtiModel:
    """Linearize the frictionless cart-pole about the upright equilibrium.

    Rows of A_c, in state order (x, v, theta, omega):
        xdot     = v
        vdot     = -(m g / M) theta + u / M
        thetadot = omega
        omegadot = ((M + m) g / (M l)) theta - u / (M l)
    """
    params.validate()
    M, m = params.cart_mass, params.pole_mass
    l, g = params.pole_com_length, params.gravity
    A_c = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, -m * g / M, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, (M + m) * g / (M * l), 0.0],
        ]
    )
    B_c = params.input_gain * np.array([[0.0], [1.0 / M], [0.0], [-1.0 / (M * l)]])
    return ContinuousLtiModel(A_c, B_c)


def discretize_zoh(
    cont: ContinuousLtiModel,
    T_s: float,
    noise_std: tuple[float, ...] | None = None,
) -> DiscreteLtiModel:
    """Exact zero-order-hold discretization via the augmented matrix exponential.

    exp([[A_c, B_c], [0, 0]] * T_s) = [[A, B], [0, I]] with
    A = exp(A_c T_s) and B = (integral_0^T_s exp(A_c s) ds) B_c.

    noise_std gives the per-component std of the additive discrete noise
    (diagonal covariance); defaults to zero.
    """
    if T_s <= 0:
        raise ConfigError(f"T_s must be > 0, got {T_s}")
    n = cont.A_c.shape[0]
    m = cont.B_c.shape[1]
    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = cont.A_c
    aug[:n, n:] = cont.B_c
    phi = expm(aug * T_s)
    A = phi[:n, :n]
    B = phi[:n, n:]
    if not (np.isfinite(A).all() and np.isfinite(B).all()):
        raise SolverError("matrix exponential produced non-finite entries")
    if noise_std is None:
        W = np.zeros((n, n))
    else:
        W = np.diag(np.asarray(noise_std, dtype=float) ** 2)
    return DiscreteLtiModel(A, B, W, T_s)


def step(
    model: DiscreteLtiModel,
    state: np.ndarray | PlantState,
    u: np.ndarray | float,
    rng: np.random.Generator,
) -> np.ndarray | PlantState:
    """One noisy discrete step x+ = A x + B u + w, w ~ N(0, W).

    Always draws from rng (even with W = 0) so the stream position does not
    depend on the noise level; deterministic given the rng state. Accepts a
    raw state vector or a PlantState and returns the same kind.
    """
    as_state = isinstance(state, PlantState)
    x = state.as_array() if as_state else np.asarray(state, dtype=float)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    stds = np.sqrt(np.diag(model.W))
    w = rng.standard_normal(model.n) * stds
    x_next = model.A @ x + model.B @ u_arr + w
    return PlantState.from_array(x_next) if as_state else x_next


def is_fallen(state: np.ndarray, theta_max: float) -> bool:
    """True when the pole left the safety envelope |theta| > theta_max."""
    return abs(float(state[2])) > theta_max
