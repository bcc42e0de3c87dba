"""Controller synthesis and the per-mode control laws.

The stabilizing design is a discrete-time LQR: solve the DARE by fixed-point
(value) iteration, take K = (R + B'PB)^-1 B'PA. On top of that sit the
delay/loss-masking state predictor and the per-pendulum mode laws
(stabilize / synchronize-to-leader / idle / safe).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SolverError

LAW_STABILIZE = "stabilize"
LAW_SYNC_LEADER = "synchronize-leader"
LAW_SYNC_FOLLOWER = "synchronize-follower"
LAW_IDLE = "idle"
LAW_SAFE = "safe"

LAWS = (LAW_STABILIZE, LAW_SYNC_LEADER, LAW_SYNC_FOLLOWER, LAW_IDLE, LAW_SAFE)

# Laws under which a pendulum is actuated (sensor flood + command).
ACTUATED_LAWS = (LAW_STABILIZE, LAW_SYNC_LEADER, LAW_SYNC_FOLLOWER)


@dataclass(frozen=True)
class LqrWeights:
    """Quadratic cost weights; Q symmetric PSD, R symmetric PD."""

    Q: np.ndarray
    R: np.ndarray

    def validate(self) -> None:
        if not np.allclose(self.Q, self.Q.T):
            raise ConfigError("LqrWeights.Q must be symmetric")
        if not np.allclose(self.R, self.R.T):
            raise ConfigError("LqrWeights.R must be symmetric")
        if np.linalg.eigvalsh(self.Q).min() < -1e-12:
            raise ConfigError("LqrWeights.Q must be positive semidefinite")
        if np.linalg.eigvalsh(self.R).min() <= 0:
            raise ConfigError("LqrWeights.R must be positive definite")


@dataclass(frozen=True)
class ControllerGain:
    """State-feedback gain u = -K x for one mode's loops."""

    K: np.ndarray
    mode_id: int = -1


@dataclass
class PredictorState:
    """Controller-side estimate of one plant, plus the released-command window.

    pending_inputs holds the d commands already released but not yet applied
    (d = actuation delay in rounds); applied_input is the command acting during
    the step that produced the current round's true state, used to propagate
    the estimate forward across lost sensor readings.
    """

    x_hat: np.ndarray
    last_update_round: int = 0
    pending_inputs: list = field(default_factory=list)
    applied_input: float = 0.0


def solve_dare(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 10**6,
) -> np.ndarray:
    """Solve P = Q + A'PA - A'PB (R + B'PB)^-1 B'PA by fixed-point iteration.

    Starts from P0 = Q; converges for stabilizable (A, B) with valid weights.
    Raises SolverError when the iteration cap is hit or the iterates diverge,
    which signals an unstabilizable configuration.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    P = Q.copy()
    for _ in range(max_iter):
        BtP = B.T @ P
        gain_term = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ gain_term
        P_next = 0.5 * (P_next + P_next.T)
        if not np.isfinite(P_next).all() or np.linalg.norm(P_next) > 1e14:
            raise SolverError("DARE iteration diverged; system not stabilizable?")
        delta = np.abs(P_next - P).max()
        P = P_next
        if delta <= tol * max(1.0, np.abs(P).max()):
            return P
    raise SolverError(f"DARE iteration cap ({max_iter}) hit without convergence")


def dare_residual(A, B, Q, R, P) -> float:
    """Relative Frobenius residual of the DARE at P."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    Q = np.atleast_2d(Q)
    R = np.atleast_2d(R)
    BtP = B.T @ P
    rhs = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(R + BtP @ B, BtP @ A)
    return float(np.linalg.norm(P - rhs) / max(np.linalg.norm(P), 1e-300))


def lqr_gain(A, B, R, P, mode_id: int = -1) -> ControllerGain:
    """K = (R + B'PB)^-1 B'PA for P from solve_dare."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    M = R + B.T @ P @ B
    if abs(np.linalg.det(M)) < 1e-300:
        raise SolverError("R + B'PB is singular")  # cannot occur for R > 0
    K = np.linalg.solve(M, B.T @ P @ A)
    return ControllerGain(K=K, mode_id=mode_id)


def predict_state(model, p: PredictorState, d: int) -> np.ndarray:
    """Propagate the estimate d rounds ahead with the released commands.

    Returns A^d x_hat + sum_i A^(d-1-i) B u_i over pending_inputs in release
    order, zero-padded when fewer than d commands are pending. Pure function.
    """
    if d < 0:
        raise ConfigError(f"prediction horizon must be >= 0, got {d}")
    x = np.asarray(p.x_hat, dtype=float).copy()
    inputs = list(p.pending_inputs) + [0.0] * max(0, d - len(p.pending_inputs))
    for i in range(d):
        x = model.A @ x + model.B @ np.atleast_1d(np.asarray(inputs[i], dtype=float))
    return x


def control_law(
    laws: dict[int, str],
    gains: dict[int, ControllerGain] | ControllerGain,
    estimates: dict[int, np.ndarray | None],
    leader_id: int | None = None,
    cart_reference: float = 0.0,
) -> dict[int, float]:
    """Per-pendulum commands for one round.

    laws maps pendulum id -> law name; gains is one ControllerGain shared by
    all pendulums or a per-pendulum map. Stabilization drives the state to
    the cart_reference point (0 by default); followers track the leader's
    cart position. An estimate of None marks staleness beyond the loss
    horizon: the command is forced to 0 (the caller emits the safety event).
    """
    commands: dict[int, float] = {}
    leader_pos = None
    if leader_id is not None and estimates.get(leader_id) is not None:
        leader_pos = float(estimates[leader_id][0])
    for pid, law in laws.items():
        if law not in LAWS:
            raise ConfigError(f"unknown control law {law!r} for pendulum {pid}")
        if law in (LAW_IDLE, LAW_SAFE):
            commands[pid] = 0.0
            continue
        x_hat = estimates.get(pid)
        if x_hat is None:
            commands[pid] = 0.0
            continue
        x_hat = np.asarray(x_hat, dtype=float)
        # reference point: cart position component only, rest of the state zero
        r = np.zeros_like(x_hat)
        if law == LAW_SYNC_FOLLOWER:
            if leader_pos is None:
                commands[pid] = 0.0
                continue
            r[0] = leader_pos
        else:
            r[0] = cart_reference
        gain = gains[pid] if isinstance(gains, dict) else gains
        u = -(gain.K @ (x_hat - r))
        commands[pid] = float(u[0])
    return commands
