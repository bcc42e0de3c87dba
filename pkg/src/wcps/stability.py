"""Computable stability certificates for the per-mode closed loops.

Per mode: spectral radius check, a quadratic Lyapunov function P from the
discrete Lyapunov equation A'PA - P = -Q, and a contraction factor
lambda = 1 - lambda_min(Q)/lambda_max(P) so that A'PA <= lambda P.
Across modes: a multiple-Lyapunov dwell-time bound. mu bounds the worst
Lyapunov mismatch over ordered mode pairs; switching no faster than tau_min
rounds keeps the switched loop contracting.

Modes that close no loop (idle/safe) carry an empty certificate: they impose
no Lyapunov-mismatch constraint and are skipped by the dwell-time bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .errors import CertificationError, SolverError

# Clamp bounds for the contraction factor: keep it inside the open (0, 1).
_DECAY_EPS = 1e-12


@dataclass(frozen=True)
class ModeCertificate:
    """Stability certificate for one mode's closed loop.

    A 0x0 closed_loop_A marks a vacuous certificate (mode closes no loop).
    """

    mode_id: int
    closed_loop_A: np.ndarray
    rho: float
    P: np.ndarray
    decay: float

    @property
    def vacuous(self) -> bool:
        return self.closed_loop_A.size == 0


@dataclass(frozen=True)
class DwellTimeBound:
    """Minimum rounds between switches plus the worst mismatch factor."""

    tau_min: int
    mu: float


def spectral_radius(M: np.ndarray) -> float:
    """max |eigenvalue| of a square matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def solve_discrete_lyapunov(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve A'PA - P = -Q for stable A by the doubling fixed point.

    P = sum_k (A')^k Q A^k; the doubling iteration squares A each step so
    convergence is quadratic. Raises SolverError when rho(A) >= 1.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if A.size == 0:
        return Q.copy()
    if spectral_radius(A) >= 1.0:
        raise SolverError(f"solve_discrete_lyapunov needs rho(A) < 1, got {spectral_radius(A):.6g}")
    P = Q.copy()
    M = A.T.copy()
    for _ in range(200):
        incr = M @ P @ M.T
        P_next = P + incr
        M = M @ M
        if np.abs(incr).max() <= 1e-16 * max(1.0, np.abs(P_next).max()):
            P = 0.5 * (P_next + P_next.T)
            return P
        P = P_next
    raise SolverError("discrete Lyapunov iteration failed to converge")


def certify_mode(mode_id: int, closed_loop_A: np.ndarray, Q: np.ndarray | None = None) -> ModeCertificate:
    """Certify one mode's closed loop; Q defaults to the identity.

    Raises CertificationError (naming the mode) when rho >= 1; the engine
    must refuse to activate an uncertified mode.
    """
    A = np.atleast_2d(np.asarray(closed_loop_A, dtype=float))
    if A.size == 0:
        return ModeCertificate(mode_id, np.zeros((0, 0)), 0.0, np.zeros((0, 0)), _DECAY_EPS)
    n = A.shape[0]
    if Q is None:
        Q = np.eye(n)
    rho = spectral_radius(A)
    if rho >= 1.0:
        raise CertificationError(f"mode {mode_id}: closed loop unstable (rho = {rho:.6g} >= 1)")
    try:
        P = solve_discrete_lyapunov(A, Q)
    except SolverError as e:
        raise CertificationError(f"mode {mode_id}: {e}") from e
    lam = 1.0 - float(np.linalg.eigvalsh(Q).min() / np.linalg.eigvalsh(P).max())
    lam = min(max(lam, _DECAY_EPS), 1.0 - _DECAY_EPS)
    return ModeCertificate(mode_id, A, rho, P, lam)


def dwell_time_bound(certs: list[ModeCertificate]) -> DwellTimeBound:
    """Multiple-Lyapunov dwell-time bound over certified modes.

    mu is the largest generalized eigenvalue of (P_i, P_j) over ordered pairs;
    tau_min = ceil(ln mu / ln(1/lambda_max)) with lambda_max the worst decay,
    clamped to at least 1. Vacuous certificates are skipped.
    """
    real = [c for c in certs if not c.vacuous]
    if not real:
        return DwellTimeBound(tau_min=1, mu=1.0)
    dims = {c.P.shape[0] for c in real}
    if len(dims) != 1:
        raise CertificationError(f"certificates mix state dimensions {sorted(dims)}")
    mu = 1.0
    for ci in real:
        for cj in real:
            if ci.mode_id == cj.mode_id:
                continue
            # largest lambda with det(P_i - lambda P_j) = 0
            gev = eigh(ci.P, cj.P, eigvals_only=True)
            mu = max(mu, float(gev[-1]))
    lam_max = max(c.decay for c in real)
    if mu <= 1.0:
        tau = 1
    else:
        tau = max(1, math.ceil(math.log(mu) / math.log(1.0 / lam_max)))
    return DwellTimeBound(tau_min=tau, mu=mu)


def admissible(
    sequence: list[tuple[int, int]], bound: DwellTimeBound
) -> tuple[bool, int | None]:
    """Check a (mode_id, activation_round) sequence against the dwell bound.

    Returns (True, None) when every consecutive activation gap is >= tau_min,
    else (False, index of the first violating entry).
    """
    rounds = [r for _, r in sequence]
    if any(b <= a for a, b in zip(rounds, rounds[1:])):
        raise ValueError("activation rounds must be strictly increasing")
    for i in range(1, len(rounds)):
        if rounds[i] - rounds[i - 1] < bound.tau_min:
            return False, i
    return True, None
