import numpy as np
import pytest

from wcps.errors import CertificationError, SolverError
from wcps.plant import PendulumParams, discretize_zoh, linearize_cartpole
from wcps.stability import (
    DwellTimeBound,
    admissible,
    certify_mode,
    dwell_time_bound,
    solve_discrete_lyapunov,
    spectral_radius,
)


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_stable(rng, n, rho_max=0.9):
    A = rng.standard_normal((n, n))
    return A * rng.uniform(0.3, rho_max) / max(np.abs(np.linalg.eigvals(A)).max(), 1e-12)


def test_spectral_radius_diagonal_and_rotation():
    assert spectral_radius(np.diag([0.5, 0.3])) == pytest.approx(0.5)
    assert spectral_radius(0.9 * rotation(np.pi / 6)) == pytest.approx(0.9, abs=1e-12)


def test_spectral_radius_open_loop_cartpole():
    model = discretize_zoh(linearize_cartpole(PendulumParams()), 0.05)
    lam = np.sqrt(0.7 * 9.81 / 0.15)
    assert spectral_radius(model.A) == pytest.approx(np.exp(lam * 0.05), rel=1e-9)


def test_lyapunov_zero_dynamics_returns_q():
    Q = np.diag([1.0, 4.0])
    assert np.allclose(solve_discrete_lyapunov(np.zeros((2, 2)), Q), Q)


def test_lyapunov_scalar_geometric_series():
    P = solve_discrete_lyapunov(np.array([[0.5]]), np.array([[1.0]]))
    assert P[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-12)


def test_lyapunov_residual_random_stable_4x4():
    rng = np.random.default_rng(99)
    for _ in range(100):
        A = random_stable(rng, 4)
        Q = np.eye(4)
        P = solve_discrete_lyapunov(A, Q)
        residual = np.linalg.norm(A.T @ P @ A - P + Q) / np.linalg.norm(P)
        assert residual <= 1e-9


def test_lyapunov_rejects_unstable():
    with pytest.raises(SolverError):
        solve_discrete_lyapunov(np.diag([1.01, 0.5]), np.eye(2))


def test_certify_simple_contraction():
    cert = certify_mode(0, 0.5 * np.eye(2), np.eye(2))
    assert cert.rho == pytest.approx(0.5)
    assert 0 < cert.decay < 1
    # A'PA <= decay * P must hold
    lhs = cert.closed_loop_A.T @ cert.P @ cert.closed_loop_A
    assert np.linalg.eigvalsh(cert.decay * cert.P - lhs).min() >= -1e-9


def test_certify_rejects_unstable_mode():
    with pytest.raises(CertificationError, match="mode 3"):
        certify_mode(3, 1.01 * rotation(0.3))


def test_certify_agrees_with_spectral_radius_on_random_matrices():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        n = rng.integers(1, 5)
        A = rng.standard_normal((n, n)) * rng.uniform(0.1, 0.45)
        unstable = spectral_radius(A) >= 1.0
        try:
            certify_mode(0, A)
            certified = True
        except CertificationError:
            certified = False
        assert certified == (not unstable)


def test_dwell_time_identical_p_and_single_mode():
    certs = [certify_mode(i, 0.5 * np.eye(2)) for i in range(3)]
    bound = dwell_time_bound(certs)
    assert bound.mu == pytest.approx(1.0)
    assert bound.tau_min == 1
    assert dwell_time_bound(certs[:1]).tau_min == 1


def test_dwell_time_two_mode_scalar_hand_computed():
    # P1 = 1/(1-0.25) = 4/3, P2 = 1/(1-0.81) = 100/19, mu = 75/19;
    # decays 0.25 and 0.81 -> tau = ceil(ln(75/19)/ln(1/0.81)) = 7
    c1 = certify_mode(0, np.array([[0.5]]))
    c2 = certify_mode(1, np.array([[0.9]]))
    assert c1.P[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-10)
    assert c2.P[0, 0] == pytest.approx(100.0 / 19.0, abs=1e-10)
    assert c1.decay == pytest.approx(0.25, abs=1e-10)
    assert c2.decay == pytest.approx(0.81, abs=1e-10)
    bound = dwell_time_bound([c1, c2])
    assert bound.mu == pytest.approx(75.0 / 19.0, abs=1e-9)
    assert bound.tau_min == 7


def test_dwell_time_brute_force_switching_oracle():
    # envelope from the scalar two-mode case, verified by direct iteration
    c1 = certify_mode(0, np.array([[0.5]]))
    c2 = certify_mode(1, np.array([[0.9]]))
    bound = dwell_time_bound([c1, c2])
    a = {0: 0.5, 1: 0.9}
    rng = np.random.default_rng(1)
    for _trial in range(20):
        x = 1.0
        mode = 0
        k = 0
        while k < 5000:
            dwell = bound.tau_min + int(rng.integers(0, 4))
            for _ in range(dwell):
                x *= a[mode]
                k += 1
            mode = 1 - mode
        assert abs(x) < 1e-6


def test_dwell_time_q_scale_invariance():
    rng = np.random.default_rng(4)
    mats = [random_stable(rng, 3) for _ in range(3)]
    base = dwell_time_bound([certify_mode(i, A, np.eye(3)) for i, A in enumerate(mats)])
    scaled = dwell_time_bound([certify_mode(i, A, 7.3 * np.eye(3)) for i, A in enumerate(mats)])
    assert scaled.mu == pytest.approx(base.mu, rel=1e-9)
    assert scaled.tau_min == base.tau_min


def test_dwell_time_skips_vacuous_certificates():
    certs = [
        certify_mode(0, np.zeros((0, 0))),
        certify_mode(1, 0.5 * np.eye(2)),
        certify_mode(2, 0.5 * np.eye(2)),
    ]
    assert certs[0].vacuous
    bound = dwell_time_bound(certs)
    assert bound.mu == pytest.approx(1.0)
    assert bound.tau_min == 1


def test_admissible_boundaries():
    bound = DwellTimeBound(tau_min=10, mu=2.0)
    assert admissible([(0, 5)], bound) == (True, None)
    assert admissible([(0, 0), (1, 10), (0, 20)], bound) == (True, None)
    ok, idx = admissible([(0, 0), (1, 10), (0, 19)], bound)
    assert not ok and idx == 2
    with pytest.raises(ValueError):
        admissible([(0, 5), (1, 5)], bound)


def test_switched_envelope_on_random_systems():
    # admissible switching over certified modes contracts to (near) zero
    rng = np.random.default_rng(31)
    for _sys in range(50):
        mats = [random_stable(rng, 2, rho_max=0.8) for _ in range(3)]
        certs = [certify_mode(i, A) for i, A in enumerate(mats)]
        bound = dwell_time_bound(certs)
        x = rng.standard_normal(2)
        x0_norm = np.linalg.norm(x)
        mode = 0
        k = 0
        while k < 10_000:
            dwell = bound.tau_min + int(rng.integers(0, 3))
            for _ in range(min(dwell, 10_000 - k)):
                x = mats[mode] @ x
                k += 1
            mode = int(rng.integers(0, 3))
        assert np.linalg.norm(x) < 1e-6 * max(x0_norm, 1e-12)
