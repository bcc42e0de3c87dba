"""Cart-pole stabilization from first principles.

Walks the controller-synthesis pipeline end to end: linearize the frictionless
cart-pole about upright, discretize it exactly with a zero-order hold at the
50 ms round period, solve the discrete Riccati equation, and close the loop.
Prints the spectra at each stage and simulates the one-round-delay loop the
engine actually runs.
"""

import numpy as np

from wcps.control import lqr_gain, solve_dare
from wcps.plant import PendulumParams, discretize_zoh, linearize_cartpole

params = PendulumParams(cart_mass=0.5, pole_mass=0.2, pole_com_length=0.3)
cont = linearize_cartpole(params)
print("continuous-time eigenvalues (1/s):", np.round(np.linalg.eigvals(cont.A_c).real, 3))

T_s = 0.05
model = discretize_zoh(cont, T_s)
rho_open = max(abs(np.linalg.eigvals(model.A)))
print(f"open-loop spectral radius at T_s={T_s*1000:.0f} ms: {rho_open:.4f} (unstable)")

Q = np.diag([10.0, 1.0, 10.0, 1.0])
R = np.array([[0.01]])
P = solve_dare(model.A, model.B, Q, R)
K = lqr_gain(model.A, model.B, R, P).K
rho_closed = max(abs(np.linalg.eigvals(model.A - model.B @ K)))
print("LQR gain K:", np.round(K, 2))
print(f"closed-loop spectral radius: {rho_closed:.4f}")

# Simulate the loop with the engine's timing: a command computed from the
# round-k state acts during round k+1, so the controller predicts one round
# ahead before applying the gain.
x = np.array([0.0, 0.0, 0.05, 0.0])  # 2.9 degrees off upright
cmd_prev = 0.0
trajectory = [x.copy()]
for k in range(120):
    u_applied = cmd_prev if k >= 1 else 0.0
    cmd_prev = float(-(K @ (model.A @ x + model.B @ [u_applied]))[0])
    x = model.A @ x + model.B @ [u_applied]
    trajectory.append(x.copy())
trajectory = np.array(trajectory)

for t_check in (1.0, 2.0, 3.0):
    k = int(t_check / T_s)
    print(f"|theta| at {t_check:.0f} s: {abs(trajectory[k, 2]):.2e} rad")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    t = np.arange(len(trajectory)) * T_s
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    ax1.plot(t, np.degrees(trajectory[:, 2]))
    ax1.set_ylabel("pole angle (deg)")
    ax1.grid(True)
    ax2.plot(t, trajectory[:, 0])
    ax2.set_ylabel("cart position (m)")
    ax2.set_xlabel("time (s)")
    ax2.grid(True)
    fig.savefig("cartpole_lqr.png", dpi=120, bbox_inches="tight")
    print("wrote cartpole_lqr.png")
except ImportError:
    pass
