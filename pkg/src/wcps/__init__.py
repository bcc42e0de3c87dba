"""wcps: a round-based simulator of a wireless cyber-physical system.

Closes pendulum feedback loops over simulated Glossy-style many-to-all floods,
certifies per-mode closed-loop stability plus a switched-system dwell-time
bound, runs a synchronous mode-change protocol, and exposes a live gateway
for the browser dashboard.
"""

from .config import PendulumSpec, SimConfig, config_from_dict, default_config, load_config
from .control import control_law, lqr_gain, predict_state, solve_dare
from .engine import Metrics, RoundTrace, RunResult, World, export_metrics, replay, run, step_round
from .errors import (
    CertificationError,
    ConfigError,
    InfeasibleScheduleError,
    SolverError,
    WcpsError,
)
from .modechange import agreement_check, initiate, on_round
from .network import FloodConfig, Topology, build_topology, hop_distance, is_connected, move_node, simulate_flood
from .plant import DiscreteLtiModel, PendulumParams, discretize_zoh, linearize_cartpole
from .schedule import Mode, Schedule, TaskSet, check_timing, default_mode_catalog, energy_cost, synthesize_schedule
from .stability import admissible, certify_mode, dwell_time_bound, solve_discrete_lyapunov, spectral_radius

__version__ = "0.1.0"

__all__ = [
    "PendulumSpec",
    "SimConfig",
    "config_from_dict",
    "default_config",
    "load_config",
    "control_law",
    "lqr_gain",
    "predict_state",
    "solve_dare",
    "Metrics",
    "RoundTrace",
    "RunResult",
    "World",
    "export_metrics",
    "replay",
    "run",
    "step_round",
    "CertificationError",
    "ConfigError",
    "InfeasibleScheduleError",
    "SolverError",
    "WcpsError",
    "agreement_check",
    "initiate",
    "on_round",
    "FloodConfig",
    "Topology",
    "build_topology",
    "hop_distance",
    "is_connected",
    "move_node",
    "simulate_flood",
    "DiscreteLtiModel",
    "PendulumParams",
    "discretize_zoh",
    "linearize_cartpole",
    "Mode",
    "Schedule",
    "TaskSet",
    "check_timing",
    "default_mode_catalog",
    "energy_cost",
    "synthesize_schedule",
    "admissible",
    "certify_mode",
    "dwell_time_bound",
    "solve_discrete_lyapunov",
    "spectral_radius",
    "__version__",
]
