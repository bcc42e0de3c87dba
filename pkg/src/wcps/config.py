"""Simulation configuration: defaults, JSON round-trip, validation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

from .errors import ConfigError

DEFAULT_PENDULUM_NODES = [3, 7, 11, 15, 19]


@dataclass
class PendulumSpec:
    """One pendulum: the node it is attached to, physics, initial state."""

    node: int
    cart_mass: float = 0.5
    pole_mass: float = 0.2
    pole_com_length: float = 0.3
    gravity: float = 9.81
    input_gain: float = 1.0
    process_noise_std: list[float] = field(default_factory=lambda: [1e-4] * 4)
    x0: list[float] = field(default_factory=lambda: [0.0, 0.0, 0.05, 0.0])


@dataclass
class SimConfig:
    """Full run description; mirrors the JSON config file field for field."""

    seed: int = 1
    duration_rounds: int = 1200
    round_period_ms: float = 50.0
    slot_length_ms: float = 5.0
    topology_generator: str = "three_hop_demo"
    topology_params: dict = field(default_factory=dict)
    n_tx: int = 3
    slots_per_flood: int | None = None  # None: 2 * diameter + n_tx
    jitter_bound_us: float = 50.0
    controller_node: int = 0
    pendulums: list[PendulumSpec] = field(
        default_factory=lambda: [PendulumSpec(node=n) for n in DEFAULT_PENDULUM_NODES]
    )
    lqr_q_diag: list[float] = field(default_factory=lambda: [10.0, 1.0, 10.0, 1.0])
    lqr_r: float = 0.01
    actuation_delay_rounds: int = 1
    max_loss_rounds: int = 10
    theta_max_rad: float = 0.35
    initial_mode: int = 3
    lead_rounds: int = 5
    silence_cap_rounds: int = 20
    dwell_floor_rounds: int = 20
    cart_reference: float = 0.0
    reset_on_activation: bool = True
    lost_command_policy: str = "hold"  # or "zero"
    scripted_events: list[dict] = field(default_factory=list)

    def validate(self) -> None:
        if not 10.0 <= self.round_period_ms <= 100.0:
            raise ConfigError(
                f"round_period_ms must lie in [10, 100] ms, got {self.round_period_ms}"
            )
        if self.duration_rounds < 0:
            raise ConfigError(f"duration_rounds must be >= 0, got {self.duration_rounds}")
        if self.slot_length_ms <= 0:
            raise ConfigError("slot_length_ms must be > 0")
        if self.n_tx < 1:
            raise ConfigError("n_tx must be >= 1")
        if self.actuation_delay_rounds < 1 or self.actuation_delay_rounds > 3:
            raise ConfigError(
                f"actuation_delay_rounds must lie in [1, 3], got {self.actuation_delay_rounds}"
            )
        if self.max_loss_rounds < 0:
            raise ConfigError("max_loss_rounds must be >= 0")
        if self.theta_max_rad <= 0:
            raise ConfigError("theta_max_rad must be > 0")
        if self.lead_rounds < 1:
            raise ConfigError("lead_rounds must be >= 1")
        if self.silence_cap_rounds < 1:
            raise ConfigError("silence_cap_rounds must be >= 1")
        if self.dwell_floor_rounds < 1:
            raise ConfigError("dwell_floor_rounds must be >= 1")
        if self.lost_command_policy not in ("hold", "zero"):
            raise ConfigError(
                f"lost_command_policy must be 'hold' or 'zero', got {self.lost_command_policy!r}"
            )
        if len(self.lqr_q_diag) != 4:
            raise ConfigError("lqr_q_diag must have 4 entries")
        if self.lqr_r <= 0:
            raise ConfigError("lqr_r must be > 0")
        for i, p in enumerate(self.pendulums):
            if len(p.x0) != 4:
                raise ConfigError(f"pendulums[{i}].x0 must have 4 entries")
        for i, ev in enumerate(self.scripted_events):
            if "round" not in ev or "type" not in ev:
                raise ConfigError(f"scripted_events[{i}] needs 'round' and 'type' fields")
            self._validate_event(i, ev)

    @staticmethod
    def _validate_event(i: int, ev: dict) -> None:
        kind = ev["type"]
        where = f"scripted_events[{i}]"
        need = {
            "mode_request": [("mode", (int,))],
            "move_node": [("node", (int,)), ("x", (int, float)), ("y", (int, float))],
            "set_reference": [("x", (int, float))],
            "set_link_p": [("p", (int, float))],
            "isolate_node": [("node", (int,))],
        }
        for field_name, types in need.get(kind, ()):
            if not isinstance(ev.get(field_name), types):
                raise ConfigError(f"{where} ({kind}) needs numeric field {field_name!r}")
        if kind == "set_link_p" and not 0.0 <= float(ev["p"]) <= 1.0:
            raise ConfigError(f"{where}: set_link_p needs p in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def sha256(self) -> str:
        return hashlib.sha256(self.to_json(indent=None).encode()).hexdigest()


def config_from_dict(d: dict) -> SimConfig:
    d = dict(d)
    pendulums = d.pop("pendulums", None)
    known = {f for f in SimConfig.__dataclass_fields__}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    cfg = SimConfig(**d)
    if pendulums is not None:
        specs = []
        for i, p in enumerate(pendulums):
            try:
                specs.append(PendulumSpec(**p))
            except TypeError as e:
                raise ConfigError(f"pendulums[{i}]: {e}") from e
        cfg.pendulums = specs
    cfg.validate()
    return cfg


def load_config(path: str) -> SimConfig:
    with open(path) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
    return config_from_dict(data)


def default_config() -> SimConfig:
    cfg = SimConfig()
    cfg.validate()
    return cfg
