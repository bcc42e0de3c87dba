"""Round-synchronous simulation loop binding plants, controllers, network,
schedules, and the mode-change protocol.

One round executes the active mode's schedule: beacon flood (carrying the
epoch and any pending switch announcement), sensor floods with the sampled
plant states, controller compute (predict + control law), the bundled command
flood, the plant steps, and finally the per-node protocol boundary. Two rng
streams (network, plant) spawned from the config seed make (seed, config)
fully determine the trace.

Commands (scripted events or gateway messages) are drained once per round
boundary and logged with the round at which they applied, so a live session
replays bit-identically in batch mode.
"""

from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import modechange, network, plant, schedule, stability
from .config import SimConfig
from .control import ACTUATED_LAWS, ControllerGain, control_law, lqr_gain, solve_dare
from .errors import ConfigError
from .modechange import (
    Announcement,
    NodeProtocolState,
    ProtocolHeader,
    Rejection,
    STATUS_ACTIVE,
)

MANIFEST_SCHEMA = 1


@dataclass(frozen=True)
class RoundTrace:
    """One round of the run; the unit of all metrics and tests."""

    round: int
    t_ms: float
    mode: int
    epoch: int
    # per pendulum: (x, v, theta, omega, u_applied, active, fallen)
    pendulums: tuple
    # per flood: (kind, initiator, n_received, rx_bitmask, jitter_us)
    floods: tuple
    # per node: (mode, epoch, status, rx) with mode/epoch/status at round start
    nodes: tuple
    events: tuple


@dataclass
class Metrics:
    rms_theta: list[float]
    max_abs_theta: list[float]
    fall_count: int
    node_rx_rate: list[float]
    switches_attempted: int
    switches_completed: int
    safe_entries: int
    energy_ms_per_round: float

    def to_dict(self) -> dict:
        return {
            "rms_theta": self.rms_theta,
            "max_abs_theta": self.max_abs_theta,
            "fall_count": self.fall_count,
            "node_rx_rate": self.node_rx_rate,
            "switches_attempted": self.switches_attempted,
            "switches_completed": self.switches_completed,
            "safe_entries": self.safe_entries,
            "energy_ms_per_round": self.energy_ms_per_round,
        }


@dataclass
class PendulumRuntime:
    """Controller- and actuator-side state of one pendulum loop."""

    model: plant.DiscreteLtiModel
    x: np.ndarray
    fallen: bool = False
    # predictor: x_hat estimates the state one round behind the upcoming
    # compute; released holds the last delay+1 released commands
    x_hat: np.ndarray = None
    last_update_round: int = -1
    released: deque = None
    stale: bool = False
    # actuator: recent command-flood receptions and the zero-order hold
    rx_cmds: deque = None
    held: float = 0.0
    hold_age: int = 0


class World:
    """All mutable state of a run; owned by the single engine loop."""

    def __init__(self, cfg: SimConfig):
        cfg.validate()
        self.cfg = cfg
        ss = np.random.SeedSequence(cfg.seed)
        topo_seed, net_seed, plant_seed = ss.spawn(3)
        self.rng_net = np.random.default_rng(net_seed)
        self.rng_plant = np.random.default_rng(plant_seed)

        self.topology = network.build_topology(
            cfg.topology_generator, cfg.topology_params, np.random.default_rng(topo_seed)
        )
        if cfg.controller_node not in self.topology.nodes:
            raise ConfigError(f"controller_node {cfg.controller_node} not in topology")
        for i, p in enumerate(cfg.pendulums):
            if p.node not in self.topology.nodes:
                raise ConfigError(f"pendulums[{i}].node {p.node} not in topology")

        diameter = max(network.hop_eccentricity(self.topology, v) for v in self.topology.nodes)
        if diameter < 0:
            raise ConfigError("topology must be connected at startup")
        slots = cfg.slots_per_flood or 2 * diameter + cfg.n_tx
        self.flood_cfg = network.FloodConfig(
            n_tx=cfg.n_tx, slots_per_flood=slots, jitter_bound_us=cfg.jitter_bound_us
        )

        self.modes = schedule.default_mode_catalog(
            [p.node for p in cfg.pendulums],
            cfg.controller_node,
            cfg.round_period_ms,
            cfg.slot_length_ms,
        )
        self.mode_by_id = {m.id: m for m in self.modes}
        if cfg.initial_mode not in self.mode_by_id:
            raise ConfigError(f"initial_mode {cfg.initial_mode} not in the mode catalog")

        # controller synthesis: one LQR gain per pendulum model
        Q = np.diag(cfg.lqr_q_diag)
        R = np.array([[cfg.lqr_r]])
        self.pend: list[PendulumRuntime] = []
        self.gains: dict[int, ControllerGain] = {}
        d = cfg.actuation_delay_rounds
        for i, spec in enumerate(cfg.pendulums):
            params = plant.PendulumParams(
                cart_mass=spec.cart_mass,
                pole_mass=spec.pole_mass,
                pole_com_length=spec.pole_com_length,
                gravity=spec.gravity,
                input_gain=spec.input_gain,
                process_noise_std=tuple(spec.process_noise_std),
            )
            model = plant.discretize_zoh(
                plant.linearize_cartpole(params),
                cfg.round_period_ms / 1000.0,
                noise_std=tuple(spec.process_noise_std),
            )
            P = solve_dare(model.A, model.B, Q, R)
            self.gains[i] = lqr_gain(model.A, model.B, R, P)
            x0 = np.asarray(spec.x0, dtype=float)
            self.pend.append(
                PendulumRuntime(
                    model=model,
                    x=x0.copy(),
                    x_hat=x0.copy(),
                    released=deque([0.0] * (d + 1), maxlen=d + 1),
                    rx_cmds=deque(maxlen=d + 1),
                )
            )

        # stability gate: certify every mode, then the dwell-time bound
        self.certs = [self._certify(m) for m in self.modes]
        self.bound = stability.dwell_time_bound(self.certs)
        self.tau_min = max(self.bound.tau_min, cfg.dwell_floor_rounds)

        self.node_states = [
            NodeProtocolState(node=v, current_mode=cfg.initial_mode) for v in self.topology.nodes
        ]
        self.pending_announcement: Announcement | None = None
        self.last_switch_round = 0
        self.cart_reference = cfg.cart_reference
        self.round = 0
        self.trace: list[RoundTrace] = []
        self.command_queue: deque = deque()
        self.command_log: list[dict] = []
        self.scripted: dict[int, list[dict]] = {}
        for ev in cfg.scripted_events:
            ev = dict(ev)
            r = int(ev.pop("round"))
            self.scripted.setdefault(r, []).append(ev)

    def _certify(self, mode: schedule.Mode) -> stability.ModeCertificate:
        """Certificate of the mode's worst actuated pendulum loop; vacuous
        when the mode closes no loop."""
        worst = None
        for task in mode.task_set.active_pendulums:
            i = task.pendulum_id
            model = self.pend[i].model
            closed = model.A - model.B @ self.gains[i].K
            cert = stability.certify_mode(mode.id, closed)
            if worst is None or cert.decay > worst.decay:
                worst = cert
        if worst is None:
            return stability.certify_mode(mode.id, np.zeros((0, 0)))
        return worst

    @property
    def controller_state(self) -> NodeProtocolState:
        return self.node_states[self.cfg.controller_node]

    @property
    def current_mode(self) -> schedule.Mode:
        return self.mode_by_id[self.controller_state.current_mode]

    def dwell_remaining(self) -> int:
        return max(0, self.last_switch_round + self.tau_min - self.round)

    def submit_command(self, cmd: dict) -> None:
        """Thread-safe enqueue; the loop drains at the next round boundary."""
        self.command_queue.append(dict(cmd))


def _apply_command(world: World, r: int, cmd: dict) -> list[dict]:
    """Apply one drained command at the start of round r; returns events."""
    events = []
    kind = cmd.get("type")
    if kind == "mode_request":
        target = cmd.get("mode")
        if world.pending_announcement is not None:
            events.append(
                {
                    "kind": "rejected",
                    "target": target,
                    "reason": "switch already in flight",
                    "earliest_round": world.pending_announcement.switch_round + world.tau_min,
                }
            )
            return events
        result = modechange.initiate(
            target_mode=target,
            now_round=r,
            last_switch_round=world.last_switch_round,
            last_epoch=world.controller_state.current_epoch,
            tau_min=world.tau_min,
            lead_rounds=world.cfg.lead_rounds,
            certified_modes=set(world.mode_by_id),
        )
        if isinstance(result, Rejection):
            events.append(
                {
                    "kind": "rejected",
                    "target": target,
                    "reason": result.reason,
                    "earliest_round": result.earliest_round,
                }
            )
        else:
            world.pending_announcement = result
            events.append(
                {
                    "kind": "announce",
                    "target": result.target_mode,
                    "switch_round": result.switch_round,
                    "epoch": result.epoch,
                }
            )
    elif kind == "move_node":
        node = int(cmd["node"])
        world.topology = network.move_node(world.topology, node, (float(cmd["x"]), float(cmd["y"])))
        events.append({"kind": "node_moved", "node": node, "x": float(cmd["x"]), "y": float(cmd["y"])})
    elif kind == "isolate_node":
        node = int(cmd["node"])
        lp = world.topology.link_p.copy()
        lp[node, :] = 0.0
        lp[:, node] = 0.0
        world.topology = network.Topology(
            link_p=lp,
            positions=world.topology.positions,
            r_full=world.topology.r_full,
            r_max=world.topology.r_max,
        )
        events.append({"kind": "node_isolated", "node": node})
    elif kind == "set_link_p":
        p = float(cmd["p"])
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"set_link_p needs p in [0, 1], got {p}")
        lp = np.where(world.topology.link_p > 0, p, 0.0)
        world.topology = network.Topology(
            link_p=lp,
            positions=world.topology.positions,
            r_full=world.topology.r_full,
            r_max=world.topology.r_max,
        )
        events.append({"kind": "links_set", "p": p})
    elif kind == "set_reference":
        world.cart_reference = float(cmd["x"])
        events.append({"kind": "reference_set", "x": world.cart_reference})
    else:
        events.append({"kind": "ignored", "type": str(kind)})
    return events


def step_round(world: World) -> RoundTrace:
    """Advance the world by one round and append the trace entry."""
    cfg = world.cfg
    r = world.round
    events: list[dict] = []

    # 1. drain commands at the round boundary (scripted first, then live)
    drained = list(world.scripted.get(r, ()))
    while True:
        try:
            drained.append(world.command_queue.popleft())
        except IndexError:
            break
    for cmd in drained:
        world.command_log.append({"round": r, **cmd})
        events.extend(_apply_command(world, r, cmd))

    # 2. the round runs under the controller's current mode
    mode = world.current_mode
    header = ProtocolHeader(
        mode=world.controller_state.current_mode,
        epoch=world.controller_state.current_epoch,
        announcement=world.pending_announcement,
    )
    node_snapshot = tuple(
        (s.current_mode, s.current_epoch, s.status) for s in world.node_states
    )

    # 3. execute the schedule's floods in slot order; protocol headers ride
    #    the controller-initiated floods (beacon, command)
    n = world.topology.n_nodes
    rx_protocol = np.zeros(n, dtype=bool)
    flood_summaries = []
    sensor_rx: dict[int, bool] = {}
    command_rx = None
    for slot in mode.schedule.slots:
        if slot.kind == schedule.SLOT_COMPUTE:
            continue
        out = network.simulate_flood(world.topology, slot.owner, world.flood_cfg, world.rng_net)
        mask = int(sum(1 << v for v in np.nonzero(out.received)[0]))
        flood_summaries.append(
            (slot.kind, slot.owner, int(out.received.sum()), mask, float(out.jitter_draw_us))
        )
        if slot.kind == schedule.SLOT_SENSOR:
            sensor_rx[slot.pendulum_id] = bool(out.received[cfg.controller_node])
        else:
            rx_protocol |= out.received
            if slot.kind == schedule.SLOT_COMMAND:
                command_rx = out.received

    # 4. controller compute: estimator update, prediction, control law
    laws = {t.pendulum_id: t.law for t in mode.task_set.pendulums}
    d = cfg.actuation_delay_rounds
    commands: dict[int, float] = {}
    if mode.task_set.active_pendulums:
        estimates: dict[int, np.ndarray | None] = {}
        for task in mode.task_set.active_pendulums:
            i = task.pendulum_id
            rt = world.pend[i]
            if sensor_rx.get(i):
                rt.x_hat = rt.x.copy()
                rt.last_update_round = r
            else:
                rt.x_hat = rt.model.A @ rt.x_hat + rt.model.B @ [rt.released[0]]
            stale = r - rt.last_update_round > cfg.max_loss_rounds
            if stale and not rt.stale:
                events.append({"kind": "stale_estimate", "pendulum": i})
            rt.stale = stale
            if stale:
                estimates[i] = None
            else:
                x_pred = rt.x_hat.copy()
                for u_next in list(rt.released)[1:]:
                    x_pred = rt.model.A @ x_pred + rt.model.B @ [u_next]
                estimates[i] = x_pred
        commands = control_law(
            laws,
            world.gains,
            estimates,
            leader_id=mode.task_set.leader_id,
            cart_reference=world.cart_reference if mode.use_cart_reference else 0.0,
        )
        for task in mode.task_set.active_pendulums:
            world.pend[task.pendulum_id].released.append(commands[task.pendulum_id])

    # 5. command delivery to the actuator nodes
    for task in mode.task_set.active_pendulums:
        i = task.pendulum_id
        if command_rx is not None and command_rx[task.node]:
            world.pend[i].rx_cmds.append((r, commands[i]))

    # 6. plant steps with the delay-d commands that made it to each actuator
    pend_entries = []
    for i, (task, rt) in enumerate(zip(mode.task_set.pendulums, world.pend)):
        node_state = world.node_states[task.node]
        node_mode = world.mode_by_id.get(node_state.current_mode)
        actuated_here = (
            node_state.status == STATUS_ACTIVE
            and node_mode is not None
            and node_mode.task_set.pendulums[i].law in ACTUATED_LAWS
        )
        u_applied = 0.0
        if not actuated_here:
            rt.held = 0.0
            rt.hold_age = 0
        elif rt.fallen:
            pass
        else:
            wanted = r - d
            hit = next((v for (rr, v) in rt.rx_cmds if rr == wanted), None)
            if hit is not None:
                u_applied = hit
                rt.held = hit
                rt.hold_age = 0
            elif wanted >= 0:
                rt.hold_age += 1
                if cfg.lost_command_policy == "hold" and rt.hold_age <= cfg.max_loss_rounds:
                    u_applied = rt.held
                else:
                    u_applied = 0.0
        x_before = rt.x
        if not rt.fallen:
            rt.x = plant.step(rt.model, rt.x, u_applied, world.rng_plant)
            if plant.is_fallen(rt.x, cfg.theta_max_rad):
                rt.fallen = True
                events.append({"kind": "fall", "pendulum": i})
        pend_entries.append(
            (
                float(x_before[0]),
                float(x_before[1]),
                float(x_before[2]),
                float(x_before[3]),
                float(u_applied),
                task.law in ACTUATED_LAWS,
                rt.fallen,
            )
        )

    # 7. protocol boundary: every node advances once; the controller's switch
    #    becomes the next round's governing mode
    prev_mode_id = world.controller_state.current_mode
    prev_epoch = world.controller_state.current_epoch
    for s in world.node_states:
        rx = header if rx_protocol[s.node] else None
        for tag in modechange.on_round(s, rx, now_round=r + 1, silence_cap=cfg.silence_cap_rounds):
            if tag.startswith("safe_entry"):
                events.append({"kind": "safe_entry", "node": s.node, "reason": tag.split(":", 1)[1]})
            elif tag == "resync":
                events.append({"kind": "resync", "node": s.node})
    if world.controller_state.current_epoch != prev_epoch:
        new_mode_id = world.controller_state.current_mode
        world.pending_announcement = None
        world.last_switch_round = r + 1
        events.append({"kind": "mode_changed", "mode": new_mode_id, "round": r + 1})
        if cfg.reset_on_activation:
            old_tasks = world.mode_by_id[prev_mode_id].task_set.pendulums
            new_tasks = world.mode_by_id[new_mode_id].task_set.pendulums
            for i, (old_t, new_t) in enumerate(zip(old_tasks, new_tasks)):
                if new_t.law in ACTUATED_LAWS and old_t.law not in ACTUATED_LAWS:
                    _reset_pendulum(world, i)
                    events.append({"kind": "pendulum_reset", "pendulum": i})

    entry = RoundTrace(
        round=r,
        t_ms=float(r * cfg.round_period_ms),
        mode=header.mode,
        epoch=header.epoch,
        pendulums=tuple(pend_entries),
        floods=tuple(flood_summaries),
        nodes=tuple(
            snap + (bool(rx_protocol[v]),) for v, snap in enumerate(node_snapshot)
        ),
        events=tuple(events),
    )
    world.trace.append(entry)
    world.round = r + 1
    return entry


def _reset_pendulum(world: World, i: int) -> None:
    """Re-arm a newly actuated pendulum at its configured initial state
    (the operator rights the pendulum when a control mode picks it up)."""
    cfg = world.cfg
    rt = world.pend[i]
    x0 = np.asarray(cfg.pendulums[i].x0, dtype=float)
    rt.x = x0.copy()
    rt.x_hat = x0.copy()
    rt.fallen = False
    rt.stale = False
    rt.last_update_round = world.round
    d = cfg.actuation_delay_rounds
    rt.released = deque([0.0] * (d + 1), maxlen=d + 1)
    rt.rx_cmds = deque(maxlen=d + 1)
    rt.held = 0.0
    rt.hold_age = 0


@dataclass
class RunResult:
    trace: tuple
    metrics: Metrics
    manifest: dict
    world: World


def run(cfg: SimConfig, on_round=None) -> RunResult:
    """Run a full batch simulation.

    Refuses to start when any catalog mode fails certification (the World
    constructor raises CertificationError). on_round, when given, is called
    with (world, entry) after every round — the gateway's streaming hook.
    """
    world = World(cfg)
    for _ in range(cfg.duration_rounds):
        entry = step_round(world)
        if on_round is not None:
            on_round(world, entry)
    return RunResult(
        trace=tuple(world.trace),
        metrics=compute_metrics(world),
        manifest=build_manifest(world),
        world=world,
    )


def replay(cfg: SimConfig, command_log: list[dict]) -> RunResult:
    """Re-run a live session in batch: the logged commands, already stamped
    with their drain rounds, become the scripted events."""
    from .config import config_from_dict

    replay_cfg = config_from_dict({**cfg.to_dict(), "scripted_events": [dict(c) for c in command_log]})
    return run(replay_cfg)


def compute_metrics(world: World) -> Metrics:
    trace = world.trace
    n_pend = len(world.pend)
    n_nodes = world.topology.n_nodes
    if not trace:
        return Metrics(
            rms_theta=[0.0] * n_pend,
            max_abs_theta=[0.0] * n_pend,
            fall_count=0,
            node_rx_rate=[0.0] * n_nodes,
            switches_attempted=0,
            switches_completed=0,
            safe_entries=0,
            energy_ms_per_round=0.0,
        )
    thetas = np.array([[p[2] for p in e.pendulums] for e in trace])
    rms = np.sqrt((thetas**2).mean(axis=0))
    max_abs = np.abs(thetas).max(axis=0)
    falls = sum(1 for e in trace for ev in e.events if ev["kind"] == "fall")
    rx_counts = np.zeros(n_nodes)
    flood_count = 0
    for e in trace:
        for (_kind, _init, _n_rx, mask, _jit) in e.floods:
            flood_count += 1
            for v in range(n_nodes):
                rx_counts[v] += (mask >> v) & 1
    rx_rate = (rx_counts / flood_count).tolist() if flood_count else [0.0] * n_nodes
    attempted = sum(
        1 for e in trace for ev in e.events if ev["kind"] in ("announce", "rejected")
    )
    completed = sum(1 for e in trace for ev in e.events if ev["kind"] == "mode_changed")
    safe_entries = sum(1 for e in trace for ev in e.events if ev["kind"] == "safe_entry")
    energy = float(
        np.mean([schedule.energy_cost(world.mode_by_id[e.mode].schedule) for e in trace])
    )
    return Metrics(
        rms_theta=[float(v) for v in rms],
        max_abs_theta=[float(v) for v in max_abs],
        fall_count=falls,
        node_rx_rate=rx_rate,
        switches_attempted=attempted,
        switches_completed=completed,
        safe_entries=safe_entries,
        energy_ms_per_round=energy,
    )


def csv_header(n_pend: int, n_nodes: int) -> str:
    cols = ["round", "t_ms"]
    for i in range(n_pend):
        cols += [f"p{i}_x", f"p{i}_theta", f"p{i}_u"]
    for v in range(n_nodes):
        cols += [f"n{v}_rx", f"n{v}_mode", f"n{v}_status"]
    return ",".join(cols)


def export_metrics(trace, n_pend: int = 5, n_nodes: int = 20) -> str:
    """CSV dump: one row per round, fixed documented header.

    Columns: round, t_ms, per-pendulum x/theta/u, per-node rx flag, mode id,
    status. repr() float formatting keeps the dump byte-reproducible.
    """
    if trace:
        n_pend = len(trace[0].pendulums)
        n_nodes = len(trace[0].nodes)
    buf = io.StringIO()
    buf.write(csv_header(n_pend, n_nodes) + "\n")
    for e in trace:
        cells = [str(e.round), repr(e.t_ms)]
        for p in e.pendulums:
            cells += [repr(p[0]), repr(p[2]), repr(p[4])]
        for (mode_id, _epoch, status, rx) in e.nodes:
            cells += [str(int(rx)), str(mode_id), status]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def build_manifest(world: World) -> dict:
    """Everything needed to audit or reproduce the run."""
    cfg = world.cfg
    return {
        "schema": MANIFEST_SCHEMA,
        "config": cfg.to_dict(),
        "config_sha256": cfg.sha256(),
        "tau_min_certificate": world.bound.tau_min,
        "tau_min_effective": world.tau_min,
        "mu": world.bound.mu,
        "weights": {"q_diag": list(cfg.lqr_q_diag), "r": cfg.lqr_r},
        "gains": {str(i): g.K.tolist() for i, g in world.gains.items()},
        "certificates": [
            {
                "mode_id": c.mode_id,
                "vacuous": c.vacuous,
                "rho": c.rho,
                "decay": c.decay,
                "P": None if c.vacuous else c.P.tolist(),
            }
            for c in world.certs
        ],
        "modes": [
            {
                "id": m.id,
                "name": m.name,
                "laws": {str(t.pendulum_id): t.law for t in m.task_set.pendulums},
                "slots": [[s.kind, s.owner] for s in m.schedule.slots],
                "energy_ms": schedule.energy_cost(m.schedule),
            }
            for m in world.modes
        ],
    }
