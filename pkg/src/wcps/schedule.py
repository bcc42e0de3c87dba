"""Static per-mode round schedules: task sets, slot timetables, energy cost.

Each mode's task set is packed greedily into one round: a beacon slot, one
sensor flood per active pendulum, a compute slot at the controller, and a
single bundled command flood. Bundling all commands into one flood minimizes
the radio-on slot count at this problem size; an exhaustive check of the
bundled pattern is the test oracle. Schedules are computed once at startup
and embedded in every node's protocol state before round 0.
"""

from __future__ import annotations

from dataclasses import dataclass

from .control import ACTUATED_LAWS, LAW_IDLE, LAW_SAFE, LAW_STABILIZE, LAW_SYNC_FOLLOWER, LAW_SYNC_LEADER
from .errors import ConfigError, InfeasibleScheduleError

SLOT_BEACON = "beacon"
SLOT_SENSOR = "sensor_flood"
SLOT_COMPUTE = "compute"
SLOT_COMMAND = "command_flood"

RADIO_SLOTS = (SLOT_BEACON, SLOT_SENSOR, SLOT_COMMAND)


@dataclass(frozen=True)
class PendulumTask:
    """One pendulum's role in a mode."""

    pendulum_id: int
    law: str
    node: int

    @property
    def active(self) -> bool:
        return self.law in ACTUATED_LAWS


@dataclass(frozen=True)
class TaskSet:
    """A mode's application tasks: per-pendulum laws plus controller placement."""

    pendulums: tuple[PendulumTask, ...]
    controller_node: int
    update_period_rounds: int = 1

    def validate(self) -> None:
        followers = [p for p in self.pendulums if p.law == LAW_SYNC_FOLLOWER]
        leaders = [p for p in self.pendulums if p.law == LAW_SYNC_LEADER]
        if followers and len(leaders) != 1:
            raise ConfigError(
                f"task set with followers needs exactly one leader, got {len(leaders)}"
            )
        if self.update_period_rounds < 1:
            raise ConfigError("update_period_rounds must be >= 1")

    @property
    def active_pendulums(self) -> tuple[PendulumTask, ...]:
        return tuple(p for p in self.pendulums if p.active)

    @property
    def leader_id(self) -> int | None:
        for p in self.pendulums:
            if p.law == LAW_SYNC_LEADER:
                return p.pendulum_id
        return None


@dataclass(frozen=True)
class Slot:
    kind: str
    owner: int  # initiator node for floods, controller for compute/beacon
    pendulum_id: int | None = None  # sensor slots only


@dataclass(frozen=True)
class Schedule:
    """Ordered slot timetable of one round."""

    round_period_ms: float
    slot_length_ms: float
    slots: tuple[Slot, ...]

    @property
    def busy_ms(self) -> float:
        return len(self.slots) * self.slot_length_ms


@dataclass(frozen=True)
class Mode:
    """A named task set plus its static schedule."""

    id: int
    name: str
    task_set: TaskSet
    schedule: Schedule
    use_cart_reference: bool = False


def synthesize_schedule(tasks: TaskSet, round_period_ms: float, slot_length_ms: float) -> Schedule:
    """Greedy slot packing: beacon, sensor floods, compute, bundled command flood.

    Modes without active pendulums get a beacon-only schedule. Raises
    InfeasibleScheduleError naming the slot deficit when the round is too
    short.
    """
    if round_period_ms <= 0 or slot_length_ms <= 0:
        raise ConfigError("round_period_ms and slot_length_ms must be > 0")
    tasks.validate()
    slots: list[Slot] = [Slot(SLOT_BEACON, tasks.controller_node)]
    active = tasks.active_pendulums
    for p in active:
        slots.append(Slot(SLOT_SENSOR, p.node, pendulum_id=p.pendulum_id))
    if active:
        slots.append(Slot(SLOT_COMPUTE, tasks.controller_node))
        slots.append(Slot(SLOT_COMMAND, tasks.controller_node))
    total = len(slots) * slot_length_ms
    if total > round_period_ms:
        deficit = total - round_period_ms
        raise InfeasibleScheduleError(
            f"{len(slots)} slots x {slot_length_ms} ms exceed the {round_period_ms} ms round "
            f"by {deficit:g} ms"
        )
    return Schedule(round_period_ms, slot_length_ms, tuple(slots))


def check_timing(s: Schedule) -> tuple[bool, str | None]:
    """Verify slot ordering and the round budget; returns (ok, violation)."""
    if s.busy_ms > s.round_period_ms:
        return False, f"slots occupy {s.busy_ms} ms > round period {s.round_period_ms} ms"
    kinds = [slot.kind for slot in s.slots]
    if SLOT_COMPUTE in kinds:
        compute_at = kinds.index(SLOT_COMPUTE)
        for i, slot in enumerate(s.slots):
            if slot.kind == SLOT_SENSOR and i > compute_at:
                return False, f"sensor flood at slot {i} after compute"
            if slot.kind == SLOT_COMMAND and i < compute_at:
                return False, f"command flood at slot {i} before compute"
    elif SLOT_COMMAND in kinds:
        return False, "command flood without a compute slot"
    return True, None


def energy_cost(s: Schedule) -> float:
    """Radio-on milliseconds per round: radio-active slot count x slot length."""
    return sum(1 for slot in s.slots if slot.kind in RADIO_SLOTS) * s.slot_length_ms


def default_mode_catalog(
    pendulum_nodes: list[int],
    controller_node: int,
    round_period_ms: float,
    slot_length_ms: float,
) -> list[Mode]:
    """The eight-mode demo catalog.

    0 Idle, 1 Stabilize P1, 2 Stabilize P1-P2, 3 Stabilize all, 4 Synchronize
    all to leader P1, 5 Synchronize P2-P3 to P1, 6 Stabilize all around the
    operator's cart reference, 7 Safe (zero actuation everywhere).
    """
    if len(pendulum_nodes) != 5:
        raise ConfigError(f"the demo catalog expects 5 pendulums, got {len(pendulum_nodes)}")

    def tasks(laws: list[str]) -> TaskSet:
        return TaskSet(
            pendulums=tuple(
                PendulumTask(pendulum_id=i, law=law, node=pendulum_nodes[i])
                for i, law in enumerate(laws)
            ),
            controller_node=controller_node,
        )

    idle5 = [LAW_IDLE] * 5
    catalog_spec: list[tuple[str, list[str], bool]] = [
        ("Idle", idle5, False),
        ("Stabilize P1", [LAW_STABILIZE] + [LAW_IDLE] * 4, False),
        ("Stabilize P1-P2", [LAW_STABILIZE] * 2 + [LAW_IDLE] * 3, False),
        ("Stabilize all", [LAW_STABILIZE] * 5, False),
        ("Synchronize all to P1", [LAW_SYNC_LEADER] + [LAW_SYNC_FOLLOWER] * 4, False),
        (
            "Synchronize P2-P3 to P1",
            [LAW_SYNC_LEADER, LAW_SYNC_FOLLOWER, LAW_SYNC_FOLLOWER, LAW_IDLE, LAW_IDLE],
            False,
        ),
        ("Stabilize all at reference", [LAW_STABILIZE] * 5, True),
        ("Safe", [LAW_SAFE] * 5, False),
    ]
    modes = []
    for mode_id, (name, laws, use_ref) in enumerate(catalog_spec):
        ts = tasks(laws)
        sched = synthesize_schedule(ts, round_period_ms, slot_length_ms)
        modes.append(Mode(id=mode_id, name=name, task_set=ts, schedule=sched, use_cart_reference=use_ref))
    return modes
