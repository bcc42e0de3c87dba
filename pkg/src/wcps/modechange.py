"""Synchronous mode-change protocol.

The controller announces a future switch round; the announcement rides in
every flood until the switch. All nodes that hold the announcement switch
atomically at the boundary. A node that cannot prove agreement (it sees an
epoch ahead of its own, or has heard nothing for silence_cap rounds) drops
into SAFE: zero actuation until a consistent header lets it resynchronize.
The epoch counter, not the mode id, is the agreement token, so A->B->A
sequences stay distinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass

STATUS_ACTIVE = "ACTIVE"
STATUS_SAFE = "SAFE"


@dataclass(frozen=True)
class Announcement:
    """A scheduled switch: target mode, the round it fires, its epoch."""

    target_mode: int
    switch_round: int
    epoch: int


@dataclass(frozen=True)
class ProtocolHeader:
    """Protocol metadata carried by every flood: the sender-side truth."""

    mode: int
    epoch: int
    announcement: Announcement | None = None


@dataclass
class NodeProtocolState:
    """Per-node protocol state machine."""

    node: int
    current_mode: int
    current_epoch: int = 0
    pending: Announcement | None = None
    status: str = STATUS_ACTIVE
    rounds_since_last_rx: int = 0


@dataclass(frozen=True)
class Rejection:
    """A refused mode-change request and the earliest admissible round."""

    reason: str
    earliest_round: int | None = None


def initiate(
    target_mode: int,
    now_round: int,
    last_switch_round: int,
    last_epoch: int,
    tau_min: int,
    lead_rounds: int = 5,
    certified_modes: set[int] | None = None,
) -> Announcement | Rejection:
    """Controller-side request gate: dwell check, then schedule the switch.

    Accepted requests switch at now_round + lead_rounds with the next epoch.
    Rejections carry the earliest admissible round (dwell violations) or None
    (uncertified target).
    """
    if certified_modes is not None and target_mode not in certified_modes:
        return Rejection(reason=f"mode {target_mode} is not certified")
    if now_round - last_switch_round < tau_min:
        return Rejection(
            reason="dwell-time window still open",
            earliest_round=last_switch_round + tau_min,
        )
    return Announcement(
        target_mode=target_mode,
        switch_round=now_round + lead_rounds,
        epoch=last_epoch + 1,
    )


def on_round(
    state: NodeProtocolState,
    rx: ProtocolHeader | None,
    now_round: int,
    silence_cap: int = 20,
) -> list[str]:
    """Advance one node's state machine at a round boundary.

    Called exactly once per node per boundary; now_round is the index of the
    round about to start, rx the header heard during the round just finished
    (None when every flood was missed). Returns event tags:
    'switch', 'safe_entry:<reason>', 'resync'.

    All abnormal paths land in SAFE; a SAFE node that hears a consistent
    header adopts its mode and epoch and returns to ACTIVE.
    """
    events: list[str] = []

    if rx is None:
        state.rounds_since_last_rx += 1
        if state.status == STATUS_ACTIVE and state.rounds_since_last_rx > silence_cap:
            state.status = STATUS_SAFE
            state.pending = None
            events.append("safe_entry:silence")
    else:
        state.rounds_since_last_rx = 0
        if state.status == STATUS_SAFE:
            state.current_mode = rx.mode
            state.current_epoch = rx.epoch
            state.pending = rx.announcement if (
                rx.announcement is not None and rx.announcement.epoch == rx.epoch + 1
            ) else None
            state.status = STATUS_ACTIVE
            events.append("resync")
        elif rx.epoch > state.current_epoch:
            # Missed the announcement and the switch already happened.
            state.status = STATUS_SAFE
            state.pending = None
            events.append("safe_entry:epoch_behind")
        elif rx.announcement is not None and rx.announcement.epoch > state.current_epoch:
            state.pending = rx.announcement

    if (
        state.status == STATUS_ACTIVE
        and state.pending is not None
        and now_round >= state.pending.switch_round
    ):
        if (
            state.pending.epoch == state.current_epoch + 1
            and now_round == state.pending.switch_round
        ):
            state.current_mode = state.pending.target_mode
            state.current_epoch = state.pending.epoch
            events.append("switch")
        else:
            # Stale or inconsistent pending switch: cannot prove agreement.
            state.status = STATUS_SAFE
            events.append("safe_entry:stale_pending")
        state.pending = None

    return events


def agreement_check(states: list[NodeProtocolState]) -> bool:
    """True iff all ACTIVE nodes share (current_mode, current_epoch)."""
    active = [(s.current_mode, s.current_epoch) for s in states if s.status == STATUS_ACTIVE]
    return len(set(active)) <= 1
