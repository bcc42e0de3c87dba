import numpy as np

from wcps.modechange import (
    Announcement,
    NodeProtocolState,
    ProtocolHeader,
    Rejection,
    STATUS_ACTIVE,
    STATUS_SAFE,
    agreement_check,
    initiate,
    on_round,
)


def fresh_nodes(n, mode=0):
    return [NodeProtocolState(node=i, current_mode=mode) for i in range(n)]


def test_initiate_first_request():
    ann = initiate(target_mode=4, now_round=100, last_switch_round=0, last_epoch=0, tau_min=10)
    assert isinstance(ann, Announcement)
    assert ann.switch_round == 105
    assert ann.epoch == 1


def test_initiate_dwell_rejection_names_earliest_round():
    rej = initiate(target_mode=2, now_round=51, last_switch_round=50, last_epoch=3, tau_min=10)
    assert isinstance(rej, Rejection)
    assert rej.earliest_round == 60


def test_initiate_uncertified_mode_rejected():
    rej = initiate(
        target_mode=9, now_round=100, last_switch_round=0, last_epoch=0, tau_min=1,
        certified_modes={0, 1, 2},
    )
    assert isinstance(rej, Rejection)
    assert rej.earliest_round is None


def run_protocol(n_nodes, n_rounds, announce_at, switch_round, deaf=frozenset(), silence_cap=20):
    """Drive the state machines with a perfect controller header; nodes in
    `deaf` receive nothing from announce_at onward."""
    nodes = fresh_nodes(n_nodes)
    ann = Announcement(target_mode=1, switch_round=switch_round, epoch=1)
    history = []
    for r in range(n_rounds):
        controller_epoch = 1 if r >= switch_round else 0
        controller_mode = 1 if r >= switch_round else 0
        carries = ann if announce_at <= r < switch_round else None
        header = ProtocolHeader(mode=controller_mode, epoch=controller_epoch, announcement=carries)
        for s in nodes:
            rx = None if (s.node in deaf and r >= announce_at) else header
            on_round(s, rx, now_round=r + 1, silence_cap=silence_cap)
        history.append([(s.current_mode, s.current_epoch, s.status) for s in nodes])
    return nodes, history


def test_all_nodes_switch_exactly_at_switch_round():
    nodes, history = run_protocol(5, 12, announce_at=3, switch_round=8)
    for r, snap in enumerate(history):
        # history[r] is the state at the boundary into round r+1
        for mode, epoch, status in snap:
            assert status == STATUS_ACTIVE
            if r + 1 < 8:
                assert (mode, epoch) == (0, 0)
            else:
                assert (mode, epoch) == (1, 1)


def test_node_missing_announcement_goes_safe_then_resyncs():
    deaf_rounds = 10  # deaf node hears nothing from round 3 through 9
    nodes = fresh_nodes(3)
    ann = Announcement(target_mode=1, switch_round=8, epoch=1)
    events_log = []
    for r in range(14):
        post = r >= 8
        header = ProtocolHeader(mode=1 if post else 0, epoch=1 if post else 0,
                                announcement=None if (post or r < 3) else ann)
        for s in nodes:
            rx = None if (s.node == 2 and 3 <= r < deaf_rounds) else header
            events_log.extend((r, s.node, e) for e in on_round(s, rx, now_round=r + 1))
    # the deaf node went SAFE on its first post-switch header (round 10)...
    assert (10, 2, "safe_entry:epoch_behind") in events_log
    # ...and resynced on the next one
    assert (11, 2, "resync") in events_log
    assert nodes[2].status == STATUS_ACTIVE
    assert (nodes[2].current_mode, nodes[2].current_epoch) == (1, 1)


def test_silent_node_hits_silence_cap():
    nodes = fresh_nodes(2)
    header = ProtocolHeader(mode=0, epoch=0)
    events = []
    for r in range(25):
        on_round(nodes[0], header, now_round=r + 1)
        events.extend(on_round(nodes[1], None, now_round=r + 1, silence_cap=20))
    assert nodes[1].status == STATUS_SAFE
    assert "safe_entry:silence" in events
    # 21st silent round trips the cap
    assert events == ["safe_entry:silence"]
    assert nodes[1].rounds_since_last_rx == 25


def test_agreement_check_cases():
    a, b, c = fresh_nodes(3)
    assert agreement_check([a, b, c])
    c.status = STATUS_SAFE
    c.current_mode = 5
    assert agreement_check([a, b, c])  # SAFE nodes exempt
    b.current_mode = 2
    assert not agreement_check([a, b, c])


def test_epochs_monotone_under_random_loss():
    rng = np.random.default_rng(6)
    nodes = fresh_nodes(6)
    epoch_seen = {s.node: 0 for s in nodes}
    controller_mode, controller_epoch = 0, 0
    pending = None
    last_switch = 0
    for r in range(400):
        if pending is None and rng.random() < 0.05 and r - last_switch >= 12:
            pending = Announcement(target_mode=int(rng.integers(0, 8)), switch_round=r + 5,
                                   epoch=controller_epoch + 1)
        if pending and r >= pending.switch_round:
            controller_mode, controller_epoch = pending.target_mode, pending.epoch
            last_switch = pending.switch_round
            pending = None
        header = ProtocolHeader(
            mode=controller_mode, epoch=controller_epoch,
            announcement=pending if pending and r >= pending.switch_round - 5 else None,
        )
        for s in nodes:
            rx = header if rng.random() < 0.8 else None
            on_round(s, rx, now_round=r + 1)
            assert s.current_epoch >= epoch_seen[s.node]
            epoch_seen[s.node] = s.current_epoch
