"""The synchronous mode-change protocol under message loss.

Drives the per-node state machines directly: the controller announces a
switch five rounds ahead and repeats the announcement in every flood until
the boundary. Every node that hears at least one copy switches atomically at
the boundary. A node that misses everything realizes its epoch is behind on
the first header it hears afterwards, drops to SAFE (zero actuation), and
resynchronizes on the next header.
"""

from wcps.modechange import (
    Announcement,
    NodeProtocolState,
    ProtocolHeader,
    agreement_check,
    initiate,
    on_round,
)

N_NODES = 6
DEAF_NODE = 5

nodes = [NodeProtocolState(node=v, current_mode=0) for v in range(N_NODES)]
controller = nodes[0]

result = initiate(
    target_mode=3, now_round=10, last_switch_round=0, last_epoch=0, tau_min=8, lead_rounds=5
)
assert isinstance(result, Announcement)
print(f"round 10: announce switch to mode {result.target_mode} at round {result.switch_round} "
      f"(epoch {result.epoch})")

pending = result
for r in range(10, 22):
    switched = pending is not None and r >= pending.switch_round
    header = ProtocolHeader(
        mode=pending.target_mode if switched else 0,
        epoch=pending.epoch if switched else 0,
        announcement=pending if (pending and r < pending.switch_round) else None,
    )
    lines = []
    for s in nodes:
        heard = not (s.node == DEAF_NODE and 10 <= r < 17)  # node 5 deaf through the switch
        events = on_round(s, header if heard else None, now_round=r + 1)
        for e in events:
            lines.append(f"    node {s.node}: {e}")
    marks = "".join(
        "S" if s.status == "SAFE" else str(s.current_mode) for s in nodes
    )
    print(f"round {r:>2} -> boundary {r+1:>2}: modes per node [{marks}]"
          + ("  agreement" if agreement_check(nodes) else "  DISAGREEMENT"))
    for line in lines:
        print(line)

print()
print("node 5 missed the announcement and the switch, so for two boundaries it")
print("lagged in the stale mode (its actuation limited to the bounded zero-order")
print("hold of the last delivered command). The first post-switch header revealed")
print("the epoch mismatch: SAFE, zero actuation, then resync one round later.")
print("In the full engine a node that silent this long is also racing the")
print("silence cap; either rule parks it safely.")
