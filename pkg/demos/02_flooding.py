"""Many-to-all flooding over the three-hop demo mesh.

Builds the 20-node, four-cluster topology (hop diameter 3 from the controller)
and measures per-hop reception statistics of controller-initiated floods as
the per-link probability degrades. The wavefront bound holds throughout:
nothing is ever received earlier than its hop distance.
"""

import numpy as np

from wcps.network import FloodConfig, build_topology, hop_distance, simulate_flood

rng = np.random.default_rng(7)
N_FLOODS = 5000

print(f"{'link p':>7} | {'hop1 rx':>8} {'hop2 rx':>8} {'hop3 rx':>8} | {'mean slots to hop3':>18}")
for link_p in (1.0, 0.9, 0.7, 0.5, 0.3, 0.15, 0.1):
    topo = build_topology("three_hop_demo", {"link_p": link_p}, np.random.default_rng(1))
    hops = np.array([hop_distance(topo, 0, v) for v in topo.nodes])
    cfg = FloodConfig(n_tx=3, slots_per_flood=9)
    rx_by_hop = {1: [], 2: [], 3: []}
    slots_hop3 = []
    for _ in range(N_FLOODS):
        out = simulate_flood(topo, 0, cfg, rng)
        assert all(
            out.first_rx_slot[v] >= hops[v] for v in topo.nodes if out.received[v]
        ), "wavefront bound violated"
        for h in (1, 2, 3):
            nodes_h = np.nonzero(hops == h)[0]
            rx_by_hop[h].append(out.received[nodes_h].mean())
        got3 = [out.first_rx_slot[v] for v in np.nonzero(hops == 3)[0] if out.received[v]]
        if got3:
            slots_hop3.append(np.mean(got3))
    print(
        f"{link_p:>7.2f} | "
        f"{np.mean(rx_by_hop[1]):>8.4f} {np.mean(rx_by_hop[2]):>8.4f} {np.mean(rx_by_hop[3]):>8.4f} | "
        f"{np.mean(slots_hop3):>18.2f}"
    )

print()
print("Each node hears up to nine neighbors, each retransmitting three times,")
print("so the flood shrugs off heavy per-link loss; reception at three hops only")
print("starts to crumble once links drop toward 0.1.")
