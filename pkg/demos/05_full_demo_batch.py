"""A full desk-scale run of the demo: 20 nodes, five pendulums, mode changes,
a node carried out of range, and the metrics that come out the other end.

Equivalent CLI: wcps run --config <file> --out metrics.csv --manifest manifest.json
"""

import json

from wcps.config import default_config
from wcps.engine import export_metrics, run

cfg = default_config()
cfg.seed = 11
cfg.duration_rounds = 1200  # 60 s at 50 ms rounds
cfg.topology_params = {"link_p": 0.9}
cfg.scripted_events = [
    {"round": 100, "type": "mode_request", "mode": 4},   # synchronize all to P1
    {"round": 400, "type": "mode_request", "mode": 6},   # stabilize at a reference
    {"round": 405, "type": "set_reference", "x": 0.3},
    {"round": 700, "type": "move_node", "node": 19, "x": 60.0, "y": 0.0},  # carry away
    {"round": 900, "type": "mode_request", "mode": 3},   # back to stabilize-all
]

result = run(cfg)

print("events:")
for entry in result.trace:
    for ev in entry.events:
        if ev["kind"] in ("announce", "mode_changed", "safe_entry", "resync",
                          "node_moved", "stale_estimate", "fall"):
            print(f"  round {entry.round:>4}: {ev}")

m = result.metrics
print()
print("metrics over 60 s:")
print("  RMS pole angle (rad):", [round(v, 4) for v in m.rms_theta])
print("  max |angle| (rad):   ", [round(v, 4) for v in m.max_abs_theta])
print("  falls:", m.fall_count, " safe entries:", m.safe_entries)
print("  switches attempted/completed:", m.switches_attempted, "/", m.switches_completed)
print("  radio-on time per round:", round(m.energy_ms_per_round, 1), "ms")
print("  worst node reception rate:", round(min(m.node_rx_rate), 4))

with open("metrics.csv", "w") as f:
    f.write(export_metrics(result.trace))
with open("manifest.json", "w") as f:
    json.dump(result.manifest, f, indent=2)
print()
print("wrote metrics.csv and manifest.json")
print("replaying the same config reproduces this trace byte for byte.")
