"""Drive a live session programmatically: the same serialized inbox the
dashboard uses, then a bit-exact batch replay of the recorded command log.

For the real browser dashboard, run instead:

    wcps serve --port 8080 --ui frontend/dist

and open http://127.0.0.1:8080/ — mode buttons, live pendulum animation, and
a draggable node map. This script exercises the identical command path
without a browser.
"""

import time

from wcps.config import config_from_dict, default_config
from wcps.engine import replay
from wcps.gateway import SessionRunner

cfg = default_config()
cfg.topology_params = {"link_p": 0.9}

session = SessionRunner(cfg, pace_s=0.002, max_rounds=200)  # 25x realtime
session.start()
print("engine running; injecting operator commands...")

sent_sync = sent_move = False
while session.world.round < 200:
    r = session.world.round
    if not sent_sync and r >= 40:
        session.submit({"type": "mode_request", "mode": 4})
        sent_sync = True
    if not sent_move and r >= 120:
        session.submit({"type": "move_node", "node": 19, "x": 50.0, "y": 0.0})
        sent_move = True
    time.sleep(0.005)
session.stop()

trace, metrics, manifest = session.result()
log = session.command_log
print(f"live session finished: {len(trace)} rounds, command log: {log}")

frame = None
for entry in trace:
    for ev in entry.events:
        if ev["kind"] in ("mode_changed", "safe_entry"):
            print(f"  round {entry.round:>3}: {ev}")

batch_cfg = config_from_dict({**cfg.to_dict(), "duration_rounds": len(trace)})
res = replay(batch_cfg, log)
print("replay reproduces the live trace:", res.trace == trace)
