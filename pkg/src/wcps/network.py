"""Slot-level simulation of synchronous-transmission floods on a multi-hop mesh.

Constructive-interference radio physics is replaced by a per-link Bernoulli
slot model: a node that first receives in slot s retransmits in slots
s+1 .. s+n_tx, and a listener receives in slot s when at least one independent
per-link draw from a transmitting neighbor succeeds. This keeps the properties
the control layer relies on (bounded latency, broadcast semantics, independent
loss) without modeling the PHY.

Link probabilities derive from pairwise distance: p = 1 within r_full, then a
linear ramp to 0 at r_max. Generators may override all link probabilities with
a uniform value for loss experiments.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

R_FULL_DEFAULT = 1.0
R_MAX_DEFAULT = 2.0


@dataclass(frozen=True)
class Topology:
    """Node set, symmetric per-link slot-success probabilities, 2D positions."""

    link_p: np.ndarray  # (n, n) symmetric, zero diagonal
    positions: np.ndarray  # (n, 2)
    r_full: float = R_FULL_DEFAULT
    r_max: float = R_MAX_DEFAULT

    def __post_init__(self):
        n = self.link_p.shape[0]
        if n < 1:
            raise ConfigError("Topology needs at least one node")
        if self.link_p.shape != (n, n) or not np.allclose(self.link_p, self.link_p.T):
            raise ConfigError("Topology.link_p must be a symmetric n x n matrix")
        if np.any(np.diag(self.link_p) != 0):
            raise ConfigError("Topology must not contain self-links")
        if self.positions.shape != (n, 2):
            raise ConfigError("Topology.positions must be (n, 2)")
        if ((self.link_p < 0) | (self.link_p > 1)).any():
            raise ConfigError("link probabilities must lie in [0, 1]")

    @property
    def n_nodes(self) -> int:
        return self.link_p.shape[0]

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    def links(self) -> list[tuple[int, int, float]]:
        """(i, j, p) for every i < j with p > 0."""
        ii, jj = np.nonzero(np.triu(self.link_p, k=1))
        return [(int(i), int(j), float(self.link_p[i, j])) for i, j in zip(ii, jj)]


@dataclass(frozen=True)
class FloodConfig:
    """Retransmission count, slot budget, and the jitter bound per flood."""

    n_tx: int = 3
    slots_per_flood: int = 9
    jitter_bound_us: float = 50.0

    def __post_init__(self):
        if self.n_tx < 1:
            raise ConfigError(f"FloodConfig.n_tx must be >= 1, got {self.n_tx}")
        if self.slots_per_flood < self.n_tx:
            raise ConfigError("FloodConfig.slots_per_flood must be >= n_tx")


@dataclass(frozen=True)
class FloodOutcome:
    """Per-node reception results of one flood.

    first_rx_slot uses -1 for "never received"; the initiator always shows
    slot 0.
    """

    initiator: int
    received: np.ndarray  # (n,) bool
    first_rx_slot: np.ndarray  # (n,) int, -1 when not received
    jitter_draw_us: float


def _ramp_probabilities(positions: np.ndarray, r_full: float, r_max: float) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    p = np.clip((r_max - dist) / (r_max - r_full), 0.0, 1.0)
    np.fill_diagonal(p, 0.0)
    return p


def build_topology(generator: str, params: dict | None = None, rng: np.random.Generator | None = None) -> Topology:
    """Construct a named topology; deterministic given the rng seed.

    Generators:
      line          n nodes spaced 1.0 apart, adjacent links at probability p
      grid          rows x cols unit grid, 4-neighbor links at probability p
      three_hop_demo  20 nodes in four clusters; hop diameter from the
                      controller (node 0) is exactly 3
    Any generator accepts link_p to override every existing link probability.
    """
    params = dict(params or {})
    rng = rng if rng is not None else np.random.default_rng(0)
    override = params.pop("link_p", None)

    if generator == "line":
        n = int(params.pop("n", 4))
        p = float(params.pop("p", 1.0))
        if n < 1:
            raise ConfigError("line generator needs n >= 1")
        positions = np.column_stack([np.arange(n, dtype=float), np.zeros(n)])
        link_p = np.zeros((n, n))
        for i in range(n - 1):
            link_p[i, i + 1] = link_p[i + 1, i] = p
    elif generator == "grid":
        rows = int(params.pop("rows", 2))
        cols = int(params.pop("cols", 2))
        p = float(params.pop("p", 1.0))
        n = rows * cols
        positions = np.array([[float(c), float(r)] for r in range(rows) for c in range(cols)])
        link_p = np.zeros((n, n))
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                if c + 1 < cols:
                    j = i + 1
                    link_p[i, j] = link_p[j, i] = p
                if r + 1 < rows:
                    j = i + cols
                    link_p[i, j] = link_p[j, i] = p
    elif generator == "three_hop_demo":
        # Four clusters of five nodes along x; adjacent clusters in ramp range,
        # non-adjacent ones beyond r_max, so cluster index = hop count from
        # the controller in cluster 0.
        y_offsets = np.array([0.0, 0.2, -0.2, 0.4, -0.4])
        positions = np.zeros((20, 2))
        for c in range(4):
            for j in range(5):
                node = 5 * c + j
                positions[node, 0] = 1.2 * c
                positions[node, 1] = y_offsets[j] + rng.uniform(-0.05, 0.05)
        link_p = _ramp_probabilities(positions, R_FULL_DEFAULT, R_MAX_DEFAULT)
    else:
        raise ConfigError(f"unknown topology generator {generator!r}")

    if params:
        raise ConfigError(f"unknown {generator} generator params: {sorted(params)}")
    if override is not None:
        override = float(override)
        if not 0.0 <= override <= 1.0:
            raise ConfigError(f"link_p override must lie in [0, 1], got {override}")
        link_p = np.where(link_p > 0, override, 0.0)

    topo = Topology(link_p=link_p, positions=positions)
    if generator == "three_hop_demo":
        ecc = max(hop_distance(topo, 0, v) for v in topo.nodes)
        assert ecc == 3, f"three_hop_demo construction broke: eccentricity {ecc}"
    return topo


def hop_distance(t: Topology, a: int, b: int) -> int:
    """BFS shortest-path hop count over links with p > 0; -1 if unreachable."""
    if a == b:
        return 0
    n = t.n_nodes
    dist = np.full(n, -1, dtype=int)
    dist[a] = 0
    queue = deque([a])
    while queue:
        u = queue.popleft()
        for v in np.nonzero(t.link_p[u] > 0)[0]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                if v == b:
                    return int(dist[v])
                queue.append(int(v))
    return int(dist[b])


def hop_eccentricity(t: Topology, a: int) -> int:
    """Largest hop distance from node a; -1 when some node is unreachable."""
    dists = [hop_distance(t, a, v) for v in t.nodes]
    return -1 if any(d < 0 for d in dists) else max(dists)


def is_connected(t: Topology) -> bool:
    """Connectivity of the p > 0 link graph."""
    return all(hop_distance(t, 0, v) >= 0 for v in t.nodes)


def move_node(t: Topology, node: int, new_position: tuple[float, float]) -> Topology:
    """Pure update: reposition one node, recompute all link probabilities
    from the distance ramp."""
    if node not in t.nodes:
        raise ConfigError(f"move_node: unknown node {node}")
    positions = t.positions.copy()
    positions[node] = new_position
    link_p = _ramp_probabilities(positions, t.r_full, t.r_max)
    return replace(t, link_p=link_p, positions=positions)


def simulate_flood(
    t: Topology,
    initiator: int,
    cfg: FloodConfig,
    rng: np.random.Generator,
) -> FloodOutcome:
    """One slot-synchronous flood from the initiator.

    A node first receiving in slot s transmits in slots s+1 .. s+n_tx (the
    initiator counts as received in slot 0). Reception in a slot needs at
    least one successful independent per-link draw from a transmitting
    neighbor. Deterministic given the rng state.
    """
    if initiator not in t.nodes:
        raise ConfigError(f"simulate_flood: unknown initiator {initiator}")
    n = t.n_nodes
    jitter = float(rng.uniform(-cfg.jitter_bound_us, cfg.jitter_bound_us))
    rx_slot = np.full(n, -1, dtype=int)
    rx_slot[initiator] = 0
    for s in range(1, cfg.slots_per_flood):
        listening = rx_slot < 0
        if not listening.any():
            break
        transmitting = (rx_slot >= 0) & (rx_slot < s) & (s <= rx_slot + cfg.n_tx)
        if not transmitting.any():
            break
        listen_idx = np.nonzero(listening)[0]
        tx_idx = np.nonzero(transmitting)[0]
        p_sub = t.link_p[np.ix_(listen_idx, tx_idx)]
        draws = rng.random(p_sub.shape)
        success = (draws < p_sub).any(axis=1)
        rx_slot[listen_idx[success]] = s
    return FloodOutcome(
        initiator=initiator,
        received=rx_slot >= 0,
        first_rx_slot=rx_slot,
        jitter_draw_us=jitter,
    )
