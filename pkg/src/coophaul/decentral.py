"""Decentralized solvers on a simulated synchronous message-passing network.

Each BS is an agent holding only its local data (the channel column of its
served MS, its row of the affinity matrix, its embedding row).  Protocols
exchange values strictly along the communication graph: the simulator
delivers outboxes edge by edge, so an out-of-neighborhood send fails loudly
and every transported value is counted.

Implemented protocols: consensus ADMM for the clustered sparse-equalizer
problem, exact (spanning-tree) and gossip consensus summation, decentralized
orthogonal iteration for extremal eigenvectors, consensus-Lloyd k-means, and
the full alternating clustering loop built from those pieces.

Single-antenna sites only (one served MS per BS, channel columns aligned so
user b is served by BS b); multi-antenna sites would penalize row blocks
jointly instead of single entries.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sparse_mcp
from .dynclust import Clustering, rcut


class ConfigurationError(ValueError):
    """Communication graph unusable for the requested protocol."""


class ProtocolError(RuntimeError):
    """An agent attempted an out-of-neighborhood message."""


class ConsensusError(RuntimeError):
    """Gossip averaging failed to reach the tolerance in budget."""


class NumericalError(RuntimeError):
    """Repeated numerical failure (e.g. rank-deficient iterate)."""


@dataclass(frozen=True)
class CommGraph:
    """Undirected, connected communication topology over the BS agents."""

    n_agents: int
    edges: tuple  # canonical orientation (b, b') with b < b'

    def __post_init__(self):
        canon = []
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ConfigurationError("self-loops are not allowed")
            e = (min(i, j), max(i, j))
            if not 0 <= e[0] < self.n_agents or e[1] >= self.n_agents:
                raise ConfigurationError("edge endpoint out of range")
            if e not in seen:
                seen.add(e)
                canon.append(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        nbrs = [[] for _ in range(self.n_agents)]
        for i, j in self.edges:
            nbrs[i].append(j)
            nbrs[j].append(i)
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(n)) for n in nbrs))
        object.__setattr__(self, "_bfs", _bfs_structure(self.n_agents, self.neighbors))

    @property
    def degree(self):
        return tuple(len(n) for n in self.neighbors)

    @property
    def connected(self) -> bool:
        return self._bfs is not None

    @property
    def depth(self) -> int:
        return self._bfs[3] if self._bfs else -1

    @property
    def parent(self):
        return self._bfs[0]

    @property
    def children(self):
        return self._bfs[1]

    @property
    def levels(self):
        return self._bfs[2]

    def hop_distances(self) -> np.ndarray:
        n = self.n_agents
        dist = np.full((n, n), -1, dtype=int)
        for src in range(n):
            dist[src] = _bfs_distances(src, n, self.neighbors)
        return dist

    def next_hops(self) -> np.ndarray:
        """next_hops[b, dst] = neighbor to forward to (lowest-index tie-break)."""
        n = self.n_agents
        hops = self.hop_distances()
        nxt = np.full((n, n), -1, dtype=int)
        for b in range(n):
            for dst in range(n):
                if dst == b or hops[b, dst] < 0:
                    continue
                for nb in self.neighbors[b]:
                    if hops[nb, dst] == hops[b, dst] - 1:
                        nxt[b, dst] = nb
                        break
        return nxt


def _bfs_structure(n, neighbors):
    parent = np.full(n, -1, dtype=int)
    depth = np.full(n, -1, dtype=int)
    depth[0] = 0
    order = deque([0])
    while order:
        b = order.popleft()
        for nb in neighbors[b]:
            if depth[nb] < 0:
                depth[nb] = depth[b] + 1
                parent[nb] = b
                order.append(nb)
    if np.any(depth < 0) and n > 1:
        return None
    children = [tuple(int(c) for c in np.flatnonzero(parent == b)) for b in range(n)]
    levels = [tuple(int(b) for b in np.flatnonzero(depth == d)) for d in range(int(depth.max()) + 1)]
    return parent, tuple(children), tuple(levels), int(depth.max())


def _bfs_distances(src, n, neighbors):
    dist = np.full(n, -1, dtype=int)
    dist[src] = 0
    order = deque([src])
    while order:
        b = order.popleft()
        for nb in neighbors[b]:
            if dist[nb] < 0:
                dist[nb] = dist[b] + 1
                order.append(nb)
    return dist


def build_comm_graph(geometry, rule: str = "nearest", k: int = 3, repair_budget: int | None = None) -> CommGraph:
    """Backhaul topology from BS geometry.

    "nearest" links sites at the minimal inter-site distance (connected by
    construction on a hexagonal lattice); "k_nearest" links each site to its
    k closest peers and then adds shortest missing edges until connected,
    raising ConfigurationError if that takes more than repair_budget edges.
    """
    pos = np.asarray(geometry.bs_positions, dtype=float)
    n = pos.shape[0]
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    edges = set()
    if rule == "nearest":
        if n > 1:
            m0 = float(d.min())
            for i in range(n):
                for j in range(i + 1, n):
                    if d[i, j] <= m0 * (1 + 1e-9):
                        edges.add((i, j))
    elif rule == "k_nearest":
        for i in range(n):
            for j in np.argsort(d[i])[: min(k, n - 1)]:
                edges.add((min(i, int(j)), max(i, int(j))))
    else:
        raise ConfigurationError(f"unknown comm-graph rule {rule!r}")

    graph = CommGraph(n, tuple(sorted(edges)))
    if not graph.connected:
        candidates = sorted(
            ((d[i, j], i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges),
        )
        added = 0
        for _, i, j in candidates:
            if graph.connected:
                break
            if repair_budget is not None and added >= repair_budget:
                raise ConfigurationError("graph still disconnected after repair budget")
            edges.add((i, j))
            added += 1
            graph = CommGraph(n, tuple(sorted(edges)))
    return graph


def _payload_entries(payload) -> int:
    if isinstance(payload, (list, tuple)):
        return sum(_payload_entries(p) for p in payload)
    return int(np.size(payload))


class SyncNetwork:
    """Synchronous lock-step message transport restricted to graph edges."""

    def __init__(self, graph: CommGraph):
        self.graph = graph
        self.rounds = 0
        self.messages = 0
        self.payload_entries = 0

    def exchange(self, outboxes: dict) -> dict:
        """Deliver one round of messages.

        outboxes maps src -> {dst: [payload, ...]}; every dst must be a
        one-hop neighbor of src.  Returns inboxes as dst -> {src: [payloads]}.
        """
        inboxes = {b: {} for b in range(self.graph.n_agents)}
        for src, box in outboxes.items():
            for dst, payloads in box.items():
                if dst not in self.graph.neighbors[src]:
                    raise ProtocolError(f"agent {src} cannot reach non-neighbor {dst}")
                self.messages += len(payloads)
                self.payload_entries += _payload_entries(payloads)
                inboxes[dst][src] = list(payloads)
        self.rounds += 1
        return inboxes

    def relay(self, packets) -> dict:
        """Route (src, dst, payload) packets hop by hop along shortest paths.

        Returns delivered payloads as dst -> {origin: payload}.  Costs one
        round per hop of the longest path, one message per packet per hop.
        """
        nxt = self.graph.next_hops()
        holding = {b: [] for b in range(self.graph.n_agents)}
        delivered = {b: {} for b in range(self.graph.n_agents)}
        for src, dst, payload in packets:
            if src == dst:
                delivered[dst][src] = payload
            else:
                holding[src].append((dst, src, payload))
        while any(holding.values()):
            outboxes = {}
            for b, load in holding.items():
                box = {}
                for dst, origin, payload in load:
                    hop = int(nxt[b, dst])
                    if hop < 0:
                        raise ConfigurationError("no route between agents")
                    box.setdefault(hop, []).append((dst, origin, payload))
                if box:
                    outboxes[b] = box
            inboxes = self.exchange(outboxes)
            holding = {b: [] for b in range(self.graph.n_agents)}
            for b, by_src in inboxes.items():
                for _, items in by_src.items():
                    for dst, origin, payload in items:
                        if dst == b:
                            delivered[b][origin] = payload
                        else:
                            holding[b].append((dst, origin, payload))
        return delivered


def consensus_sum(values, graph: CommGraph, mode: str = "exact", *, net: SyncNetwork | None = None,
                  tol: float = 1e-9, max_rounds: int = 5000):
    """Every agent obtains the network-wide sum of the local values.

    "exact" gathers raw values up a BFS spanning tree, folds them at the
    root in agent-index order, and broadcasts the result back down, so all
    copies are bit-identical.  "gossip" runs Metropolis-weight averaging
    until the largest deviation from the mean is below tol and returns the
    average scaled by the number of agents.
    """
    if not graph.connected:
        raise ConfigurationError("consensus requires a connected graph")
    net = net or SyncNetwork(graph)
    vals = [np.asarray(v) for v in values]

    if mode == "exact":
        collected = {b: [(b, vals[b])] for b in range(graph.n_agents)}
        for level in range(graph.depth, 0, -1):
            outboxes = {}
            for b in graph.levels[level]:
                outboxes[b] = {int(graph.parent[b]): [collected.pop(b)]}
            inboxes = net.exchange(outboxes)
            for b, by_src in inboxes.items():
                for _, items in by_src.items():
                    for bundle in items:
                        collected[b].extend(bundle)
        ordered = sorted(collected[0], key=lambda item: item[0])
        total = ordered[0][1].copy()
        for _, v in ordered[1:]:
            total = total + v
        results = [None] * graph.n_agents
        results[0] = total
        frontier = {0: total}
        for level in range(graph.depth):
            outboxes = {}
            for b in graph.levels[level]:
                if graph.children[b]:
                    outboxes[b] = {c: [frontier[b]] for c in graph.children[b]}
            if not outboxes:
                continue
            inboxes = net.exchange(outboxes)
            next_frontier = {}
            for b, by_src in inboxes.items():
                for _, items in by_src.items():
                    results[b] = items[0]
                    next_frontier[b] = items[0]
            frontier = next_frontier
        return [np.array(r) for r in results]

    if mode == "gossip":
        deg = graph.degree
        x = [np.array(v, dtype=float) for v in vals]
        target_rounds = 0
        for _ in range(max_rounds):
            mean = sum(x) / graph.n_agents
            deviation = max(float(np.max(np.abs(xb - mean))) for xb in x)
            if deviation <= tol:
                return [xb * graph.n_agents for xb in x]
            outboxes = {
                b: {nb: [x[b]] for nb in graph.neighbors[b]} for b in range(graph.n_agents)
            }
            inboxes = net.exchange(outboxes)
            new_x = []
            for b in range(graph.n_agents):
                acc = x[b].astype(float).copy()
                for src in sorted(inboxes[b]):
                    w = 1.0 / (1.0 + max(deg[b], deg[src]))
                    acc = acc + w * (inboxes[b][src][0] - x[b])
                new_x.append(acc)
            x = new_x
            target_rounds += 1
        raise ConsensusError(f"gossip did not reach tol={tol} within {max_rounds} rounds")

    raise ValueError(f"unknown consensus mode {mode!r}")


def consensus_vector(local_entries, graph: CommGraph, *, net=None, mode="exact", tol=1e-9):
    """Disseminate one scalar per agent: every agent learns the full vector."""
    n = graph.n_agents
    masked = []
    for b in range(n):
        v = np.zeros(n)
        v[b] = local_entries[b]
        masked.append(v)
    return consensus_sum(masked, graph, mode, net=net, tol=tol)


def consensus_argmax(scores, graph: CommGraph, *, net=None) -> int:
    """Index of the maximal score, ties to the lowest agent index (exact mode)."""
    full = consensus_vector(scores, graph, net=net)[0]
    return int(np.argmax(full))


def aligned_channel(realization):
    """Channel with columns permuted so the MS served by BS b sits in column b.

    Requires a single-antenna scenario with exactly one served MS per BS.
    Returns (H_aligned, permutation) with H_aligned[:, b] the local column of
    agent b.
    """
    if realization.geometry.antennas_per_bs != 1:
        raise ConfigurationError("decentralized protocols assume single-antenna BSs")
    serving = np.asarray(realization.serving_bs)
    counts = np.bincount(serving, minlength=realization.n_bs)
    if np.any(counts != 1):
        raise ConfigurationError("need exactly one served MS per BS")
    perm = np.argsort(serving, kind="stable")
    return realization.H[:, perm], perm


def trivial_groups(n: int) -> sparse_mcp.GroupStructure:
    """Group bookkeeping for the aligned single-antenna case."""
    return sparse_mcp.GroupStructure(n_bs=n, antennas_per_bs=1, serving_bs=np.arange(n))


@dataclass
class AgentState:
    """Local ADMM variables of one BS."""

    index: int
    h: np.ndarray  # channel column of the served MS
    W: np.ndarray
    V: np.ndarray
    U: np.ndarray
    edge_mult: dict  # canonical edge -> multiplier copy held by this agent
    solve_inv: np.ndarray  # constant inverse for the local least-squares step


@dataclass
class RoundLog:
    """Per-round diagnostics of a decentralized run."""

    objective: list = field(default_factory=list)
    objective_gap: list = field(default_factory=list)
    max_disagreement: list = field(default_factory=list)
    dist_to_centralized: list = field(default_factory=list)
    messages: list = field(default_factory=list)
    payload_entries: list = field(default_factory=list)

    def append(self, objective, gap, disagreement, dist, messages, payload):
        self.objective.append(objective)
        self.objective_gap.append(gap)
        self.max_disagreement.append(disagreement)
        self.dist_to_centralized.append(dist)
        self.messages.append(messages)
        self.payload_entries.append(payload)

    def __len__(self):
        return len(self.objective)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["round", "objective_gap", "max_disagreement", "dist_to_centralized",
                 "messages", "payload_entries"]
            )
            for k in range(len(self.objective)):
                writer.writerow(
                    [k, _fmt(self.objective_gap[k]), _fmt(self.max_disagreement[k]),
                     _fmt(self.dist_to_centralized[k]), self.messages[k], self.payload_entries[k]]
                )


def _fmt(x) -> str:
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.12g}"


def _soft_threshold(P: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Entrywise complex soft threshold; zero-threshold entries pass through."""
    mag = np.abs(P)
    scale = np.ones_like(mag)
    mask = thresholds > 0
    safe = np.where(mag > 0, mag, 1.0)
    scale[mask] = np.maximum(0.0, 1.0 - thresholds[mask] / safe[mask])
    scale[mask & (mag == 0)] = 0.0
    return P * scale


def _penalty_value(W: np.ndarray, coeff: np.ndarray) -> float:
    return float(np.sum(coeff * np.abs(W)))


@dataclass
class AdmmResult:
    per_agent_W: list
    log: RoundLog
    agents: list
    converged: bool


def admm_static(
    H: np.ndarray,
    clustering: Clustering | None,
    lam: float,
    rho: float,
    graph: CommGraph,
    rounds: int = 2000,
    *,
    weight_mode: str = "cut",
    reference: np.ndarray | None = None,
    reference_objective: float | None = None,
    net: SyncNetwork | None = None,
    stop_gap: float | None = None,
    stop_dist: float | None = None,
) -> AdmmResult:
    """Consensus-ADMM for the clustered sparse equalizer, one agent per BS.

    H must be aligned (user b served by BS b, single antennas).  Per round
    each agent sends its local filter copy to its neighbors, updates its
    consensus multipliers, solves the penalized proximal step in closed form
    (entrywise soft threshold), and refreshes the local least-squares
    variable through a constant rank-one-corrected inverse.  All local
    copies converge to the centralized solution for any rho > 0.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    H = np.asarray(H, dtype=complex)
    n = H.shape[1]
    if H.shape[0] != n:
        raise ConfigurationError("aligned single-antenna channel must be square")
    if graph.n_agents != n or n < 2:
        raise ConfigurationError("graph size must match the number of BSs (>= 2)")
    if not graph.connected:
        raise ConfigurationError("communication graph must be connected")

    if clustering is None:
        coeff = sparse_mcp.PenaltySpec("distributed").coefficients(n)
    else:
        kind = {"cut": "static_cut", "rcut": "ratio_cut_fixed"}[weight_mode]
        coeff = sparse_mcp.PenaltySpec(kind, clustering=clustering).coefficients(n)

    alpha = 1.0 / n + rho / 2.0
    agents = []
    for b in range(n):
        h = H[:, b]
        # (h h^H + alpha I)^-1 via the rank-one inversion identity
        inv = (np.eye(n) - np.outer(h, h.conj()) / (alpha + float(np.real(np.vdot(h, h))))) / alpha
        agents.append(
            AgentState(
                index=b,
                h=h,
                W=np.zeros((n, n), dtype=complex),
                V=np.zeros((n, n), dtype=complex),
                U=np.zeros((n, n), dtype=complex),
                edge_mult={e: np.zeros((n, n), dtype=complex) for e in graph.edges if b in e},
                solve_inv=inv,
            )
        )

    net = net or SyncNetwork(graph)
    log = RoundLog()
    ref = None if reference is None else np.asarray(reference)
    ref_norm = float(np.linalg.norm(ref)) if ref is not None else 0.0
    converged = False

    for _ in range(rounds):
        msg_before, payload_before = net.messages, net.payload_entries
        outboxes = {
            b: {nb: [agents[b].W] for nb in graph.neighbors[b]} for b in range(n)
        }
        inboxes = net.exchange(outboxes)

        new_W = [None] * n
        for b in range(n):
            me = agents[b]
            peers = {src: inboxes[b][src][0] for src in inboxes[b]}
            me.V = me.V + (me.W - me.U)
            centers = [me.U - me.V]
            for e in me.edge_mult:
                lo, hi = e
                other = hi if b == lo else lo
                me.edge_mult[e] = me.edge_mult[e] + 0.5 * (
                    (me.W - peers[other]) if b == lo else (peers[other] - me.W)
                )
                midpoint = 0.5 * (me.W + peers[other])
                centers.append(midpoint - me.edge_mult[e] if b == lo else midpoint + me.edge_mult[e])
            degree = len(me.edge_mult)
            anchor = sum(centers) / (1 + degree)
            thresholds = (lam / n) * coeff / (rho * (1 + degree))
            new_W[b] = _soft_threshold(anchor, thresholds)

        for b in range(n):
            me = agents[b]
            me.W = new_W[b]
            linear = np.zeros((n, n), dtype=complex)
            linear[b, :] = me.h.conj()
            me.U = (linear + (rho / 2.0) * (me.W + me.V)) @ me.solve_inv

        objective = 0.0
        for b in range(n):
            me = agents[b]
            resid = -me.W @ me.h
            resid[b] += 1.0
            objective += float(np.real(np.vdot(resid, resid)))
            objective += float(np.linalg.norm(me.W) ** 2) / n
            objective += (lam / n) * _penalty_value(me.W, coeff)

        disagreement = max(
            float(np.linalg.norm(agents[i].W - agents[j].W)) for i, j in graph.edges
        )
        gap = (
            abs(objective - reference_objective)
            if reference_objective is not None
            else float("nan")
        )
        dist = (
            max(float(np.linalg.norm(a.W - ref)) for a in agents) / ref_norm
            if ref is not None and ref_norm > 0
            else float("nan")
        )
        log.append(
            objective, gap, disagreement, dist,
            net.messages - msg_before, net.payload_entries - payload_before,
        )
        if stop_gap is not None and stop_dist is not None and not math.isnan(gap):
            if gap <= stop_gap and dist <= stop_dist:
                converged = True
                break

    return AdmmResult(
        per_agent_W=[a.W for a in agents], log=log, agents=agents, converged=converged
    )


@dataclass
class OIResult:
    rows: np.ndarray  # (n_agents, n_dim); row b lives at agent b
    eig_magnitudes: np.ndarray  # descending estimates for the dominant block
    iterations: int
    eig_history: list
    projector_change: list
    projectors: list  # per-iteration Q Q^T when tracking was requested


def decentralized_oi(
    rows,
    n_dim: int,
    graph: CommGraph,
    *,
    seed: int = 0,
    tol: float = 1e-12,
    max_iters: int = 3000,
    consensus: str = "exact",
    gossip_tol: float = 1e-9,
    retries: int = 5,
    net: SyncNetwork | None = None,
    track_projectors: bool = False,
) -> OIResult:
    """Orthogonal iteration with per-agent rows and consensus orthonormalization.

    Agent b holds row b of the symmetric affinity matrix and maintains its
    row of the eigenvector block.  Each iteration collects the neighbors'
    rows (relayed along shortest paths when the affinity support exceeds the
    one-hop neighborhood), forms the local outer product, consensus-sums it
    into the Gram matrix, and orthonormalizes through a shared Cholesky
    factor.  Eigenvalue magnitudes are the square roots of the Gram diagonal.
    """
    rows = [np.asarray(r, dtype=float) for r in rows]
    n = graph.n_agents
    if len(rows) != n:
        raise ConfigurationError("need one affinity row per agent")
    net = net or SyncNetwork(graph)
    rng = np.random.default_rng(seed)
    neighbor_sets = [
        tuple(sorted(set([b]) | set(np.flatnonzero(rows[b] != 0.0).tolist())))
        for b in range(n)
    ]

    for _ in range(retries + 1):
        q_all = list(rng.standard_normal((n, n_dim)))
        prev_projector = None
        eig_history = []
        projector_change = []
        projectors = []
        failed = False
        K = None
        for it in range(max_iters):
            packets = [
                (src, b, q_all[src])
                for b in range(n)
                for src in neighbor_sets[b]
                if src != b
            ]
            delivered = net.relay(packets)
            available = [
                {src: (q_all[b] if src == b else delivered[b][src]) for src in neighbor_sets[b]}
                for b in range(n)
            ]
            psi = []
            for b in range(n):
                acc = np.zeros(n_dim)
                for src in neighbor_sets[b]:
                    acc = acc + rows[b][src] * available[b][src]
                psi.append(acc)
            K_parts = [np.outer(p, p) for p in psi]
            K_all = consensus_sum(K_parts, graph, consensus, net=net, tol=gossip_tol)
            try:
                chol = [np.linalg.cholesky(Kb) for Kb in K_all]
            except np.linalg.LinAlgError:
                failed = True
                break
            q_all = [np.linalg.solve(chol[b], psi[b]) for b in range(n)]
            K = K_all[0]
            eig_history.append(np.sqrt(np.diag(K)))

            Q = np.array(q_all)
            projector = Q @ Q.T
            if track_projectors:
                projectors.append(projector)
            if prev_projector is not None:
                change = float(np.linalg.norm(projector - prev_projector))
                projector_change.append(change)
                if change <= tol:
                    break
            prev_projector = projector
        if not failed:
            return OIResult(
                rows=np.array(q_all),
                eig_magnitudes=np.sqrt(np.diag(K)),
                iterations=len(eig_history),
                eig_history=eig_history,
                projector_change=projector_change,
                projectors=projectors,
            )
    raise NumericalError("orthogonal iteration kept producing singular Gram matrices")


def oi_reference(A: np.ndarray, n_dim: int, seed: int = 0, iters: int = 100) -> np.ndarray:
    """Centralized mirror of the decentralized iteration (same arithmetic order).

    Intended as a test oracle: with exact consensus both runs produce
    bit-identical iterates, so any divergence is a protocol bug.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    rng = np.random.default_rng(seed)
    q_all = list(rng.standard_normal((n, n_dim)))
    neighbor_sets = [
        tuple(sorted(set([b]) | set(np.flatnonzero(A[b] != 0.0).tolist()))) for b in range(n)
    ]
    for _ in range(iters):
        psi = []
        for b in range(n):
            acc = np.zeros(n_dim)
            for src in neighbor_sets[b]:
                acc = acc + A[b][src] * q_all[src]
            psi.append(acc)
        total = np.outer(psi[0], psi[0])
        for p in psi[1:]:
            total = total + np.outer(p, p)
        chol = np.linalg.cholesky(total)
        q_all = [np.linalg.solve(chol, p) for p in psi]
    return np.array(q_all)


def smallest_eigvecs_decentralized(
    rows,
    n_clusters: int,
    graph: CommGraph,
    *,
    shift_eps: float = 0.1,
    seed: int = 0,
    net: SyncNetwork | None = None,
    **oi_kwargs,
):
    """Rows of the smallest-eigenvalue eigenvector block of a symmetric matrix.

    Two phases: the dominant eigenvalue magnitude is estimated first, then
    orthogonal iteration runs on (|eig_1| + eps) I - M, which is positive
    definite with the eigenvalue order reversed, so its dominant block is
    the wanted smallest-eigenvalue block.
    """
    rows = [np.asarray(r, dtype=float) for r in rows]
    net = net or SyncNetwork(graph)
    phase1 = decentralized_oi(rows, 1, graph, seed=seed, net=net, **oi_kwargs)
    shift = float(phase1.eig_magnitudes[0]) + shift_eps
    shifted = []
    for b, row in enumerate(rows):
        r = -row.copy()
        r[b] += shift
        shifted.append(r)
    phase2 = decentralized_oi(shifted, n_clusters, graph, seed=seed + 1, net=net, **oi_kwargs)
    return phase2, phase1


def decentralized_kmeans(
    rows,
    n_clusters: int,
    graph: CommGraph,
    seed: int = 0,
    *,
    consensus: str = "exact",
    max_iters: int = 200,
    net: SyncNetwork | None = None,
) -> Clustering:
    """Consensus-Lloyd clustering of per-agent embedding rows.

    A shared seed selects the initial centroids (masked consensus sums of
    the chosen agents' rows), each agent assigns only its own row, and the
    centroid refresh exchanges cluster sums and counts, never raw rows of
    other agents.  With exact consensus the label sequence matches a
    centralized Lloyd run started from the same centroids bit for bit.
    """
    if not graph.connected:
        raise ConfigurationError("k-means consensus requires a connected graph")
    points = [np.asarray(r, dtype=float) for r in rows]
    n = graph.n_agents
    d = points[0].size
    net = net or SyncNetwork(graph)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(n, size=n_clusters, replace=False)

    masked = []
    for b in range(n):
        m = np.zeros((n_clusters, d))
        for c, idx in enumerate(chosen):
            if b == idx:
                m[c] = points[b]
        masked.append(m)
    centroids = consensus_sum(masked, graph, consensus, net=net)[0]

    def assign(p, cents):
        return int(np.argmin(((p - cents) ** 2).sum(axis=1)))

    labels = [assign(points[b], centroids) for b in range(n)]
    for _ in range(max_iters):
        contrib = []
        for b in range(n):
            m = np.zeros((n_clusters, d + 1))
            m[labels[b], :d] = points[b]
            m[labels[b], d] = 1.0
            contrib.append(m)
        totals = consensus_sum(contrib, graph, consensus, net=net)
        sums, counts = totals[0][:, :d], totals[0][:, d]
        new_centroids = centroids.copy()
        for c in range(n_clusters):
            if counts[c] > 0:
                new_centroids[c] = sums[c] / counts[c]
        empties = [c for c in range(n_clusters) if counts[c] == 0]
        if empties:
            dist_to_own = [
                float(((points[b] - new_centroids[labels[b]]) ** 2).sum()) for b in range(n)
            ]
            for c in empties:
                # argmax ties resolve to the lowest agent index
                winner = consensus_argmax(dist_to_own, graph, net=net)
                row = consensus_sum(
                    [points[b] if b == winner else np.zeros(d) for b in range(n)],
                    graph, consensus, net=net,
                )[0]
                new_centroids[c] = row
        centroids = new_centroids
        new_labels = [assign(points[b], centroids) for b in range(n)]
        changed = consensus_sum(
            [np.array(float(new_labels[b] != labels[b])) for b in range(n)],
            graph, consensus, net=net,
        )[0]
        labels = new_labels
        if float(changed) == 0.0:
            break

    full = consensus_vector([float(l) for l in labels], graph, net=net)[0]
    return Clustering(full.astype(int), n_clusters)


@dataclass
class DynamicDecentralizedResult:
    clustering: Clustering
    per_agent_W: list
    objective_trace: np.ndarray
    admm_logs: list
    iterations: int
    net: SyncNetwork


def dynamic_decentralized(
    H: np.ndarray,
    lam: float,
    n_clusters: int,
    graph: CommGraph,
    *,
    rho: float = 0.1,
    admm_rounds: int = 800,
    seed: int = 0,
    eps: float = 1e-6,
    max_outer: int = 20,
    shift_eps: float = 0.1,
    oi_max_iters: int = 2000,
    net: SyncNetwork | None = None,
) -> DynamicDecentralizedResult:
    """Fully decentralized alternating clustering and equalizer refinement.

    Bootstraps a consensus least-squares filter (penalty-free ADMM), then
    alternates: local traffic rows -> decentralized smallest-eigenvector
    block -> consensus-Lloyd clusters -> ratio-cut-weighted ADMM, with the
    consensus objective driving the stopping test.  Objective increases are
    rejected, mirroring the centralized alternation.
    """
    H = np.asarray(H, dtype=complex)
    n = H.shape[1]
    groups = trivial_groups(n)
    net = net or SyncNetwork(graph)

    boot = admm_static(H, None, 0.0, rho, graph, admm_rounds, net=net)
    per_agent_W = boot.per_agent_W
    admm_logs = [boot.log]

    labels = None
    trace = []
    obj_prev = np.inf
    best = None
    for outer in range(max_outer):
        lap_rows = []
        for b in range(n):
            traffic = sparse_mcp.backhaul_matrix(per_agent_W[b], groups)
            sym = 0.5 * (traffic + traffic.T)
            row = -sym[b]
            row[b] = traffic[b].sum()
            lap_rows.append(row)
        phase2, _ = smallest_eigvecs_decentralized(
            lap_rows, n_clusters, graph,
            shift_eps=shift_eps, seed=seed + 17 * outer, net=net, max_iters=oi_max_iters,
        )
        clustering = decentralized_kmeans(
            list(phase2.rows), n_clusters, graph, seed=seed + 31 * outer, net=net
        )
        run = admm_static(
            H, clustering, lam, rho, graph, admm_rounds, weight_mode="rcut", net=net
        )
        per_agent_W = run.per_agent_W
        admm_logs.append(run.log)

        contribs = []
        for b in range(n):
            W = per_agent_W[b]
            resid = -W @ H[:, b]
            resid[b] += 1.0
            local = float(np.real(np.vdot(resid, resid))) + float(np.linalg.norm(W) ** 2) / n
            traffic = sparse_mcp.backhaul_matrix(W, groups)
            local += (lam / n) * rcut(traffic, clustering) if lam > 0 else 0.0
            contribs.append(np.array(local))
        objective = float(consensus_sum(contribs, graph, "exact", net=net)[0])

        if objective > obj_prev:
            break
        best = (clustering, per_agent_W)
        trace.append(objective)
        if obj_prev - objective < eps:
            break
        obj_prev = objective

    clustering, per_agent_W = best
    return DynamicDecentralizedResult(
        clustering=clustering,
        per_agent_W=per_agent_W,
        objective_trace=np.array(trace),
        admm_logs=admm_logs,
        iterations=len(trace),
        net=net,
    )
