"""BS clustering: graph cuts, spectral embedding, k-means, and the
alternating sparse-equalizer / cluster refinement loop, plus the greedy
sum-rate clustering baseline."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import sparse_mcp
from .equalize import Equalizer, lmmse, mse


class PartitionError(ValueError):
    """Operation requires a partition without empty clusters."""


@dataclass(frozen=True)
class Clustering:
    """Non-overlapping, exhaustive assignment of BSs to n_clusters groups.

    Empty clusters are representable (a degenerate k-means outcome) and are
    surfaced through has_empty; cut/rcut style operations reject them.
    """

    labels: np.ndarray  # (n_bs,) ints in [0, n_clusters)
    n_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if self.n_clusters < 1 or np.any(labels < 0) or np.any(labels >= self.n_clusters):
            raise ValueError("labels out of range")

    @classmethod
    def from_sets(cls, sets, n_bs: int) -> "Clustering":
        labels = np.full(n_bs, -1, dtype=int)
        for c, members in enumerate(sets):
            labels[np.asarray(list(members), dtype=int)] = c
        if np.any(labels < 0):
            raise ValueError("sets do not cover every BS")
        return cls(labels, len(list(sets)))

    @property
    def n_bs(self) -> int:
        return self.labels.size

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)

    @property
    def has_empty(self) -> bool:
        return bool(np.any(self.sizes() == 0))

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def cluster_heads(self) -> np.ndarray:
        """Lowest-index member of each cluster (head-election convention)."""
        heads = np.full(self.n_clusters, -1, dtype=int)
        for c in range(self.n_clusters):
            members = self.members(c)
            if members.size:
                heads[c] = members[0]
        return heads

    def to_csv(self, path, bs_positions=None, include_roles: bool = False) -> None:
        heads = set(self.cluster_heads().tolist()) if include_roles else set()
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            if bs_positions is None:
                writer.writerow(["bs", "cluster"])
                for b, c in enumerate(self.labels):
                    writer.writerow([b, int(c)])
            else:
                header = ["bs", "x_m", "y_m", "cluster"]
                if include_roles:
                    header.append("role")
                writer.writerow(header)
                for b, c in enumerate(self.labels):
                    x, y = bs_positions[b]
                    row = [b, f"{x:.12g}", f"{y:.12g}", int(c)]
                    if include_roles:
                        row.append("head" if b in heads else "member")
                    writer.writerow(row)


def singletons(n_bs: int) -> Clustering:
    return Clustering(np.arange(n_bs), n_bs)


def cut(traffic_matrix: np.ndarray, clustering: Clustering) -> float:
    """Sum of cross-cluster affinities (both edge directions)."""
    m = np.asarray(traffic_matrix, dtype=float)
    labels = clustering.labels
    cross = labels[:, None] != labels[None, :]
    return float(m[cross].sum())


def rcut(traffic_matrix: np.ndarray, clustering: Clustering) -> float:
    """Size-normalized cut: sum_c s(B_c, complement) / |B_c|."""
    if clustering.has_empty:
        raise PartitionError("ratio cut undefined for empty clusters")
    m = np.asarray(traffic_matrix, dtype=float)
    labels = clustering.labels
    total = 0.0
    for c in range(clustering.n_clusters):
        inside = labels == c
        total += float(m[np.ix_(inside, ~inside)].sum()) / int(inside.sum())
    return total


def indicator(clustering: Clustering) -> np.ndarray:
    """Orthonormal cluster-indicator matrix (entries 1/sqrt(cluster size))."""
    if clustering.has_empty:
        raise PartitionError("indicator undefined for empty clusters")
    sizes = clustering.sizes()
    phi = np.zeros((clustering.n_bs, clustering.n_clusters))
    phi[np.arange(clustering.n_bs), clustering.labels] = 1.0 / np.sqrt(
        sizes[clustering.labels]
    )
    return phi


@dataclass(frozen=True)
class LaplacianPair:
    degree: np.ndarray  # out-degree vector (row sums)
    laplacian: np.ndarray  # D - affinity (rows sum to zero)
    sym: np.ndarray  # symmetrized (L + L^T)/2


def laplacian_pair(traffic_matrix: np.ndarray) -> LaplacianPair:
    m = np.asarray(traffic_matrix, dtype=float)
    degree = m.sum(axis=1)
    lap = np.diag(degree) - m
    return LaplacianPair(degree=degree, laplacian=lap, sym=0.5 * (lap + lap.T))


@dataclass(frozen=True)
class SpectralEmbedding:
    vectors: np.ndarray  # (n_bs, n_clusters), ascending-eigenvalue order
    eigenvalues: np.ndarray


def spectral_embedding(traffic_matrix: np.ndarray, n_clusters: int) -> SpectralEmbedding:
    """Eigenvectors of the symmetrized Laplacian for the smallest eigenvalues.

    Eigenvector signs are fixed by making the largest-magnitude coordinate
    positive so downstream k-means sees reproducible inputs.
    """
    pair = laplacian_pair(traffic_matrix)
    eigenvalues, vectors = np.linalg.eigh(pair.sym)
    vectors = vectors[:, :n_clusters].copy()
    for j in range(vectors.shape[1]):
        i = int(np.argmax(np.abs(vectors[:, j])))
        if vectors[i, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return SpectralEmbedding(vectors=vectors, eigenvalues=eigenvalues[:n_clusters])


def _ordered_sums(points: np.ndarray, labels: np.ndarray, k: int):
    """Cluster sums/counts accumulated in index order.

    Sequential accumulation makes the arithmetic identical to a consensus
    sum folded in agent-index order, which the decentralized mirror relies
    on for bit-for-bit equivalence.
    """
    sums = np.zeros((k, points.shape[1]))
    counts = np.zeros(k, dtype=int)
    for i in range(points.shape[0]):
        sums[labels[i]] += points[i]
        counts[labels[i]] += 1
    return sums, counts


def _assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d, axis=1)  # ties resolve to the lowest cluster index


@dataclass
class LloydRun:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_trace: list = field(default_factory=list)


def lloyd(points: np.ndarray, centroids: np.ndarray, max_iters: int = 300) -> LloydRun:
    """Plain Lloyd iterations from given centroids.

    Empty clusters are repaired by splitting the largest cluster: its point
    farthest from the centroid becomes the empty cluster's new centroid.  If
    repair is impossible (fewer distinct points than clusters) the empty
    cluster survives and the caller sees it via Clustering.has_empty.
    """
    points = np.asarray(points, dtype=float)
    centroids = np.array(centroids, dtype=float)
    k = centroids.shape[0]
    labels = _assign(points, centroids)
    trace = []
    for _ in range(max_iters):
        sums, counts = _ordered_sums(points, labels, k)
        for c in np.flatnonzero(counts == 0):
            big = int(np.argmax(counts))
            if counts[big] < 2:
                continue
            members = np.flatnonzero(labels == big)
            far = members[
                int(np.argmax(((points[members] - centroids[big]) ** 2).sum(axis=1)))
            ]
            labels[far] = c
            sums, counts = _ordered_sums(points, labels, k)
        nonzero = counts > 0
        centroids[nonzero] = sums[nonzero] / counts[nonzero, None]
        new_labels = _assign(points, centroids)
        inertia = float(((points - centroids[new_labels]) ** 2).sum())
        trace.append(inertia)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return LloydRun(
        labels=labels,
        centroids=centroids,
        inertia=trace[-1] if trace else 0.0,
        inertia_trace=trace,
    )


def kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """D^2-weighted seeding; falls back to uniform when all distances vanish."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[rng.integers(n)]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans(points: np.ndarray, n_clusters: int, restarts: int = 20, seed: int = 0) -> Clustering:
    """Best-of-restarts k-means++ / Lloyd; deterministic given the seed."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    points = np.asarray(points, dtype=float)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        run = lloyd(points, kmeans_pp_init(points, n_clusters, rng))
        if best is None or run.inertia < best.inertia:
            best = run
    return Clustering(best.labels, n_clusters)


def spectral_cluster(
    traffic_matrix: np.ndarray, n_clusters: int, restarts: int = 20, seed: int = 0
) -> Clustering:
    """Spectral relaxation of the minimum ratio cut followed by k-means."""
    n_bs = np.asarray(traffic_matrix).shape[0]
    if not 1 <= n_clusters <= n_bs:
        raise ValueError("n_clusters must lie in [1, n_bs]")
    embedding = spectral_embedding(traffic_matrix, n_clusters)
    return kmeans(embedding.vectors, n_clusters, restarts=restarts, seed=seed)


def intra_cluster_traffic(clustering: Clustering, mode: str = "distributed") -> int:
    """Within-cluster sample-exchange cost under full-mesh or cluster-head sharing."""
    sizes = clustering.sizes()
    if mode == "distributed":
        return int(np.sum(sizes * (sizes - 1)))
    if mode == "head":
        return int(np.sum(np.maximum(sizes - 1, 0)))
    raise ValueError(f"unknown intra-cluster traffic mode {mode!r}")


@dataclass
class DynamicClusteringResult:
    clustering: Clustering
    equalizer: Equalizer
    objective_trace: np.ndarray  # accepted alternation objectives, non-increasing
    iterations: int
    degenerate: bool  # True when lam == 0 (clusters carry no information)


def dynamic_mcp(
    H: np.ndarray,
    groups: sparse_mcp.GroupStructure,
    lam: float,
    n_clusters: int,
    w0=None,
    eps: float = 1e-8,
    opts: sparse_mcp.SolverOptions | None = None,
    seed: int = 0,
    max_rounds: int = 50,
    kmeans_restarts: int = 20,
) -> DynamicClusteringResult:
    """Alternate spectral clustering of the traffic graph with the
    cluster-weighted sparse equalizer solve until the joint objective stalls.

    A step that would increase the objective (possible because the spectral
    step solves a relaxation) is rejected and iteration stops; accepted
    objectives are therefore non-increasing.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    W = np.array(getattr(w0, "W", w0), dtype=complex) if w0 is not None else lmmse(H).W
    if opts is None:
        # default tolerance scaled to the channel's gradient magnitude
        scale = max(1.0, float(np.abs(H).max()) ** 2)
        opts = sparse_mcp.SolverOptions(kkt_tol=1e-6 * scale)
    solver_opts = opts

    best_clusters = None
    best_eq = None
    trace = []
    obj_prev = np.inf
    for it in range(max_rounds):
        traffic = sparse_mcp.backhaul_matrix(W, groups)
        clusters = spectral_cluster(
            traffic, n_clusters, restarts=kmeans_restarts, seed=seed + it
        )
        penalty = sparse_mcp.PenaltySpec("ratio_cut_fixed", clustering=clusters)
        eq = sparse_mcp.solve_group_lasso(H, groups, penalty, lam, solver_opts, warm_start=W)
        new_traffic = sparse_mcp.backhaul_matrix(eq.W, groups)
        obj = mse(eq.W, H) + (lam * rcut(new_traffic, clusters) if lam > 0 else 0.0)
        if obj > obj_prev:
            break  # relaxation made things worse; keep the last accepted state
        W = eq.W
        best_clusters, best_eq = clusters, eq
        trace.append(obj)
        if obj_prev - obj < eps:
            break
        obj_prev = obj

    return DynamicClusteringResult(
        clustering=best_clusters,
        equalizer=best_eq,
        objective_trace=np.array(trace),
        iterations=len(trace),
        degenerate=(lam == 0.0),
    )


def cluster_lmmse(H: np.ndarray, groups: sparse_mcp.GroupStructure, clustering: Clustering) -> Equalizer:
    """Per-cluster joint MMSE built from in-cluster knowledge only.

    Each cluster decodes its served users from its own antennas with the
    MMSE filter for the cluster's channel and unit noise; out-of-cluster
    signals are neither backhauled nor modeled, so they act as unmodeled
    interference at evaluation time.  With a single all-BS cluster this is
    exactly the network-wide MMSE filter.
    """
    W = np.zeros((groups.n_users, groups.n_antennas), dtype=complex)
    a = groups.antennas_per_bs
    for c in range(clustering.n_clusters):
        members = clustering.members(c)
        if members.size == 0:
            continue
        ants = np.concatenate([np.arange(b * a, (b + 1) * a) for b in members])
        users = np.flatnonzero(np.isin(groups.serving_bs, members))
        Hcc = H[np.ix_(ants, users)]
        cov = Hcc @ Hcc.conj().T + np.eye(ants.size)
        W[np.ix_(users, ants)] = np.linalg.solve(cov, Hcc).conj().T
    return Equalizer(W=W, groups=groups)


def _cluster_sum_rate(H, groups, members, serving_bs) -> float:
    a = groups.antennas_per_bs
    members = np.asarray(sorted(members))
    ants = np.concatenate([np.arange(b * a, (b + 1) * a) for b in members])
    users = np.flatnonzero(np.isin(serving_bs, members))
    Hc = H[ants, :]
    Hcc = Hc[:, users]
    cov = Hcc @ Hcc.conj().T + np.eye(ants.size)
    Wc = np.linalg.solve(cov, Hcc).conj().T  # users x cluster antennas
    gains = Wc @ Hc  # interference from every user, in or out of cluster
    signal = np.abs(gains[np.arange(users.size), users]) ** 2
    total = np.sum(np.abs(gains) ** 2, axis=1)
    noise = np.sum(np.abs(Wc) ** 2, axis=1)
    denom = total - signal + noise
    sinr = np.divide(signal, denom, out=np.zeros_like(signal), where=denom > 0)
    return float(np.sum(np.log2(1.0 + sinr)))


def greedy_cluster(
    H: np.ndarray, groups: sparse_mcp.GroupStructure, cluster_size: int
) -> tuple[Clustering, Equalizer]:
    """Sequential sum-rate-greedy cluster formation.

    Each cluster starts from the lowest-index unclustered BS and grows by
    the BS giving the largest cluster sum-rate until cluster_size is
    reached (the last cluster may be smaller).  Within clusters, full joint
    MMSE cooperation; no inter-cluster backhauling.
    """
    if cluster_size < 1:
        raise ValueError("cluster_size must be >= 1")
    n_bs = groups.n_bs
    labels = np.full(n_bs, -1, dtype=int)
    unassigned = list(range(n_bs))
    c = 0
    while unassigned:
        members = [unassigned.pop(0)]
        while len(members) < cluster_size and unassigned:
            scores = [
                _cluster_sum_rate(H, groups, members + [cand], groups.serving_bs)
                for cand in unassigned
            ]
            members.append(unassigned.pop(int(np.argmax(scores))))
        labels[members] = c
        c += 1
    clustering = Clustering(labels, c)
    return clustering, cluster_lmmse(H, groups, clustering)
