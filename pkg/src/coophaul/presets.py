"""Named cluster presets for the canonical 19-site layout.

The seven-cluster partition is a reconstruction read off the reference
network map (center site alone, six petals of an inner-ring site with its
two outward neighbors); it is isolated here so a corrected transcription
only touches this file.
"""

from __future__ import annotations

import numpy as np

from .dynclust import Clustering

# Indices refer to hex_layout(rings=2) site ordering (sorted by y, then x).
SEVEN_CLUSTER_SETS = (
    (9,),
    (0, 1, 4),
    (2, 5, 6),
    (3, 7, 8),
    (10, 11, 15),
    (12, 13, 16),
    (14, 17, 18),
)


def seven_clusters() -> Clustering:
    return Clustering.from_sets(SEVEN_CLUSTER_SETS, 19)


def derive_seven_clusters(geometry) -> Clustering:
    """Recompute the preset from geometry (consistency check for the table)."""
    pos = np.asarray(geometry.bs_positions)
    if pos.shape[0] != 19:
        raise ValueError("seven-cluster preset is defined for the 19-site layout")
    radius = np.linalg.norm(pos, axis=1)
    isd = np.sqrt(3.0) * geometry.cell_radius_m
    center = int(np.argmin(radius))
    inner = sorted(np.flatnonzero(np.abs(radius - isd) < 1e-6 * isd).tolist())
    outer = sorted(set(range(19)) - {center} - set(inner))
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    claimed: set[int] = set()
    sets = [(center,)]
    for i in inner:
        near = [o for o in outer if d[i, o] < isd * 1.01 and o not in claimed]
        take = tuple(sorted(near)[:2])
        claimed.update(take)
        sets.append((i,) + take)
    return Clustering.from_sets(sets, 19)


def clustering_preset(name: str, n_bs: int) -> Clustering:
    """Resolve a named preset or an explicit comma-separated label list."""
    if name in ("seven_clusters", "fig_seven", "fig1_seven"):
        if n_bs != 19:
            raise ValueError("seven-cluster preset requires 19 BSs (rings=2)")
        return seven_clusters()
    if name == "singletons":
        return Clustering(np.arange(n_bs), n_bs)
    if "," in name:
        labels = np.array([int(v) for v in name.split(",")])
        if labels.size != n_bs:
            raise ValueError(f"explicit clustering must label all {n_bs} BSs")
        return Clustering(labels, int(labels.max()) + 1)
    raise ValueError(f"unknown clustering preset {name!r}")
