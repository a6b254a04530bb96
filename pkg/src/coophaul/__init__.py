"""coophaul: backhaul-aware multi-cell uplink cooperation.

Sparse (group-lasso) LMMSE equalizer design with backhaul-traffic
penalties, static and spectral-clustering-based dynamic BS clustering, and
decentralized consensus implementations simulated on a synchronous
message-passing network.
"""

__version__ = "0.1.0"

from . import decentral, dynclust, equalize, experiments, netmodel, presets, sparse_mcp

__all__ = [
    "decentral",
    "dynclust",
    "equalize",
    "experiments",
    "netmodel",
    "presets",
    "sparse_mcp",
]
