"""Linear uplink equalization and receiver-side performance metrics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def _as_matrix(w) -> np.ndarray:
    """Accept either a raw matrix or an Equalizer-like object."""
    return np.asarray(getattr(w, "W", w))


@dataclass(frozen=True)
class Equalizer:
    """Receive filter W (rows index users, columns index BS antennas)."""

    W: np.ndarray
    groups: object | None = None  # sparse_mcp.GroupStructure when available
    info: object | None = None  # solver diagnostics when produced iteratively


def lmmse(H: np.ndarray, groups=None) -> Equalizer:
    """Minimum mean-square-error filter (H^H H + I)^-1 H^H for unit noise."""
    H = np.asarray(H, dtype=complex)
    n_users = H.shape[1]
    gram = H.conj().T @ H + np.eye(n_users)
    W = np.linalg.solve(gram, H.conj().T)
    return Equalizer(W=W, groups=groups)


def mse(w, H: np.ndarray) -> float:
    """Total estimation error ||I - W H||_F^2 + ||W||_F^2 (unit noise power)."""
    W = _as_matrix(w)
    H = np.asarray(H)
    resid = np.eye(W.shape[0]) - W @ H
    return float(np.linalg.norm(resid) ** 2 + np.linalg.norm(W) ** 2)


@dataclass(frozen=True)
class RateReport:
    """Per-user SINRs/rates plus the aggregates the experiment plots use."""

    sinr: np.ndarray  # (n_users,) linear
    rate: np.ndarray  # (n_users,) bits/s/Hz
    serving_bs: np.ndarray
    n_bs: int

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.rate))

    @property
    def per_cell_rate(self) -> float:
        return self.sum_rate / self.n_bs

    def sorted_rates(self) -> np.ndarray:
        return np.sort(self.rate)

    def cdf_points(self):
        """Empirical CDF sample points (rate, P[rate <= value])."""
        r = self.sorted_rates()
        return r, np.arange(1, r.size + 1) / r.size

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user", "bs", "sinr_linear", "rate_bps_hz"])
            for u in range(self.rate.size):
                writer.writerow(
                    [u, int(self.serving_bs[u]), f"{self.sinr[u]:.12g}", f"{self.rate[u]:.12g}"]
                )


def rates(w, H: np.ndarray, serving_bs: np.ndarray, n_bs: int | None = None) -> RateReport:
    """Linear-receiver SINRs and Shannon rates.

    SINR_u = |w_u h_u|^2 / (sum_{u' != u} |w_u h_u'|^2 + ||w_u||^2), with h_u
    the u-th column of H and w_u the u-th row of W.  An all-zero row yields
    SINR 0 by convention.
    """
    W = _as_matrix(w)
    H = np.asarray(H, dtype=complex)
    serving_bs = np.asarray(serving_bs, dtype=int)
    if n_bs is None:
        n_bs = int(serving_bs.max()) + 1

    gains = W @ H  # (n_users, n_users); diagonal is the useful signal
    signal = np.abs(np.diag(gains)) ** 2
    interference = np.sum(np.abs(gains) ** 2, axis=1) - signal
    noise = np.sum(np.abs(W) ** 2, axis=1)
    denom = interference + noise
    sinr = np.divide(signal, denom, out=np.zeros_like(signal), where=denom > 0)
    return RateReport(
        sinr=sinr, rate=np.log2(1.0 + sinr), serving_bs=serving_bs, n_bs=n_bs
    )


def write_cdf_csv(samples: np.ndarray, path) -> None:
    """Sorted (rate, empirical_cdf) pairs; the last CDF value is exactly 1."""
    r = np.sort(np.asarray(samples, dtype=float))
    ecdf = np.arange(1, r.size + 1) / r.size
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rate", "cdf"])
        for value, p in zip(r, ecdf):
            writer.writerow([f"{value:.12g}", f"{p:.12g}"])
