"""Backhaul-aware sparse equalizer design via weighted group lasso.

The cross-BS blocks of the receive filter are penalized by their joint
2-norms, so a whole block (every weight linking one BS's users to another
BS's antennas) is either active, costing one unit of backhaul, or exactly
zero.  A monotone accelerated proximal-gradient solver minimizes

    ||I - W H||_F^2 + ||W||_F^2 + lam * sum_g c_g ||W_g||_2

with per-group coefficients c_g encoding the cooperation mode.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .equalize import Equalizer, mse


class InvalidPenaltyError(ValueError):
    """Penalty has no positively weighted group where one is required."""


class SolverError(RuntimeError):
    """Solver hit the iteration budget; carries the last iterate."""

    def __init__(self, message, equalizer=None, kkt=None):
        super().__init__(message)
        self.equalizer = equalizer
        self.kkt = kkt


@dataclass(frozen=True)
class GroupStructure:
    """Index bookkeeping for the cross-BS blocks of W.

    Group (b, b') with b != b' collects the entries (u, a) with u served by
    BS b and antenna a belonging to BS b'.  The diagonal blocks (a user's
    own serving BS) are never penalized.  The association may be unbalanced
    (a BS can serve any number of users, including none); a BS's empty
    groups simply carry zero norm.
    """

    n_bs: int
    antennas_per_bs: int
    serving_bs: np.ndarray  # (n_users,)

    def __post_init__(self):
        serving = np.asarray(self.serving_bs, dtype=int)
        object.__setattr__(self, "serving_bs", serving)
        if serving.ndim != 1 or np.any(serving < 0) or np.any(serving >= self.n_bs):
            raise ValueError("serving_bs must hold BS indices in [0, n_bs)")
        membership = np.zeros((self.n_bs, serving.size))
        membership[serving, np.arange(serving.size)] = 1.0
        object.__setattr__(self, "_membership", membership)
        antenna_bs = np.repeat(np.arange(self.n_bs), self.antennas_per_bs)
        object.__setattr__(self, "antenna_bs", antenna_bs)
        object.__setattr__(
            self, "unpenalized_mask", serving[:, None] == antenna_bs[None, :]
        )

    @classmethod
    def from_realization(cls, realization) -> "GroupStructure":
        g = realization.geometry
        return cls(
            n_bs=g.n_bs,
            antennas_per_bs=g.antennas_per_bs,
            serving_bs=realization.serving_bs,
        )

    @property
    def n_users(self) -> int:
        return self.serving_bs.size

    @property
    def n_antennas(self) -> int:
        return self.n_bs * self.antennas_per_bs

    @property
    def n_groups(self) -> int:
        return self.n_bs * (self.n_bs - 1)

    def users_of(self, b: int) -> np.ndarray:
        return np.flatnonzero(self.serving_bs == b)

    def counts(self) -> np.ndarray:
        return np.bincount(self.serving_bs, minlength=self.n_bs)

    def group_sqnorms(self, W: np.ndarray) -> np.ndarray:
        """Squared 2-norm of every (b, b') block, including the diagonal."""
        per_user = np.real(W * np.conj(W))
        per_bs = self._membership @ per_user  # (n_bs, n_antennas)
        return per_bs.reshape(self.n_bs, self.n_bs, self.antennas_per_bs).sum(axis=2)

    def expand(self, per_group: np.ndarray) -> np.ndarray:
        """Broadcast a per-group (n_bs, n_bs) factor to entry shape."""
        return per_group[self.serving_bs][:, self.antenna_bs]

    def scale_groups(self, W: np.ndarray, scale: np.ndarray) -> np.ndarray:
        """Multiply block (b, b') by scale[b, b']; used by the group prox."""
        return W * self.expand(scale)


@dataclass(frozen=True)
class PenaltySpec:
    """Per-group coefficients for one cooperation mode.

    distributed      : every cross-BS block costs 1.
    static_cut       : only blocks crossing the fixed clusters cost 1.
    ratio_cut_fixed  : cross-cluster blocks cost 1/|cluster of the source BS|
                       (the size-normalized cut, clusters held fixed).

    per_bs_weights are optional relative multipliers applied to all groups
    whose source (user-side) BS is b, modeling per-BS backhaul severity.
    """

    kind: str = "distributed"
    clustering: object | None = None  # Clustering or plain label array
    per_bs_weights: np.ndarray | None = None

    def labels(self) -> np.ndarray:
        if self.clustering is None:
            raise InvalidPenaltyError(f"penalty kind {self.kind!r} needs a clustering")
        return np.asarray(getattr(self.clustering, "labels", self.clustering), dtype=int)

    def coefficients(self, n_bs: int) -> np.ndarray:
        """(n_bs, n_bs) coefficient matrix with an exactly zero diagonal."""
        if self.kind == "distributed":
            coeff = np.ones((n_bs, n_bs))
        elif self.kind in ("static_cut", "ratio_cut_fixed"):
            labels = self.labels()
            if labels.size != n_bs:
                raise InvalidPenaltyError("clustering size does not match n_bs")
            cross = (labels[:, None] != labels[None, :]).astype(float)
            if self.kind == "static_cut":
                coeff = cross
            else:
                sizes = np.bincount(labels, minlength=labels.max() + 1)
                coeff = cross / sizes[labels][:, None]
        else:
            raise InvalidPenaltyError(f"unknown penalty kind {self.kind!r}")
        if self.per_bs_weights is not None:
            w = np.asarray(self.per_bs_weights, dtype=float)
            if w.shape != (n_bs,) or np.any(w < 0):
                raise InvalidPenaltyError("per_bs_weights must be n_bs nonnegative values")
            coeff = coeff * w[:, None]
        np.fill_diagonal(coeff, 0.0)
        return coeff


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 200_000
    kkt_tol: float = 1e-7  # absolute; primary stopping test
    rel_obj_tol: float = 0.0  # optional pragmatic stop (0 disables)
    step_scale: float = 1.0  # multiplier on the 1/L gradient step
    zero_tol: float = 1e-6  # relative threshold for l0 traffic counting
    check_every: int = 25

    def __post_init__(self):
        if self.kkt_tol <= 0 or self.zero_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0 < self.step_scale <= 1.0:
            raise ValueError("step_scale must lie in (0, 1]")


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    kkt: float
    objective: float
    objective_trace: np.ndarray
    lam: float


def backhaul_matrix(w, groups: GroupStructure) -> np.ndarray:
    """Per-BS-pair traffic weights: 2-norms of the cross blocks, zero diagonal."""
    W = np.asarray(getattr(w, "W", w))
    norms = np.sqrt(groups.group_sqnorms(W))
    np.fill_diagonal(norms, 0.0)
    return norms


def backhaul_traffic(traffic_matrix: np.ndarray, zero_tol: float = 1e-6) -> int:
    """Number of active cross-BS links (off-diagonal entries above threshold)."""
    if zero_tol <= 0:
        raise ValueError("zero_tol must be positive")
    m = np.asarray(traffic_matrix, dtype=float)
    threshold = zero_tol * max(1.0, float(m.max(initial=0.0)))
    mask = m > threshold
    np.fill_diagonal(mask, False)
    return int(np.count_nonzero(mask))


def _smooth_terms(H: np.ndarray):
    """Precomputations for f(W) = ||I - W H||_F^2 + ||W||_F^2."""
    H = np.asarray(H, dtype=complex)
    n_antennas = H.shape[0]
    gram = H @ H.conj().T + np.eye(n_antennas)  # Hessian/2 of every row
    target = H.conj().T  # f's linear term; also the gradient root: grad = 2(W gram - target)
    lipschitz = 2.0 * float(np.linalg.eigvalsh(gram)[-1])
    return gram, target, lipschitz


def _objective(W, WG, target, lam_coeff, groups):
    n_users = W.shape[0]
    smooth = (
        n_users
        - 2.0 * float(np.real(np.vdot(target, W)))
        + float(np.real(np.vdot(W, WG)))
    )
    if lam_coeff is None:
        return smooth
    norms = np.sqrt(groups.group_sqnorms(W))
    return smooth + float(np.sum(lam_coeff * norms))


def restricted_lmmse(H: np.ndarray, groups: GroupStructure, support=None) -> np.ndarray:
    """Least-squares filter with rows confined to per-BS antenna supports.

    By default row u is supported on the antennas of its serving BS only,
    the no-cooperation operating point.  support, a boolean (n_bs, n_bs)
    matrix whose row b flags the BSs whose antennas serve BS b's users,
    widens that (e.g. to intra-cluster cooperation).
    """
    H = np.asarray(H, dtype=complex)
    W = np.zeros((groups.n_users, groups.n_antennas), dtype=complex)
    a = groups.antennas_per_bs
    if support is None:
        support = np.eye(groups.n_bs, dtype=bool)
    for b in range(groups.n_bs):
        users = np.flatnonzero(groups.serving_bs == b)
        if users.size == 0:
            continue
        ants = np.flatnonzero(np.repeat(support[b], a))
        Hb = H[ants, :]
        cov = Hb @ Hb.conj().T + np.eye(ants.size)
        W[np.ix_(users, ants)] = np.linalg.solve(cov, Hb[:, users]).conj().T
    return W


def _gradient(W, gram, target):
    return 2.0 * (W @ gram - target)


def kkt_residual(w, H: np.ndarray, groups: GroupStructure, penalty: PenaltySpec, lam: float) -> float:
    """Max violation of the first-order optimality system; zero iff optimal.

    Checks (i) the gradient on unpenalized (own-BS) entries, (ii) the
    subgradient identity on active groups, (iii) the dual-norm bound
    max(0, ||grad_g|| - lam*c_g) on zero groups.
    """
    W = np.asarray(getattr(w, "W", w), dtype=complex)
    gram, target, _ = _smooth_terms(H)
    lam_coeff = lam * penalty.coefficients(groups.n_bs)
    return _kkt_from_parts(W, W @ gram, target, lam_coeff, groups)


def lambda_max(H: np.ndarray, groups: GroupStructure, penalty: PenaltySpec) -> float:
    """Smallest penalty level at which every weighted group is exactly zero.

    The anchor point is the least squares over every zero-penalty entry:
    own-BS blocks plus any group with zero coefficient (intra-cluster
    blocks under clustered penalties cost nothing and stay active at any
    penalty level).  The all-penalized-groups-zero solution is optimal iff
    ||grad_g|| <= lam*c_g for all groups, so lam_max is the largest
    weighted gradient norm at that anchor.
    """
    coeff = penalty.coefficients(groups.n_bs)
    if not np.any(coeff > 0):
        raise InvalidPenaltyError("lambda_max undefined: no group has positive weight")
    gram, target, _ = _smooth_terms(H)
    support = (coeff == 0) | np.eye(groups.n_bs, dtype=bool)
    W0 = restricted_lmmse(H, groups, support=support)
    grad = _gradient(W0, gram, target)
    grad_norms = np.sqrt(groups.group_sqnorms(grad))
    mask = coeff > 0
    return float(np.max(grad_norms[mask] / coeff[mask]))


def solve_group_lasso(
    H: np.ndarray,
    groups: GroupStructure,
    penalty: PenaltySpec,
    lam: float,
    opts: SolverOptions | None = None,
    warm_start=None,
) -> Equalizer:
    """Minimize the penalized MSE objective by monotone accelerated proximal descent.

    The smooth part is quadratic with an exactly known Lipschitz constant,
    and the penalty prox is a per-group block soft threshold, so each
    iteration is closed form.  Acceleration restarts whenever the objective
    would increase, which keeps the accepted objective trace non-increasing.
    Convergence is certified by the KKT residual dropping below
    opts.kkt_tol; exceeding the iteration budget raises SolverError with the
    last iterate attached.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    opts = opts or SolverOptions()
    H = np.asarray(H, dtype=complex)
    gram, target, lipschitz = _smooth_terms(H)
    step = opts.step_scale / lipschitz
    coeff = penalty.coefficients(groups.n_bs)
    lam_coeff = lam * coeff
    shrink = step * lam_coeff

    def prox(V):
        if lam == 0.0:
            return V
        sq = groups.group_sqnorms(V)
        norms = np.sqrt(sq)
        scale = np.ones_like(norms)
        mask = shrink > 0
        safe = np.where(norms > 0, norms, 1.0)
        scale[mask] = np.maximum(0.0, 1.0 - shrink[mask] / safe[mask])
        scale[mask & (norms == 0)] = 0.0
        return groups.scale_groups(V, scale)

    if warm_start is not None:
        X = np.array(getattr(warm_start, "W", warm_start), dtype=complex)
    else:
        X = restricted_lmmse(H, groups)
    X = prox(X)  # make the starting support consistent with the penalty

    XG = X @ gram
    f_x = _objective(X, XG, target, lam_coeff, groups)
    trace = [f_x]
    Y = X
    YG = XG
    t = 1.0
    iterations = 0
    residual = math.inf
    converged = False

    for k in range(opts.max_iterations):
        iterations = k + 1
        grad_y = 2.0 * (YG - target)
        Z = prox(Y - step * grad_y)
        ZG = Z @ gram
        f_z = _objective(Z, ZG, target, lam_coeff, groups)

        # monotone safeguard with an ulp-level slack: sub-resolution objective
        # noise must not freeze the iterate short of the KKT tolerance
        if f_z <= f_x + 16.0 * np.spacing(abs(f_x)):
            X_new, XG_new, f_new = Z, ZG, min(f_z, f_x)
            restart = f_z > f_x
        else:
            X_new, XG_new, f_new = X, XG, f_x
            restart = True

        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if restart:
            Y, YG, t_next = X_new, XG_new, 1.0
        else:
            momentum = (t - 1.0) / t_next
            lead = t / t_next
            # x_k = X_new, x_{k-1} = X (pre-update), z_k = Z
            Y = X_new + lead * (Z - X_new) + momentum * (X_new - X)
            YG = XG_new + lead * (ZG - XG_new) + momentum * (XG_new - XG)

        X, XG, f_x = X_new, XG_new, f_new
        t = t_next
        trace.append(f_new)

        if (k + 1) % opts.check_every == 0 or k == opts.max_iterations - 1:
            residual = _kkt_from_parts(X, XG, target, lam_coeff, groups)
            if residual <= opts.kkt_tol:
                converged = True
                break
            if opts.rel_obj_tol > 0 and len(trace) > opts.check_every:
                prev = trace[-1 - opts.check_every]
                if abs(prev - f_new) <= opts.rel_obj_tol * max(1.0, abs(f_new)):
                    converged = True  # pragmatic stop; kkt recorded in info
                    break

    info = SolveInfo(
        iterations=iterations,
        kkt=residual,
        objective=trace[-1],
        objective_trace=np.array(trace),
        lam=lam,
    )
    eq = Equalizer(W=X, groups=groups, info=info)
    if not converged:
        raise SolverError(
            f"no convergence in {opts.max_iterations} iterations "
            f"(kkt residual {residual:.3e} > {opts.kkt_tol:.3e})",
            equalizer=eq,
            kkt=residual,
        )
    return eq


def _kkt_from_parts(W, WG, target, lam_coeff, groups) -> float:
    grad = 2.0 * (WG - target)
    w_norms = np.sqrt(groups.group_sqnorms(W))

    worst = float(np.abs(grad[groups.unpenalized_mask]).max())

    diag = np.eye(groups.n_bs, dtype=bool)
    zero_like = w_norms <= 1e-14 * max(1.0, float(w_norms.max(initial=0.0)))
    active = ~diag & ~zero_like
    if np.any(active):
        factor = np.where(active, lam_coeff / np.where(w_norms > 0, w_norms, 1.0), 0.0)
        shrunk_sq = groups.group_sqnorms(grad + groups.scale_groups(W, factor))
        worst = max(worst, float(np.sqrt(shrunk_sq[active].max())))
    idle = ~diag & zero_like
    if np.any(idle):
        grad_norms = np.sqrt(groups.group_sqnorms(grad))
        slack = grad_norms - lam_coeff
        worst = max(worst, float(np.maximum(0.0, slack[idle]).max()))
    return worst


def count_active_groups(w, groups: GroupStructure, penalty: PenaltySpec) -> int:
    """Structurally nonzero groups among those with positive penalty weight."""
    W = np.asarray(getattr(w, "W", w))
    coeff = penalty.coefficients(groups.n_bs)
    norms = np.sqrt(groups.group_sqnorms(W))
    np.fill_diagonal(norms, 0.0)
    return int(np.count_nonzero((coeff > 0) & (norms > 0)))


@dataclass(frozen=True)
class SweepPoint:
    lam: float
    equalizer: Equalizer
    mse: float
    traffic: int


def default_lambda_grid(lam_max: float, points: int = 30) -> np.ndarray:
    """Log-spaced grid over [1e-3, 1]*lam_max plus the unpenalized endpoint."""
    grid = lam_max * np.logspace(-3.0, 0.0, points)
    return np.concatenate([grid, [0.0]])


def lambda_sweep(
    H: np.ndarray,
    groups: GroupStructure,
    penalty: PenaltySpec,
    grid=None,
    opts: SolverOptions | None = None,
) -> list[SweepPoint]:
    """Warm-started solve over a penalty grid, largest lambda first.

    The KKT stopping tolerance is scaled by max(1, lam_max) so the sweep is
    invariant to the overall channel gain scale.  Returns one point per grid
    value in descending lambda order.
    """
    opts = opts or SolverOptions()
    lam_max = lambda_max(H, groups, penalty)
    if grid is None:
        grid = default_lambda_grid(lam_max)
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > 1.05 * lam_max):
        raise ValueError("grid values must lie within [0, 1.05 * lambda_max]")
    scaled = replace(opts, kkt_tol=opts.kkt_tol * max(1.0, lam_max))

    points = []
    coeff = penalty.coefficients(groups.n_bs)
    warm = restricted_lmmse(
        H, groups, support=(coeff == 0) | np.eye(groups.n_bs, dtype=bool)
    )
    for lam in np.sort(grid)[::-1]:
        eq = solve_group_lasso(H, groups, penalty, float(lam), scaled, warm_start=warm)
        warm = eq.W
        traffic = backhaul_traffic(backhaul_matrix(eq.W, groups), scaled.zero_tol)
        points.append(SweepPoint(float(lam), eq, mse(eq.W, H), traffic))
    return points


def sweep_to_csv(points: list[SweepPoint], H, serving_bs, n_bs: int, path) -> None:
    """Per-point sweep record with the rate metrics attached."""
    from .equalize import rates

    lam_max = points[0].lam if points else 0.0
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["lambda", "lambda_over_lambda_max", "mse", "traffic_l0", "sum_rate", "per_cell_rate"]
        )
        for p in points:
            report = rates(p.equalizer.W, H, serving_bs, n_bs)
            ratio = p.lam / lam_max if lam_max > 0 else 0.0
            writer.writerow(
                [
                    f"{p.lam:.12g}",
                    f"{ratio:.12g}",
                    f"{p.mse:.12g}",
                    p.traffic,
                    f"{report.sum_rate:.12g}",
                    f"{report.per_cell_rate:.12g}",
                ]
            )
