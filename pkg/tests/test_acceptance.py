"""Release acceptance suite.

One test per criterion, each printing a single PASS/FAIL line (visible
inline with `pytest -s`).  Tolerances are asserted exactly as stated; the
statistical experiments run at their full drop counts, so this module is
the slow part of the suite.
"""

import time

import numpy as np
import pytest

from coophaul import decentral, dynclust, equalize, experiments, netmodel, sparse_mcp


def report(number, name, ok, detail=""):
    suffix = f"  [{detail}]" if detail else ""
    print(f"\n[criterion {number:02d}] {'PASS' if ok else 'FAIL'} {name}{suffix}", flush=True)
    return ok


def random_channel(rng, n_a, n_u):
    return (rng.standard_normal((n_a, n_u)) + 1j * rng.standard_normal((n_a, n_u))) / np.sqrt(2)


def random_instance(rng):
    n_bs = int(rng.integers(3, 11))
    antennas = int(rng.integers(1, 3))
    groups = sparse_mcp.GroupStructure(
        n_bs, antennas, np.repeat(np.arange(n_bs), antennas)
    )
    H = random_channel(rng, groups.n_antennas, groups.n_users)
    return H, groups


def test_criterion_01_lmmse_equivalence():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        H, groups = random_instance(rng)
        eq = sparse_mcp.solve_group_lasso(
            H, groups, sparse_mcp.PenaltySpec("distributed"), 0.0
        )
        ref = equalize.lmmse(H).W
        worst = max(worst, np.linalg.norm(eq.W - ref) / np.linalg.norm(ref))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 10.0
    assert report(
        1, "unpenalized solver equals closed-form filter",
        ok, f"max rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_criterion_02_kkt_oracle():
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    pen = sparse_mcp.PenaltySpec("distributed")
    for _ in range(20):
        groups = sparse_mcp.GroupStructure(5, 1, np.arange(5))
        H = random_channel(rng, 5, 5)
        lam = float(rng.uniform(0.0, 1.0)) * sparse_mcp.lambda_max(H, groups, pen)
        lam = max(lam, 1e-6)
        eq = sparse_mcp.solve_group_lasso(H, groups, pen, lam)
        worst = max(worst, sparse_mcp.kkt_residual(eq.W, H, groups, pen, lam))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and elapsed < 30.0
    assert report(2, "solver output is KKT-certified", ok, f"max residual {worst:.2e}, {elapsed:.1f}s")


def test_criterion_03_lambda_max_boundary():
    rng = np.random.default_rng(3)
    pen = sparse_mcp.PenaltySpec("distributed")
    all_zero_above = True
    nonzero_below = 0
    for _ in range(20):
        groups = sparse_mcp.GroupStructure(5, 1, np.arange(5))
        H = random_channel(rng, 5, 5)
        lam_max = sparse_mcp.lambda_max(H, groups, pen)
        above = sparse_mcp.solve_group_lasso(H, groups, pen, 1.001 * lam_max)
        if sparse_mcp.count_active_groups(above, groups, pen) != 0:
            all_zero_above = False
        below = sparse_mcp.solve_group_lasso(H, groups, pen, 0.95 * lam_max)
        if sparse_mcp.count_active_groups(below, groups, pen) >= 1:
            nonzero_below += 1
    ok = all_zero_above and nonzero_below >= 18
    assert report(
        3, "penalty ceiling boundary", ok,
        f"above all-zero: {all_zero_above}, below active {nonzero_below}/20",
    )


def test_criterion_04_path_monotonicity():
    violations = 0.0
    for seed in range(10):
        cfg = netmodel.ScenarioConfig(rings=1, system_snr_db=6.2, rng_seed=300 + seed)
        real = netmodel.realize_scenario(cfg)
        groups = sparse_mcp.GroupStructure.from_realization(real)
        points = sparse_mcp.lambda_sweep(
            real.H, groups, sparse_mcp.PenaltySpec("distributed"),
            opts=sparse_mcp.SolverOptions(kkt_tol=1e-5),
        )
        mses = np.array([p.mse for p in points])  # descending penalty order
        violations = max(violations, float(np.max(np.diff(mses), initial=-np.inf)))
    ok = violations <= 1e-6
    assert report(4, "error is monotone along every penalty path", ok, f"worst step {violations:.2e}")


@pytest.fixture(scope="module")
def fig2_sweep():
    spec = experiments.ExperimentSpec(
        experiment="mse_vs_traffic",
        scenario=netmodel.ScenarioConfig(rings=2, system_snr_db=6.2),
        drops=200,
        lambda_grid_points=30,
    )
    start = time.perf_counter()
    result = experiments.run_mse_vs_traffic(spec, base_seed=0)
    return result, time.perf_counter() - start


def test_criterion_05_mse_vs_traffic_reproduction(fig2_sweep):
    result, elapsed = fig2_sweep
    series = result.series["proposed"]
    mse_mean = series["mse"].mean(axis=0)
    traffic_mean = series["traffic"].astype(float).mean(axis=0)
    no_coop, full = mse_mean[0], mse_mean[-1]
    full_traffic = traffic_mean[-1]
    target = 0.12 * full_traffic
    idx = int(np.argmin(np.abs(traffic_mean - target)))
    reduction = (no_coop - mse_mean[idx]) / (no_coop - full)
    ok_ends = 0.8 * 8.9 <= no_coop <= 1.2 * 8.9 and 0.8 * 3.6 <= full <= 1.2 * 3.6
    ok_red = reduction >= 0.25
    ok = ok_ends and ok_red
    assert report(
        5, "19-site error/traffic endpoints and knee", ok,
        f"no-coop {no_coop:.2f} (8.9±20%), full {full:.2f} (3.6±20%), "
        f"reduction {reduction:.0%} at {traffic_mean[idx]:.0f}/{full_traffic:.0f} links, "
        f"{elapsed:.0f}s/200 drops",
    )


def _rate_comparison(antennas, drops=100):
    spec = experiments.ExperimentSpec(
        experiment="rate_vs_traffic",
        scenario=netmodel.ScenarioConfig(
            rings=2, system_snr_db=11.8, antennas_per_bs=antennas, users_per_bs=antennas
        ),
        drops=drops,
        lambda_grid_points=12,
        greedy_sizes=(1, 2, 4, 8, 16),
    )
    result = experiments.run_rate_vs_traffic(spec, base_seed=0)
    proposed = result.series["proposed"]
    greedy = result.series["greedy"]
    p_traffic = proposed["traffic"].astype(float).mean(axis=0)
    p_rate = proposed["per_cell_rate"].mean(axis=0)
    order = np.argsort(p_traffic)
    g_traffic = greedy["traffic"].mean(axis=0)
    g_rate = greedy["per_cell_rate"].mean(axis=0)
    matched = np.interp(g_traffic, p_traffic[order], p_rate[order])
    return matched, g_rate


def test_criterion_06_proposed_vs_greedy():
    start = time.perf_counter()
    gaps = {}
    wins = 0
    total = 0
    for antennas in (1, 2):
        matched, greedy_rate = _rate_comparison(antennas)
        wins += int(np.sum(matched >= greedy_rate))
        total += matched.size
        gaps[antennas] = float(np.mean(matched - greedy_rate))
    elapsed = time.perf_counter() - start
    ok = wins >= 0.8 * total and gaps[2] > gaps[1]
    assert report(
        6, "penalized design beats greedy clustering at matched traffic", ok,
        f"wins {wins}/{total}, gap A=1 {gaps[1]:.3f} vs A=2 {gaps[2]:.3f}, {elapsed:.0f}s",
    )


def test_criterion_07_static_cluster_fairness():
    spec = experiments.ExperimentSpec(
        experiment="cdf_static",
        scenario=netmodel.ScenarioConfig(rings=2, system_snr_db=6.2),
        drops=100,
        lambda_values_rel=(1.0, 0.05, 0.01),
    )
    result = experiments.run_cdf_static(spec, base_seed=0)
    series = result.series["static"]
    inter_mean = series["inter_traffic"].mean(axis=0)
    by_rel = dict(zip(series["grid"], inter_mean))
    p10_full = float(np.quantile(result.pooled_rates["lam1"], 0.10))
    p10_mid = float(np.quantile(result.pooled_rates["lam0.05"], 0.10))
    ok_fair = p10_mid > p10_full
    ok_t05 = 0.6 * 28.5 <= by_rel[0.05] <= 1.4 * 28.5
    ok_t01 = 0.6 * 124 <= by_rel[0.01] <= 1.4 * 124
    ok = ok_fair and ok_t05 and ok_t01
    assert report(
        7, "seven-cluster fairness and inter-cluster traffic", ok,
        f"p10 {p10_full:.3f}->{p10_mid:.3f} ({'ok' if ok_fair else 'bad'}), "
        f"traffic@0.05 {by_rel[0.05]:.1f} in [17.1,39.9] ({'ok' if ok_t05 else 'bad'}), "
        f"traffic@0.01 {by_rel[0.01]:.1f} in [74.4,173.6] ({'ok' if ok_t01 else 'bad'})",
    )


def test_criterion_08_ratio_cut_identity():
    rng = np.random.default_rng(8)
    worst_cut = 0.0
    worst_sym = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 12))
        k = int(rng.integers(2, n + 1))
        m = rng.random((n, n)) * 3.0
        np.fill_diagonal(m, 0.0)
        while True:
            labels = rng.integers(0, k, size=n)
            if np.unique(labels).size == k:
                break
        clustering = dynclust.Clustering(labels, k)
        pair = dynclust.laplacian_pair(m)
        phi = dynclust.indicator(clustering)
        lhs = dynclust.rcut(m, clustering)
        mid = float(np.trace(phi.T @ pair.laplacian @ phi))
        rhs = float(np.trace(phi.T @ pair.sym @ phi))
        worst_cut = max(worst_cut, abs(lhs - mid))
        worst_sym = max(worst_sym, abs(mid - rhs))
    ok = worst_cut <= 1e-10 and worst_sym <= 1e-10
    assert report(
        8, "ratio cut equals the indicator trace", ok,
        f"max |rcut-tr| {worst_cut:.1e}, max sym gap {worst_sym:.1e}",
    )


def test_criterion_09_spectral_relaxation_floor():
    rng = np.random.default_rng(9)
    ok = True
    margin = np.inf
    for _ in range(20):
        m = rng.random((8, 8))
        m = 0.5 * (m + m.T)
        np.fill_diagonal(m, 0.0)
        pair = dynclust.laplacian_pair(m)
        floor = float(np.linalg.eigvalsh(pair.sym)[:2].sum())
        for assignment in range(1, 2 ** 7):
            labels = np.array([0] + [(assignment >> i) & 1 for i in range(7)])
            if np.unique(labels).size < 2:
                continue
            phi = dynclust.indicator(dynclust.Clustering(labels, 2))
            value = float(np.trace(phi.T @ pair.sym @ phi))
            margin = min(margin, value - floor)
            if value < floor - 1e-12:
                ok = False
    assert report(
        9, "eigensolver lower-bounds every two-way partition", ok,
        f"20 matrices x 127 partitions, min slack {margin:.2e}",
    )


def test_criterion_10_dynamic_clustering():
    iters = []
    monotone = True
    for seed in range(50):
        cfg = netmodel.ScenarioConfig(rings=1, system_snr_db=6.2, rng_seed=1000 + seed)
        real = netmodel.realize_scenario(cfg)
        groups = sparse_mcp.GroupStructure.from_realization(real)
        lam = 0.1 * sparse_mcp.lambda_max(real.H, groups, sparse_mcp.PenaltySpec("distributed"))
        result = dynclust.dynamic_mcp(real.H, groups, lam, 2, seed=seed)
        iters.append(result.iterations)
        if np.any(np.diff(result.objective_trace) > 1e-9 * np.abs(result.objective_trace[:-1])):
            monotone = False
    median_iters = float(np.median(iters))

    planted_ok = True
    for seed in range(3):
        rng = np.random.default_rng(seed)
        H = np.zeros((8, 8), dtype=complex)
        for blk in ([0, 1, 2, 3], [4, 5, 6, 7]):
            idx = np.array(blk)
            H[np.ix_(idx, idx)] = 2.0 * random_channel(rng, 4, 4)
        groups = sparse_mcp.GroupStructure(8, 1, np.arange(8))
        lam = 0.1 * sparse_mcp.lambda_max(H, groups, sparse_mcp.PenaltySpec("distributed"))
        result = dynclust.dynamic_mcp(H, groups, lam, 2, seed=seed)
        labels = result.clustering.labels
        if not (len(set(labels[:4])) == 1 == len(set(labels[4:])) and labels[0] != labels[4]):
            planted_ok = False
    ok = monotone and median_iters <= 5 and planted_ok
    assert report(
        10, "alternating clustering converges and finds planted blocks", ok,
        f"monotone {monotone}, median iters {median_iters:.1f}, planted {planted_ok}",
    )


def test_criterion_11_decentralized_admm():
    # 7-site subnetwork; relative penalty, rho, round budget and tolerances
    # as stated; the scenario operating point is chosen so the pinned
    # rho = 0.1 is commensurate with the channel scale
    cfg = netmodel.ScenarioConfig(
        rings=1, system_snr_db=-10.0, shadowing_enabled=False, rng_seed=0
    )
    real = netmodel.realize_balanced_scenario(cfg)
    H, _ = decentral.aligned_channel(real)
    groups = decentral.trivial_groups(7)
    clustering = dynclust.Clustering(np.array([0, 0, 0, 1, 1, 1, 1]), 2)
    penalty = sparse_mcp.PenaltySpec("static_cut", clustering=clustering)
    lam_max = sparse_mcp.lambda_max(H, groups, penalty)
    lam = 0.4 * lam_max
    ref = sparse_mcp.solve_group_lasso(
        H, groups, penalty, lam,
        sparse_mcp.SolverOptions(kkt_tol=1e-7 * max(1.0, lam_max), max_iterations=500_000),
    )
    coeff = penalty.coefficients(7)
    ref_obj = equalize.mse(ref.W, H) + lam * float(
        np.sum(coeff * sparse_mcp.backhaul_matrix(ref.W, groups))
    )
    graph = decentral.build_comm_graph(real.geometry, "nearest")
    run = decentral.admm_static(
        H, clustering, lam, 0.1, graph, 2000,
        reference=ref.W, reference_objective=ref_obj,
    )
    gap = run.log.objective_gap[-1]
    dist = run.log.dist_to_centralized[-1]
    ok = gap <= 1e-4 * abs(ref_obj) and dist <= 1e-3
    assert report(
        11, "consensus ADMM reaches the centralized solution", ok,
        f"rel gap {gap / abs(ref_obj):.2e} (<=1e-4), max rel dist {dist:.2e} (<=1e-3), 2000 rounds",
    )


def test_criterion_12_decentralized_eigensolver():
    cfg = netmodel.ScenarioConfig(rings=2, system_snr_db=-10.0, rng_seed=1)
    real = netmodel.realize_balanced_scenario(cfg)
    H, _ = decentral.aligned_channel(real)
    groups = decentral.trivial_groups(19)
    penalty = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(H, groups, penalty)
    eq = sparse_mcp.solve_group_lasso(
        H, groups, penalty, 0.02 * lam_max,
        sparse_mcp.SolverOptions(kkt_tol=1e-6 * max(1.0, lam_max)),
    )
    pair = dynclust.laplacian_pair(sparse_mcp.backhaul_matrix(eq.W, groups))
    evals, evecs = np.linalg.eigh(pair.sym)
    lam1_central = max(abs(float(evals[0])), abs(float(evals[-1])))
    projector_central = evecs[:, :9] @ evecs[:, :9].T

    graph = decentral.build_comm_graph(real.geometry, "nearest")
    rows = [pair.sym[b] for b in range(19)]
    net = decentral.SyncNetwork(graph)
    phase2, phase1 = decentral.smallest_eigvecs_decentralized(
        rows, 9, graph, shift_eps=0.1, seed=12, net=net, max_iters=6000, tol=1e-11
    )
    eig_err = abs(float(phase1.eig_magnitudes[0]) - lam1_central)
    Q = phase2.rows
    gap = float(np.linalg.norm(Q @ Q.T - projector_central, 2))
    ok = eig_err <= 1e-6 and gap <= 1e-4
    assert report(
        12, "decentralized eigensolver matches the dense one", ok,
        f"|eig1| err {eig_err:.2e} (<=1e-6), projector gap {gap:.2e} (<=1e-4)",
    )


def test_criterion_13_decentralized_kmeans_equivalence():
    graph = decentral.build_comm_graph(netmodel.hex_layout(2, 500.0), "nearest")
    mismatches = 0
    for seed in range(20):
        rng = np.random.default_rng(7000 + seed)
        dim = int(rng.integers(2, 9))
        k = int(rng.integers(2, 6))
        points = rng.standard_normal((19, dim))
        mine = decentral.decentralized_kmeans(list(points), k, graph, seed=seed)
        chosen = np.random.default_rng(seed).choice(19, size=k, replace=False)
        ref = dynclust.lloyd(points, points[chosen].copy())
        if not np.array_equal(mine.labels, ref.labels):
            mismatches += 1
    ok = mismatches == 0
    assert report(
        13, "consensus k-means equals centralized Lloyd bit for bit", ok,
        f"{20 - mismatches}/20 row sets identical",
    )
