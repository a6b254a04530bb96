import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coophaul import equalize, sparse_mcp
from coophaul.dynclust import Clustering


def random_channel(rng, n_a, n_u, scale=1.0):
    return scale * (
        rng.standard_normal((n_a, n_u)) + 1j * rng.standard_normal((n_a, n_u))
    ) / np.sqrt(2.0)


def balanced_groups(n_bs, antennas=1, users_per_bs=None):
    users_per_bs = antennas if users_per_bs is None else users_per_bs
    return sparse_mcp.GroupStructure(
        n_bs=n_bs,
        antennas_per_bs=antennas,
        serving_bs=np.repeat(np.arange(n_bs), users_per_bs),
    )


def random_instance(seed, n_bs=4, antennas=1):
    rng = np.random.default_rng(seed)
    groups = balanced_groups(n_bs, antennas)
    H = random_channel(rng, groups.n_antennas, groups.n_users)
    return H, groups


def brute_force_backhaul(W, groups):
    out = np.zeros((groups.n_bs, groups.n_bs))
    for b in range(groups.n_bs):
        for bp in range(groups.n_bs):
            if b == bp:
                continue
            total = 0.0
            for u in groups.users_of(b):
                for a in range(
                    bp * groups.antennas_per_bs, (bp + 1) * groups.antennas_per_bs
                ):
                    total += abs(W[u, a]) ** 2
            out[b, bp] = np.sqrt(total)
    return out


def cvxpy_reference(H, groups, penalty, lam):
    """Independent convex-solver oracle for the penalized problem."""
    import cvxpy as cp

    coeff = penalty.coefficients(groups.n_bs)
    W = cp.Variable((groups.n_users, groups.n_antennas), complex=True)
    objective = cp.sum_squares(np.eye(groups.n_users) - W @ H) + cp.sum_squares(W)
    a = groups.antennas_per_bs
    for b in range(groups.n_bs):
        users = groups.users_of(b)
        if users.size == 0:
            continue
        for bp in range(groups.n_bs):
            if b == bp or coeff[b, bp] == 0 or lam == 0:
                continue
            block = W[users][:, bp * a : (bp + 1) * a]
            objective = objective + lam * coeff[b, bp] * cp.norm(cp.vec(block, order="C"))
    problem = cp.Problem(cp.Minimize(objective))
    problem.solve(solver=cp.CLARABEL)
    return np.asarray(W.value)


# ---------------------------------------------------------------- groups


def test_group_structure_partition():
    groups = balanced_groups(3, antennas=2)
    assert groups.n_groups == 6
    seen = np.zeros((groups.n_users, groups.n_antennas), dtype=int)
    for b in range(3):
        for bp in range(3):
            users = groups.users_of(b)
            ants = np.arange(bp * 2, bp * 2 + 2)
            seen[np.ix_(users, ants)] += 1
    assert np.all(seen == 1)  # groups plus diagonal blocks tile every entry
    assert groups.unpenalized_mask.sum() == 3 * 2 * 2


def test_group_sqnorms_against_brute_force():
    rng = np.random.default_rng(0)
    groups = balanced_groups(3, antennas=2)
    W = random_channel(rng, groups.n_users, groups.n_antennas).T.copy()
    W = W.reshape(groups.n_users, groups.n_antennas)
    norms = sparse_mcp.backhaul_matrix(W, groups)
    assert np.allclose(norms, brute_force_backhaul(W, groups), atol=1e-12)


def test_group_structure_accepts_unbalanced_association():
    groups = sparse_mcp.GroupStructure(3, 1, np.array([0, 0, 2]))
    assert groups.counts().tolist() == [2, 0, 1]
    W = np.ones((3, 3), dtype=complex)
    norms = sparse_mcp.backhaul_matrix(W, groups)
    assert norms[1].sum() == 0  # no served users, empty groups
    assert norms[0, 2] == pytest.approx(np.sqrt(2.0))


# ---------------------------------------------------------------- backhaul


def test_backhaul_matrix_diagonal_filter_is_silent():
    groups = balanced_groups(3)
    assert np.all(sparse_mcp.backhaul_matrix(np.diag([1.0, 2.0, 3.0]), groups) == 0)


def test_backhaul_matrix_complex_modulus():
    groups = balanced_groups(2)
    W = np.zeros((2, 2), dtype=complex)
    W[0, 1] = 3 + 4j
    assert sparse_mcp.backhaul_matrix(W, groups)[0, 1] == pytest.approx(5.0)


def test_backhaul_traffic_counts():
    assert sparse_mcp.backhaul_traffic(np.zeros((4, 4))) == 0
    m = np.zeros((4, 4))
    m[0, 1] = 1.0
    assert sparse_mcp.backhaul_traffic(m) == 1
    rng = np.random.default_rng(1)
    groups = balanced_groups(19)
    W = random_channel(rng, 19, 19)
    full = sparse_mcp.backhaul_traffic(sparse_mcp.backhaul_matrix(W, groups))
    assert full == 19 * 18 == 342


def test_backhaul_traffic_ignores_numerical_dust():
    m = np.full((3, 3), 1e-9)
    np.fill_diagonal(m, 0)
    assert sparse_mcp.backhaul_traffic(m) == 0


# ---------------------------------------------------------------- penalties


def test_penalty_distributed_coefficients():
    coeff = sparse_mcp.PenaltySpec("distributed").coefficients(3)
    assert np.all(np.diag(coeff) == 0)
    assert np.all(coeff[~np.eye(3, dtype=bool)] == 1)


def test_penalty_static_cut_coefficients():
    clustering = Clustering(np.array([0, 0, 1]), 2)
    coeff = sparse_mcp.PenaltySpec("static_cut", clustering=clustering).coefficients(3)
    assert coeff[0, 1] == 0 and coeff[1, 0] == 0
    assert coeff[0, 2] == 1 and coeff[2, 1] == 1


def test_penalty_ratio_cut_weights_are_source_cluster_sizes():
    clustering = Clustering(np.array([0, 0, 1]), 2)
    coeff = sparse_mcp.PenaltySpec("ratio_cut_fixed", clustering=clustering).coefficients(3)
    assert coeff[0, 2] == pytest.approx(0.5)
    assert coeff[2, 0] == pytest.approx(1.0)
    assert coeff[0, 1] == 0


def test_penalty_per_bs_weights():
    weights = np.array([2.0, 1.0, 0.5])
    coeff = sparse_mcp.PenaltySpec("distributed", per_bs_weights=weights).coefficients(3)
    assert coeff[0, 1] == pytest.approx(2.0)
    assert coeff[2, 0] == pytest.approx(0.5)


def test_penalty_needs_clustering():
    with pytest.raises(sparse_mcp.InvalidPenaltyError):
        sparse_mcp.PenaltySpec("static_cut").coefficients(3)


def test_singleton_clusters_match_distributed_bit_for_bit():
    H, groups = random_instance(7, n_bs=4)
    singleton = Clustering(np.arange(4), 4)
    lam = 0.4 * sparse_mcp.lambda_max(H, groups, sparse_mcp.PenaltySpec("distributed"))
    a = sparse_mcp.solve_group_lasso(H, groups, sparse_mcp.PenaltySpec("distributed"), lam)
    b = sparse_mcp.solve_group_lasso(
        H, groups, sparse_mcp.PenaltySpec("static_cut", clustering=singleton), lam
    )
    assert np.array_equal(a.W, b.W)


# ---------------------------------------------------------------- lambda_max


def test_lambda_max_zero_for_block_diagonal_channel():
    groups = balanced_groups(3)
    rng = np.random.default_rng(2)
    H = np.diag(rng.standard_normal(3) + 1j * rng.standard_normal(3))
    assert sparse_mcp.lambda_max(H, groups, sparse_mcp.PenaltySpec("distributed")) == 0


def test_lambda_max_two_site_hand_computation():
    rng = np.random.default_rng(3)
    H = random_channel(rng, 2, 2)
    groups = balanced_groups(2)
    W0 = sparse_mcp.restricted_lmmse(H, groups)
    Hbar = np.hstack([H, np.eye(2)])
    Ibar = np.hstack([np.eye(2), np.zeros((2, 2))])
    grad = 2.0 * (W0 @ Hbar - Ibar) @ Hbar.conj().T
    expected = max(abs(grad[0, 1]), abs(grad[1, 0]))
    got = sparse_mcp.lambda_max(H, groups, sparse_mcp.PenaltySpec("distributed"))
    assert got == pytest.approx(expected, rel=1e-12)


def test_lambda_max_boundary_behavior():
    for seed in range(5):
        H, groups = random_instance(seed, n_bs=4)
        pen = sparse_mcp.PenaltySpec("distributed")
        lam_max = sparse_mcp.lambda_max(H, groups, pen)
        above = sparse_mcp.solve_group_lasso(H, groups, pen, 1.001 * lam_max)
        assert sparse_mcp.count_active_groups(above, groups, pen) == 0
        below = sparse_mcp.solve_group_lasso(H, groups, pen, 0.95 * lam_max)
        assert sparse_mcp.count_active_groups(below, groups, pen) >= 1


def test_lambda_max_requires_positive_weight():
    H, groups = random_instance(4, n_bs=3)
    single = Clustering(np.zeros(3, dtype=int), 1)
    with pytest.raises(sparse_mcp.InvalidPenaltyError):
        sparse_mcp.lambda_max(H, groups, sparse_mcp.PenaltySpec("static_cut", clustering=single))


# ---------------------------------------------------------------- solver


def test_unpenalized_solution_matches_lmmse():
    for seed in range(4):
        H, groups = random_instance(seed, n_bs=5)
        eq = sparse_mcp.solve_group_lasso(H, groups, sparse_mcp.PenaltySpec("distributed"), 0.0)
        W_ref = equalize.lmmse(H).W
        rel = np.linalg.norm(eq.W - W_ref) / np.linalg.norm(W_ref)
        assert rel <= 1e-6


def test_solver_matches_convex_oracle():
    pen = sparse_mcp.PenaltySpec("distributed")
    for seed in (0, 1):
        H, groups = random_instance(seed, n_bs=3)
        lam = 0.5 * sparse_mcp.lambda_max(H, groups, pen)
        mine = sparse_mcp.solve_group_lasso(H, groups, pen, lam)
        oracle = cvxpy_reference(H, groups, pen, lam)
        rel = np.linalg.norm(mine.W - oracle) / max(np.linalg.norm(oracle), 1e-12)
        assert rel <= 1e-4


def test_solver_matches_convex_oracle_multiantenna():
    pen = sparse_mcp.PenaltySpec("distributed")
    H, groups = random_instance(5, n_bs=3, antennas=2)
    lam = 0.3 * sparse_mcp.lambda_max(H, groups, pen)
    mine = sparse_mcp.solve_group_lasso(H, groups, pen, lam)
    oracle = cvxpy_reference(H, groups, pen, lam)
    assert np.linalg.norm(mine.W - oracle) / np.linalg.norm(oracle) <= 1e-4


def test_objective_trace_non_increasing():
    H, groups = random_instance(9, n_bs=5)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam = 0.3 * sparse_mcp.lambda_max(H, groups, pen)
    eq = sparse_mcp.solve_group_lasso(H, groups, pen, lam)
    trace = eq.info.objective_trace
    assert np.all(np.diff(trace) <= 1e-10 * np.maximum(1.0, np.abs(trace[:-1])))


def test_unpenalized_entries_never_thresholded():
    # own-BS sub-rows must solve the least squares fixing the other blocks
    H, groups = random_instance(11, n_bs=4, antennas=2)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam = 0.4 * sparse_mcp.lambda_max(H, groups, pen)
    eq = sparse_mcp.solve_group_lasso(H, groups, pen, lam)
    gram = H @ H.conj().T + np.eye(groups.n_antennas)
    target = H.conj().T
    a = groups.antennas_per_bs
    for u in range(groups.n_users):
        own = np.arange(groups.serving_bs[u] * a, groups.serving_bs[u] * a + a)
        others = np.setdiff1d(np.arange(groups.n_antennas), own)
        rhs = target[u, own] - eq.W[u, others] @ gram[np.ix_(others, own)]
        sol = np.linalg.solve(gram[np.ix_(own, own)].T, rhs)
        assert np.allclose(eq.W[u, own], sol, atol=1e-7 * max(1, np.abs(rhs).max()))


def test_kkt_residual_examples():
    H, groups = random_instance(13, n_bs=4)
    pen = sparse_mcp.PenaltySpec("distributed")
    W = equalize.lmmse(H).W
    assert sparse_mcp.kkt_residual(W, H, groups, pen, 0.0) <= 1e-8
    rng = np.random.default_rng(13)
    H_diag = np.diag(rng.standard_normal(4) + 1j * rng.standard_normal(4))
    W0 = sparse_mcp.restricted_lmmse(H_diag, groups)
    assert sparse_mcp.kkt_residual(W0, H_diag, groups, pen, 1.0) <= 1e-10


def test_solver_certifies_kkt():
    pen = sparse_mcp.PenaltySpec("distributed")
    rng = np.random.default_rng(20)
    for seed in range(10):
        H, groups = random_instance(100 + seed, n_bs=5)
        lam = float(rng.uniform(0.05, 0.95)) * sparse_mcp.lambda_max(H, groups, pen)
        eq = sparse_mcp.solve_group_lasso(H, groups, pen, lam)
        assert sparse_mcp.kkt_residual(eq.W, H, groups, pen, lam) <= 1e-5


def test_solver_error_carries_last_iterate():
    H, groups = random_instance(21, n_bs=5)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam = 0.2 * sparse_mcp.lambda_max(H, groups, pen)
    opts = sparse_mcp.SolverOptions(max_iterations=3, kkt_tol=1e-14, check_every=1)
    with pytest.raises(sparse_mcp.SolverError) as err:
        sparse_mcp.solve_group_lasso(H, groups, pen, lam, opts)
    assert err.value.equalizer is not None
    assert err.value.kkt > 0


# ---------------------------------------------------------------- sweeps


def test_sweep_single_point_grids():
    H, groups = random_instance(30, n_bs=4)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(H, groups, pen)
    top = sparse_mcp.lambda_sweep(H, groups, pen, [lam_max])
    assert len(top) == 1
    assert top[0].traffic == 0
    bottom = sparse_mcp.lambda_sweep(H, groups, pen, [0.0])
    assert bottom[0].traffic == groups.n_groups
    assert bottom[0].mse == pytest.approx(
        equalize.mse(equalize.lmmse(H).W, H), rel=1e-6
    )


def test_sweep_rejects_out_of_range_grid():
    H, groups = random_instance(31, n_bs=3)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(H, groups, pen)
    with pytest.raises(ValueError):
        sparse_mcp.lambda_sweep(H, groups, pen, [1.2 * lam_max])
    with pytest.raises(ValueError):
        sparse_mcp.lambda_sweep(H, groups, pen, [-0.1])


def test_sweep_monotone_mse_and_traffic():
    for seed in range(3):
        H, groups = random_instance(40 + seed, n_bs=5)
        pen = sparse_mcp.PenaltySpec("distributed")
        points = sparse_mcp.lambda_sweep(H, groups, pen)
        mses = np.array([p.mse for p in points])  # descending lambda order
        assert np.all(np.diff(mses) <= 1e-6)
        traffic = np.array([p.traffic for p in points])
        assert np.all(np.diff(traffic) >= 0)


def test_backhaul_of_solution_is_user_relabeling_equivariant():
    H, groups = random_instance(50, n_bs=4, antennas=2)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam = 0.3 * sparse_mcp.lambda_max(H, groups, pen)
    base = sparse_mcp.backhaul_matrix(
        sparse_mcp.solve_group_lasso(H, groups, pen, lam).W, groups
    )
    rng = np.random.default_rng(50)
    perm = rng.permutation(groups.n_users)
    groups_p = sparse_mcp.GroupStructure(4, 2, groups.serving_bs[perm])
    permuted = sparse_mcp.backhaul_matrix(
        sparse_mcp.solve_group_lasso(H[:, perm], groups_p, pen, lam).W, groups_p
    )
    assert np.allclose(base, permuted, atol=1e-8)


def test_sweep_csv(tmp_path):
    H, groups = random_instance(60, n_bs=3)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam_max = sparse_mcp.lambda_max(H, groups, pen)
    points = sparse_mcp.lambda_sweep(H, groups, pen, [lam_max, 0.0])
    path = tmp_path / "sweep.csv"
    sparse_mcp.sweep_to_csv(points, H, groups.serving_bs, 3, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "lambda,lambda_over_lambda_max,mse,traffic_l0,sum_rate,per_cell_rate"
    assert len(lines) == 3


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_prox_solutions_have_exact_zero_groups(seed):
    H, groups = random_instance(seed, n_bs=4)
    pen = sparse_mcp.PenaltySpec("distributed")
    lam = 0.8 * sparse_mcp.lambda_max(H, groups, pen)
    eq = sparse_mcp.solve_group_lasso(H, groups, pen, lam)
    norms = sparse_mcp.backhaul_matrix(eq.W, groups)
    off = norms[~np.eye(4, dtype=bool)]
    assert np.all((off == 0.0) | (off > 1e-12))
